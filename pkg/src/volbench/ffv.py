"""Free-Fermion Volume: Haar-random SO(2n) instances, top-|entry| measurement
selection, parallel/orthogonal linear combinations and score search."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .estimates import TAU_D, TAU_S, ExpectationEstimate, NoiseParams
from .majorana import FermionInstance, effective_column, readout_damped, sample_majorana_shots
from .orthogonal import givens_decompose, sample_haar_so, select_top_indices, truncated_mass
from .parallel import map_ordered
from .search import SEARCH_MODES, search_score

COUNT_RULES = ("per5", "per20")
NORMALIZERS = ("empirical", "analytic")
MIN_SHOTS = 512


@dataclass(frozen=True)
class FfvConfig:
    K: int = 4
    shots: int = 512
    tau_parallel: float = TAU_S
    tau_orthogonal: float = TAU_D
    noise: NoiseParams = field(default_factory=NoiseParams)
    count_rule: str = "per5"
    normalizer: str = "empirical"
    seed: int = 0
    search: str = "linear"
    allow_few_shots: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.shots < 1 or (self.shots < MIN_SHOTS and not self.allow_few_shots):
            raise ValueError(f"shots must be >= {MIN_SHOTS} unless allow_few_shots is set")
        if not 0.0 < self.tau_orthogonal < self.tau_parallel < 1.0:
            raise ValueError("thresholds must satisfy 0 < tau_orthogonal < tau_parallel < 1")
        if self.count_rule not in COUNT_RULES:
            raise ValueError(f"count_rule must be one of {COUNT_RULES}")
        if self.normalizer not in NORMALIZERS:
            raise ValueError(f"normalizer must be one of {NORMALIZERS}")
        if self.search not in SEARCH_MODES:
            raise ValueError(f"search must be one of {SEARCH_MODES}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = asdict(self.noise)
        return d


def measurement_count(n: int, rule: str = "per5") -> int:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n <= 10:
        return 2 * n
    if rule == "per5":
        return 20 + n // 5
    if rule == "per20":
        return 20 + n // 20
    raise ValueError(f"unknown count rule {rule!r}")


@dataclass(frozen=True)
class LinCombResult:
    kind: str  # "parallel" | "orthogonal"
    value: float
    sigma: float
    i: int
    j: int
    J: tuple[int, ...]


def build_lincombs(
    O: np.ndarray,
    i: int,
    j_orth: int,
    J,
    measured: list[ExpectationEstimate],
    normalizer: float | None = None,
) -> tuple[LinCombResult, LinCombResult]:
    """Reduced linear combinations of measured Majorana means over ``J``.

    The parallel one uses column ``i`` and is divided by its kept mass
    (or by ``normalizer`` when given); the orthogonal one uses column
    ``j_orth`` unnormalised.
    """
    J = np.asarray(J, dtype=np.int64)
    if J.size == 0:
        raise ValueError("empty measurement set")
    if j_orth == i:
        raise ValueError("orthogonal row must differ from the initial index")
    if len(measured) != J.size:
        raise ValueError("one estimate per measured mode is required")
    means = np.array([e.mean for e in measured])
    var = np.array([(1.0 - e.mean**2) / e.shots for e in measured])
    wi = O[J, i]
    wj = O[J, j_orth]
    mass = float(np.sum(wi**2)) if normalizer is None else float(normalizer)
    par = LinCombResult(
        "parallel",
        float(wi @ means) / mass,
        math.sqrt(float(np.sum(wi**2 * var))) / mass,
        i,
        i,
        tuple(int(x) for x in J),
    )
    orth = LinCombResult(
        "orthogonal",
        float(wj @ means),
        math.sqrt(float(np.sum(wj**2 * var))),
        i,
        j_orth,
        tuple(int(x) for x in J),
    )
    return par, orth


def evaluate_ffv_criteria(par: LinCombResult, orth: LinCombResult, cfg: FfvConfig) -> bool:
    return (
        par.value - 2.0 * par.sigma >= cfg.tau_parallel
        and abs(orth.value) + 2.0 * orth.sigma <= cfg.tau_orthogonal
    )


# -- instances ---------------------------------------------------------------


@dataclass
class FfvInstance:
    fermion: FermionInstance
    j_orth: int


def make_instance(seed: int, n: int, k: int) -> FfvInstance:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, n, k)))
    dim = 2 * n
    O = sample_haar_so(dim, rng)
    prog = givens_decompose(O)
    i = int(rng.integers(dim))
    j_orth = int(rng.integers(dim - 1))
    if j_orth >= i:
        j_orth += 1
    return FfvInstance(FermionInstance(n, O, i, prog), j_orth)


@lru_cache(maxsize=1024)
def _cached_instance(seed: int, n: int, k: int) -> FfvInstance:
    return make_instance(seed, n, k)


def evaluate_instance(n: int, k: int, cfg: FfvConfig) -> dict:
    inst = _cached_instance(cfg.seed, n, k)
    f = inst.fermion
    dim = 2 * n
    values = readout_damped(effective_column(f.program, cfg.noise.p2q, f.init_index), cfg.noise.pm)
    count = measurement_count(n, cfg.count_rule)
    J = select_top_indices(f.O, f.init_index, count, prefer=f.init_index)
    rngs = [
        np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(3, n, k, int(j))))
        for j in J
    ]
    measured = sample_majorana_shots(values, J, cfg.shots, rngs)
    normalizer = None
    if cfg.normalizer == "analytic":
        normalizer = 1.0 if count == dim else truncated_mass(count / dim, dim).expected_sum
    par, orth = build_lincombs(f.O, f.init_index, inst.j_orth, J, measured, normalizer)
    ok = evaluate_ffv_criteria(par, orth, cfg)
    return {
        "instance": k,
        "init_index": f.init_index,
        "orthogonal_index": inst.j_orth,
        "J": [int(j) for j in J],
        "means": [e.mean for e in measured],
        "parallel": {"value": par.value, "sigma": par.sigma},
        "orthogonal": {"value": orth.value, "sigma": orth.sigma},
        "two_qubit_rotations": f.program.two_mode_rotation_count(),
        "pass": ok,
    }


def _instance_task(args):
    return evaluate_instance(*args)


def run_ffv_level(n: int, cfg: FfvConfig, workers: int = 1) -> tuple[bool, dict]:
    if n < 1:
        raise ValueError("n must be at least 1")
    start = time.perf_counter()
    recs = map_ordered(_instance_task, [(n, k, cfg) for k in range(cfg.K)], workers)
    ok = all(r["pass"] for r in recs)
    record = {
        "n": n,
        "pass": ok,
        "measurement_count": measurement_count(n, cfg.count_rule),
        "instances": recs,
        "wall_clock_s": time.perf_counter() - start,
    }
    return ok, record


def run_ffv_search(cfg: FfvConfig, n_max: int, workers: int = 1) -> tuple[int, list[dict]]:
    records: dict[int, dict] = {}

    def passes(n: int) -> bool:
        ok, rec = run_ffv_level(n, cfg, workers)
        records[n] = rec
        return ok

    score, order = search_score(passes, n_max, cfg.search)
    return score, [records[n] for n in order]
