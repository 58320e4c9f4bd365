"""Clifford Volume: random Clifford circuits, stabilizer/destabilizer
expectation estimates, worst-case and average criteria, score search."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import Circuit
from .estimates import TAU_D, TAU_S, ExpectationEstimate, NoiseParams
from .parallel import map_ordered
from .pauli import PauliString
from .search import SEARCH_MODES, search_score
from .tableau import (
    ENGINES,
    CliffordTableau,
    FrameProfile,
    frame_profile,
    sample_random_clifford,
    synthesize,
)

MIN_SHOTS = 512
SIGMA_AVG_MODES = ("sem", "rms")
STABILIZER = "stabilizer"
DESTABILIZER = "destabilizer"


@dataclass(frozen=True)
class ClvConfig:
    K: int = 4
    n_m: int = 4
    shots: int = 512
    tau_s: float = TAU_S
    tau_d: float = TAU_D
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int = 0
    search: str = "linear"
    sigma_avg: str = "sem"
    engine: str = "frame"
    allow_few_shots: bool = False

    def __post_init__(self):
        if self.K < 1 or self.n_m < 1:
            raise ValueError("K and n_m must be positive")
        if self.shots < 1 or (self.shots < MIN_SHOTS and not self.allow_few_shots):
            raise ValueError(f"shots must be >= {MIN_SHOTS} unless allow_few_shots is set")
        if not 0.0 < self.tau_d < self.tau_s < 1.0:
            raise ValueError("thresholds must satisfy 0 < tau_d < tau_s < 1")
        if self.search not in SEARCH_MODES:
            raise ValueError(f"search must be one of {SEARCH_MODES}")
        if self.sigma_avg not in SIGMA_AVG_MODES:
            raise ValueError(f"sigma_avg must be one of {SIGMA_AVG_MODES}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {tuple(ENGINES)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = asdict(self.noise)
        return d


@dataclass
class ClvVerdict:
    n: int
    stabilizer_flags: list[list[bool]]  # [clifford][operator]
    destabilizer_flags: list[list[bool]]
    average_flags: list[tuple[bool, bool]]  # [clifford] -> (stabilizers, destabilizers)

    @property
    def passed(self) -> bool:
        return (
            all(all(f) for f in self.stabilizer_flags)
            and all(all(f) for f in self.destabilizer_flags)
            and all(a and b for a, b in self.average_flags)
        )


# -- criteria ----------------------------------------------------------------


def evaluate_worst_case(e: ExpectationEstimate, cfg: ClvConfig) -> bool:
    if e.kind == STABILIZER:
        return e.mean - 2.0 * e.sigma >= cfg.tau_s
    if e.kind == DESTABILIZER:
        return abs(e.mean) + 2.0 * e.sigma <= cfg.tau_d
    raise ValueError(f"unknown estimate kind {e.kind!r}")


def average_sigma(sigmas, mode: str = "sem") -> float:
    s2 = float(np.sum(np.square(sigmas)))
    m = len(sigmas)
    if mode == "sem":
        return math.sqrt(s2) / m
    if mode == "rms":
        return math.sqrt(s2 / m)
    raise ValueError(f"unknown sigma mode {mode!r}")


def evaluate_average(es: list[ExpectationEstimate], cfg: ClvConfig) -> bool:
    if not es:
        raise ValueError("no estimates to average")
    kinds = {e.kind for e in es}
    if len(kinds) != 1:
        raise ValueError("estimates mix stabilizers and destabilizers")
    mean = float(np.mean([e.mean for e in es]))
    sbar = average_sigma([e.sigma for e in es], cfg.sigma_avg)
    if es[0].kind == STABILIZER:
        return mean - 5.0 * sbar >= cfg.tau_s
    return abs(mean) + 5.0 * sbar <= cfg.tau_d


# -- instances ---------------------------------------------------------------


def select_observables(
    t: CliffordTableau, n_m: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Generator indices (zero-based) of the stabilizers and destabilizers
    to measure, each drawn without replacement."""
    if n_m > t.n:
        raise ValueError(f"cannot pick {n_m} distinct generators out of {t.n}")
    stab = rng.choice(t.n, size=n_m, replace=False)
    destab = rng.choice(t.n, size=n_m, replace=False)
    return stab, destab


@dataclass
class ClvInstance:
    n: int
    k: int
    tableau: CliffordTableau
    circuit: Circuit
    stabilizer_index: np.ndarray
    destabilizer_index: np.ndarray

    def observables(self) -> tuple[list[PauliString], list[str]]:
        n = self.n
        obs = [self.tableau.row(n + int(i)) for i in self.stabilizer_index]
        obs += [self.tableau.row(int(i)) for i in self.destabilizer_index]
        kinds = [STABILIZER] * len(self.stabilizer_index)
        kinds += [DESTABILIZER] * len(self.destabilizer_index)
        return obs, kinds


def make_instance(seed: int, n: int, k: int, n_m: int) -> ClvInstance:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, n, k)))
    t = sample_random_clifford(n, rng)
    c = synthesize(t)
    c.meta.update({"n": n, "clifford": k, "seed": seed})
    stab, destab = select_observables(t, min(n_m, n), rng)
    return ClvInstance(n, k, t, c, stab, destab)


@lru_cache(maxsize=512)
def _cached_profile(seed: int, n: int, k: int, n_m: int) -> tuple[ClvInstance, FrameProfile]:
    inst = make_instance(seed, n, k, n_m)
    obs, _ = inst.observables()
    return inst, frame_profile(inst.circuit, obs)


def shot_rngs(seed: int, n: int, k: int, count: int) -> list[np.random.Generator]:
    return [
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, n, k, j)))
        for j in range(count)
    ]


def estimate_clifford(n: int, k: int, cfg: ClvConfig) -> list[ExpectationEstimate]:
    """Shot estimates for every selected observable of Clifford ``k``."""
    if cfg.engine == "frame":
        inst, profile = _cached_profile(cfg.seed, n, k, cfg.n_m)
        obs, kinds = inst.observables()
        engine = ENGINES["frame"]()
        rngs = shot_rngs(cfg.seed, n, k, len(obs))
        return engine.estimate(inst.circuit, obs, kinds, cfg.noise, cfg.shots, rngs, profile)
    inst = make_instance(cfg.seed, n, k, cfg.n_m)
    obs, kinds = inst.observables()
    rngs = shot_rngs(cfg.seed, n, k, len(obs))
    return ENGINES[cfg.engine]().estimate(inst.circuit, obs, kinds, cfg.noise, cfg.shots, rngs)


def _estimate_task(args):
    return estimate_clifford(*args)


def _estimate_record(e: ExpectationEstimate, ok: bool) -> dict:
    return {"operator": e.operator, "mean": e.mean, "sigma": e.sigma, "shots": e.shots, "pass": ok}


def judge(n: int, groups: list[list[ExpectationEstimate]], cfg: ClvConfig) -> tuple[ClvVerdict, dict]:
    """Apply both criteria to per-Clifford estimate groups."""
    stab_flags, destab_flags, avg_flags, cliffords = [], [], [], []
    for k, es in enumerate(groups):
        stabs = [e for e in es if e.kind == STABILIZER]
        destabs = [e for e in es if e.kind == DESTABILIZER]
        sf = [evaluate_worst_case(e, cfg) for e in stabs]
        df = [evaluate_worst_case(e, cfg) for e in destabs]
        avg = (evaluate_average(stabs, cfg), evaluate_average(destabs, cfg))
        stab_flags.append(sf)
        destab_flags.append(df)
        avg_flags.append(avg)
        cliffords.append(
            {
                "clifford": k,
                "stabilizers": [_estimate_record(e, f) for e, f in zip(stabs, sf)],
                "destabilizers": [_estimate_record(e, f) for e, f in zip(destabs, df)],
                "average": {
                    "stabilizer_mean": float(np.mean([e.mean for e in stabs])),
                    "stabilizer_sigma": average_sigma([e.sigma for e in stabs], cfg.sigma_avg),
                    "stabilizer_pass": avg[0],
                    "destabilizer_mean": float(np.mean([e.mean for e in destabs])),
                    "destabilizer_sigma": average_sigma([e.sigma for e in destabs], cfg.sigma_avg),
                    "destabilizer_pass": avg[1],
                },
            }
        )
    verdict = ClvVerdict(n, stab_flags, destab_flags, avg_flags)
    return verdict, {"n": n, "pass": verdict.passed, "cliffords": cliffords}


def run_clv_level(n: int, cfg: ClvConfig, workers: int = 1) -> tuple[ClvVerdict, dict]:
    if n < 1:
        raise ValueError("n must be at least 1")
    start = time.perf_counter()
    groups = map_ordered(_estimate_task, [(n, k, cfg) for k in range(cfg.K)], workers)
    verdict, record = judge(n, groups, cfg)
    record["wall_clock_s"] = time.perf_counter() - start
    return verdict, record


def run_clv_search(cfg: ClvConfig, n_max: int, workers: int = 1) -> tuple[int, list[dict]]:
    records: dict[int, dict] = {}

    def passes(n: int) -> bool:
        verdict, rec = run_clv_level(n, cfg, workers)
        records[n] = rec
        return verdict.passed

    score, order = search_score(passes, n_max, cfg.search)
    return score, [records[n] for n in order]


# -- replay of externally measured tables -------------------------------------


def estimates_from_table(table: dict) -> tuple[int, list[list[ExpectationEstimate]]]:
    """Parse a published-run document into per-Clifford estimate groups."""
    try:
        n = int(table["n"])
        default_shots = table.get("shots")
        groups = []
        for cliff in table["cliffords"]:
            es = []
            for row in cliff["rows"]:
                kind = row["kind"]
                if kind not in (STABILIZER, DESTABILIZER):
                    raise ValueError(f"unknown kind {kind!r}")
                shots = int(row.get("shots", default_shots))
                es.append(ExpectationEstimate(float(row["mean"]), shots, row.get("operator", ""), kind))
            if not any(e.kind == STABILIZER for e in es) or not any(
                e.kind == DESTABILIZER for e in es
            ):
                raise ValueError("each Clifford needs stabilizer and destabilizer rows")
            groups.append(es)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed table: {exc}") from exc
    if not groups:
        raise ValueError("table has no Cliffords")
    return n, groups


def replay_verdict(table: dict, cfg: ClvConfig | None = None) -> tuple[ClvVerdict, dict]:
    cfg = cfg or ClvConfig()
    n, groups = estimates_from_table(table)
    return judge(n, groups, cfg)
