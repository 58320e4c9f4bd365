"""Majorana-mode propagation for free-fermion circuits.

Modes are zero-based: ``m_{2q}`` is ``Z...Z X_q`` and ``m_{2q+1}`` is
``Z...Z Y_q`` under Jordan-Wigner, with the Z string on qubits ``0..q-1``.
Noise enters as a diagonal sign action on the modes for every two-qubit
Pauli fault, averaged into a per-gate channel matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .estimates import ExpectationEstimate, sample_shots
from .orthogonal import GivensProgram, check_special_orthogonal
from .pauli import PauliString, commutes


def jw_majorana(n: int, k: int) -> PauliString:
    if not 0 <= k < 2 * n:
        raise ValueError(f"Majorana index {k} out of range for n={n}")
    q = k // 2
    prefix = (1 << q) - 1
    bit = 1 << q
    if k % 2 == 0:
        return PauliString(n, bit, prefix)
    return PauliString(n, bit, prefix | bit)


def two_qubit_paulis(n: int, q: int) -> list[PauliString]:
    """The 15 non-identity Paulis supported on qubits ``q`` and ``q + 1``."""
    if not 0 <= q < n - 1:
        raise ValueError(f"no qubit pair starting at {q} for n={n}")
    out = []
    for a in "IXYZ":
        for b in "IXYZ":
            if a == b == "I":
                continue
            p = PauliString.identity(n)
            if a != "I":
                p = p * PauliString.single(n, q, a)
            if b != "I":
                p = p * PauliString.single(n, q + 1, b)
            out.append(p)
    return out


def pauli_sign_action(p: PauliString) -> np.ndarray:
    """Diagonal of ``D_P``: +1 where ``p`` commutes with the mode's JW image."""
    if p.x == 0 and p.z == 0:
        raise ValueError("identity has no sign action")
    return np.array(
        [1 if commutes(jw_majorana(p.n, k), p) else -1 for k in range(2 * p.n)], dtype=np.int8
    )


def channel_diagonal(n: int, q: int, p2q: float) -> np.ndarray:
    """Diagonal of ``(1 - p) I + (p / 15) sum_P D_P`` for the pair (q, q+1).

    Modes below ``2q`` see no fault. Every other mode has a non-identity
    image on the pair, which commutes with 7 of the 15 faults, so the sign
    average is -1/15 and the factor is ``1 - 16 p / 15``.
    """
    if not 0 <= q < n - 1:
        raise ValueError(f"no qubit pair starting at {q} for n={n}")
    out = np.ones(2 * n)
    out[2 * q :] = 1.0 - 16.0 * p2q / 15.0
    return out


@dataclass
class FermionInstance:
    n: int
    O: np.ndarray
    init_index: int
    program: GivensProgram

    def __post_init__(self):
        if self.O.shape != (2 * self.n, 2 * self.n):
            raise ValueError("matrix size does not match 2n")
        if not 0 <= self.init_index < 2 * self.n:
            raise ValueError(f"Majorana index {self.init_index} out of range")
        check_special_orthogonal(self.O)


def ideal_expectations(inst: FermionInstance) -> np.ndarray:
    """<m_j> for every mode j: column ``init_index`` of O."""
    return inst.O[:, inst.init_index].copy()


def _check_p(p2q: float) -> None:
    if not 0.0 <= p2q <= 1.0:
        raise ValueError(f"p2q must lie in [0, 1], got {p2q}")


@dataclass(frozen=True)
class EffectiveEvolution:
    M: np.ndarray
    p2q: float


def effective_evolution(prog: GivensProgram, p2q: float) -> EffectiveEvolution:
    """``S (N_0 G_0) (N_1 G_1) ...`` with a channel ``N_t`` after every
    rotation that lowers to a two-qubit gate."""
    _check_p(p2q)
    fade = 1.0 - 16.0 * p2q / 15.0
    M = np.diag(prog.signs.astype(float))
    for k, a in prog.rotations:
        if k % 2 == 1 and p2q > 0:
            M[:, k - 1 :] *= fade
        c, s = np.cos(a), np.sin(a)
        ck, ck1 = M[:, k].copy(), M[:, k + 1].copy()
        M[:, k] = c * ck + s * ck1
        M[:, k + 1] = -s * ck + c * ck1
    return EffectiveEvolution(M, p2q)


def effective_column(prog: GivensProgram, p2q: float, i: int) -> np.ndarray:
    """Column ``i`` of the effective evolution in O(n) per rotation."""
    _check_p(p2q)
    fade = 1.0 - 16.0 * p2q / 15.0
    v = np.zeros(prog.dim)
    v[i] = 1.0
    for k, a in reversed(prog.rotations):
        c, s = np.cos(a), np.sin(a)
        vk, vk1 = v[k], v[k + 1]
        v[k] = c * vk - s * vk1
        v[k + 1] = s * vk + c * vk1
        if k % 2 == 1 and p2q > 0:
            v[k - 1 :] *= fade
    return prog.signs * v


def trajectory_column(
    prog: GivensProgram, p2q: float, i: int, trajectories: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo over explicit Pauli faults; returns per-mode mean and
    standard error of the column."""
    _check_p(p2q)
    n = prog.n_qubits
    V = np.zeros((trajectories, prog.dim))
    V[:, i] = 1.0
    signs_cache: dict[int, np.ndarray] = {}
    for k, a in reversed(prog.rotations):
        c, s = np.cos(a), np.sin(a)
        vk, vk1 = V[:, k].copy(), V[:, k + 1].copy()
        V[:, k] = c * vk - s * vk1
        V[:, k + 1] = s * vk + c * vk1
        if k % 2 == 1 and p2q > 0:
            q = k // 2
            if q not in signs_cache:
                signs_cache[q] = np.array([pauli_sign_action(p) for p in two_qubit_paulis(n, q)])
            hit = np.flatnonzero(rng.random(trajectories) < p2q)
            if hit.size:
                which = rng.integers(15, size=hit.size)
                V[hit] *= signs_cache[q][which]
    V *= prog.signs
    return V.mean(axis=0), V.std(axis=0, ddof=1) / np.sqrt(trajectories)


def readout_weights(dim: int) -> np.ndarray:
    """Qubits read out when measuring each mode: the JW support size."""
    return np.arange(dim) // 2 + 1


def readout_damped(values: np.ndarray, pm: float) -> np.ndarray:
    if not 0.0 <= pm <= 0.5:
        raise ValueError(f"pm must lie in [0, 1/2], got {pm}")
    values = np.asarray(values, dtype=float)
    return values * (1.0 - 2.0 * pm) ** readout_weights(values.shape[0])


def noisy_expectations(prog: GivensProgram, i: int, p2q: float, pm: float) -> np.ndarray:
    return readout_damped(effective_column(prog, p2q, i), pm)


def sample_majorana_shots(
    values: np.ndarray, modes, shots: int, rngs
) -> list[ExpectationEstimate]:
    return [
        sample_shots(float(values[j]), shots, rng, f"m{j}", "majorana")
        for j, rng in zip(modes, rngs)
    ]
