"""Haar sampling over SO(2n), nearest-neighbour Givens factorisation and the
truncated-Gaussian statistics behind top-|entry| measurement selection.

Mode indices are zero-based: a rotation with index ``k`` mixes modes ``k`` and
``k + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

ORTHO_ATOL = 1e-10

_STD_NORMAL = NormalDist()


def check_special_orthogonal(O: np.ndarray, atol: float = ORTHO_ATOL) -> None:
    O = np.asarray(O)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {O.shape}")
    dim = O.shape[0]
    err = np.linalg.norm(O.T @ O - np.eye(dim))
    if err > atol:
        raise ValueError(f"matrix is not orthogonal (||O^T O - I||_F = {err:.3e})")
    det = np.linalg.det(O)
    if abs(det - 1.0) > atol:
        raise ValueError(f"matrix has determinant {det:.6f}, expected +1")


def givens_matrix(dim: int, k: int, alpha: float) -> np.ndarray:
    """Rotation by ``alpha`` in the (k, k+1) plane: block [[c, -s], [s, c]]."""
    if not 0 <= k < dim - 1:
        raise ValueError(f"rotation index {k} out of range for dimension {dim}")
    G = np.eye(dim)
    c, s = math.cos(alpha), math.sin(alpha)
    G[k, k] = c
    G[k, k + 1] = -s
    G[k + 1, k] = s
    G[k + 1, k + 1] = c
    return G


def _normalize_angle(a: float) -> float:
    a = math.remainder(a, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass
class GivensProgram:
    """``O = diag(signs) @ G(k_0, a_0) @ G(k_1, a_1) @ ...``.

    The circuit applies the rotations right to left in time, so the last
    entry of :attr:`rotations` acts first on the state.
    """

    dim: int
    rotations: list[tuple[int, float]] = field(default_factory=list)
    signs: np.ndarray = None

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2:
            raise ValueError(f"dimension must be even and >= 2, got {self.dim}")
        if self.signs is None:
            self.signs = np.ones(self.dim, dtype=np.int8)
        self.signs = np.asarray(self.signs, dtype=np.int8)
        if self.signs.shape != (self.dim,) or not np.all(np.abs(self.signs) == 1):
            raise ValueError("signs must be a vector of +-1 of length dim")
        if np.prod(self.signs) != 1:
            raise ValueError("sign layer must have determinant +1")
        for k, _ in self.rotations:
            if not 0 <= k < self.dim - 1:
                raise ValueError(f"rotation index {k} out of range")

    @property
    def n_qubits(self) -> int:
        return self.dim // 2

    def matrix(self) -> np.ndarray:
        M = np.diag(self.signs.astype(float))
        for k, a in self.rotations:
            c, s = math.cos(a), math.sin(a)
            ck, ck1 = M[:, k].copy(), M[:, k + 1].copy()
            M[:, k] = c * ck + s * ck1
            M[:, k + 1] = -s * ck + c * ck1
        return M

    def two_mode_rotation_count(self) -> int:
        """Rotations that couple two different qubits (odd zero-based ``k``)."""
        return sum(1 for k, _ in self.rotations if k % 2 == 1)


def sample_haar_so(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(dim) via sign-corrected QR of a Gaussian matrix."""
    if dim < 2 or dim % 2:
        raise ValueError(f"dimension must be even and >= 2, got {dim}")
    Z = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(Z)
    Q *= np.where(np.diag(R) < 0, -1.0, 1.0)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


SCHEDULES = ("mesh", "triangle")


def _signed_program(dim: int, factors: list[tuple[int, float]], diag: np.ndarray) -> GivensProgram:
    # factors * D = D * (D factors D); conjugating a rotation by D flips its
    # angle whenever the two touched signs differ.
    signs = np.where(diag < 0, -1, 1).astype(np.int8)
    rotations = [(k, _normalize_angle(a * int(signs[k]) * int(signs[k + 1]))) for k, a in factors]
    return GivensProgram(dim, _layer_order(dim, rotations), signs)


def _layer_order(dim: int, rotations: list[tuple[int, float]]) -> list[tuple[int, float]]:
    """Reorder commuting rotations (disjoint mode pairs) into ASAP layers.

    Inside a layer the two-qubit rotations on even qubit pairs come before
    those on odd pairs, so neighbouring pairs that share a qubit do not
    serialise when the circuit is layered gate by gate.  The product is
    unchanged because only rotations on disjoint modes swap places.
    """
    free = [0] * dim
    keyed = []
    for pos, (k, a) in enumerate(rotations):
        layer = max(free[k], free[k + 1])
        free[k] = free[k + 1] = layer + 1
        keyed.append(((layer, k % 2, (k // 2) % 2, pos), (k, a)))
    keyed.sort(key=lambda item: item[0])
    return [rot for _, rot in keyed]


def _decompose_triangle(A: np.ndarray) -> GivensProgram:
    # Column by column, bottom-up, with row rotations only: G_m ... G_1 O = D.
    dim = A.shape[0]
    steps: list[tuple[int, float]] = []
    for col in range(dim - 1):
        for row in range(dim - 1, col, -1):
            b = A[row, col]
            if b == 0.0:
                continue
            k = row - 1
            theta = math.atan2(b, A[k, col])
            c, s = math.cos(theta), math.sin(theta)
            top = A[k, col:].copy()
            bot = A[row, col:]
            A[k, col:] = c * top + s * bot
            A[row, col:] = -s * top + c * bot
            A[row, col] = 0.0
            steps.append((k, theta))
    return _signed_program(dim, steps, np.diag(A))


def _decompose_mesh(A: np.ndarray) -> GivensProgram:
    # Alternate between zeroing anti-diagonals of the lower triangle with
    # column rotations (from the right) and row rotations (from the left),
    # which leaves a rectangular mesh of depth ~dim instead of a triangle.
    dim = A.shape[0]
    left: list[tuple[int, float]] = []  # A <- G(k, phi)^T A, in order
    right: list[tuple[int, float]] = []  # A <- A G(k, theta), in order
    for i in range(dim - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                r, c = dim - 1 - j, i - j
                a, b = A[r, c], A[r, c + 1]
                if a == 0.0:
                    continue
                theta = math.atan2(-a, b)
                co, si = math.cos(theta), math.sin(theta)
                u, v = A[:, c].copy(), A[:, c + 1].copy()
                A[:, c] = co * u + si * v
                A[:, c + 1] = -si * u + co * v
                A[r, c] = 0.0
                right.append((c, theta))
        else:
            for j in range(1, i + 2):
                r, c = dim + j - i - 2, j - 1
                a, b = A[r - 1, c], A[r, c]
                if b == 0.0:
                    continue
                phi = math.atan2(b, a)
                co, si = math.cos(phi), math.sin(phi)
                u, v = A[r - 1].copy(), A[r].copy()
                A[r - 1] = co * u + si * v
                A[r] = -si * u + co * v
                A[r, c] = 0.0
                left.append((r - 1, phi))
    # O = L_1 ... L_m D R_r^T ... R_1^T with L = G(k, phi), R^T = G(k, -theta)
    factors = left + [(k, -t) for k, t in reversed(right)]
    return _signed_program(dim, factors, np.diag(A))


def givens_decompose(O: np.ndarray, atol: float = ORTHO_ATOL, schedule: str = "mesh") -> GivensProgram:
    """Factor ``O`` into nearest-neighbour Givens rotations and a sign layer.

    ``mesh`` interleaves eliminations from both sides so the rotations form
    a rectangular network of about ``dim`` layers; ``triangle`` eliminates
    column by column with row rotations only, which is simpler but about
    twice as deep.  Both use ``dim (dim - 1) / 2`` rotations for generic
    input.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    O = np.asarray(O, dtype=float)
    check_special_orthogonal(O, atol)
    A = O.copy()
    return _decompose_mesh(A) if schedule == "mesh" else _decompose_triangle(A)


# -- normal distribution helpers --------------------------------------------


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_norm_cdf(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


class TruncatedMass(NamedTuple):
    threshold: float
    conditional_second_moment: float
    expected_sum: float


def truncated_mass(r: float, dim: int) -> TruncatedMass:
    """Gaussian-approximation statistics for keeping the top fraction ``r`` of
    a Haar column of length ``dim`` by absolute value.

    Returns the cut ``T``, the conditional mean square of a kept entry and
    the expected kept sum of squares (independent of ``dim``).
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {r}")
    sigma = math.sqrt(1.0 / dim)
    q = inv_norm_cdf(1.0 - r / 2.0)
    T = sigma * q
    lam = sigma**2 * (1.0 + 2.0 * T * norm_pdf(T / sigma) / (sigma * r))
    return TruncatedMass(T, lam, r + 2.0 * q * norm_pdf(q))


def select_top_indices(
    O: np.ndarray, column: int, count: int, prefer: int | None = None
) -> np.ndarray:
    """Row indices of the ``count`` largest ``|O[:, column]|``, ascending.

    Ties go to the lower index, except that ``prefer`` wins any tie it is
    part of.
    """
    col = np.abs(np.asarray(O)[:, column])
    dim = col.shape[0]
    if not 1 <= count <= dim:
        raise ValueError(f"count must be in [1, {dim}], got {count}")
    idx = np.arange(dim)
    not_preferred = idx != prefer if prefer is not None else np.ones(dim, dtype=bool)
    order = np.lexsort((idx, not_preferred, -col))
    return np.sort(order[:count])
