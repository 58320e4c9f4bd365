"""Signed n-qubit Pauli strings in packed X/Z bit-plane form.

A :class:`PauliString` stores one integer bitmask for the X component and one
for the Z component (bit ``j`` is qubit ``j``) plus a phase exponent ``k`` so
that the operator is ``i**k`` times the tensor product of the letters
``I, X, Y, Z``.  Text uses the same letter convention, e.g. ``"-YIZX"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

_SIGNS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_LETTERS = "IXZY"  # index = x + 2*z


class PauliError(ValueError):
    """Raised for malformed Pauli text or incompatible operands."""


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise PauliError("qubit count must be non-negative")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise PauliError(f"bit planes do not fit in {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliString:
        """``letter`` on ``qubit`` and identity elsewhere."""
        if not 0 <= qubit < n:
            raise PauliError(f"qubit {qubit} out of range for n={n}")
        idx = _LETTERS.index(letter.upper())
        bit = 1 << qubit
        return cls(n, bit if idx & 1 else 0, bit if idx & 2 else 0)

    @classmethod
    def from_bits(cls, xbits: Iterable, zbits: Iterable, sign: int = 1) -> PauliString:
        xb = np.asarray(list(xbits) if not isinstance(xbits, np.ndarray) else xbits, dtype=bool)
        zb = np.asarray(list(zbits) if not isinstance(zbits, np.ndarray) else zbits, dtype=bool)
        if xb.shape != zb.shape or xb.ndim != 1:
            raise PauliError("xbits and zbits must be 1-d and of equal length")
        if sign not in (1, -1):
            raise PauliError("sign must be +1 or -1")
        return cls(len(xb), _pack(xb), _pack(zb), 0 if sign == 1 else 2)

    @classmethod
    def parse(cls, text: str) -> PauliString:
        s = text.strip()
        if not s:
            raise PauliError("empty Pauli string")
        phase = 0
        if s[0] in "+-":
            phase = 0 if s[0] == "+" else 2
            s = s[1:]
            if s.startswith("i"):
                phase += 1
                s = s[1:]
        if not s:
            raise PauliError(f"no Pauli letters in {text!r}")
        x = z = 0
        for j, ch in enumerate(s):
            try:
                idx = _LETTERS.index(ch)
            except ValueError:
                raise PauliError(f"illegal character {ch!r} in {text!r}") from None
            if idx & 1:
                x |= 1 << j
            if idx & 2:
                z |= 1 << j
        return cls(len(s), x, z, phase)

    # -- queries ----------------------------------------------------------

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if self.phase & 1:
            raise PauliError(f"{self} is not Hermitian")
        return 1 if self.phase == 0 else -1

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def support(self) -> list[int]:
        m = self.x | self.z
        return [j for j in range(self.n) if (m >> j) & 1]

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def letter(self, qubit: int) -> str:
        return _LETTERS[((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)]

    def xbits(self) -> np.ndarray:
        return _unpack(self.x, self.n)

    def zbits(self) -> np.ndarray:
        return _unpack(self.z, self.n)

    def unsigned(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, 0)

    def __neg__(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __str__(self) -> str:
        return format_pauli(self)

    def to_matrix(self) -> np.ndarray:
        """Dense 2**n matrix with qubit 0 as the most significant tensor factor."""
        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.ones((1, 1), dtype=complex)
        for j in range(self.n):
            out = np.kron(out, mats[self.letter(j)])
        return (1j**self.phase) * out


def _pack(bits: np.ndarray) -> int:
    if len(bits) == 0:
        return 0
    return int.from_bytes(np.packbits(bits.astype(np.uint8), bitorder="little").tobytes(), "little")


def _unpack(v: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=bool)
    raw = np.frombuffer(v.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def _check_size(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise PauliError(f"dimension mismatch: {a.n} vs {b.n} qubits")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` with exact phase."""
    _check_size(a, b)
    # Y = i X Z, so each string is i**(phase + #Y) X^x Z^z; reorder Z_a past X_b.
    k = a.phase + _popcount(a.x & a.z) + b.phase + _popcount(b.x & b.z)
    k += 2 * _popcount(a.z & b.x)
    x = a.x ^ b.x
    z = a.z ^ b.z
    return PauliString(a.n, x, z, k - _popcount(x & z))


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_size(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def format_pauli(p: PauliString) -> str:
    return _SIGNS[p.phase] + "".join(p.letter(j) for j in range(p.n))


def parse_pauli(text: str) -> PauliString:
    return PauliString.parse(text)
