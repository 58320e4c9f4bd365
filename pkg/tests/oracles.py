"""Independent reference implementations used by the tests.

Nothing here imports volbench: Paulis are dense matrices built from their
text form, and circuits arrive as OpenQASM text parsed by a small grammar.
Qubit 0 is the leftmost tensor factor and the leftmost character of a
Pauli string.
"""

from __future__ import annotations

import math
import re
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j])
SDG = np.diag([1, -1j])
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}
ONE_QUBIT = {"h": H, "s": S, "sdg": SDG, "x": X, "y": Y, "z": Z}


def pauli_dense(text: str) -> np.ndarray:
    sign = 1.0
    if text[0] in "+-":
        sign = -1.0 if text[0] == "-" else 1.0
        text = text[1:]
    return sign * reduce(np.kron, [LETTER[c] for c in text])


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def embed_one(u: np.ndarray, q: int, n: int) -> np.ndarray:
    ops = [I2] * n
    ops[q] = u
    return reduce(np.kron, ops)


def cnot_dense(c: int, t: int, n: int) -> np.ndarray:
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        bits = [(b >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[c]:
            bits[t] ^= 1
        b2 = sum(bit << (n - 1 - q) for q, bit in enumerate(bits))
        out[b2, b] = 1
    return out


# -- OpenQASM 2 subset ------------------------------------------------------

_HEADER = re.compile(r'^OPENQASM 2\.0;$|^include "qelib1\.inc";$')
_QREG = re.compile(r"^qreg q\[(\d+)\];$")
_GATE = re.compile(
    r"^(?P<name>h|s|sdg|x|y|z|cx|rz)(?:\((?P<arg>[-+0-9.eE]+)\))?\s+"
    r"q\[(?P<a>\d+)\](?:,q\[(?P<b>\d+)\])?;$"
)


class QasmSyntaxError(ValueError):
    pass


def parse_qasm(text: str) -> tuple[int, list[tuple[str, tuple[int, ...], float | None]]]:
    n = None
    gates = []
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or lines[0] != "OPENQASM 2.0;":
        raise QasmSyntaxError("missing OPENQASM header")
    for ln in lines:
        if _HEADER.match(ln):
            continue
        m = _QREG.match(ln)
        if m:
            if n is not None:
                raise QasmSyntaxError("second qreg")
            n = int(m.group(1))
            continue
        m = _GATE.match(ln)
        if not m or n is None:
            raise QasmSyntaxError(f"bad line {ln!r}")
        name = m.group("name")
        qs = (int(m.group("a")),) + ((int(m.group("b")),) if m.group("b") else ())
        two = name == "cx"
        if len(qs) != (2 if two else 1) or (name == "rz") != (m.group("arg") is not None):
            raise QasmSyntaxError(f"bad operands {ln!r}")
        if any(q >= n for q in qs) or (two and qs[0] == qs[1]):
            raise QasmSyntaxError(f"bad qubit {ln!r}")
        gates.append((name, qs, float(m.group("arg")) if m.group("arg") else None))
    if n is None:
        raise QasmSyntaxError("no qreg")
    return n, gates


def qasm_unitary(text: str) -> np.ndarray:
    n, gates = parse_qasm(text)
    U = np.eye(2**n, dtype=complex)
    for name, qs, arg in gates:
        if name == "cx":
            g = cnot_dense(qs[0], qs[1], n)
        elif name == "rz":
            g = embed_one(rz(arg), qs[0], n)
        else:
            g = embed_one(ONE_QUBIT[name], qs[0], n)
        U = g @ U
    return U


def qasm_state(text: str) -> np.ndarray:
    U = qasm_unitary(text)
    return U[:, 0]


def expectation(state: np.ndarray, op: np.ndarray) -> float:
    return float(np.real(np.vdot(state, op @ state)))


def jw_dense(n: int, k: int) -> np.ndarray:
    """Majorana ``k`` (zero-based): Z on qubits before k//2, then X or Y."""
    q = k // 2
    return pauli_dense("Z" * q + ("X" if k % 2 == 0 else "Y") + "I" * (n - q - 1))


def depolarize_pair(rho: np.ndarray, a: int, b: int, n: int, p: float) -> np.ndarray:
    out = (1.0 - p) * rho
    for la in "IXYZ":
        for lb in "IXYZ":
            if la == lb == "I":
                continue
            letters = ["I"] * n
            letters[a], letters[b] = la, lb
            P = pauli_dense("".join(letters))
            out = out + (p / 15.0) * (P @ rho @ P)
    return out


def qasm_density(text: str, p2q: float, cx_stride: int = 1) -> np.ndarray:
    """Density matrix after the circuit with a two-qubit depolarizing
    channel following every ``cx_stride``-th CNOT."""
    n, gates = parse_qasm(text)
    seen = 0
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    for name, qs, arg in gates:
        if name == "cx":
            g = cnot_dense(qs[0], qs[1], n)
        elif name == "rz":
            g = embed_one(rz(arg), qs[0], n)
        else:
            g = embed_one(ONE_QUBIT[name], qs[0], n)
        rho = g @ rho @ g.conj().T
        if name == "cx":
            seen += 1
        if name == "cx" and p2q > 0 and seen % cx_stride == 0:
            rho = depolarize_pair(rho, qs[0], qs[1], n, p2q)
    return rho
