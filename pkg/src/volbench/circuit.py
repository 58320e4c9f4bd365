"""Gate-level circuit IR, Jordan-Wigner lowering of Givens programs,
measurement basis changes, layering metrics and OpenQASM 2.0 export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .majorana import jw_majorana
from .orthogonal import GivensProgram
from .pauli import PauliString, multiply

GATE_ARITY = {"h": 1, "s": 1, "sdg": 1, "x": 1, "y": 1, "z": 1, "cx": 2, "rz": 1}
CLIFFORD_GATES = frozenset(GATE_ARITY) - {"rz"}

QASM_HEADER = ('OPENQASM 2.0;', 'include "qelib1.inc";')


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.name not in GATE_ARITY:
            raise CircuitError(f"unknown gate {self.name!r}")
        if len(self.qubits) != GATE_ARITY[self.name]:
            raise CircuitError(f"{self.name} takes {GATE_ARITY[self.name]} qubit(s)")
        if self.name == "cx" and self.qubits[0] == self.qubits[1]:
            raise CircuitError("cx control and target must differ")
        if (self.name == "rz") != (self.angle is not None):
            raise CircuitError("exactly the rz gate carries an angle")
        if self.angle is not None and not math.isfinite(self.angle):
            raise CircuitError("rz angle must be finite")

    def __str__(self) -> str:
        args = ",".join(f"q[{q}]" for q in self.qubits)
        if self.angle is None:
            return f"{self.name} {args};"
        return f"{self.name}({self.angle:.17g}) {args};"


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    source: str = "clifford"
    meta: dict = field(default_factory=dict)

    def append(self, name: str, *qubits: int, angle: float | None = None) -> Circuit:
        g = Gate(name, tuple(int(q) for q in qubits), angle)
        for q in g.qubits:
            if not 0 <= q < self.n_qubits:
                raise CircuitError(f"qubit {q} out of range for {self.n_qubits} qubits")
        self.gates.append(g)
        return self

    def extend(self, other: Circuit | list[Gate]) -> Circuit:
        gates = other.gates if isinstance(other, Circuit) else other
        for g in gates:
            self.append(g.name, *g.qubits, angle=g.angle)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)

    def validate(self) -> None:
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise CircuitError(f"gate {g} touches a qubit outside the register")
        if self.source == "clifford" and any(g.name == "rz" for g in self.gates):
            raise CircuitError("Clifford circuits may not contain rz")


# -- metrics ----------------------------------------------------------------


@dataclass(frozen=True)
class CircuitMetrics:
    two_qubit_depth: int
    two_qubit_count: int
    total_depth: int
    total_count: int


def _greedy_depth(supports, n: int) -> int:
    free = [0] * n
    depth = 0
    for qs in supports:
        layer = max(free[q] for q in qs) + 1
        for q in qs:
            free[q] = layer
        depth = max(depth, layer)
    return depth


def metrics(c: Circuit) -> CircuitMetrics:
    """Greedy layering: each gate lands in the earliest layer after every
    earlier gate on its qubits.  Single-qubit gates are free for the
    two-qubit depth."""
    two = [g.qubits for g in c.gates if len(g.qubits) == 2]
    return CircuitMetrics(
        two_qubit_depth=_greedy_depth(two, c.n_qubits),
        two_qubit_count=len(two),
        total_depth=_greedy_depth((g.qubits for g in c.gates), c.n_qubits),
        total_count=len(c.gates),
    )


def rotation_depth(prog: GivensProgram) -> int:
    """Layer count of the two-qubit rotations alone, each treated as one
    gate on its qubit pair."""
    pairs = [(k // 2, k // 2 + 1) for k, _ in prog.rotations if k % 2 == 1]
    return _greedy_depth(pairs, prog.n_qubits)


# -- OpenQASM ---------------------------------------------------------------


def export_qasm(c: Circuit) -> str:
    lines = [*QASM_HEADER, f"qreg q[{c.n_qubits}];"]
    lines.extend(str(g) for g in c.gates)
    return "\n".join(lines) + "\n"


# -- measurement basis change -----------------------------------------------


def basis_change_layer(p: PauliString) -> Circuit:
    """Gates after which ``p`` reads as a Z string on the same support."""
    if not p.is_hermitian:
        raise CircuitError(f"{p} is not Hermitian")
    frag = Circuit(p.n, source="fragment")
    for q in range(p.n):
        letter = p.letter(q)
        if letter == "X":
            frag.append("h", q)
        elif letter == "Y":
            frag.append("sdg", q).append("h", q)
    return frag


# -- free-fermion lowering --------------------------------------------------


def _emit_rotation(c: Circuit, k: int, alpha: float) -> None:
    q = k // 2
    if k % 2 == 0:
        c.append("rz", q, angle=alpha)
        return
    # exp(-i alpha/2 X_q X_{q+1})
    c.append("h", q).append("h", q + 1)
    c.append("cx", q, q + 1)
    c.append("rz", q + 1, angle=alpha)
    c.append("cx", q, q + 1)
    c.append("h", q).append("h", q + 1)


def sign_layer_pauli(signs, n: int) -> PauliString:
    """Pauli string (up to phase) whose conjugation flips exactly the
    Majoranas with sign -1.  Needs an even number of flips."""
    prod = PauliString.identity(n)
    for k, s in enumerate(signs):
        if s < 0:
            prod = multiply(prod, jw_majorana(n, k))
    return prod


def lower_givens(prog: GivensProgram) -> Circuit:
    """Lower ``prog`` to gates.  The last rotation of the product acts first,
    and the sign layer acts last."""
    n = prog.n_qubits
    c = Circuit(n, source="freefermion")
    for k, alpha in reversed(prog.rotations):
        _emit_rotation(c, k, alpha)
    layer = sign_layer_pauli(prog.signs, n)
    for q in range(n):
        letter = layer.letter(q)
        if letter != "I":
            c.append(letter.lower(), q)
    return c


def fermion_state_prep(n: int, init_index: int) -> Circuit:
    """Product state with <m_init> = 1: |+> on the owning qubit for an
    X-type Majorana, |+i> for a Y-type one, |0> elsewhere."""
    if not 0 <= init_index < 2 * n:
        raise CircuitError(f"Majorana index {init_index} out of range for n={n}")
    c = Circuit(n, source="freefermion")
    q = init_index // 2
    c.append("h", q)
    if init_index % 2:
        c.append("s", q)
    return c


def freefermion_circuit(prog: GivensProgram, init_index: int) -> Circuit:
    c = fermion_state_prep(prog.n_qubits, init_index)
    c.extend(lower_givens(prog))
    c.meta["init_index"] = init_index
    return c
