"""Dense state-vector simulation.

Qubit ordering is little-endian: wire ``q`` is bit ``q`` of the basis-state
index, so ``|q1 q0>`` with ``q1 = 1, q0 = 0`` is amplitude index 2.  Dense
matrices built here follow the same convention, i.e. the matrix of a gate
acting on ``targets = (a, b)`` is indexed by ``bit_a + 2 * bit_b``.

Gates are applied in place by reshaping the amplitude array into an
``n``-dimensional ``(2, ..., 2)`` tensor and contracting the gate matrix
against the target axes; controls are handled by slicing the control axes
at 1.  No ``2**n x 2**n`` matrix is ever formed on this path.  A separate
Kronecker-product path (:func:`gate_to_dense`) exists as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

UNITARY_ATOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.allclose(u @ u.conj().T, np.eye(u.shape[0]), rtol=0.0, atol=atol)


# --------------------------------------------------------------------- gates

GATE_KINDS = (
    "H",
    "X",
    "Rx",
    "Ry",
    "Rz",
    "CNOT",
    "CRz",
    "Matrix1Q",
    "ControlledMatrix1Q",
    "Unitary",
)

# (targets, controls, params) per kind; Unitary takes any number of wires
_ARITY = {
    "H": (1, 0, 0),
    "X": (1, 0, 0),
    "Rx": (1, 0, 1),
    "Ry": (1, 0, 1),
    "Rz": (1, 0, 1),
    "CNOT": (1, 1, 0),
    "CRz": (1, 1, 1),
    "Matrix1Q": (1, 0, 0),
    "ControlledMatrix1Q": (1, 1, 0),
}


@dataclass(frozen=True, eq=False)
class Gate:
    """One elementary operation.

    ``Unitary`` is a dense multi-qubit payload (with optional controls); it is
    used only where an exact propagator must be applied as a single gate.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    payload: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        wires = self.targets + self.controls
        if len(set(wires)) != len(wires):
            raise ValueError(f"{self.kind}: control and target wires must be distinct, got {wires}")
        if any(w < 0 for w in wires):
            raise ValueError(f"{self.kind}: negative wire index in {wires}")
        shape = (len(self.targets), len(self.controls), len(self.params))
        if self.kind in _ARITY and shape != _ARITY[self.kind]:
            raise ValueError(f"{self.kind}: expected (targets, controls, params) = {_ARITY[self.kind]}, got {shape}")
        if self.kind == "Unitary" and not self.targets:
            raise ValueError("Unitary needs at least one target")
        if self.kind in ("Matrix1Q", "ControlledMatrix1Q", "Unitary"):
            u = np.asarray(self.payload, dtype=complex)
            dim = 2 ** len(self.targets)
            if u.shape != (dim, dim):
                raise ValueError(f"{self.kind}: payload shape {u.shape} does not match {len(self.targets)} target(s)")
            if not is_unitary(u):
                raise ValueError(f"{self.kind}: payload is not unitary")
            object.__setattr__(self, "payload", u)
        object.__setattr__(self, "_matrix", self._build_matrix())

    @property
    def wires(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def matrix(self) -> np.ndarray:
        """Matrix acting on the target wires (controls not included)."""
        return self._matrix

    def _build_matrix(self) -> np.ndarray:
        k = self.kind
        if k == "H":
            return _H
        if k in ("X", "CNOT"):
            return _X
        if k == "Rx":
            return rx_matrix(self.params[0])
        if k == "Ry":
            return ry_matrix(self.params[0])
        if k in ("Rz", "CRz"):
            return rz_matrix(self.params[0])
        return self.payload

    def inverse(self) -> "Gate":
        if self.kind in ("H", "X", "CNOT"):
            return self
        if self.kind in ("Rx", "Ry", "Rz", "CRz"):
            return Gate(self.kind, self.targets, self.controls, (-self.params[0],))
        return Gate(self.kind, self.targets, self.controls, (), self.payload.conj().T)

    def remapped(self, mapping) -> "Gate":
        """Copy with wires relabelled through ``mapping`` (callable or sequence)."""
        f = mapping if callable(mapping) else mapping.__getitem__
        return Gate(
            self.kind,
            tuple(f(w) for w in self.targets),
            tuple(f(w) for w in self.controls),
            self.params,
            self.payload,
        )

    def __repr__(self):
        extra = f", params={self.params}" if self.params else ""
        ctrl = f", controls={self.controls}" if self.controls else ""
        return f"Gate({self.kind}, targets={self.targets}{ctrl}{extra})"


def h(q: int) -> Gate:
    return Gate("H", (q,))


def x(q: int) -> Gate:
    return Gate("X", (q,))


def rx(theta: float, q: int) -> Gate:
    return Gate("Rx", (q,), (), (float(theta),))


def ry(theta: float, q: int) -> Gate:
    return Gate("Ry", (q,), (), (float(theta),))


def rz(theta: float, q: int) -> Gate:
    return Gate("Rz", (q,), (), (float(theta),))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (target,), (control,))


def crz(theta: float, control: int, target: int) -> Gate:
    return Gate("CRz", (target,), (control,), (float(theta),))


def matrix_1q(u: np.ndarray, q: int) -> Gate:
    return Gate("Matrix1Q", (q,), (), (), u)


def controlled_matrix_1q(u: np.ndarray, control: int, target: int) -> Gate:
    return Gate("ControlledMatrix1Q", (target,), (control,), (), u)


def unitary(u: np.ndarray, targets: Sequence[int], controls: Sequence[int] = ()) -> Gate:
    return Gate("Unitary", tuple(targets), tuple(controls), (), u)


# ------------------------------------------------------------------- circuit


class Circuit:
    """Ordered gate list on ``n_qubits`` wires; the first gate is applied first."""

    def __init__(self, n_qubits: int, gates: Iterable[Gate] = ()):
        if n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.n_qubits = int(n_qubits)
        self.gates: list[Gate] = []
        self.extend(gates)

    def append(self, gate: Gate) -> "Circuit":
        bad = [w for w in gate.wires if w >= self.n_qubits]
        if bad:
            raise ValueError(f"{gate!r} uses wire(s) {bad} outside a {self.n_qubits}-qubit circuit")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def compose(self, other: "Circuit", wires: Sequence[int] | None = None) -> "Circuit":
        """Append ``other``; its wire ``i`` is placed on ``wires[i]``."""
        if wires is None:
            wires = range(other.n_qubits)
        wires = list(wires)
        if len(wires) != other.n_qubits:
            raise ValueError("wire map length must equal the composed circuit's width")
        return self.extend(g.remapped(wires) for g in other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, self.gates)

    def count(self, *kinds: str) -> int:
        return sum(1 for g in self.gates if g.kind in kinds)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __repr__(self):
        return f"Circuit(n_qubits={self.n_qubits}, gates={len(self.gates)})"


# -------------------------------------------------------------- state vector


class StateVector:
    """Normalized amplitude array over ``n_qubits`` (little-endian)."""

    def __init__(self, amplitudes, normalize: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 1 or 2**n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not 2**n for n >= 1")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize a zero vector")
            amps = amps / norm
        self.n_qubits = n
        self.amplitudes = amps

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        """``"0101"`` is read with the leftmost character as the highest wire."""
        return cls.basis(len(bits), int(bits, 2))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def tensor(self, other: "StateVector") -> "StateVector":
        """``self`` on the low wires, ``other`` on the high wires."""
        return StateVector(np.kron(other.amplitudes, self.amplitudes))

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def _check_wires(n_qubits: int, wires: Iterable[int]):
    for w in wires:
        if not 0 <= w < n_qubits:
            raise ValueError(f"wire {w} out of range for {n_qubits} qubit(s)")


def _apply_inplace(psi: np.ndarray, gate: Gate, n: int) -> None:
    tensor = psi.reshape((2,) * n)
    # wire w lives on tensor axis n - 1 - w
    index = [slice(None)] * n
    for c in gate.controls:
        index[n - 1 - c] = 1
    index = tuple(index)
    sub = tensor[index]
    free_axes = [a for a in range(n) if not isinstance(index[a], int)]
    # matrix index = sum bit_i 2**i over targets, so reshaped axes run targets[-1] .. targets[0]
    axes = [free_axes.index(n - 1 - t) for t in reversed(gate.targets)]
    k = len(gate.targets)
    u = gate.matrix().reshape((2,) * (2 * k))
    out = np.tensordot(u, sub, axes=(list(range(k, 2 * k)), axes))
    tensor[index] = np.moveaxis(out, list(range(k)), axes)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return ``gate |state>`` as a new state."""
    _check_wires(state.n_qubits, gate.wires)
    out = state.amplitudes.copy()
    _apply_inplace(out, gate, state.n_qubits)
    return StateVector(out)


def run_circuit(initial: StateVector, circuit: Circuit) -> StateVector:
    if initial.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"state has {initial.n_qubits} qubit(s) but circuit has {circuit.n_qubits}"
        )
    psi = initial.amplitudes.copy()
    n = circuit.n_qubits
    for gate in circuit.gates:
        _apply_inplace(psi, gate, n)
    return StateVector(psi)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugating ``a``."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def probability_zero(state: StateVector, wire: int) -> float:
    """Exact marginal probability that ``wire`` reads 0."""
    _check_wires(state.n_qubits, [wire])
    probs = np.abs(state.amplitudes) ** 2
    mask = (np.arange(probs.size) >> wire) & 1
    return float(np.clip(probs[mask == 0].sum(), 0.0, 1.0))


@dataclass(frozen=True)
class ShotCounts:
    """Outcome histogram of one ancilla over ``total_shots`` repetitions."""

    outcome_counts: dict
    total_shots: int

    def __post_init__(self):
        if set(self.outcome_counts) - {0, 1}:
            raise ValueError("outcomes must be 0 or 1")
        if any(c < 0 for c in self.outcome_counts.values()):
            raise ValueError("counts must be nonnegative")
        if sum(self.outcome_counts.values()) != self.total_shots:
            raise ValueError("counts do not sum to total_shots")

    @classmethod
    def from_zeros(cls, zeros: int, total: int) -> "ShotCounts":
        return cls({0: int(zeros), 1: int(total - zeros)}, int(total))

    def __getitem__(self, bit: int) -> int:
        return self.outcome_counts.get(bit, 0)

    def frequency(self, bit: int = 0) -> float:
        return self[bit] / self.total_shots


def measure_ancilla(state: StateVector, wire: int, shots: int, seed: int) -> ShotCounts:
    """Sample ``shots`` Bernoulli outcomes of ``wire``; deterministic for a seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p0 = probability_zero(state, wire)
    rng = np.random.default_rng(seed)
    zeros = int(rng.binomial(shots, p0))
    return ShotCounts.from_zeros(zeros, shots)


# -------------------------------------------------------------- dense oracle


def gate_to_dense(gate: Gate, n_qubits: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``gate`` via Kronecker products (oracle path)."""
    _check_wires(n_qubits, gate.wires)
    eye = np.eye(2, dtype=complex)
    p1 = np.diag([0, 1]).astype(complex)
    k = len(gate.targets)
    u = gate.matrix()
    dim = 2**n_qubits
    # embed u on its targets by summing over its matrix elements
    target_op = np.zeros((dim, dim), dtype=complex)
    for r in range(2**k):
        for c in range(2**k):
            if u[r, c] == 0:
                continue
            factors = [eye] * n_qubits
            for i, t in enumerate(gate.targets):
                e = np.zeros((2, 2), dtype=complex)
                e[(r >> i) & 1, (c >> i) & 1] = 1
                factors[t] = e
            target_op += u[r, c] * reduce(np.kron, reversed(factors))
    if not gate.controls:
        return target_op
    factors = [eye] * n_qubits
    for c in gate.controls:
        factors[c] = p1
    proj = reduce(np.kron, reversed(factors))
    return proj @ target_op + (np.eye(dim) - proj)


def circuit_unitary(circuit: Circuit, method: str = "stride") -> np.ndarray:
    """Dense matrix of ``circuit``.

    ``method="stride"`` applies the circuit to every basis state with the
    simulator; ``method="kron"`` multiplies Kronecker-built gate matrices.
    """
    n = circuit.n_qubits
    dim = 2**n
    if method == "kron":
        u = np.eye(dim, dtype=complex)
        for g in circuit.gates:
            u = gate_to_dense(g, n) @ u
        return u
    if method != "stride":
        raise ValueError(f"unknown method {method!r}")
    cols = []
    for i in range(dim):
        cols.append(run_circuit(StateVector.basis(n, i), circuit).amplitudes)
    return np.array(cols).T
