"""SSH Bloch Hamiltonian, twisted dimerized Heisenberg ring, and dense oracles.

Energies are in units of the hopping (SSH) or the average exchange ``J``
(Heisenberg), with hbar = 1.  Spin operators carry the sigma/2 convention
through explicit ``J/4`` prefactors on Pauli products.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegeneracyError
from .statevector import StateVector

DEGENERATE_GAP = 1e-10
SMALL_GAP_FRACTION = 1e-3
MAX_ED_QUBITS = 12

# ----------------------------------------------------------------------- SSH


@dataclass(frozen=True)
class SshParams:
    v: float
    w: float
    k: float = 0.0

    def __post_init__(self):
        if math.isclose(abs(self.v), abs(self.w), rel_tol=0.0, abs_tol=1e-12):
            warnings.warn(f"|v| == |w| = {abs(self.v)}: the SSH gap closes on the Brillouin zone", stacklevel=3)

    @property
    def gapped(self) -> bool:
        return not math.isclose(abs(self.v), abs(self.w), rel_tol=0.0, abs_tol=1e-12)


def ssh_offdiag(v: float, w: float, k: float) -> complex:
    """``v + w e^{-ik}``, the upper off-diagonal Bloch element."""
    return v + w * complex(math.cos(k), -math.sin(k))


def ssh_hamiltonian(p: SshParams) -> np.ndarray:
    z = ssh_offdiag(p.v, p.w, p.k)
    return np.array([[0, z], [z.conjugate(), 0]], dtype=complex)


def ssh_energy(v: float, w: float, k: float) -> float:
    """Lower-band energy ``-|v + w e^{-ik}|``."""
    return -abs(ssh_offdiag(v, w, k))


def ssh_ground_state(p: SshParams) -> StateVector:
    """Lower band ``(1, -e^{-i phi(k)})/sqrt(2)`` with ``phi = arg(v + w e^{-ik})``."""
    z = ssh_offdiag(p.v, p.w, p.k)
    if abs(z) < 1e-12:
        raise DegeneracyError(f"SSH bands touch at v={p.v}, w={p.w}, k={p.k}")
    phi = math.atan2(z.imag, z.real)
    return StateVector(np.array([1.0, -np.exp(-1j * phi)]) / math.sqrt(2))


def ssh_winding_number(v: float, w: float) -> int:
    """Times ``z(k) = v + w e^{-ik}`` encircles the origin (clockwise in k).

    The contour is a circle of radius ``|w|`` centred at ``v``; by the
    argument principle it encloses the pole of ``1/z`` iff ``|v| < |w|``.
    """
    if math.isclose(abs(v), abs(w), rel_tol=0.0, abs_tol=1e-12):
        raise DegeneracyError("winding number is ill-defined when |v| == |w|")
    return 1 if abs(v) < abs(w) else 0


def ssh_berry_phase_analytic(v: float, w: float) -> float:
    """Quantized Zak phase: pi for ``v < w``, 0 for ``v > w``."""
    if v < 0 or w < 0:
        raise ValueError("hoppings must be nonnegative")
    return math.pi * ssh_winding_number(v, w)


# ----------------------------------------------------------------- Heisenberg

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    ops: tuple[tuple[int, str], ...]

    @property
    def label(self) -> str:
        return "".join(p for _, p in self.ops)

    @property
    def wires(self) -> tuple[int, ...]:
        return tuple(w for w, _ in self.ops)


def pauli_string_matrix(ops: Sequence[tuple[int, str]], n_qubits: int) -> np.ndarray:
    """Dense matrix of a Pauli product, built from bit arithmetic on basis indices."""
    dim = 2**n_qubits
    idx = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for wire, p in ops:
        if not 0 <= wire < n_qubits:
            raise ValueError(f"wire {wire} out of range")
        bit = (idx >> wire) & 1
        if p == "X":
            flip ^= 1 << wire
        elif p == "Y":
            flip ^= 1 << wire
            phase = phase * np.where(bit == 0, 1j, -1j)
        elif p == "Z":
            phase = phase * np.where(bit == 0, 1, -1)
        elif p != "I":
            raise ValueError(f"unknown Pauli {p!r}")
    m = np.zeros((dim, dim), dtype=complex)
    m[idx ^ flip, idx] = phase
    return m


@dataclass
class PauliTermList:
    terms: list[PauliTerm] = field(default_factory=list)

    def __post_init__(self):
        for t in self.terms:
            if not np.isreal(t.coefficient):
                raise ValueError("Pauli coefficients must be real")

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def to_matrix(self, n_qubits: int) -> np.ndarray:
        dim = 2**n_qubits
        h = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            h += t.coefficient * pauli_string_matrix(t.ops, n_qubits)
        return h

    def scaled(self, c: float) -> "PauliTermList":
        return PauliTermList([PauliTerm(c * t.coefficient, t.ops) for t in self.terms])


@dataclass(frozen=True)
class HeisenbergParams:
    """Dimerized ring: bond ``b`` joins spins ``b`` and ``(b+1) % n``.

    Even bonds carry ``J + delta``, odd bonds ``J - delta``.  The twist phase
    ``rho`` sits on ``twisted_bond`` (default: the wrap-around bond, which
    carries ``J - delta``).
    """

    n_spins: int
    J: float = 1.0
    delta: float = 0.0
    rho: float = 0.0
    twisted_bond: int | None = None
    boundary: str = "PBC"

    def __post_init__(self):
        if self.n_spins < 4 or self.n_spins % 2:
            raise ValueError(f"n_spins must be even and >= 4, got {self.n_spins}")
        if self.boundary not in ("PBC", "OBC"):
            raise ValueError(f"boundary must be 'PBC' or 'OBC', got {self.boundary!r}")
        if self.twisted_bond is None:
            object.__setattr__(self, "twisted_bond", self.n_spins - 1)
        if not 0 <= self.twisted_bond < self.n_bonds:
            raise ValueError(f"twisted_bond {self.twisted_bond} invalid for {self.n_bonds} bonds")

    @property
    def n_bonds(self) -> int:
        return self.n_spins if self.boundary == "PBC" else self.n_spins - 1

    def coupling(self, bond: int) -> float:
        return self.J + self.delta if bond % 2 == 0 else self.J - self.delta

    def bond_sites(self, bond: int) -> tuple[int, int]:
        return bond, (bond + 1) % self.n_spins

    def with_rho(self, rho: float) -> "HeisenbergParams":
        return replace(self, rho=rho)


def heisenberg_terms(p: HeisenbergParams) -> PauliTermList:
    """Pauli decomposition in canonical Trotter order.

    The twisted bond comes first as ``XX, YY, YX, XY, ZZ`` with weights
    ``J_b/4 * (cos rho, cos rho, sin rho, -sin rho, 1)``; the ``YX``/``XY``
    pair is omitted when ``sin rho`` is exactly zero.  Remaining bonds follow
    in ascending order as ``XX, YY, ZZ`` with weight ``J_b/4``.
    """
    terms: list[PauliTerm] = []
    tb = p.twisted_bond
    c, s = math.cos(p.rho), math.sin(p.rho)
    i, j = p.bond_sites(tb)
    jb = p.coupling(tb) / 4
    terms.append(PauliTerm(jb * c, ((i, "X"), (j, "X"))))
    terms.append(PauliTerm(jb * c, ((i, "Y"), (j, "Y"))))
    if s != 0.0:
        terms.append(PauliTerm(jb * s, ((i, "Y"), (j, "X"))))
        terms.append(PauliTerm(-jb * s, ((i, "X"), (j, "Y"))))
    terms.append(PauliTerm(jb, ((i, "Z"), (j, "Z"))))
    for b in range(p.n_bonds):
        if b == tb:
            continue
        i, j = p.bond_sites(b)
        jb = p.coupling(b) / 4
        for a in "XYZ":
            terms.append(PauliTerm(jb, ((i, a), (j, a))))
    return PauliTermList(terms)


def heisenberg_matrix(p: HeisenbergParams) -> np.ndarray:
    return heisenberg_terms(p).to_matrix(p.n_spins)


# ------------------------------------------------------------------ spectra


@dataclass
class SpectralData:
    energies: np.ndarray
    ground_state: StateVector
    gap: float
    eigenvectors: np.ndarray | None = field(default=None, repr=False)


def _as_matrix(terms, n_qubits: int) -> np.ndarray:
    if n_qubits > MAX_ED_QUBITS:
        raise ValueError(f"dense diagonalization is limited to {MAX_ED_QUBITS} qubits")
    if isinstance(terms, PauliTermList):
        return terms.to_matrix(n_qubits)
    h = np.asarray(terms, dtype=complex)
    if h.shape != (2**n_qubits, 2**n_qubits):
        raise ValueError("matrix shape does not match n_qubits")
    return h


def exact_diagonalize(terms, n_qubits: int, allow_degenerate: bool = False) -> SpectralData:
    """Full spectrum and ground state of a Pauli term list (or dense matrix).

    Raises:
        DegeneracyError: if the ground state is degenerate (gap below 1e-10)
            and ``allow_degenerate`` is False.
    """
    h = _as_matrix(terms, n_qubits)
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("Hamiltonian is not Hermitian")
    energies, vecs = np.linalg.eigh(h)
    gap = float(energies[1] - energies[0]) if energies.size > 1 else math.inf
    if gap < DEGENERATE_GAP and not allow_degenerate:
        raise DegeneracyError(f"ground state is degenerate (gap {gap:.3e})")
    gs = vecs[:, 0]
    # fix the gauge: largest-magnitude amplitude real and positive
    k = int(np.argmax(np.abs(gs)))
    gs = gs * np.exp(-1j * np.angle(gs[k]))
    return SpectralData(energies, StateVector(gs), gap, vecs)


def heisenberg_spectrum(p: HeisenbergParams, allow_degenerate: bool = False) -> SpectralData:
    """Exact diagonalization with a warning when the gap is small relative to ``J``."""
    data = exact_diagonalize(heisenberg_terms(p), p.n_spins, allow_degenerate)
    if data.gap < SMALL_GAP_FRACTION * abs(p.J):
        warnings.warn(f"small gap {data.gap:.3e} at delta={p.delta}, rho={p.rho}: adiabaticity at risk", stacklevel=2)
    return data


def exact_propagator(terms, n_qubits: int, t: float) -> np.ndarray:
    """``exp(-i H t)`` from the eigendecomposition of ``H``."""
    h = _as_matrix(terms, n_qubits)
    e, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * e * t)) @ v.conj().T
