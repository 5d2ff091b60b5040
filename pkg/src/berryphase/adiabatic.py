"""Discretized adiabatic loops, controlled on an ancilla, plus their classical reference.

Wire layout of every loop circuit: the ancilla is wire 0 and the register
occupies wires ``1 .. n_register``.

Discretization: step ``j = 1 .. N`` holds the loop parameter at the cell
midpoint ``rho_j = 2 pi (j - 1/2) / N``.  With that grid the steps pair up
under ``rho -> 2 pi - rho``, so for spectra with ``E(rho) = E(2 pi - rho)``
the forward half (``j <= N/2``, time step ``+dt``) and backward half
(``-dt``) accumulate exactly opposite dynamical phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .compiler import controlled_1q, controlled_exchange, zyz_decompose
from .errors import AdiabaticityError, DegeneracyError, TrotterError
from .models import (
    DEGENERATE_GAP,
    HeisenbergParams,
    PauliTermList,
    SshParams,
    exact_diagonalize,
    exact_propagator,
    heisenberg_matrix,
    heisenberg_terms,
    pauli_string_matrix,
    ssh_ground_state,
    ssh_hamiltonian,
    ssh_offdiag,
)
from .statevector import Circuit, StateVector

HALF = "half_forward_half_backward"
SINGLE = "single_direction"
DOUBLE = "double_loop"
SPLITS = (HALF, SINGLE, DOUBLE)

MIN_FIDELITY = 0.99
DEFAULT_TROTTER_TOLERANCE = 0.1


@dataclass(frozen=True)
class AdiabaticSchedule:
    """``n_steps`` constant-parameter steps of length ``dt``.

    ``split`` selects how time runs: half forward then half backward (the
    dynamical phase cancels), all forward, or a forward loop followed by a
    full backward loop (``double_loop``, 2N steps, phase doubles).
    """

    n_steps: int
    dt: float
    n_trotter: int = 1
    split: str = HALF

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}")
        if self.split == HALF and self.n_steps % 2:
            raise ValueError("half_forward_half_backward needs an even n_steps")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_trotter < 1:
            raise ValueError("n_trotter must be >= 1")

    def rhos(self) -> np.ndarray:
        return 2 * np.pi * (np.arange(1, self.n_steps + 1) - 0.5) / self.n_steps

    def steps(self) -> list[tuple[float, float]]:
        """``(rho_j, signed dt)`` in application order."""
        rhos = self.rhos()
        n = self.n_steps
        if self.split == SINGLE:
            return [(r, self.dt) for r in rhos]
        if self.split == HALF:
            return [(r, self.dt if j < n // 2 else -self.dt) for j, r in enumerate(rhos)]
        return [(r, self.dt) for r in rhos] + [(r, -self.dt) for r in rhos]

    def with_dt(self, dt: float) -> "AdiabaticSchedule":
        return AdiabaticSchedule(self.n_steps, dt, self.n_trotter, self.split)


@dataclass
class LoopCircuit:
    circuit: Circuit
    n_register: int
    schedule: AdiabaticSchedule | None = None
    ancilla: int = 0
    phase_convention: str = "ancilla |1> branch acquires arg <psi|U_loop|psi>"

    @property
    def register(self) -> list[int]:
        return [w for w in range(self.circuit.n_qubits) if w != self.ancilla]


def hadamard_phase(overlap: complex) -> float:
    """``2 arccos sqrt(P0)`` with ``P0 = (1 + Re overlap)/2``, in ``[0, pi]``."""
    p0 = min(max((1 + overlap.real) / 2, 0.0), 1.0)
    return 2 * math.acos(math.sqrt(p0))


def wrap_phase(phi: float) -> float:
    """Map to ``[0, 2 pi)``."""
    out = math.fmod(phi, 2 * math.pi)
    if out < 0:
        out += 2 * math.pi
    return 0.0 if out >= 2 * math.pi else out


# ------------------------------------------------------------------- SSH loop


def ssh_step_unitary(v: float, w: float, k: float, dt: float) -> np.ndarray:
    """Closed form ``cos(|h| dt) 1 - i sin(|h| dt) h_hat . sigma``."""
    z = ssh_offdiag(v, w, k)
    mag = abs(z)
    c = math.cos(mag * dt)
    s = math.sin(mag * dt) / mag if mag > 0 else dt
    return np.array([[c, -1j * s * z], [-1j * s * z.conjugate(), c]], dtype=complex)


def ssh_min_gap(v: float, w: float) -> float:
    return 2 * abs(abs(v) - abs(w))


def build_ssh_loop(v: float, w: float, schedule: AdiabaticSchedule) -> LoopCircuit:
    """Controlled ``prod_j U_j`` on two wires, each ``U_j`` compiled through ZYZ."""
    if ssh_min_gap(v, w) < 1e-12:
        raise DegeneracyError(f"SSH gap closes along the loop for v={v}, w={w}")
    circ = Circuit(2)
    for k, sdt in schedule.steps():
        angles = zyz_decompose(ssh_step_unitary(v, w, k, sdt))
        circ.extend(controlled_1q(angles, control=0, target=1, n_qubits=2))
    return LoopCircuit(circ, 1, schedule)


# ------------------------------------------------------------------- Trotter


def trotter_slice_circuit(
    terms: PauliTermList, dt: float, n_register: int, control: int | None = 0, offset: int = 1
) -> Circuit:
    """One first-order slice ``prod_a exp(-i c_a P_a dt)`` in term-list order.

    Register wire ``q`` is placed on circuit wire ``q + offset``.
    """
    width = n_register + offset
    circ = Circuit(width)
    for t in terms:
        if t.coefficient == 0.0:
            continue
        if len(t.ops) != 2:
            raise ValueError(f"only two-body terms are supported, got {t.label}")
        (i, a), (j, b) = t.ops
        theta = 2 * t.coefficient * dt
        axis = (a + b).lower()
        if control is None:
            from .compiler import exchange_gate

            circ.compose(exchange_gate(axis, theta, i + offset, j + offset, width))
        else:
            circ.compose(controlled_exchange(axis, theta, control, i + offset, j + offset, width))
    return circ


def trotter_step_dense(terms: PauliTermList, dt: float, n_trotter: int, n_qubits: int) -> np.ndarray:
    """Dense oracle for ``n_trotter`` repetitions of a slice of length ``dt/n_trotter``."""
    dim = 2**n_qubits
    tau = dt / n_trotter
    s = np.eye(dim, dtype=complex)
    for t in terms:
        p = pauli_string_matrix(t.ops, n_qubits)
        s = (math.cos(t.coefficient * tau) * np.eye(dim) - 1j * math.sin(t.coefficient * tau) * p) @ s
    return np.linalg.matrix_power(s, n_trotter)


def trotter_distance(terms: PauliTermList, dt: float, n_trotter: int, n_qubits: int) -> float:
    """Spectral-norm distance between the Trotter step and ``exp(-i H dt)``."""
    exact = exact_propagator(terms, n_qubits, dt)
    return float(np.linalg.norm(trotter_step_dense(terms, dt, n_trotter, n_qubits) - exact, 2))


def build_heisenberg_loop(
    params: HeisenbergParams,
    schedule: AdiabaticSchedule,
    max_trotter_distance: float | None = DEFAULT_TROTTER_TOLERANCE,
) -> LoopCircuit:
    """Controlled, Trotterized loop over the twist angle of ``params.twisted_bond``.

    Raises:
        TrotterError: if a representative step's Trotter product is farther
            than ``max_trotter_distance`` (spectral norm) from the exact step.
    """
    n = params.n_spins
    if max_trotter_distance is not None:
        for rho in (schedule.rhos()[0], math.pi / 2, math.pi - math.pi / schedule.n_steps):
            d = trotter_distance(heisenberg_terms(params.with_rho(rho)), schedule.dt, schedule.n_trotter, n)
            if d > max_trotter_distance:
                raise TrotterError(
                    f"Trotter step distance {d:.3e} exceeds {max_trotter_distance} "
                    f"(dt={schedule.dt}, n_trotter={schedule.n_trotter})"
                )
    circ = Circuit(n + 1)
    for rho, sdt in schedule.steps():
        piece = trotter_slice_circuit(heisenberg_terms(params.with_rho(rho)), sdt / schedule.n_trotter, n)
        circ.gates.extend(piece.gates * schedule.n_trotter)
    return LoopCircuit(circ, n, schedule)


# ---------------------------------------------------------- classical oracle


@dataclass
class LoopSpectra:
    """Eigendecompositions of ``H(rho_j)`` for every step of a schedule."""

    energies: list[np.ndarray]
    vectors: list[np.ndarray]
    signs: np.ndarray
    psi0: np.ndarray
    ground_energies: np.ndarray = field(init=False)
    min_gap: float = field(init=False)

    def __post_init__(self):
        self.ground_energies = np.array([e[0] for e in self.energies])
        self.min_gap = float(min(e[1] - e[0] for e in self.energies))

    def overlap(self, dt: float) -> complex:
        psi = self.psi0.astype(complex)
        for e, v, s in zip(self.energies, self.vectors, self.signs):
            psi = v @ (np.exp(-1j * e * s * dt) * (v.conj().T @ psi))
        return complex(np.vdot(self.psi0, psi))

    def dynamical_phase(self, dt: float) -> float:
        """``sum_j sign_j E_0(rho_j) dt`` in the adiabatic limit."""
        return float(np.sum(self.signs * self.ground_energies) * dt)


def _model(params) -> tuple[Callable[[float], np.ndarray], np.ndarray]:
    if isinstance(params, SshParams):
        if ssh_min_gap(params.v, params.w) < 1e-12:
            raise DegeneracyError(f"SSH gap closes along the loop for v={params.v}, w={params.w}")
        v, w = params.v, params.w
        return (lambda k: ssh_hamiltonian(SshParams(v, w, k))), ssh_ground_state(SshParams(v, w, 0.0)).amplitudes
    if isinstance(params, HeisenbergParams):
        base = params.with_rho(0.0)
        gs = exact_diagonalize(heisenberg_terms(base), params.n_spins).ground_state.amplitudes
        return (lambda rho: heisenberg_matrix(params.with_rho(rho))), gs
    raise TypeError(f"unsupported model parameters {type(params).__name__}")


def loop_spectra(params, schedule: AdiabaticSchedule) -> LoopSpectra:
    ham, psi0 = _model(params)
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    energies, vectors, signs = [], [], []
    for rho, sdt in schedule.steps():
        if rho not in cache:
            cache[rho] = np.linalg.eigh(ham(rho))
        e, v = cache[rho]
        energies.append(e)
        vectors.append(v)
        signs.append(math.copysign(1.0, sdt))
    spectra = LoopSpectra(energies, vectors, np.array(signs), psi0)
    # the continuous loop also passes through rho = 0 and rho = pi
    for rho in (0.0, math.pi):
        e = np.linalg.eigvalsh(ham(rho))
        spectra.min_gap = min(spectra.min_gap, float(e[1] - e[0]))
    return spectra


@dataclass
class ReferencePhase:
    """Exact-propagator loop result for the register alone.

    ``phase`` is what a noiseless Hadamard test would report (in ``[0, pi]``);
    ``arg_phase`` is the argument of the return amplitude in ``[0, 2 pi)``.
    """

    overlap: complex
    phase: float
    arg_phase: float
    fidelity: float
    min_gap: float
    dynamical_phase: float

    @property
    def adiabatic(self) -> bool:
        return self.fidelity >= MIN_FIDELITY


def reference_loop_phase(
    params, schedule: AdiabaticSchedule, check_adiabatic: bool = True, min_fidelity: float = MIN_FIDELITY
) -> ReferencePhase:
    """Classical oracle: exact step propagators applied to the initial ground state.

    Raises:
        DegeneracyError: if the gap closes anywhere on the loop.
        AdiabaticityError: if ``check_adiabatic`` and the return fidelity
            ``|<psi|U|psi>|^2`` is below ``min_fidelity``.
    """
    spectra = loop_spectra(params, schedule)
    if spectra.min_gap < DEGENERATE_GAP:
        raise DegeneracyError(f"gap closes along the loop (min gap {spectra.min_gap:.3e})")
    a = spectra.overlap(schedule.dt)
    fid = abs(a) ** 2
    if check_adiabatic and fid < min_fidelity:
        raise AdiabaticityError(f"return fidelity {fid:.4f} below {min_fidelity}")
    return ReferencePhase(
        overlap=a,
        phase=hadamard_phase(a),
        arg_phase=wrap_phase(math.atan2(a.imag, a.real)),
        fidelity=fid,
        min_gap=spectra.min_gap,
        dynamical_phase=spectra.dynamical_phase(schedule.dt),
    )


# ------------------------------------------------------------------ dt choice


def adiabatic_dt(gap_min: float, n_steps: int, sweep_ratio: float = 0.1) -> float:
    """Smallest ``dt`` with ``(2 pi / (n_steps dt)) / gap_min <= sweep_ratio``."""
    if gap_min <= 0:
        raise DegeneracyError("cannot pick dt for a gapless loop")
    return 2 * math.pi / (sweep_ratio * n_steps * gap_min)


def calibrate_dt(
    params,
    schedule: AdiabaticSchedule,
    lo: float | None = None,
    hi: float | None = None,
    n_grid: int = 256,
) -> float:
    """``dt`` in ``[lo, hi]`` maximizing the exact loop's return fidelity.

    Defaults: ``lo`` from :func:`adiabatic_dt`, ``hi = 8 lo``.  A uniform grid
    scan is refined with a bounded scalar search around the best point.
    """
    spectra = loop_spectra(params, schedule)
    if lo is None:
        lo = adiabatic_dt(spectra.min_gap, schedule.n_steps)
    if hi is None:
        hi = 8 * lo
    grid = np.linspace(lo, hi, n_grid)
    fid = np.array([abs(spectra.overlap(d)) for d in grid])
    best = int(np.argmax(fid))
    step = grid[1] - grid[0] if n_grid > 1 else 0.0
    a, b = max(lo, grid[best] - step), min(hi, grid[best] + step)
    if b <= a:
        return float(grid[best])
    res = minimize_scalar(lambda d: -abs(spectra.overlap(d)), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x) if -res.fun >= fid[best] else float(grid[best])
