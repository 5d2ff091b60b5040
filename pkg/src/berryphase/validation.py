"""Sanity checks on a prepared ground state: energy from IPEA phases, and parity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adiabatic import LoopCircuit, trotter_slice_circuit
from .compiler import prepare_state
from .errors import ConfigError
from .models import HeisenbergParams, exact_diagonalize, exact_propagator, heisenberg_terms
from .phase_estimation import DEFAULT_SHOTS, IpeaResult, _check_readout, ipea
from .statevector import Circuit, ShotCounts, StateVector, cnot, measure_ancilla, probability_zero, run_circuit, unitary

DEFAULT_GRID_POINTS = 8


@dataclass
class EnergyCheckResult:
    """Linear fit of unwrapped IPEA phases against evolution time.

    IPEA reads ``exp(-i E t) = exp(2 pi i phi)``, so the fitted ``slope`` of
    phase versus ``t`` is ``-E`` and ``energy = -slope``.
    """

    sample_points: list[tuple[float, float]]
    slope: float
    intercept: float
    slope_stderr: float
    reference_energy: float
    resolution_bound: float
    max_residual: float
    runs: list[IpeaResult]

    @property
    def energy(self) -> float:
        return -self.slope

    @property
    def abs_error(self) -> float:
        return abs(self.energy - self.reference_energy)

    @property
    def passed(self) -> bool:
        return self.abs_error <= self.slope_stderr + self.resolution_bound


def default_t_grid(params: HeisenbergParams, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Evenly spaced times up to ``t_max`` with ``sum|c| t_max = pi/2``.

    ``sum|c|`` bounds ``|E_gs|``, so no sample wraps past ``pi/2``.
    """
    bound = sum(abs(t.coefficient) for t in heisenberg_terms(params))
    if bound == 0:
        raise ConfigError("Hamiltonian has no nonzero terms")
    t_max = (math.pi / 2) / bound
    return t_max * np.arange(1, n_points + 1) / n_points


def _controlled_evolution(params: HeisenbergParams, t: float, propagator: str, n_trotter: int) -> LoopCircuit:
    n = params.n_spins
    terms = heisenberg_terms(params)
    if propagator == "exact":
        circ = Circuit(n + 1, [unitary(exact_propagator(terms, n, t), list(range(1, n + 1)), controls=(0,))])
    elif propagator == "trotter":
        piece = trotter_slice_circuit(terms, t / n_trotter, n)
        circ = Circuit(n + 1)
        circ.gates.extend(piece.gates * n_trotter)
    else:
        raise ConfigError("propagator must be 'exact' or 'trotter'")
    return LoopCircuit(circ, n, phase_convention="ancilla |1> branch acquires -E t")


def energy_check(
    params: HeisenbergParams,
    r_iterations: int = 8,
    t_grid: Sequence[float] | None = None,
    seed: int = 0,
    readout: str = "analytic",
    shots: int = DEFAULT_SHOTS,
    propagator: str = "exact",
    n_trotter: int = 10,
) -> EnergyCheckResult:
    """Estimate the ground-state energy from IPEA phases of ``exp(-i H t)``.

    The register is prepared in the exact-diagonalization ground state.
    Phases are unwrapped starting from phase 0 at ``t = 0`` and fitted by
    least squares.

    Raises:
        ConfigError: if the grid has fewer than two points, or if some
            spacing (including the first from ``t = 0``) exceeds ``pi/|E_gs|``
            so the unwrapping would be ambiguous.
    """
    _check_readout(readout)
    ts = np.asarray(default_t_grid(params) if t_grid is None else t_grid, dtype=float)
    if ts.size < 2:
        raise ConfigError("energy check needs at least two time points")
    if np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise ConfigError("t_grid must be positive and strictly increasing")
    spectrum = exact_diagonalize(heisenberg_terms(params), params.n_spins)
    e_ref = float(spectrum.energies[0])
    if abs(e_ref) * float(np.max(np.diff(np.concatenate([[0.0], ts])))) > math.pi:
        raise ConfigError("t_grid spacing too large: phase unwrapping would be ambiguous")
    init = prepare_state(spectrum.ground_state).circuit

    runs, raw = [], []
    for i, t in enumerate(ts):
        loop = _controlled_evolution(params, float(t), propagator, n_trotter)
        res = ipea(init, loop, r_iterations, shots, seed + i, readout)
        runs.append(res)
        raw.append(res.phase)
    phases = np.unwrap(np.concatenate([[0.0], raw]))[1:]
    fit = np.polynomial.polynomial.Polynomial.fit(ts, phases, 1).convert()
    intercept, slope = (list(fit.coef) + [0.0, 0.0])[:2]
    resid = phases - (intercept + slope * ts)
    if ts.size > 2:
        s2 = float(resid @ resid) / (ts.size - 2)
        stderr = math.sqrt(s2 / float(np.sum((ts - ts.mean()) ** 2)))
    else:
        stderr = 0.0
    return EnergyCheckResult(
        sample_points=[(float(t), float(p)) for t, p in zip(ts, phases)],
        slope=float(slope),
        intercept=float(intercept),
        slope_stderr=stderr,
        reference_energy=e_ref,
        resolution_bound=2 * math.pi * 2.0**-r_iterations / float(ts[-1]),
        max_residual=float(np.max(np.abs(resid))),
        runs=runs,
    )


@dataclass(frozen=True)
class ParityCheckResult:
    p_ancilla_zero: float
    expected_bit: int
    passed: bool
    counts: ShotCounts


def parity_circuit(init: Circuit, n_register: int) -> Circuit:
    """``init`` on wires ``1..n``, then a CNOT from every register wire onto ancilla 0."""
    if init.n_qubits != n_register:
        raise ValueError(f"init acts on {init.n_qubits} qubit(s), expected {n_register}")
    circ = Circuit(n_register + 1)
    circ.compose(init, wires=range(1, n_register + 1))
    for q in range(1, n_register + 1):
        circ.append(cnot(q, 0))
    return circ


def parity_check(
    init: Circuit,
    n_register: int,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    n_particles: int | None = None,
    readout: str = "analytic",
) -> ParityCheckResult:
    """Measure the register's excitation parity onto an ancilla.

    ``n_particles`` (number of up spins) defaults to half filling,
    ``n_register // 2``; the ancilla is expected to read its parity.
    """
    _check_readout(readout)
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    n_particles = n_register // 2 if n_particles is None else n_particles
    expected = n_particles % 2
    state = run_circuit(StateVector.zero(n_register + 1), parity_circuit(init, n_register))
    p0 = probability_zero(state, 0)
    if readout == "analytic":
        counts = ShotCounts.from_zeros(int(round(p0 * shots)), shots)
    else:
        counts = measure_ancilla(state, 0, shots, seed)
        p0 = counts.frequency(0)
    majority = 0 if counts[0] >= counts[1] else 1
    return ParityCheckResult(p0, expected, majority == expected, counts)
