"""Hadamard-test and iterative phase-estimation readout of a controlled loop.

Both readouts put the ancilla on wire 0 and run the register-preparation
circuit on wires ``1 .. n``.  Bit strings are written most significant bit
first, ``"b1 b2 ... bR"`` for the phase fraction ``sum_m b_m 2**-m``; IPEA
measures them in the opposite order (``bR`` first).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .adiabatic import LoopCircuit
from .errors import ConfigError, InvariantViolation
from .statevector import (
    Circuit,
    _apply_inplace,
    ShotCounts,
    StateVector,
    h,
    matrix_1q,
    measure_ancilla,
    probability_zero,
    rz,
)

log = logging.getLogger(__name__)

DEFAULT_SHOTS = 8192
READOUTS = ("analytic", "shots")
NORM_ATOL = 1e-9
_S_DAG = np.diag([1.0, -1j])


def _check_readout(readout: str):
    if readout not in READOUTS:
        raise ConfigError(f"readout must be one of {READOUTS}, got {readout!r}")


def _register_prefix(init: Circuit, loop: LoopCircuit) -> Circuit:
    if init.n_qubits != loop.n_register:
        raise ValueError(f"init acts on {init.n_qubits} qubit(s), loop register has {loop.n_register}")
    circ = Circuit(loop.circuit.n_qubits)
    circ.append(h(loop.ancilla))
    circ.compose(init, wires=loop.register)
    return circ


def _run(state: StateVector, circuit: Circuit, repeat: int = 1) -> StateVector:
    psi = state.amplitudes.copy()
    n = circuit.n_qubits
    for _ in range(repeat):
        for g in circuit.gates:
            _apply_inplace(psi, g, n)
    out = StateVector(psi)
    if abs(out.norm() - 1) > NORM_ATOL:
        raise InvariantViolation(f"state norm drifted to {out.norm():.12f}")
    return out


def _phase_from_p0(p0: float) -> float:
    return 2 * math.acos(math.sqrt(min(max(p0, 0.0), 1.0)))


def _counts(p0: float, shots: int, seed: int, readout: str, flip: float = 0.0) -> tuple[float, ShotCounts]:
    """Effective P(0) after a symmetric readout flip, and the recorded counts.

    ``analytic`` readout records ``round(p0 * shots)`` zeros; ``shots`` draws
    a binomial sample.
    """
    p0 = (1 - flip) * p0 + flip * (1 - p0)
    if readout == "analytic":
        return p0, ShotCounts.from_zeros(int(round(p0 * shots)), shots)
    zeros = int(np.random.default_rng(seed).binomial(shots, min(max(p0, 0.0), 1.0)))
    return p0, ShotCounts.from_zeros(zeros, shots)


# ------------------------------------------------------------- Hadamard test


@dataclass(frozen=True)
class HadamardTestResult:
    """``phase = 2 arccos sqrt(p0_estimate)``, always in ``[0, pi]``.

    The Hadamard test sees ``cos^2(phi/2)``, so ``phi`` and ``-phi`` give the
    same ``p0``.
    """

    p0_estimate: float
    p0_exact: float
    phase: float
    shot_error: float
    shots: int
    seed: int
    counts: ShotCounts | None = None

    @property
    def phase_error(self) -> float:
        """Shot error propagated to the phase, ``shot_error / sqrt(p0 (1 - p0))``."""
        p = self.p0_estimate
        if p <= 0 or p >= 1:
            return 0.0 if self.shot_error == 0 else math.inf
        return self.shot_error / math.sqrt(p * (1 - p))


def hadamard_test(
    init: Circuit,
    loop: LoopCircuit,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    readout: str = "analytic",
    quadrature: str = "real",
) -> HadamardTestResult:
    """Interferometric readout of ``<psi|U_loop|psi>``.

    With ``quadrature="real"`` the ancilla reads 0 with probability
    ``(1 + Re <psi|U|psi>)/2``; ``"imag"`` inserts ``S^dagger`` before the
    final Hadamard and gives ``(1 + Im <psi|U|psi>)/2``.
    """
    _check_readout(readout)
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    if quadrature not in ("real", "imag"):
        raise ValueError("quadrature must be 'real' or 'imag'")
    prefix = _register_prefix(init, loop)
    tail = Circuit(prefix.n_qubits)
    if quadrature == "imag":
        tail.append(matrix_1q(_S_DAG, loop.ancilla))
    tail.append(h(loop.ancilla))
    state = _run(StateVector.zero(prefix.n_qubits), prefix)
    state = _run(_run(state, loop.circuit), tail)
    p0_exact = probability_zero(state, loop.ancilla)
    if readout == "analytic":
        p0, counts = p0_exact, ShotCounts.from_zeros(int(round(p0_exact * shots)), shots)
    else:
        counts = measure_ancilla(state, loop.ancilla, shots, seed)
        p0 = counts.frequency(0)
    return HadamardTestResult(
        p0_estimate=p0,
        p0_exact=p0_exact,
        phase=_phase_from_p0(p0),
        shot_error=math.sqrt(p0 * (1 - p0) / shots),
        shots=shots,
        seed=seed,
        counts=counts,
    )


def loop_overlap(init: Circuit, loop: LoopCircuit) -> complex:
    """``<psi|U_loop|psi>`` from the two noiseless Hadamard-test quadratures."""
    re = 2 * hadamard_test(init, loop, quadrature="real").p0_exact - 1
    im = 2 * hadamard_test(init, loop, quadrature="imag").p0_exact - 1
    return complex(re, im)


# ---------------------------------------------------------------------- IPEA


@dataclass(frozen=True)
class CircularStats:
    """Circular mean and spread of a phase distribution (phases as fractions of 2 pi)."""

    r_bar_magnitude: float
    phase_hat: float
    variance: float
    std: float
    dispersed: bool = False


@dataclass(frozen=True)
class IpeaIteration:
    k: int
    omega: float
    repetitions: int
    p0: float
    counts: ShotCounts
    bit: int


@dataclass
class IpeaResult:
    r_iterations: int
    bits: tuple[int, ...]
    iterations: list[IpeaIteration]
    distribution: dict[str, float]
    stats: CircularStats
    seed: int

    @property
    def per_iteration_counts(self) -> list[ShotCounts]:
        """Counts in measurement order (least significant bit first)."""
        return [it.counts for it in self.iterations]

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))

    @property
    def phase_fraction(self) -> float:
        return sum(b * 2.0 ** -(m + 1) for m, b in enumerate(self.bits))

    @property
    def phase(self) -> float:
        """Majority-vote phase in radians, a multiple of ``2 pi / 2**R``."""
        return 2 * math.pi * self.phase_fraction

    @property
    def phase_hat(self) -> float:
        return self.stats.phase_hat

    @property
    def circ_std(self) -> float:
        return self.stats.std

    @property
    def resolution(self) -> float:
        return 2 * math.pi * 2.0**-self.r_iterations


def _majority(p0: float, counts: ShotCounts, readout: str, k: int) -> int:
    if readout == "analytic":
        zeros, ones = p0, 1 - p0
        tie = abs(zeros - ones) < 1e-12
    else:
        zeros, ones = counts[0], counts[1]
        tie = zeros == ones
    if tie:
        log.warning("IPEA iteration k=%d: tied vote, bit set to 0", k)
        return 0
    return 0 if zeros > ones else 1


def ipea(
    init: Circuit,
    loop: LoopCircuit,
    r_iterations: int,
    shots_per_iter: int = DEFAULT_SHOTS,
    seed: int = 0,
    readout: str = "shots",
    gate_budget: int | None = None,
    readout_error: Sequence[float] | None = None,
) -> IpeaResult:
    """Iterative phase estimation, least significant bit first.

    Iteration ``k = R .. 1`` repeats the controlled loop ``2**(k-1)`` times,
    applies ``Rz(omega_k)`` with ``omega_k = -2 pi (0.0 b_{k+1} ... b_R)`` to
    the ancilla, then a Hadamard and a measurement.  Each bit is a majority
    vote over ``shots_per_iter`` shots.

    Args:
        readout_error: optional per-iteration probability (measurement order)
            that a shot's outcome is flipped; a synthetic noise model.

    Raises:
        ConfigError: if the largest repetition count would exceed
            ``gate_budget`` elementary gates.
    """
    _check_readout(readout)
    if r_iterations < 1:
        raise ConfigError("r_iterations must be >= 1")
    if shots_per_iter < 1:
        raise ConfigError("shots_per_iter must be >= 1")
    if readout_error is not None and len(readout_error) != r_iterations:
        raise ConfigError("readout_error needs one entry per iteration")
    if gate_budget is not None and len(loop.circuit) * 2 ** (r_iterations - 1) > gate_budget:
        raise ConfigError(
            f"{2 ** (r_iterations - 1)} loop repetitions need "
            f"{len(loop.circuit) * 2 ** (r_iterations - 1)} gates, budget is {gate_budget}"
        )
    prefix = _register_prefix(init, loop)
    start = _run(StateVector.zero(prefix.n_qubits), prefix)
    seeds = np.random.SeedSequence(seed).generate_state(r_iterations)

    bits = [0] * (r_iterations + 1)  # bits[m] is b_m, 1-based
    iterations: list[IpeaIteration] = []
    for step, k in enumerate(range(r_iterations, 0, -1)):
        reps = 2 ** (k - 1)
        state = _run(start, loop.circuit, repeat=reps)
        frac = sum(bits[m] * 2.0 ** -(m - k + 1) for m in range(k + 1, r_iterations + 1))
        omega = -2 * math.pi * frac
        tail = Circuit(state.n_qubits, [rz(omega, loop.ancilla), h(loop.ancilla)])
        state = _run(state, tail)
        flip = 0.0 if readout_error is None else float(readout_error[step])
        p0, counts = _counts(probability_zero(state, loop.ancilla), shots_per_iter, int(seeds[step]), readout, flip)
        bits[k] = _majority(p0, counts, readout, k)
        iterations.append(IpeaIteration(k, omega, reps, p0, counts, bits[k]))

    selected = tuple(bits[1:])
    dist = complete_distribution([it.counts for it in iterations], selected)
    return IpeaResult(r_iterations, selected, iterations, dist, circular_statistics(dist), seed)


def _zero_frequency(record) -> float:
    if isinstance(record, ShotCounts):
        if record.total_shots == 0:
            raise ValueError("iteration with zero shots")
        return record.frequency(0)
    p = float(record)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"P(0) must lie in [0, 1], got {p}")
    return p


def complete_distribution(
    per_iteration: Sequence[ShotCounts | float], selected_bits: Sequence[int] | None = None
) -> dict[str, float]:
    """Probability of every R-bit string from per-iteration outcome frequencies.

    ``per_iteration`` is in measurement order (``b_R`` first).  Along the
    selected path each level uses its empirical frequency.  Once a string
    leaves the selected path the later iterations were never run for it, so
    each remaining level contributes 1/2.

    Args:
        per_iteration: ShotCounts, or P(0) values, per iteration.
        selected_bits: the path the experiment followed, most significant
            first; defaults to the per-iteration majority.
    """
    r = len(per_iteration)
    if r == 0:
        raise ValueError("need at least one iteration")
    p0 = [_zero_frequency(x) for x in per_iteration]
    if selected_bits is None:
        chosen = [0 if p >= 0.5 else 1 for p in p0]  # measurement order
    else:
        if len(selected_bits) != r:
            raise ValueError("selected_bits length must equal the iteration count")
        chosen = list(reversed(selected_bits))
    dist: dict[str, float] = {}
    for measured in itertools.product((0, 1), repeat=r):
        prob = 1.0
        on_path = True
        for level, b in enumerate(measured):
            if on_path:
                prob *= p0[level] if b == 0 else 1 - p0[level]
                on_path = b == chosen[level]
            else:
                prob *= 0.5
        dist["".join(map(str, reversed(measured)))] = prob
    total = sum(dist.values())
    if abs(total - 1) > 1e-9:
        raise InvariantViolation(f"completed distribution sums to {total}")
    return dict(sorted(dist.items()))


def circular_statistics(distribution: Mapping[str, float] | Sequence[float]) -> CircularStats:
    """Mean resultant of phases ``k / 2**R`` weighted by their probabilities.

    Accepts a mapping from R-bit strings (most significant first) or a
    sequence indexed by ``k``.  If ``|R_bar|`` vanishes the mean is undefined:
    ``dispersed`` is set and ``std`` is infinite.
    """
    if isinstance(distribution, Mapping):
        keys = list(distribution)
        r = len(keys[0])
        if any(len(k) != r for k in keys):
            raise ValueError("bit strings must share one length")
        fracs = np.array([int(k, 2) / 2**r for k in keys])
        probs = np.array([distribution[k] for k in keys], dtype=float)
    else:
        probs = np.asarray(distribution, dtype=float)
        fracs = np.arange(probs.size) / probs.size
    if np.any(probs < -1e-15) or abs(probs.sum() - 1) > 1e-9:
        raise ValueError("distribution must be nonnegative and sum to 1")
    r_bar = complex(np.sum(probs * np.exp(2j * np.pi * fracs)))
    mag = min(abs(r_bar), 1.0)
    if mag < 1e-12:
        return CircularStats(mag, 0.0, 1.0, math.inf, dispersed=True)
    mean = (math.atan2(r_bar.imag, r_bar.real) / (2 * math.pi)) % 1.0
    if mean >= 1.0:
        mean = 0.0
    return CircularStats(mag, mean, 1 - mag, math.sqrt(-2 * math.log(mag)) / (2 * math.pi))
