"""Compile unitaries, exchange propagators and state preparation to elementary gates."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .statevector import (
    Circuit,
    StateVector,
    cnot,
    crz,
    h,
    is_unitary,
    matrix_1q,
    rx,
    ry,
    rz,
    rz_matrix,
    ry_matrix,
)

# below this magnitude an entry of a 2x2 unitary is treated as zero
_DEGENERATE_ATOL = 1e-12


@dataclass(frozen=True)
class ZyzAngles:
    """Angles of ``u = exp(i alpha) Rz(beta) Ry(gamma) Rz(delta)``."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def matrix(self) -> np.ndarray:
        return (
            cmath.exp(1j * self.alpha)
            * rz_matrix(self.beta)
            @ ry_matrix(self.gamma)
            @ rz_matrix(self.delta)
        )


def zyz_decompose(u: np.ndarray) -> ZyzAngles:
    """Z-Y-Z Euler angles of a 2x2 unitary.

    ``gamma`` is taken from the entry magnitudes with ``atan2`` so it lands in
    ``[0, pi]``.  When one column is diagonal (``gamma`` is 0 or pi) only
    ``beta + delta`` or ``beta - delta`` is defined; ``delta`` is then fixed to 0.

    Raises:
        ValueError: if ``u`` is not a unitary 2x2 matrix.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("zyz_decompose expects a 2x2 unitary")
    alpha = cmath.phase(np.linalg.det(u)) / 2
    v = u * cmath.exp(-1j * alpha)  # now in SU(2): v = [[a, -b*], [b, a*]]
    a, b = v[0, 0], v[1, 0]
    gamma = 2 * math.atan2(abs(b), abs(a))
    if abs(b) < _DEGENERATE_ATOL:
        beta, delta = 2 * cmath.phase(v[1, 1]), 0.0
    elif abs(a) < _DEGENERATE_ATOL:
        beta, delta = 2 * cmath.phase(b), 0.0
    else:
        beta = cmath.phase(v[1, 1]) + cmath.phase(b)
        delta = cmath.phase(v[1, 1]) - cmath.phase(b)
    return ZyzAngles(alpha, beta, gamma, delta)


def controlled_1q(angles: ZyzAngles, control: int, target: int, n_qubits: int | None = None) -> Circuit:
    """Controlled version of ``angles.matrix()`` from two CNOTs.

    Emits ``C, CNOT, B, CNOT, A`` on the target and the phase ``D`` on the
    control, where ``A = Rz(beta) Ry(gamma/2)``, ``B = Ry(-gamma/2)
    Rz(-(delta+beta)/2)``, ``C = Rz((delta-beta)/2)`` and
    ``D = exp(i alpha/2) Rz(alpha) = diag(1, exp(i alpha))``.
    """
    if control == target:
        raise ValueError("control and target must differ")
    n = n_qubits if n_qubits is not None else max(control, target) + 1
    al, be, ga, de = angles.alpha, angles.beta, angles.gamma, angles.delta
    circ = Circuit(n)
    circ.append(rz((de - be) / 2, target))
    circ.append(cnot(control, target))
    circ.append(rz(-(de + be) / 2, target))
    circ.append(ry(-ga / 2, target))
    circ.append(cnot(control, target))
    circ.append(ry(ga / 2, target))
    circ.append(rz(be, target))
    if al != 0.0:
        circ.append(matrix_1q(np.diag([1.0, cmath.exp(1j * al)]), control))
    return circ


# basis change W with W P W^dagger = Z, as (forward gate, inverse gate) factories
_TO_Z = {
    "x": (lambda q: [h(q)], lambda q: [h(q)]),
    "y": (lambda q: [rx(math.pi / 2, q)], lambda q: [rx(-math.pi / 2, q)]),
    "z": (lambda q: [], lambda q: []),
}


def _parse_axis(axis: str) -> tuple[str, str]:
    axis = axis.lower()
    if len(axis) != 2 or any(a not in _TO_Z for a in axis):
        raise ValueError(f"invalid exchange axis {axis!r}; expected e.g. 'xx', 'yy', 'zz' or 'yx'")
    return axis[0], axis[1]


def _exchange(axis: str, theta: float, i: int, j: int, n: int, control: int | None, decompose_crz: bool) -> Circuit:
    a, b = _parse_axis(axis)
    if i == j:
        raise ValueError("exchange needs two distinct wires")
    circ = Circuit(n)
    circ.extend(_TO_Z[a][0](i) + _TO_Z[b][0](j))
    circ.append(cnot(i, j))
    if control is None:
        circ.append(rz(theta, j))
    elif decompose_crz:
        circ.extend([rz(theta / 2, j), cnot(control, j), rz(-theta / 2, j), cnot(control, j)])
    else:
        circ.append(crz(theta, control, j))
    circ.append(cnot(i, j))
    circ.extend(_TO_Z[a][1](i) + _TO_Z[b][1](j))
    return circ


def exchange_gate(axis: str, theta: float, i: int, j: int, n_qubits: int | None = None) -> Circuit:
    """Exactly ``exp(-i theta/2 P_i Q_j)`` for ``axis = "pq"``, global phase included.

    ``CNOT Rz(theta) CNOT`` realises the ``zz`` case; other Pauli pairs are
    conjugated into it with ``H`` (x) or ``Rx(pi/2)`` (y).
    """
    n = n_qubits if n_qubits is not None else max(i, j) + 1
    return _exchange(axis, theta, i, j, n, None, False)


def controlled_exchange(
    axis: str,
    theta: float,
    control: int,
    i: int,
    j: int,
    n_qubits: int | None = None,
    decompose_crz: bool = True,
) -> Circuit:
    """Controlled ``exp(-i theta/2 P_i Q_j)``.

    Only the central ``Rz`` is controlled; the basis changes and CNOTs cancel
    on the control-off branch.  ``cRz(theta)`` is compiled as
    ``Rz(theta/2) CNOT Rz(-theta/2) CNOT`` unless ``decompose_crz`` is False.
    """
    if len({control, i, j}) != 3:
        raise ValueError(f"wire collision among control={control}, i={i}, j={j}")
    n = n_qubits if n_qubits is not None else max(control, i, j) + 1
    return _exchange(axis, theta, i, j, n, control, decompose_crz)


# ------------------------------------------------------------ state prep


@dataclass
class PrepCircuit:
    circuit: Circuit
    gate_count: int
    cnot_count: int


def _multiplexed_rotation(kind: str, angles: np.ndarray, controls: list[int], target: int, out: list):
    """Uniformly controlled rotation: ``R(angles[m])`` when controls spell ``m``.

    ``controls[i]`` carries bit ``i`` of ``m``.  Recursion on the highest
    control: ``R(a0) CNOT R(a1) CNOT`` with ``a0, a1`` the half-sum and
    half-difference, using ``X R(t) X = R(-t)`` for Ry and Rz.
    """
    gate = ry if kind == "y" else rz
    if np.all(np.abs(angles) <= 1e-14):
        return  # identity multiplexor, CNOTs included
    if not controls:
        if abs(angles[0]) > 1e-14:
            out.append(gate(float(angles[0]), target))
        return
    half = len(angles) // 2
    lo, hi = angles[:half], angles[half:]
    _multiplexed_rotation(kind, (lo + hi) / 2, controls[:-1], target, out)
    out.append(cnot(controls[-1], target))
    _multiplexed_rotation(kind, (lo - hi) / 2, controls[:-1], target, out)
    out.append(cnot(controls[-1], target))


def prepare_state(target: StateVector) -> PrepCircuit:
    """Circuit taking ``|0...0>`` to ``target`` up to a global phase.

    Qubits are disentangled from wire 0 upwards with multiplexed ``Rz`` then
    ``Ry`` rotations (controlled by all higher wires) that send every
    amplitude pair ``(psi[2m], psi[2m+1])`` to ``(r_m e^{i t_m}, 0)``.  The
    returned circuit is the inverse of that disentangler.
    """
    psi = np.asarray(target.amplitudes, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm < 1e-14:
        raise ValueError("cannot prepare a zero-norm state")
    psi = psi / norm
    n = target.n_qubits
    disentangle: list = []
    for q in range(n):
        pairs = psi.reshape(-1, 2)
        mag = np.abs(pairs)
        ph = np.angle(pairs)
        # equalize phases within each pair, then rotate the pair onto |0>
        phi = ph[:, 0] - ph[:, 1]
        phi[(mag[:, 0] < 1e-14) | (mag[:, 1] < 1e-14)] = 0.0
        theta = -2 * np.arctan2(mag[:, 1], mag[:, 0])
        controls = list(range(q + 1, n))
        _multiplexed_rotation("z", phi, controls, q, disentangle)
        _multiplexed_rotation("y", theta, controls, q, disentangle)
        r = np.hypot(mag[:, 0], mag[:, 1])
        t = np.where(mag[:, 1] < 1e-14, ph[:, 0], np.where(mag[:, 0] < 1e-14, ph[:, 1], (ph[:, 0] + ph[:, 1]) / 2))
        psi = r * np.exp(1j * t)
    circ = Circuit(n, disentangle).inverse()
    return PrepCircuit(circ, len(circ), circ.count("CNOT"))
