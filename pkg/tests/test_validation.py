import itertools
import math

import numpy as np
import pytest

from berryphase.compiler import prepare_state
from berryphase.errors import ConfigError
from berryphase.models import HeisenbergParams, exact_diagonalize, heisenberg_terms
from berryphase.statevector import Circuit, StateVector, x
from berryphase.validation import default_t_grid, energy_check, parity_check, parity_circuit


def _basis_prep(bits: str) -> Circuit:
    """Prepare ``|bits>`` with ``bits[q]`` the value of register wire ``q``."""
    return Circuit(len(bits), [x(q) for q, b in enumerate(bits) if b == "1"])


@pytest.mark.parametrize("delta", [-0.5, 0.0, 0.5])
def test_energy_check_matches_diagonalization(delta):
    res = energy_check(HeisenbergParams(4, delta=delta))
    assert res.passed
    assert res.abs_error < 0.02
    assert res.max_residual <= res.resolution_bound
    assert len(res.sample_points) == 8


def test_energy_check_scales_with_couplings():
    base = energy_check(HeisenbergParams(4, J=1.0, delta=0.5))
    scaled = energy_check(HeisenbergParams(4, J=2.0, delta=1.0))
    assert scaled.reference_energy == pytest.approx(2 * base.reference_energy)
    assert scaled.energy == pytest.approx(2 * base.energy, abs=2 * base.resolution_bound)


def test_energy_check_trotter_propagator():
    p = HeisenbergParams(4, delta=0.5)
    res = energy_check(p, r_iterations=6, t_grid=default_t_grid(p, 4), propagator="trotter", n_trotter=4)
    assert res.passed


def test_energy_check_grid_errors():
    p = HeisenbergParams(4, delta=0.5)
    with pytest.raises(ConfigError):
        energy_check(p, t_grid=[0.1])
    with pytest.raises(ConfigError):
        energy_check(p, t_grid=[0.2, 0.1])
    with pytest.raises(ConfigError, match="unwrapping"):
        energy_check(p, t_grid=[2.0, 4.0])
    with pytest.raises(ConfigError):
        energy_check(p, propagator="magic")


def test_default_grid_bound():
    p = HeisenbergParams(6, delta=-0.3)
    ts = default_t_grid(p)
    e0 = exact_diagonalize(heisenberg_terms(p), 6).energies[0]
    assert abs(e0) * ts[-1] <= math.pi / 2 + 1e-12
    assert np.allclose(np.diff(ts), ts[0])


def test_parity_basis_examples():
    assert parity_check(_basis_prep("0101"), 4).p_ancilla_zero == pytest.approx(1.0)
    assert parity_check(_basis_prep("0101"), 4).passed
    res = parity_check(_basis_prep("1000"), 4, n_particles=1)
    assert res.expected_bit == 1 and res.p_ancilla_zero == pytest.approx(0.0) and res.passed


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_parity_exhaustive(n):
    for bits in itertools.product("01", repeat=n):
        s = "".join(bits)
        res = parity_check(_basis_prep(s), n, n_particles=s.count("1"), readout="shots", shots=16)
        assert res.passed
        assert res.counts[res.expected_bit] == 16


def test_parity_ground_state():
    gs = exact_diagonalize(heisenberg_terms(HeisenbergParams(4, delta=0.3)), 4).ground_state
    res = parity_check(prepare_state(gs).circuit, 4, readout="shots")
    assert res.passed and res.counts[0] == 8192
    assert res.p_ancilla_zero == 1.0


def test_parity_detects_wrong_sector():
    res = parity_check(_basis_prep("0111"), 4)
    assert not res.passed


def test_parity_circuit_checks_width():
    with pytest.raises(ValueError):
        parity_circuit(Circuit(3), 4)
    with pytest.raises(ConfigError):
        parity_check(Circuit(2), 2, shots=0)
    c = parity_circuit(_basis_prep("11"), 2)
    assert c.n_qubits == 3 and c.count("CNOT") == 2
