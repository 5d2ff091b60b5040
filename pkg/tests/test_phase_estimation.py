import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from berryphase.adiabatic import AdiabaticSchedule, LoopCircuit, build_ssh_loop, calibrate_dt
from berryphase.compiler import prepare_state
from berryphase.errors import ConfigError
from berryphase.models import SshParams, ssh_ground_state
from berryphase.phase_estimation import (
    circular_statistics,
    complete_distribution,
    hadamard_test,
    ipea,
    loop_overlap,
)
from berryphase.statevector import Circuit, StateVector, controlled_matrix_1q, unitary, x

from .conftest import haar_unitary, random_state


def _phase_loop(fraction: float) -> LoopCircuit:
    u = np.diag([1.0, np.exp(2j * np.pi * fraction)])
    return LoopCircuit(Circuit(2, [controlled_matrix_1q(u, 0, 1)]), 1)


def _excited() -> Circuit:
    return Circuit(1, [x(0)])


def _ssh(r, n_steps=64):
    p = SshParams(r, 1.0)
    dt = calibrate_dt(p, AdiabaticSchedule(n_steps, 1.0))
    return prepare_state(ssh_ground_state(p)).circuit, build_ssh_loop(r, 1.0, AdiabaticSchedule(n_steps, dt))


def test_identity_and_pi_loops():
    empty = LoopCircuit(Circuit(2), 1)
    res = hadamard_test(_excited(), empty)
    assert res.p0_exact == pytest.approx(1.0) and res.phase < 1e-7  # arccos near 1 amplifies rounding
    res = hadamard_test(_excited(), _phase_loop(0.5))
    assert res.p0_exact == pytest.approx(0.0, abs=1e-15)
    assert res.phase == pytest.approx(math.pi)


def test_hadamard_argument_errors():
    with pytest.raises(ConfigError):
        hadamard_test(_excited(), _phase_loop(0.1), readout="tomography")
    with pytest.raises(ConfigError):
        hadamard_test(_excited(), _phase_loop(0.1), shots=0)
    with pytest.raises(ValueError):
        hadamard_test(_excited(), _phase_loop(0.1), quadrature="diag")


def test_hadamard_shots_reproducible():
    a = hadamard_test(_excited(), _phase_loop(0.3), readout="shots", seed=7)
    b = hadamard_test(_excited(), _phase_loop(0.3), readout="shots", seed=7)
    assert a.counts == b.counts and a.phase == b.phase
    assert abs(a.p0_estimate - a.p0_exact) < 5 * a.shot_error


def test_ssh_shot_readout_near_pi():
    init, loop = _ssh(0.5)
    res = hadamard_test(init, loop, readout="shots", seed=3)
    assert abs(res.phase - math.pi) <= 3 * res.phase_error + 0.05


@given(st.integers(0, 2**31 - 1))
def test_random_loop_overlap_and_phase(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(rng, 2)
    psi = random_state(rng, 1)
    loop = LoopCircuit(Circuit(2, [unitary(u, [1], controls=(0,))]), 1)
    init = prepare_state(StateVector(psi)).circuit
    a = loop_overlap(init, loop)
    assert abs(a - np.vdot(psi, u @ psi)) < 1e-9
    res = hadamard_test(init, loop)
    assert 0.0 <= res.phase <= math.pi
    assert res.phase == pytest.approx(2 * math.acos(math.sqrt((1 + a.real) / 2)), abs=1e-9)
    # on an eigenvector the readout is the folded argument of the eigenvalue
    vals, vecs = np.linalg.eig(u)
    eig_init = prepare_state(StateVector(vecs[:, 0])).circuit
    assert hadamard_test(eig_init, loop).phase == pytest.approx(abs(np.angle(vals[0])), abs=1e-6)


def test_ipea_exact_fraction():
    res = ipea(_excited(), _phase_loop(0.375), 4, readout="analytic")
    assert res.bitstring == "0110"
    assert res.phase == pytest.approx(2 * math.pi * 0.375)
    assert res.distribution["0110"] == pytest.approx(1.0)
    assert res.circ_std == pytest.approx(0.0, abs=1e-6)
    assert [it.k for it in res.iterations] == [4, 3, 2, 1]
    assert [it.repetitions for it in res.iterations] == [8, 4, 2, 1]


@given(st.integers(1, 6), st.data())
def test_ipea_recovers_exact_fractions(r, data):
    m = data.draw(st.integers(0, 2**r - 1))
    readout = data.draw(st.sampled_from(["analytic", "shots"]))
    res = ipea(_excited(), _phase_loop(m / 2**r), r, shots_per_iter=64, readout=readout)
    assert res.bitstring == format(m, f"0{r}b")
    assert res.phase_hat == pytest.approx(m / 2**r, abs=1e-9)


def test_ipea_half_code_tie(caplog):
    with caplog.at_level(logging.WARNING, logger="berryphase.phase_estimation"):
        res = ipea(_excited(), _phase_loop(1 / 32), 4, readout="analytic")
    assert res.bitstring == "0000"
    assert "tied vote" in caplog.text
    seen = {ipea(_excited(), _phase_loop(1 / 32), 4, shots_per_iter=101, seed=s).bitstring for s in range(12)}
    assert seen <= {"0000", "0001"} and seen == {"0000", "0001"}


def test_ipea_ssh_trivial_phase():
    init, loop = _ssh(2.0)
    res = ipea(init, loop, 4, readout="analytic")
    assert res.bitstring == "0000"
    assert all(it.p0 > 0.99 for it in res.iterations)
    assert ipea(init, loop, 4, seed=11).bitstring == "0000"


def test_ipea_seed_determinism():
    a = ipea(_excited(), _phase_loop(0.3), 5, shots_per_iter=50, seed=9)
    b = ipea(_excited(), _phase_loop(0.3), 5, shots_per_iter=50, seed=9)
    assert a.per_iteration_counts == b.per_iteration_counts
    assert a.distribution == b.distribution


def test_ipea_argument_errors():
    loop = _phase_loop(0.25)
    with pytest.raises(ConfigError):
        ipea(_excited(), loop, 0)
    with pytest.raises(ConfigError):
        ipea(_excited(), loop, 3, shots_per_iter=0)
    with pytest.raises(ConfigError):
        ipea(_excited(), loop, 3, readout_error=[0.1])
    with pytest.raises(ConfigError, match="budget"):
        ipea(_excited(), loop, 6, gate_budget=16)
    ipea(_excited(), loop, 5, gate_budget=16)


def test_complete_distribution_from_counts():
    zeros = [6953, 7442, 7614, 7731]
    dist = complete_distribution([z / 8192 for z in zeros])
    assert dist["0000"] == pytest.approx(0.68, abs=0.01)
    assert dist["1110"] == pytest.approx(0.0194, abs=0.0005)
    assert sum(dist.values()) == pytest.approx(1.0)
    stats = circular_statistics(dist)
    assert min(stats.phase_hat, 1 - stats.phase_hat) < 2**-4


def test_complete_distribution_delta():
    dist = complete_distribution([1.0, 0.0, 1.0])  # measured b3=0, b2=1, b1=0
    assert dist["010"] == 1.0
    assert sum(v for k, v in dist.items() if k != "010") == 0.0


def test_complete_distribution_errors():
    with pytest.raises(ValueError):
        complete_distribution([])
    with pytest.raises(ValueError):
        complete_distribution([1.5])
    with pytest.raises(ValueError):
        complete_distribution([0.5, 0.5], selected_bits=[0])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_complete_distribution_marginals(p0):
    r = len(p0)
    dist = complete_distribution(p0)
    assert sum(dist.values()) == pytest.approx(1.0)
    chosen = [0 if p >= 0.5 else 1 for p in p0]  # measurement order
    # along the followed path each level's conditional equals its measured frequency
    for level in range(r):
        path = "".join(str(b) for b in reversed(chosen[:level]))
        prefix = [v for k, v in dist.items() if k.endswith(path) or level == 0]
        base = sum(prefix)
        if base < 1e-12:
            continue
        zero_tail = "0" + path
        got = sum(v for k, v in dist.items() if k.endswith(zero_tail)) / base
        assert got == pytest.approx(p0[level], abs=1e-9)


def test_circular_statistics_basic():
    delta = circular_statistics({"011": 1.0, "000": 0.0})
    assert delta.phase_hat == pytest.approx(3 / 8) and delta.std == pytest.approx(0.0, abs=1e-6)
    uniform = circular_statistics([0.25] * 4)
    assert uniform.dispersed and math.isinf(uniform.std)
    with pytest.raises(ValueError):
        circular_statistics([0.5, 0.6])
    with pytest.raises(ValueError):
        circular_statistics({"01": 0.5, "1": 0.5})


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda w: sum(w) > 0.1), st.integers(0, 15))
def test_circular_statistics_rotation(weights, shift):
    probs = np.zeros(16)
    probs[:4] = weights
    probs /= probs.sum()
    base = circular_statistics(probs)
    moved = circular_statistics(np.roll(probs, shift))
    if base.dispersed:
        assert moved.dispersed
        return
    diff = (moved.phase_hat - base.phase_hat - shift / 16) % 1.0
    assert min(diff, 1 - diff) < 1e-9
    assert moved.r_bar_magnitude == pytest.approx(base.r_bar_magnitude, abs=1e-12)
