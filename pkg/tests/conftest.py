import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion, printed at session end."""

    def _report(criterion: int, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"
        ACCEPTANCE_LINES[f"{criterion:02d}"] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


def haar_unitary(rng, dim: int) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, n: int) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def spectral_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b, 2))


def controlled_dense(u: np.ndarray) -> np.ndarray:
    """Ancilla on wire 0 (least significant) controlling ``u`` on the higher wires."""
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    return np.kron(np.eye(u.shape[0]), p0) + np.kron(u, p1)
