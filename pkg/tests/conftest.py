import numpy as np
import pytest

from sensorattack.benchmark import run_benchmark
from sensorattack.datamatrix import IoDataset, SensorSet, min_excitability_horizon
from sensorattack.sysmodel import LtiSystem, sparse_observability_degree


@pytest.fixture(scope="session")
def clean_run():
    return run_benchmark("none")


@pytest.fixture(scope="session")
def s1_run():
    return run_benchmark("s1_stealth_45")


@pytest.fixture(scope="session")
def s2_run():
    return run_benchmark("s2_piecewise_1234")


@pytest.fixture(scope="session")
def ramp_run():
    return run_benchmark("eq22_ramp_123")


def random_system(rng, n_range=(2, 5), p_range=(3, 6), m_range=(1, 3), min_degree=1):
    """Random stable-ish system that stays observable after removing any ``l`` sensors.

    Returns ``(sys, l)`` with ``l`` drawn from {1, 2} and capped by the model-oracle degree.
    """
    while True:
        n = int(rng.integers(*n_range))
        p = int(rng.integers(*p_range))
        m = int(rng.integers(*m_range))
        A = rng.standard_normal((n, n))
        A /= max(1.0, 1.1 * np.max(np.abs(np.linalg.eigvals(A))))
        sys = LtiSystem(A, rng.standard_normal((n, m)), rng.standard_normal((p, n)))
        l = int(rng.integers(min_degree, 3))
        if l < p and sparse_observability_degree(sys) >= l:
            return sys, l


def random_support(rng, p, l):
    size = int(rng.integers(1, l + 1))
    return SensorSet(tuple(sorted(int(i) for i in rng.choice(np.arange(1, p + 1), size=size, replace=False))), p)


def input_horizon(u, order):
    return min_excitability_horizon(IoDataset(u, np.zeros((u.shape[0], 1))), order)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
