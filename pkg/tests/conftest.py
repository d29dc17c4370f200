import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bkflow import kernels
from bkflow._jit import HAS_NUMBA
from bkflow.random_models import stream

settings.register_profile(
    "bkflow",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("bkflow")

BACKENDS = ["numpy"] + (["numba"] if HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Force one kernel implementation for the duration of a test."""
    monkeypatch.setattr(kernels, "USE_NUMBA", request.param == "numba")
    return request.param


@pytest.fixture
def rng():
    return stream(20240611, 0)


def random_hermitian(rng, n, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (X + X.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
