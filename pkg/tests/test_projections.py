import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bkflow.exceptions import NonFredholmError, NotProjectionError, OnSpectrumError
from bkflow.linalg import spectral_projection
from bkflow.projections import (
    fredholm_index,
    index_from_spectrum,
    pair_spectrum,
    pairing_defect,
    trace_identity_check,
    xi_finite,
)
from bkflow.random_models import random_pair, random_projection, stream


def test_equal_projections():
    P = np.diag([1.0, 0.0, 1.0])
    assert np.allclose(pair_spectrum(P, P).difference_spectrum, 0)
    assert fredholm_index(P, P).index == 0
    assert trace_identity_check(P, P) == 0


def test_swapped_diagonal_pair():
    res = pair_spectrum(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert np.allclose(res.difference_spectrum, [-1, 1])
    out = fredholm_index(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert (out.index, out.dim_ker_plus, out.dim_ker_minus) == (0, 1, 1)


def test_rank_difference_and_trace():
    rng = stream(9, 0)
    P, Q = random_projection(rng, 30, 7), random_projection(rng, 30, 3)
    assert fredholm_index(P, Q).index == 4
    assert trace_identity_check(P, Q) <= 1e-8


def test_pairing_dim12():
    rng = stream(12, 0)
    P, Q = random_projection(rng, 12, 5), random_projection(rng, 12, 4)
    assert pairing_defect(np.linalg.eigvalsh(P - Q)) <= 1e-10


def test_rejects_non_projection():
    with pytest.raises(NotProjectionError, match="idempotency defect"):
        pair_spectrum(np.diag([0.5, 0.0]), np.zeros((2, 2)))


def test_separation_band_rejected():
    with pytest.raises(NonFredholmError, match="non-Fredholm"):
        index_from_spectrum(np.array([-0.2, 0.2, 1 - 1.5e-6]))


def test_xi_finite_examples():
    A = np.diag([0.0, 1.0])
    assert xi_finite(A, A, 0.5) == 0
    assert xi_finite(A, np.diag([0.5, 1.5]), 0.25) == 1
    with pytest.raises(OnSpectrumError):
        xi_finite(A, np.diag([0.5, 1.5]), 0.5)


def test_xi_finite_random_pair_counts():
    A, B = random_pair(stream(4, 0), 20, 3)
    wa, wb = np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)
    for lam in np.linspace(-3, 3, 50):
        assert xi_finite(A, B, lam) == np.sum(wa < lam) - np.sum(wb < lam)
    P, Q = spectral_projection(A, 0.1), spectral_projection(B, 0.1)
    assert fredholm_index(P, Q).index == np.sum(wa < 0.1) - np.sum(wb < 0.1)


@given(st.integers(0, 2**32), st.integers(4, 40), st.data())
def test_index_laws(seed, dim, data):
    rng = stream(seed, dim)
    rp = data.draw(st.integers(0, dim))
    rq = data.draw(st.integers(0, dim))
    P, Q = random_projection(rng, dim, rp), random_projection(rng, dim, rq)
    pair = pair_spectrum(P, Q)
    assert pair.difference_spectrum.min() >= -1 - 1e-10 and pair.difference_spectrum.max() <= 1 + 1e-10
    assert pairing_defect(pair.difference_spectrum) <= 1e-8
    res = fredholm_index(P, Q)
    assert res.index == res.dim_ker_plus - res.dim_ker_minus == rp - rq
    assert fredholm_index(Q, P).index == -res.index
    assert trace_identity_check(P, Q) <= 1e-8
