import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from bkflow.exceptions import BandError, BKFlowError
from bkflow.lattice import (
    LatticePotential,
    bound_states,
    box_hamiltonian,
    box_resolvent_column,
    free_resolvent_kernel,
    half_norm_defect,
    momentum,
    radiation_box_s_matrix,
    s_matrix,
    s_matrix_grid,
    s_matrix_stationary,
    smooth_kernel_Z,
    spectral_weight,
    transfer_matrix,
)
from bkflow.linalg import unitarity_defect
from bkflow.random_models import random_potential, stream

SINGLE = LatticePotential.single(1.0)
TWO_SITE = LatticePotential((0, 1), (1.0, -1.0))
BARRIER = LatticePotential((-1, 1), (3.0, 3.0))


def test_potential_validation_and_json(tmp_path):
    with pytest.raises(BKFlowError, match="strictly increasing"):
        LatticePotential((1, 0), (1.0, 2.0))
    with pytest.raises(BKFlowError, match="length mismatch"):
        LatticePotential((0,), (1.0, 2.0))
    with pytest.raises(BKFlowError):
        LatticePotential((0,), (float("nan"),))
    path = tmp_path / "pot.json"
    path.write_text('{"sites": [-1, 2], "values": [0.5, -2]}')
    pot = LatticePotential.from_json(path)
    assert pot.to_dict() == {"sites": [-1, 2], "values": [0.5, -2.0]}
    assert pot.hull == (-1, 2) and pot.diameter == 3 and pot.max_abs == 2.0
    assert np.allclose(pot.on_hull(), [0.5, 0, 0, -2])


def test_momentum():
    assert momentum(0.0) == pytest.approx(math.pi / 2)
    assert abs(momentum(2 * math.cos(1.0)) - 1.0) < 1e-12
    assert abs(2 * math.cos(momentum(1.9)) - 1.9) < 1e-12
    for bad in (2.0, -2.5, 3.0):
        with pytest.raises(BandError, match="outside open band"):
            momentum(bad)


def test_transfer_matrix_examples():
    free_site = LatticePotential((0,), (0.0,))
    assert np.allclose(transfer_matrix(free_site, 0.0), [[0, -1], [1, 0]])
    assert np.allclose(transfer_matrix(SINGLE, 0.0), [[-1, -1], [1, 0]])
    pot = random_potential(stream(1, 0))
    assert abs(np.linalg.det(transfer_matrix(pot, 0.37)) - 1) < 1e-12


def test_zero_potential_is_identity():
    for lam in (-1.5, 0.0, 0.9):
        assert np.array_equal(s_matrix(LatticePotential(), lam).S, np.eye(2))
        assert np.array_equal(s_matrix_stationary(LatticePotential(), lam), np.eye(2))
    assert smooth_kernel_Z(LatticePotential(), 0.3).shape == (2, 0)


@pytest.mark.parametrize("v", [1.0, -2.0, 3.0])
@pytest.mark.parametrize("lam", [-1.3, 0.5, 1.7])
def test_single_site_closed_form(v, lam):
    # hand matching with the right-moving wave e^{-ikn} incident from the left:
    # u = e^{-ikn} + r e^{ikn} (n <= 0), u = t e^{-ikn} (n >= 0)
    s = math.sin(momentum(lam))
    t = 2 * s / (2 * s + 1j * v)
    r = -1j * v / (2 * s + 1j * v)
    S = s_matrix(LatticePotential.single(v), lam).S
    assert np.allclose(S, [[t, r], [r, t]], atol=1e-12)


@pytest.mark.parametrize("pot,lam", [(SINGLE, 0.5), (TWO_SITE, -0.7), (BARRIER, -1.2)])
def test_radiation_box_oracle(pot, lam):
    # damped box at eps and eps/2; the O(eps) error cancels in 2 R(eps/2) - R(eps)
    R1 = radiation_box_s_matrix(pot, lam, 1e-3, 20000)
    R2 = radiation_box_s_matrix(pot, lam, 5e-4, 40000)
    S = s_matrix(pot, lam).S
    assert np.abs(R1 - S).max() < 1e-3
    assert np.abs(2 * R2 - R1 - S).max() < 2e-6


def test_free_resolvent_box_oracle():
    lam, eps, L = 0.5, 1e-3, 20000
    n = np.arange(-20, 21)
    for m in (0, 7, -20):
        col = box_resolvent_column(lam, eps, m, L)
        assert np.abs(col[n + L] - free_resolvent_kernel(lam, eps, n, m)).max() < 1e-6


def test_free_resolvent_properties():
    n = np.arange(-5, 6)
    K = free_resolvent_kernel(0.3, 1e-2, n[:, None], n[None, :])
    assert np.allclose(K, K.T)
    mod = np.abs(free_resolvent_kernel(0.3, 1e-2, np.arange(0, 50), 0))
    assert np.all(np.diff(mod) < 0)
    with pytest.raises(BandError):
        free_resolvent_kernel(2.0, 0.0, 0, 0)


@pytest.mark.parametrize("pot", [SINGLE, TWO_SITE, BARRIER, LatticePotential.single(-1.0)])
def test_routes_agree(pot):
    for lam in np.linspace(-1.9, 1.9, 39):
        S = s_matrix(pot, lam).S
        assert np.abs(S - s_matrix_stationary(pot, lam)).max() < 1e-8


def test_grid_matches_pointwise():
    lams = np.linspace(-1.5, 1.5, 21)
    G = s_matrix_grid(BARRIER, lams)
    for lam, S in zip(lams, G):
        assert np.array_equal(S, s_matrix(BARRIER, lam).S)


def test_band_edge_rejected():
    with pytest.raises(BandError):
        s_matrix(SINGLE, 1.9995)
    with pytest.raises(BandError):
        smooth_kernel_Z(SINGLE, -1.9999)


def test_parseval_fixes_normalisation():
    # int_Delta ||(F psi)(lam)||^2 against ||E_A(Delta) psi||^2 from a large box
    sites = np.arange(-2, 3)
    psi = np.array([0.3, -1.0, 0.5, 0.2j, 1.0])
    ones = LatticePotential(tuple(sites), (1.0,) * 5)
    f = lambda lam: np.linalg.norm(smooth_kernel_Z(ones, lam, margin=0.0) @ psi) ** 2
    lhs = scipy.integrate.quad(f, -1.5, 1.5, limit=200)[0]
    L = 2000
    d, e = box_hamiltonian(LatticePotential(), L)
    w, V = scipy.linalg.eigh_tridiagonal(d, e)
    sel = (w > -1.5) & (w < 1.5)
    rhs = float(np.sum(np.abs(V[sites + L][:, sel].T @ psi) ** 2))
    assert abs(lhs - rhs) < 1e-3


def test_z_single_site_rows_equal_modulus():
    Z = smooth_kernel_Z(LatticePotential.single(4.0), 0.4)
    assert np.allclose(np.abs(Z), 2.0 * spectral_weight(0.4))


def test_z_lipschitz_on_compact_interval():
    pot = LatticePotential((-2, 0, 3), (1.0, -2.0, 0.5))
    lams = np.linspace(-1.5, 1.5, 601)
    Z = np.array([smooth_kernel_Z(pot, x) for x in lams])
    q = np.linalg.norm(np.diff(Z, axis=0), axis=(1, 2)) / np.diff(lams)
    q2 = np.linalg.norm(Z[2::2] - Z[:-2:2], axis=(1, 2)) / np.diff(lams[::2])
    assert np.isfinite(q.max()) and q.max() < 1.05 * q2.max() + 1e-12


def test_s_norm_continuity():
    lams = np.linspace(-1.5, 1.5, 401)
    G = s_matrix_grid(BARRIER, lams)
    q = np.linalg.norm(np.diff(G, axis=0), ord=2, axis=(1, 2)) / np.diff(lams)
    assert np.isfinite(q.max()) and q.max() < 50


def test_s_minus_identity_vanishes_with_potential():
    pot = LatticePotential((0, 2), (2.0, -1.5))
    norms = [np.linalg.norm(s_matrix(pot.scaled(2.0 ** -j), 0.3).S - np.eye(2), 2) for j in range(12)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-3


def test_bound_states_examples():
    assert bound_states(LatticePotential(), 100) == []
    below = bound_states(LatticePotential.single(-3.0), 1000)
    assert len(below) == 1 and below[0].stable
    assert abs(below[0].energy + math.sqrt(13)) < 1e-10
    above = bound_states(LatticePotential.single(3.0), 1000)
    assert len(above) == 1 and above[0].energy > 2
    with pytest.raises(BKFlowError, match="below minimum"):
        bound_states(BARRIER, 10)


@given(st.integers(0, 2**32))
def test_random_potential_scattering(seed):
    pot = random_potential(stream(seed, 0))
    for lam in np.linspace(-1.5, 1.5, 13):
        sp = s_matrix(pot, lam)
        assert unitarity_defect(sp.S) <= 1e-10
        assert abs(abs(np.linalg.det(sp.S)) - 1) <= 1e-10
        assert 0 <= sp.alpha <= 1
        assert np.abs(sp.S - s_matrix_stationary(pot, lam)).max() <= 1e-8
    assert half_norm_defect(np.eye(2)) == 0
