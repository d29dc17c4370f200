import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bkflow.exceptions import AmbiguousCountError, RefinementError
from bkflow.experiments import lattice_family
from bkflow.lattice import LatticePotential
from bkflow.random_models import random_unitary, stream
from bkflow.specflow import (
    UnitaryFamilySample,
    adjacent_hausdorff,
    cluster_phases,
    count_phases_between,
    counting_between,
    find_gap_angle,
    naive_crossing_count,
    refine,
    spectral_flow,
    subinterval_flow,
)

TWO_PI = 2 * math.pi
BARRIER = LatticePotential((-1, 1), (3.0, 3.0))


def diagonal_family(slopes, offsets=None, a=0.0, b=1.0, n_nodes=9):
    slopes = np.asarray(slopes, dtype=float)
    offsets = np.zeros_like(slopes) if offsets is None else np.asarray(offsets, dtype=float)

    def U(x):
        return np.diag(np.exp(1j * (slopes * x + offsets)))

    return UnitaryFamilySample.from_function(U, a, b, n_nodes)


def test_counting_between_examples():
    assert counting_between(np.eye(3), 0.5, 6.0) == 0
    U = np.diag([np.exp(1j * math.pi / 2), np.exp(1j * math.pi)])
    assert counting_between(U, 1.0, 3.0) == 1
    assert counting_between(U, 3.0, 1.0) == -1
    with pytest.raises(AmbiguousCountError, match="counting ambiguous at endpoint"):
        counting_between(U, 1.0, math.pi)


@given(st.integers(0, 2**32), st.integers(1, 6),
       st.lists(st.floats(0.01, TWO_PI - 0.01), min_size=3, max_size=3, unique=True))
def test_counting_additivity(seed, n, thetas):
    U = random_unitary(stream(seed, 0), n)
    t1, t2, t3 = sorted(thetas)
    try:
        lhs = counting_between(U, t1, t2) + counting_between(U, t2, t3)
        assert lhs == counting_between(U, t1, t3)
    except AmbiguousCountError:
        pass


def test_cluster_phases_wraps():
    c, m = cluster_phases(np.array([0.0, 1e-10, TWO_PI - 1e-10, 2.0]))
    assert sorted(m.tolist()) == [1, 3]


def test_gap_angle_constant_identity():
    assert find_gap_angle(np.zeros((5, 3)), 1e-2) == pytest.approx(math.pi)


def test_gap_angle_scalar_sweep():
    fam = refine(diagonal_family([1.0], a=0.1, b=0.2), 1e-3)
    th0 = find_gap_angle(fam.phases, 1e-3)
    assert th0 is not None and not 0.1 <= th0 <= 0.2
    assert abs(th0 - (0.15 + math.pi)) < 0.1


def test_gap_angle_none_when_circle_covered():
    ph = np.linspace(0, TWO_PI, 400, endpoint=False)[:, None]
    assert find_gap_angle(ph, 1e-2) is None


def test_gap_angle_lattice_rescan():
    fam = refine(lattice_family(BARRIER, -0.9, -0.85, 5), 1e-3)
    th0 = find_gap_angle(fam.phases, 1e-3)
    assert th0 is not None
    dist = np.abs((fam.phases - th0 + math.pi) % TWO_PI - math.pi)
    assert dist.min() > 1e-3


def test_refine_examples():
    const = UnitaryFamilySample.from_function(lambda x: np.eye(2), 0, 1, 5)
    assert refine(const, 1e-2).lambdas.size == 5
    fam = refine(diagonal_family([1.0]), 0.01)
    assert fam.lambdas.size >= 100
    assert adjacent_hausdorff(fam.phases).max() <= 0.01
    lat = refine(lattice_family(BARRIER, -1.2, -0.3), 1e-2)
    assert adjacent_hausdorff(lat.phases).max() <= 1e-2


def test_refine_without_callback_fails():
    fam = diagonal_family([10.0])
    bare = UnitaryFamilySample(fam.lambdas, fam.phases)
    with pytest.raises(RefinementError, match="no refinement callback"):
        refine(bare, 1e-2)
    with pytest.raises(RefinementError, match="budget"):
        refine(diagonal_family([10.0]), 1e-4, budget=64)


def test_flow_scalar_examples():
    fam = diagonal_family([math.pi], a=0.0, b=2.0)
    assert spectral_flow(fam, math.pi).flow == 1
    rev = diagonal_family([-math.pi], [TWO_PI], a=0.0, b=2.0)
    assert spectral_flow(rev, math.pi).flow == -1
    const = UnitaryFamilySample.from_function(lambda x: np.diag([1.0, -1.0, 1j]), 0, 1, 5)
    for th in (0.3, 2.0, 5.0):
        assert spectral_flow(const, th).flow == 0


def test_flow_endpoint_on_target_rejected():
    fam = diagonal_family([math.pi], a=0.0, b=1.0)
    with pytest.raises(AmbiguousCountError, match="endpoint b"):
        spectral_flow(fam, math.pi)


def test_flow_multi_phase_matches_naive():
    fam = diagonal_family([3 * math.pi, -math.pi, 0.5], [0.0, 0.0, 1.0], a=0.0, b=1.9)
    res = spectral_flow(fam, math.pi)
    assert res.flow == 2
    assert sum(s.flow for s in res.partition) == res.flow
    fine = refine(fam, res.delta_step / 4)
    assert naive_crossing_count(fine, math.pi) == 2


def _admissible_nodes(fam, theta):
    d = np.abs((fam.phases - theta + math.pi) % TWO_PI - math.pi)
    return np.flatnonzero(np.all(d > 1e-8, axis=1))


def test_partition_independence_lattice():
    fam = refine(lattice_family(BARRIER, -1.2, 1.2), 1e-2)
    base = spectral_flow(fam, math.pi, delta_step=1e-2)
    greedy = sorted({int(np.searchsorted(fam.lambdas, s.lam_a)) for s in base.partition}
                    | {fam.lambdas.size - 1})
    ok = _admissible_nodes(fam, math.pi)
    rng = stream(77, 0)
    for _ in range(50):
        extra = rng.choice(ok, size=int(rng.integers(1, 40)), replace=False)
        cuts = sorted(set(greedy) | {int(c) for c in extra})
        assert spectral_flow(fam, math.pi, delta_step=1e-2, partition=cuts).flow == base.flow


def test_gap_angle_independence():
    fam = refine(lattice_family(BARRIER, -0.9, -0.5), 1e-2)
    # on a short piece with a wide gap every admissible theta0 gives the same flow
    i, j = 0, min(8, fam.lambdas.size - 1)
    block = fam.phases[i:j + 1]
    th0 = find_gap_angle(block, 1e-2)
    cands = [t for t in np.linspace(0.05, TWO_PI - 0.05, 200)
             if np.all(np.abs((block - t + math.pi) % TWO_PI - math.pi) > 1e-2)]
    assert th0 is not None and len(cands) > 10
    flows = {subinterval_flow(fam, i, j, math.pi, t) for t in cands}
    assert len(flows) == 1


def test_concatenation_and_two_angle_identity():
    a, c, b = -1.2, -0.3, 0.3
    whole = spectral_flow(lattice_family(BARRIER, a, b), math.pi).flow
    left = spectral_flow(lattice_family(BARRIER, a, c), math.pi).flow
    right = spectral_flow(lattice_family(BARRIER, c, b), math.pi).flow
    assert whole == left + right == 1
    fam = diagonal_family([3.0, -2.0], [0.5, 4.0], a=0.0, b=1.0)
    th, th2 = 2.2, 4.4
    f1 = spectral_flow(fam, th).flow
    f2 = spectral_flow(fam, th2).flow
    Na = count_phases_between(fam.phases[0], th, th2)
    Nb = count_phases_between(fam.phases[-1], th, th2)
    assert f1 - f2 == Nb - Na


def test_naive_count_homotopy_lattice():
    fam = lattice_family(BARRIER, -1.2, 1.2)
    res = spectral_flow(fam, math.pi)
    fine = refine(fam, 1e-3)
    assert naive_crossing_count(fine, math.pi) == res.flow == 0
    assert len(res.crossings_log) == 2
    dirs = sorted(d for _, _, d in res.crossings_log)
    assert dirs == [-1, 1]


def test_family_json_roundtrip():
    fam = diagonal_family([1.0, 1.0, -2.0])
    back = UnitaryFamilySample.from_json(fam.to_json())
    assert np.allclose(back.lambdas, fam.lambdas)
    assert np.allclose(np.sort(back.phases, axis=1), np.sort(fam.phases, axis=1))
    assert spectral_flow(refine(fam, 1e-2), 2.5).flow == spectral_flow(
        UnitaryFamilySample.from_json(refine(fam, 1e-2).to_json()), 2.5).flow
