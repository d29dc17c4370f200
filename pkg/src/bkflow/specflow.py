"""Spectral flow of a continuous family of unitary matrices.

Phases live in ``[0, 2*pi)``; the target point ``e^{i theta}`` must have
``theta in (0, 2*pi)`` because the point 1 (phase 0) is excluded.

The flow through ``e^{i theta}`` over ``[a, b]`` is evaluated as follows.  On
a parameter subinterval where some ``e^{i theta0}`` is never an eigenvalue,
the flow equals ``N(theta, theta0; U(b)) - N(theta, theta0; U(a))`` with the
signed arc-counting function :func:`count_phases_between`.  The whole interval
is cut greedily into such subintervals and the pieces are summed.  Gap angles
are found on a sampled family whose adjacent nodes are refined until their
phase sets are within ``delta_step`` of each other.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import AmbiguousCountError, BKFlowError, RefinementError
from .linalg import UNITARY_TOL, eig_unitary

TWO_PI = 2.0 * math.pi
PHASE_TOL = 1e-8
DELTA_STEP = 1e-2
NODE_BUDGET = 2**16


def circle_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def phase_hausdorff(p, q):
    """Hausdorff distance of two phase sets on the circle."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    D = circle_distance(p[:, None], q[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def adjacent_hausdorff(phases):
    """Circle-Hausdorff distance between consecutive rows of a ``(M, n)`` array."""
    P = np.asarray(phases, dtype=np.float64)
    D = circle_distance(P[:-1, :, None], P[1:, None, :])
    return np.maximum(D.min(axis=2).max(axis=1), D.min(axis=1).max(axis=1))


def cluster_phases(phases, tol=PHASE_TOL):
    """Merge phases closer than ``tol`` (circularly); returns ``(centres, mults)``."""
    ph = np.sort(np.asarray(phases, dtype=np.float64))
    if ph.size == 0:
        return ph, np.zeros(0, dtype=int)
    groups = [[ph[0]]]
    for x in ph[1:]:
        if x - groups[-1][-1] <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    if len(groups) > 1 and ph[0] + TWO_PI - ph[-1] <= tol:
        groups[0] = groups.pop() + groups[0]
    centres = np.array([g[0] for g in groups])
    mults = np.array([len(g) for g in groups], dtype=int)
    return centres, mults


def _check_angle(theta, name="theta"):
    theta = float(theta)
    if not 0.0 < theta < TWO_PI:
        raise BKFlowError(f"{name}={theta!r} must lie in (0, 2*pi)")
    return theta


def count_phases_between(phases, theta1, theta2, phase_tol=PHASE_TOL):
    """Signed count of phases in the half-open arc ``[theta1, theta2)``.

    For ``theta1 > theta2`` the count is ``-#[theta2, theta1)``.  A phase within
    ``phase_tol`` of either endpoint makes the count ambiguous and raises.
    """
    theta1 = _check_angle(theta1, "theta1")
    theta2 = _check_angle(theta2, "theta2")
    ph = np.asarray(phases, dtype=np.float64)
    for t in (theta1, theta2):
        close = circle_distance(ph, t) < phase_tol
        if np.any(close):
            raise AmbiguousCountError(
                f"counting ambiguous at endpoint: eigenphase {ph[close][0]!r} within "
                f"{phase_tol:.0e} of {t!r}"
            )
    if theta1 == theta2:
        return 0
    lo, hi = min(theta1, theta2), max(theta1, theta2)
    n = int(np.count_nonzero((ph >= lo) & (ph < hi)))
    return n if theta1 < theta2 else -n


def counting_between(U, theta1, theta2, phase_tol=PHASE_TOL):
    """Eigenvalue counting function of a unitary on the arc from ``theta1`` to ``theta2``."""
    return count_phases_between(eig_unitary(U), theta1, theta2, phase_tol)


def find_gap_angle(phase_block, delta_step):
    """Centre of the widest arc of ``(0, 2*pi)`` avoiding every phase by ``delta_step``.

    ``phase_block`` holds the eigenphases of all nodes of a subinterval.
    Returns ``None`` when the widest free arc is narrower than
    ``3 * delta_step``.
    """
    ph = np.sort(np.asarray(phase_block, dtype=np.float64).ravel())
    # phase 0 is a hard wall: arcs never wrap through the point 1
    pts = np.concatenate([[0.0], ph, [TWO_PI]])
    lo = pts[:-1] + np.where(np.arange(pts.size - 1) == 0, 0.0, delta_step)
    hi = pts[1:] - np.where(np.arange(1, pts.size) == pts.size - 1, 0.0, delta_step)
    # phases just below 2*pi also block the start of the circle and vice versa
    if ph.size:
        lo[0] = max(lo[0], ph[-1] + delta_step - TWO_PI)
        hi[-1] = min(hi[-1], ph[0] - delta_step + TWO_PI)
    width = hi - lo
    i = int(np.argmax(width))
    if width[i] < 3 * delta_step:
        return None
    return float(0.5 * (lo[i] + hi[i]))


@dataclass
class UnitaryFamilySample:
    """Sampled family ``lam -> U(lam)`` on ``lambdas[0] <= lam <= lambdas[-1]``.

    ``func`` (optional) evaluates ``U`` at any parameter and is what
    :func:`refine` calls to insert nodes.  Samples loaded from JSON carry
    phases only.
    """

    lambdas: np.ndarray
    phases: np.ndarray
    unitaries: Optional[np.ndarray] = field(default=None, repr=False)
    func: Optional[Callable] = field(default=None, repr=False, compare=False)
    batch: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        self.phases = np.atleast_2d(np.asarray(self.phases, dtype=np.float64))
        if self.lambdas.ndim != 1 or self.lambdas.size < 2:
            raise BKFlowError("a family needs at least two parameter nodes")
        if np.any(np.diff(self.lambdas) <= 0):
            raise BKFlowError("parameter grid must be strictly increasing")
        if self.phases.shape[0] != self.lambdas.size:
            raise BKFlowError("one phase set per node required")

    @classmethod
    def from_function(cls, func, a, b, n_nodes=33, batch=None):
        """Sample ``func`` on a uniform grid of ``n_nodes`` points.

        ``batch`` may evaluate many parameters at once (returning an array of
        unitaries); it is used for the initial grid and for refinement.
        """
        lams = np.linspace(float(a), float(b), int(n_nodes))
        Us = _evaluate(func, batch, lams)
        return cls(lams, np.array([eig_unitary(U, tol=UNITARY_TOL) for U in Us]), Us, func, batch)

    @property
    def interval(self):
        return float(self.lambdas[0]), float(self.lambdas[-1])

    def to_json(self):
        rows = []
        for lam, ph in zip(self.lambdas, self.phases):
            c, m = cluster_phases(ph)
            rows.append({"lambda": float(lam), "phases": c.tolist(), "mults": m.tolist()})
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text):
        rows = json.loads(text)
        lams = [r["lambda"] for r in rows]
        phases = [np.repeat(r["phases"], r["mults"]) for r in rows]
        return cls(np.array(lams), np.array(phases))


def _evaluate(func, batch, lams):
    if batch is not None:
        return np.asarray(batch(np.asarray(lams)))
    return np.array([func(x) for x in lams])


def refine(family, delta_step=DELTA_STEP, budget=NODE_BUDGET):
    """Bisect until adjacent phase sets are within ``delta_step`` (circle Hausdorff)."""
    if delta_step <= 0:
        raise ValueError("delta_step must be positive")
    lams = family.lambdas
    phases = family.phases
    Us = family.unitaries
    batch = family.batch
    while True:
        dist = adjacent_hausdorff(phases)
        bad = np.flatnonzero(dist > delta_step)
        if bad.size == 0:
            break
        if family.func is None and batch is None:
            i = int(bad[np.argmax(dist[bad])])
            raise RefinementError(
                f"family has no refinement callback; step [{lams[i]:.6g}, {lams[i + 1]:.6g}] "
                f"moves phases by {dist[i]:.3g} > {delta_step:g}"
            )
        if lams.size + bad.size > budget:
            i = int(bad[np.argmax(dist[bad])])
            raise RefinementError(
                f"node budget {budget} exhausted; worst subinterval "
                f"[{lams[i]!r}, {lams[i + 1]!r}] moves phases by {dist[i]:.3g}"
            )
        mids = 0.5 * (lams[bad] + lams[bad + 1])
        if np.any((mids <= lams[bad]) | (mids >= lams[bad + 1])):
            raise RefinementError("parameter step below floating-point resolution")
        newU = _evaluate(family.func, batch, mids)
        newph = np.array([eig_unitary(U) for U in newU])
        order = np.argsort(np.concatenate([lams, mids]), kind="stable")
        lams = np.concatenate([lams, mids])[order]
        phases = np.concatenate([phases, newph])[order]
        if Us is not None:
            Us = np.concatenate([Us, newU])[order]
    return UnitaryFamilySample(lams, phases, Us, family.func, batch)


@dataclass(frozen=True)
class Subinterval:
    lam_a: float
    lam_b: float
    theta0: float
    flow: int
    nodes: tuple


@dataclass(frozen=True)
class FlowResult:
    theta: float
    flow: int
    partition: tuple
    crossings_log: tuple
    delta_step: float
    n_nodes: int

    def to_dict(self):
        return {
            "theta": self.theta,
            "flow": self.flow,
            "delta_step": self.delta_step,
            "n_nodes": self.n_nodes,
            "partition": [
                {"lambda_a": s.lam_a, "lambda_b": s.lam_b, "theta0": s.theta0, "flow": s.flow}
                for s in self.partition
            ],
            "crossings": [
                {"lambda_lo": lo, "lambda_hi": hi, "direction": d} for lo, hi, d in self.crossings_log
            ],
        }


def subinterval_flow(family, i, j, theta, theta0, phase_tol=PHASE_TOL):
    """Flow over nodes ``i..j`` evaluated with gap angle ``theta0``."""
    return count_phases_between(family.phases[j], theta, theta0, phase_tol) - count_phases_between(
        family.phases[i], theta, theta0, phase_tol
    )


def _admissible(phases, theta, phase_tol):
    return not np.any(circle_distance(phases, theta) < phase_tol)


def _soft_count(phases, theta, theta0):
    lo, hi = min(theta, theta0), max(theta, theta0)
    n = int(np.count_nonzero((phases >= lo) & (phases < hi)))
    return n if theta < theta0 else -n


def _greedy_cuts(family, theta, delta_step, phase_tol):
    M = family.lambdas.size
    phases = family.phases
    cuts = [0]
    i = 0
    while i < M - 1:
        if find_gap_angle(phases[i:i + 2], delta_step) is None:
            return None
        # gap existence is monotone in the right end: grow, then bisect
        good, step = i + 1, 1
        while good + step <= M - 1 and find_gap_angle(phases[i:good + step + 1], delta_step) is not None:
            good += step
            step *= 2
        hi = min(good + step, M)  # first index known (or assumed) to fail
        while hi - good > 1:
            mid = (good + hi) // 2
            if find_gap_angle(phases[i:mid + 1], delta_step) is not None:
                good = mid
            else:
                hi = mid
        j = good
        while j > i and j < M - 1 and not _admissible(phases[j], theta, phase_tol):
            j -= 1
        if j == i:
            return None
        cuts.append(j)
        i = j
    return cuts


def _evaluate_partition(family, cuts, theta, delta_step, phase_tol):
    parts = []
    log = []
    total = 0
    for a, b in zip(cuts[:-1], cuts[1:]):
        theta0 = find_gap_angle(family.phases[a:b + 1], delta_step)
        if theta0 is None:
            raise BKFlowError(
                f"subinterval [{family.lambdas[a]!r}, {family.lambdas[b]!r}] admits no gap angle"
            )
        f = subinterval_flow(family, a, b, theta, theta0, phase_tol)
        total += f
        parts.append(Subinterval(float(family.lambdas[a]), float(family.lambdas[b]), theta0, f, (a, b)))
        counts = [_soft_count(family.phases[t], theta, theta0) for t in range(a, b + 1)]
        for t in range(b - a):
            step = counts[t + 1] - counts[t]
            if step:
                log.append((float(family.lambdas[a + t]), float(family.lambdas[a + t + 1]), int(step)))
    return total, tuple(parts), tuple(log)


def spectral_flow(family, theta, delta_step=DELTA_STEP, phase_tol=PHASE_TOL,
                  budget=NODE_BUDGET, partition=None, max_halvings=12):
    """Spectral flow of ``family`` through ``e^{i theta}``.

    Parameters
    ----------
    family : UnitaryFamilySample
    theta : float
        Target angle in ``(0, 2*pi)``.
    delta_step : float
        Initial refinement step; halved automatically while some parameter
        step admits no gap angle.
    partition : sequence of int, optional
        Node indices (including the first and last) to use as cuts instead of
        the greedy choice.  Every cell must admit a gap angle.

    Returns
    -------
    FlowResult
    """
    theta = _check_angle(theta)
    for end, ph in (("a", family.phases[0]), ("b", family.phases[-1])):
        if not _admissible(ph, theta, phase_tol):
            raise AmbiguousCountError(
                f"endpoint {end} has an eigenphase within {phase_tol:.0e} of theta={theta!r}"
            )
    if partition is not None:
        cuts = [int(c) for c in partition]
        if cuts[0] != 0 or cuts[-1] != family.lambdas.size - 1 or any(
                b <= a for a, b in zip(cuts, cuts[1:])):
            raise BKFlowError("partition must be increasing node indices from first to last")
        total, parts, log = _evaluate_partition(family, cuts, theta, delta_step, phase_tol)
        return FlowResult(theta, total, parts, log, delta_step, family.lambdas.size)

    fam = family
    step = delta_step
    for _ in range(max_halvings + 1):
        if fam.func is not None or fam.batch is not None:
            fam = refine(fam, step, budget)
        cuts = _greedy_cuts(fam, theta, step, phase_tol)
        if cuts is not None:
            total, parts, log = _evaluate_partition(fam, cuts, theta, step, phase_tol)
            return FlowResult(theta, total, parts, log, step, fam.lambdas.size)
        if fam.func is None and fam.batch is None:
            break
        step /= 2
    raise RefinementError(
        f"no admissible partition found down to delta_step={step:g} "
        f"({fam.lambdas.size} nodes)"
    )


def naive_crossing_count(family, theta):
    """Signed count of phase crossings through ``theta`` by nearest-phase tracking.

    Assumes adjacent nodes are close enough that each phase can be matched
    to its nearest successor; intended as an independent check on fine grids.
    """
    theta = _check_angle(theta)
    total = 0
    for p, q in zip(family.phases[:-1], family.phases[1:]):
        used = np.zeros(q.size, dtype=bool)
        for x in p:
            dist = np.where(used, np.inf, circle_distance(q, x))
            j = int(np.argmin(dist))
            used[j] = True
            step = (q[j] - x + math.pi) % TWO_PI - math.pi
            if step == 0:
                continue
            # offset of theta from x measured in the direction of motion
            off = (theta - x) % TWO_PI if step > 0 else (x - theta) % TWO_PI
            if 0 < off <= abs(step):
                total += 1 if step > 0 else -1
    return total
