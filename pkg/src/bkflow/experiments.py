"""Finite-volume experiments on the lattice pair ``A``, ``B = A + V``.

The spectral projections ``E_A(lam)``, ``E_B(lam)`` are approximated by those
of the Dirichlet truncations ``A_L``, ``B_L`` to sites ``-L..L`` and the
difference ``D_L = E_{A,L}(lam) - E_{B,L}(lam)`` is diagonalised densely.

Reading the index off ``D_L``
-----------------------------
In finite dimension the exact ``+-1`` eigenvalues of ``D_L`` always count
``N_{A,L}(lam) - N_{B,L}(lam)``, which for ``lam`` in the band flips between
neighbouring integers as ``L`` varies.  The infinite-volume kernels at ``+-1``
survive truncation as eigenvectors with eigenvalues close to ``+-1`` that stay
concentrated near the potential, while the truncation artefacts (and the
partners that pair with them under ``mu -> -mu``) spread over the box.
:func:`xi_truncated` therefore counts, inside the windows ``[1 - delta, 1]``
and ``[-1, -1 + delta]``, the dimension of the part of each spectral subspace
localised in the central window ``|n - c| <= L/8``.
"""
import functools
import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .exceptions import BandError, BKFlowError, NonFredholmError, OnSpectrumError
from .lattice import (
    BAND_MARGIN,
    LatticePotential,
    bound_states,
    box_hamiltonian,
    check_band,
    half_norm_defect,
    s_matrix,
    s_matrix_grid,
    s_matrix_stationary,
)
from .linalg import GAP_TOL, eig_unitary
from .specflow import DELTA_STEP, UnitaryFamilySample, spectral_flow

L_SWEEP = (200, 400, 800)
COLLISION_SHIFT = 1e-6
LOCAL_FRACTION = 1 / 8
LOCAL_THRESHOLD = 0.75
# localisation weights in this band make a count untrustworthy
AMBIGUOUS_BAND = (0.6, 0.9)
MIN_FREDHOLM_GAP = 0.02
THM0_TOL = 0.05
BK_TOL = 0.05


def min_box(pot):
    return 10 * (pot.diameter + 1)


def _check_L(pot, L):
    L = int(L)
    lo, hi = pot.hull
    if L < min_box(pot) or max(abs(lo), abs(hi)) > L // 2:
        raise BKFlowError(
            f"L={L} too small: need L >= {min_box(pot)} and the support inside [-L/2, L/2]"
        )
    return L


@functools.lru_cache(maxsize=8)
def _box_decomposition(pot, L, perturbed):
    d, e = box_hamiltonian(pot, L)
    if not perturbed:
        d = np.zeros_like(d)
    return scipy.linalg.eigh_tridiagonal(d, e)


def box_decompositions(pot, L):
    """Eigen-decompositions of ``A_L`` and ``B_L`` (cached per potential and ``L``)."""
    return _box_decomposition(pot, int(L), False), _box_decomposition(pot, int(L), True)


def _resolve_collision(lam, spectra, shift=COLLISION_SHIFT, gap_tol=GAP_TOL, tries=8):
    log = []
    for _ in range(tries):
        hit = [w for w in spectra if w.size and np.min(np.abs(w - lam)) <= gap_tol]
        if not hit:
            return lam, log
        log.append({"from": lam, "to": lam + shift})
        lam = lam + shift
    raise OnSpectrumError(f"could not move lambda off the box spectra after {tries} shifts")


def predicted_alpha(pot, lam):
    """``||S(lam) - I|| / 2`` in the band; 0 off the band (no a.c. spectrum there)."""
    if abs(lam) >= 2.0:
        return 0.0
    check_band(lam, BAND_MARGIN)
    return s_matrix(pot, lam).alpha


@dataclass
class TruncatedDifference:
    lam: float
    L: int
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    n_a: int
    n_b: int
    shifts: list

    @property
    def kernel_count(self):
        """``N_{A,L} - N_{B,L}``, the finite-dimensional index of the pair."""
        return self.n_a - self.n_b


def truncated_projection_difference(pot, lam, L, with_vectors=True):
    """Spectrum of ``E_{A,L}(lam) - E_{B,L}(lam)`` (ascending).

    If ``lam`` falls within 1e-9 of a box eigenvalue it is moved up by 1e-6
    and the move is recorded in ``shifts``.
    """
    L = _check_L(pot, L)
    (wa, Va), (wb, Vb) = box_decompositions(pot, L)
    lam, shifts = _resolve_collision(float(lam), [wa, wb])
    na = int(np.count_nonzero(wa < lam))
    nb = int(np.count_nonzero(wb < lam))
    D = Va[:, :na] @ Va[:, :na].T - Vb[:, :nb] @ Vb[:, :nb].T
    if with_vectors:
        mu, W = np.linalg.eigh(D)
    else:
        mu, W = np.linalg.eigvalsh(D), None
    return TruncatedDifference(lam, L, mu, W, na, nb, shifts)


def _localised_weights(vectors, window):
    if vectors.shape[1] == 0:
        return np.zeros(0)
    Kw = vectors[window]
    return np.clip(np.linalg.eigvalsh(Kw.T @ Kw), 0.0, 1.0)[::-1]


def localised_kernel_count(td, pot, delta, fraction=LOCAL_FRACTION, threshold=LOCAL_THRESHOLD):
    """Signed count of localised spectral directions of ``D_L`` near ``+-1``."""
    lo, hi = pot.hull
    centre = 0.5 * (lo + hi)
    R = max(int(fraction * td.L), pot.diameter + 2)
    sites = np.arange(-td.L, td.L + 1)
    window = np.abs(sites - centre) <= R
    mu, W = td.eigenvalues, td.eigenvectors
    w_plus = _localised_weights(W[:, mu >= 1 - delta], window)
    w_minus = _localised_weights(W[:, mu <= -1 + delta], window)
    plus = int(np.count_nonzero(w_plus >= threshold))
    minus = int(np.count_nonzero(w_minus >= threshold))
    weights = np.concatenate([w_plus, w_minus])
    ambiguous = bool(np.any((weights > AMBIGUOUS_BAND[0]) & (weights < AMBIGUOUS_BAND[1])))
    return {
        "L": td.L,
        "delta": float(delta),
        "lambda": td.lam,
        "count_plus": plus,
        "count_minus": minus,
        "value": plus - minus,
        "weights_plus": w_plus.tolist(),
        "weights_minus": w_minus.tolist(),
        "ambiguous": ambiguous,
        "window_radius": R,
        "n_a": td.n_a,
        "n_b": td.n_b,
        "shifts": td.shifts,
    }


@dataclass
class XiEstimate:
    value: object  # int, or None when the sweep disagrees
    stable: bool
    alpha: float
    records: list

    def to_dict(self):
        return asdict(self)


def default_delta_sweep(alpha):
    gap = 1.0 - alpha
    return (0.75 * gap, 0.875 * gap)


def xi_truncated(pot, lam, L_sweep=L_SWEEP, delta_sweep=None):
    """Index ``Xi(lam)`` estimated from truncations, with a stability gate.

    Every ``(L, delta)`` combination yields an integer; ``stable`` requires all
    of them to agree and no localisation weight to fall in the ambiguous band.
    """
    lam = float(lam)
    alpha = predicted_alpha(pot, lam)
    if 1.0 - alpha < MIN_FREDHOLM_GAP:
        raise NonFredholmError(
            f"predicted non-Fredholm: alpha={alpha:.4f}, -1 in or near sigma(S(lambda))"
        )
    if delta_sweep is None:
        delta_sweep = default_delta_sweep(alpha)
    for delta in delta_sweep:
        if not 0.0 < delta < 1.0 - alpha:
            raise NonFredholmError(
                f"window delta={delta:g} reaches into the essential spectrum [-{alpha:.4f}, {alpha:.4f}]"
            )
    records = []
    for L in L_sweep:
        td = truncated_projection_difference(pot, lam, L)
        for delta in delta_sweep:
            records.append(localised_kernel_count(td, pot, delta))
    values = {r["value"] for r in records}
    stable = len(values) == 1 and not any(r["ambiguous"] for r in records)
    value = values.pop() if len(values) == 1 else None
    return XiEstimate(value, stable, alpha, records)


def exact_gap_index(pot, lam, L=400):
    """Exact ``Xi(lam)`` for ``lam`` off the closed band, by bound-state counting.

    Below the band ``E_A(lam) = 0`` and ``Xi = -#{bound states below lam}``;
    above it ``E_A(lam) = I`` and ``Xi = #{bound states above lam}``.
    """
    lam = float(lam)
    if abs(lam) <= 2.0:
        raise BandError(f"lambda={lam!r} is not in a spectral gap of the free operator")
    states = bound_states(pot, max(int(L), min_box(pot)))
    if not all(b.stable for b in states):
        raise BKFlowError("bound states not converged in the box; increase L")
    energies = np.array([b.energy for b in states])
    if energies.size and np.min(np.abs(energies - lam)) <= GAP_TOL:
        raise OnSpectrumError(f"lambda={lam!r} is a bound-state energy")
    if lam < -2.0:
        return -int(np.count_nonzero(energies < lam))
    return int(np.count_nonzero(energies > lam))


def hausdorff_to_interval(points, alpha):
    """Hausdorff distance between a finite point set and ``[-alpha, alpha]``."""
    x = np.sort(np.asarray(points, dtype=np.float64))
    if x.size == 0:
        return float(alpha) if alpha > 0 else 0.0
    contain = float(max(0.0, np.max(np.abs(x)) - alpha))
    if alpha == 0:
        return contain
    # sup over the interval of the distance to the set: attained at an
    # endpoint or at a midpoint between neighbouring points inside it
    fill = max(float(np.min(np.abs(x + alpha))), float(np.min(np.abs(x - alpha))))
    mids = 0.5 * (x[1:] + x[:-1])
    inside = np.abs(mids) <= alpha
    if np.any(inside):
        fill = max(fill, float(np.max(0.5 * np.diff(x)[inside])))
    return max(contain, fill)


@dataclass
class Thm0Report:
    lam: float
    alpha: float
    alpha_stationary: float
    delta: float
    per_L: list
    passed: bool
    spectra: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("spectra")
        return d


def verify_thm0(pot, lam, L_sweep=L_SWEEP, delta=None, tol=THM0_TOL):
    """Compare the truncated spectrum of ``D_L`` with ``[-alpha, alpha]``.

    ``alpha`` comes from both scattering routes (they must agree to 1e-8).
    Passes when the defect at the largest ``L`` is at most ``tol`` and the
    defect never increases along the sweep.
    """
    lam = check_band(lam, BAND_MARGIN)
    alpha = s_matrix(pot, lam).alpha
    alpha_st = half_norm_defect(s_matrix_stationary(pot, lam))
    if abs(alpha - alpha_st) > 1e-8:
        raise BKFlowError(f"scattering routes disagree on alpha: {alpha!r} vs {alpha_st!r}")
    if delta is None:
        delta = 0.25 * (1.0 - alpha)
    per_L, spectra = [], {}
    for L in L_sweep:
        td = truncated_projection_difference(pot, lam, L, with_vectors=False)
        mu = td.eigenvalues
        inside = mu[np.abs(mu) <= alpha + delta]
        defect = hausdorff_to_interval(inside, alpha)
        spectra[int(L)] = mu
        per_L.append({
            "L": int(L),
            "defect": defect,
            "n_inside": int(inside.size),
            "max_abs_inside": float(np.max(np.abs(inside))) if inside.size else 0.0,
            "outside": mu[np.abs(mu) > alpha + delta].tolist(),
            "lambda": td.lam,
            "shifts": td.shifts,
            "sha256": hashlib.sha256(np.ascontiguousarray(mu).tobytes()).hexdigest(),
        })
    defects = [r["defect"] for r in per_L]
    monotone = all(b <= a + 1e-12 for a, b in zip(defects, defects[1:]))
    passed = defects[-1] <= tol and monotone
    return Thm0Report(lam, alpha, alpha_st, float(delta), per_L, passed, spectra)


def lattice_family(pot, a, b, n_nodes=33):
    """The scattering-matrix family ``{S(lam)}`` on ``[a, b]`` as a flow sample."""
    check_band(a, BAND_MARGIN)
    check_band(b, BAND_MARGIN)
    return UnitaryFamilySample.from_function(
        lambda x: s_matrix_grid(pot, [x])[0], a, b, n_nodes,
        batch=lambda xs: s_matrix_grid(pot, xs),
    )


@dataclass
class E1Report:
    lam1: float
    lam2: float
    alpha1: float
    alpha2: float
    delta_xi: object
    flow: object
    match: object  # True, False, or None (indeterminate)
    status: str
    reason: str
    xi1: object = None
    xi2: object = None
    flow_result: object = None

    def to_dict(self):
        return {
            "lam1": self.lam1,
            "lam2": self.lam2,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "delta_xi": self.delta_xi,
            "flow": self.flow,
            "match": self.match,
            "status": self.status,
            "reason": self.reason,
            "xi1": self.xi1.to_dict() if self.xi1 is not None else None,
            "xi2": self.xi2.to_dict() if self.xi2 is not None else None,
            "flow_result": self.flow_result.to_dict() if self.flow_result is not None else None,
        }


def verify_e1(pot, lam1, lam2, L_sweep=L_SWEEP, delta_step=DELTA_STEP, n_nodes=33):
    """Jump of the truncated index against minus the spectral flow through -1.

    Never reports a verdict it cannot back: hypothesis violations and
    unstable index estimates give ``status="indeterminate"``, ``match=None``.
    """
    lam1, lam2 = float(lam1), float(lam2)
    if not lam1 < lam2:
        raise BKFlowError("need lam1 < lam2")
    check_band(lam1, BAND_MARGIN)
    check_band(lam2, BAND_MARGIN)
    a1 = predicted_alpha(pot, lam1)
    a2 = predicted_alpha(pot, lam2)
    base = dict(lam1=lam1, lam2=lam2, alpha1=a1, alpha2=a2)
    for name, a in (("lambda1", a1), ("lambda2", a2)):
        if 1.0 - a < MIN_FREDHOLM_GAP:
            return E1Report(**base, delta_xi=None, flow=None, match=None, status="indeterminate",
                            reason=f"hypothesis: -1 in or near sigma(S({name})) (alpha={a:.4f})")
    fr = spectral_flow(lattice_family(pot, lam1, lam2, n_nodes), math.pi, delta_step=delta_step)
    xi1 = xi_truncated(pot, lam1, L_sweep)
    xi2 = xi_truncated(pot, lam2, L_sweep)
    unstable = [n for n, x in (("Xi(lambda1)", xi1), ("Xi(lambda2)", xi2)) if not x.stable]
    if unstable:
        return E1Report(**base, delta_xi=None, flow=fr.flow, match=None, status="indeterminate",
                        reason="stability gate tripped: " + ", ".join(unstable),
                        xi1=xi1, xi2=xi2, flow_result=fr)
    dxi = xi2.value - xi1.value
    match = dxi == -fr.flow
    return E1Report(**base, delta_xi=dxi, flow=fr.flow, match=match,
                    status="match" if match else "mismatch",
                    reason="" if match else f"Xi jump {dxi} != -flow {-fr.flow}",
                    xi1=xi1, xi2=xi2, flow_result=fr)


def _check_window(lam, w):
    lo, hi = lam - w, lam + w
    for edge in (-2.0, 2.0):
        if lo <= edge <= hi:
            raise BandError(f"smoothing window [{lo:g}, {hi:g}] straddles the band edge {edge:g}")


def ssf_smoothed(pot, lam, L, w, points=2001, method="exact"):
    """Average of ``N_{A,L}(t) - N_{B,L}(t)`` over ``t`` in ``[lam-w, lam+w]``.

    ``method="exact"`` integrates the step function piece by piece (the
    limit of the grid average).  The grid routes average over ``points``
    uniform nodes, skipping nodes within 1e-9 of a box eigenvalue:
    ``"sturm"`` counts by Sturm sequences without diagonalising, and
    ``"eigvals"`` counts against the box eigenvalues.  At a few thousand
    nodes the grid quantisation is ~1e-3, which hides the finite-``L``
    trend; the grid routes serve as cross-checks.
    """
    if points < 200:
        raise ValueError("points must be >= 200")
    if w <= 0:
        raise ValueError("w must be positive")
    _check_window(lam, w)
    L = _check_L(pot, L)
    if L < 400:
        raise BKFlowError(f"L={L} below 400")
    d, e = box_hamiltonian(pot, L)
    zero = np.zeros_like(d)
    if method == "exact":
        wa = scipy.linalg.eigvalsh_tridiagonal(zero, e)
        wb = scipy.linalg.eigvalsh_tridiagonal(d, e)
        hi = lam + w
        # int_{lam-w}^{lam+w} #{x < t} dt = sum_x clip(hi - x, 0, 2w)
        area = np.sum(np.clip(hi - wa, 0.0, 2 * w)) - np.sum(np.clip(hi - wb, 0.0, 2 * w))
        return float(area / (2 * w))
    t = np.linspace(lam - w, lam + w, int(points))
    if method == "sturm":
        g = GAP_TOL
        na_lo, na_hi = kernels.sturm_count(zero, e, t - g), kernels.sturm_count(zero, e, t + g)
        nb_lo, nb_hi = kernels.sturm_count(d, e, t - g), kernels.sturm_count(d, e, t + g)
        keep = (na_lo == na_hi) & (nb_lo == nb_hi)
        diff = (na_hi - nb_hi)[keep]
    elif method == "eigvals":
        wa = scipy.linalg.eigvalsh_tridiagonal(zero, e)
        wb = scipy.linalg.eigvalsh_tridiagonal(d, e)
        both = np.sort(np.concatenate([wa, wb]))
        idx = np.clip(np.searchsorted(both, t), 1, both.size - 1)
        near = np.minimum(np.abs(both[idx] - t), np.abs(both[idx - 1] - t))
        keep = near > GAP_TOL
        diff = (np.searchsorted(wa, t) - np.searchsorted(wb, t))[keep]
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.mean(diff))


def folded_phases(S):
    """Eigenphases of ``S`` folded into ``(-pi, pi]``."""
    th = eig_unitary(S)
    return np.where(th > math.pi, th - 2 * math.pi, th)


def mod1_distance(x, y):
    return abs((x - y + 0.5) % 1.0 - 0.5)


@dataclass
class BKReport:
    lam: float
    L: int
    w: float
    xi_est: float
    phase_sum: float
    defect_mod1: float
    phases: list
    passed: bool

    def to_dict(self):
        return asdict(self)


def verify_bk(pot, lam, L=800, w=0.1, points=2001, tol=BK_TOL, method="exact"):
    """Smoothed truncation ``xi`` against ``-(1/2pi) sum theta_n`` modulo 1."""
    lam = check_band(lam, BAND_MARGIN)
    xi = ssf_smoothed(pot, lam, L, w, points, method)
    th = folded_phases(s_matrix(pot, lam).S)
    ps = float(-np.sum(th) / (2 * math.pi))
    defect = mod1_distance(xi, ps)
    return BKReport(lam, int(L), float(w), xi, ps, defect, th.tolist(), defect <= tol)


def xi_profile(pot, lams, L_sweep=L_SWEEP):
    """``xi_truncated`` over a grid of energies, skipping predicted non-Fredholm points."""
    out = []
    for lam in lams:
        try:
            est = xi_truncated(pot, lam, L_sweep)
            out.append({"lambda": float(lam), "value": est.value, "stable": est.stable,
                        "alpha": est.alpha})
        except (NonFredholmError, BandError) as exc:
            out.append({"lambda": float(lam), "value": None, "stable": False, "error": str(exc)})
    return out


__all__ = [
    "LatticePotential",
    "truncated_projection_difference",
    "xi_truncated",
    "verify_thm0",
    "verify_e1",
    "ssf_smoothed",
    "verify_bk",
    "lattice_family",
    "xi_profile",
    "exact_gap_index",
]
