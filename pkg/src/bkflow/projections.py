"""Index of a Fredholm pair of orthogonal projections.

For orthogonal projections ``P`` and ``Q`` the spectrum of ``P - Q`` lies in
``[-1, 1]`` and, away from ``+-1`` and 0, is symmetric under ``mu -> -mu``
with multiplicities.  The index of the pair is the multiplicity of ``+1``
minus the multiplicity of ``-1``.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import NonFredholmError, NotProjectionError
from .linalg import GAP_TOL, count_below, eigh, eigvalsh

PROJECTION_TOL = 1e-8
EIG_TOL = 1e-6
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class ProjectionPair:
    P: np.ndarray
    Q: np.ndarray
    difference_spectrum: np.ndarray


@dataclass(frozen=True)
class IndexResult:
    index: int
    dim_ker_plus: int
    dim_ker_minus: int
    gap_to_one: float


def check_projection(P, name="P", tol=PROJECTION_TOL):
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotProjectionError(f"{name} must be square, got shape {P.shape}")
    herm = float(np.abs(P - P.conj().T).max())
    idem = float(np.abs(P @ P - P).max())
    if herm > tol or idem > tol:
        raise NotProjectionError(
            f"{name} is not an orthogonal projection: idempotency defect {idem:.3e}, "
            f"self-adjointness defect {herm:.3e} (tolerance {tol:.0e})"
        )
    return P


def _clusters(values, tol):
    """Group sorted ``values`` into runs whose neighbours differ by <= tol."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return [(float(c.mean()), len(c)) for c in np.split(values, breaks)]


def pairing_defect(spectrum, tau=CLUSTER_TOL):
    """Largest mismatch between the ``+mu`` and ``-mu`` halves of a spectrum.

    Only eigenvalues with ``tau < |mu| < 1 - tau`` take part (0 pairs with
    itself; the ``+-1`` kernels are exempt).  Clusters of the positive half
    are matched against the mirrored negative half; the result is the largest
    distance between matched cluster centres, or ``inf`` when the cluster
    multiplicities disagree.
    """
    mu = np.asarray(spectrum, dtype=np.float64)
    inner = mu[(np.abs(mu) > tau) & (np.abs(mu) < 1 - tau)]
    pos = _clusters(inner[inner > 0], tau)
    neg = _clusters(-inner[inner < 0], tau)
    if len(pos) != len(neg):
        return float("inf")
    worst = 0.0
    for (cp, mp), (cn, mn) in zip(pos, neg):
        if mp != mn:
            return float("inf")
        worst = max(worst, abs(cp - cn))
    return worst


def pair_spectrum(P, Q, tau=CLUSTER_TOL):
    """Validate ``P``, ``Q`` and return them with the spectrum of ``P - Q``."""
    P = check_projection(P, "P")
    Q = check_projection(Q, "Q")
    if P.shape != Q.shape:
        raise NotProjectionError(f"shape mismatch {P.shape} vs {Q.shape}")
    mu = eigvalsh(P - Q)
    lo, hi = float(mu[0]), float(mu[-1])
    if lo < -1 - 1e-10 or hi > 1 + 1e-10:
        raise NotProjectionError(f"spectrum of P-Q leaves [-1, 1]: [{lo:.3e}, {hi:.3e}]")
    defect = pairing_defect(mu, tau)
    if defect > tau:
        raise NotProjectionError(f"+-mu pairing of spectrum(P-Q) broken (defect {defect:.3e})")
    return ProjectionPair(P, Q, mu)


def index_from_spectrum(mu, eig_tol=EIG_TOL):
    """Kernel multiplicities at +-1 read off a spectrum of ``P - Q``.

    The windows ``[1 - eig_tol, 1]`` and ``[-1, -1 + eig_tol]`` must be cleanly
    separated from the rest: no eigenvalue may fall in the band between
    ``eig_tol`` and ``2 * eig_tol`` away from ``+-1``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    dist = 1.0 - np.abs(mu)
    band = (dist > eig_tol) & (dist <= 2 * eig_tol)
    if np.any(band):
        bad = mu[band]
        raise NonFredholmError(
            f"pair numerically non-Fredholm at this tolerance: eigenvalues {bad.tolist()} "
            f"inside the separation band ({eig_tol:.0e}, {2 * eig_tol:.0e}] from +-1"
        )
    plus = int(np.count_nonzero(mu >= 1 - eig_tol))
    minus = int(np.count_nonzero(mu <= -1 + eig_tol))
    rest = dist[dist > eig_tol]
    gap = float(rest.min()) if rest.size else 1.0
    return IndexResult(plus - minus, plus, minus, gap)


def fredholm_index(P, Q, eig_tol=EIG_TOL):
    """``dim Ker(P - Q - I) - dim Ker(P - Q + I)`` for finite projections."""
    pair = pair_spectrum(P, Q)
    return index_from_spectrum(pair.difference_spectrum, eig_tol)


def trace_identity_check(P, Q, eig_tol=EIG_TOL):
    """``|Tr(P - Q) - index(P, Q)|``; at most ~1e-8 for any valid pair."""
    res = fredholm_index(P, Q, eig_tol)
    tr = float(np.trace(np.asarray(P) - np.asarray(Q)).real)
    return abs(tr - res.index)


def xi_finite(A, B, lam, gap_tol=GAP_TOL, eig_tol=EIG_TOL):
    """Index of the pair of spectral projections ``E_A(lam)``, ``E_B(lam)``."""
    wa, Va = eigh(A)
    wb, Vb = eigh(B)
    ka = count_below(wa, lam, gap_tol)
    kb = count_below(wb, lam, gap_tol)
    PA = Va[:, :ka] @ Va[:, :ka].conj().T
    PB = Vb[:, :kb] @ Vb[:, :kb].conj().T
    return fredholm_index(PA, PB, eig_tol).index
