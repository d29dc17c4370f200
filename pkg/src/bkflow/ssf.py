"""Eigenvalue counting and the spectral shift function of finite pairs.

For matrices the spectral shift function is the step function
``xi(t) = N_A(t) - N_B(t)`` with jumps at the eigenvalues of ``A`` and ``B``;
the trace formula ``Tr(phi(B) - phi(A)) = int phi'(t) xi(t) dt`` can then be
checked without quadrature error.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import SupportError
from .linalg import GAP_TOL, count_below, eigh


@dataclass(frozen=True)
class CountingFunction:
    """``N(lam) = #{eigenvalues < lam}`` for a fixed sorted spectrum."""

    eigenvalues: np.ndarray
    gap_tol: float = GAP_TOL

    @classmethod
    def of(cls, M, gap_tol=GAP_TOL):
        return cls(eigh(M).eigenvalues, gap_tol)

    def __call__(self, lam):
        return count_below(self.eigenvalues, lam, self.gap_tol)

    def evaluate(self, lams):
        """Vectorised evaluation without the on-spectrum check."""
        return np.searchsorted(self.eigenvalues, np.asarray(lams), side="left")


def counting(M, lam, gap_tol=GAP_TOL):
    """Eigenvalue counting function ``N_M(lam)``."""
    return count_below(eigh(M).eigenvalues, lam, gap_tol)


def ssf_finite(A, B, lam, gap_tol=GAP_TOL):
    """``xi(lam; B, A) = N_A(lam) - N_B(lam)``."""
    return counting(A, lam, gap_tol) - counting(B, lam, gap_tol)


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with its derivative and integration window.

    ``window`` is the interval on which the trace formula is integrated; it
    must contain both spectra (with margin), outside of which ``xi`` vanishes.
    """

    __test__ = False  # not a pytest class

    name: str
    f: Callable = field(repr=False)
    df: Callable = field(repr=False)
    window: tuple

    def fd_defect(self, h=1e-4, n=401):
        """Max deviation of ``df`` from a central difference of ``f``."""
        lo, hi = self.window
        x = np.linspace(lo, hi, n)
        fd = (self.f(x + h) - self.f(x - h)) / (2 * h)
        return float(np.max(np.abs(fd - self.df(x))))


def bump(center=0.0, radius=1.0):
    """``exp(-1 / (1 - s^2))`` with ``s = (x - center) / radius``; C-infinity, compact."""

    def f(x):
        s = (np.asarray(x, dtype=float) - center) / radius
        out = np.zeros_like(s)
        m = np.abs(s) < 1
        out[m] = np.exp(-1.0 / (1.0 - s[m] ** 2))
        return out

    def df(x):
        s = (np.asarray(x, dtype=float) - center) / radius
        out = np.zeros_like(s)
        m = np.abs(s) < 1
        sm = s[m]
        out[m] = np.exp(-1.0 / (1.0 - sm**2)) * (-2.0 * sm / (1.0 - sm**2) ** 2) / radius
        return out

    return TestFunction(f"bump({center:g},{radius:g})", f, df, (center - radius, center + radius))


def gaussian(center=0.0, width=1.0, window=None):
    def f(x):
        s = (np.asarray(x, dtype=float) - center) / width
        return np.exp(-0.5 * s**2)

    def df(x):
        s = (np.asarray(x, dtype=float) - center) / width
        return -s / width * np.exp(-0.5 * s**2)

    if window is None:
        window = (center - 12 * width, center + 12 * width)
    return TestFunction(f"gaussian({center:g},{width:g})", f, df, tuple(window))


def window_polynomial(coeffs, window):
    """Polynomial ``sum c_k x^k`` restricted to ``window``."""
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    return TestFunction(f"poly{tuple(coeffs)}", p, dp, tuple(window))


def smooth_step(center=0.0, width=1.0, window=(-10.0, 10.0)):
    """``tanh`` ramp; not compactly supported, so the window matters."""

    def f(x):
        return np.tanh((np.asarray(x, dtype=float) - center) / width)

    def df(x):
        return 1.0 / (width * np.cosh((np.asarray(x, dtype=float) - center) / width) ** 2)

    return TestFunction(f"tanh({center:g},{width:g})", f, df, tuple(window))


def builtin_test_functions(lo, hi):
    """Five test functions whose windows cover ``[lo, hi]`` with margin."""
    c = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo) + 1.0
    return [
        bump(c, 1.5 * r),
        gaussian(c, 0.5 * r, window=(c - 2 * r, c + 2 * r)),
        gaussian(c + 0.3 * r, 0.25 * r, window=(c - 2 * r, c + 2 * r)),
        window_polynomial([0.3, -0.2, 0.05, 0.01], (c - 2 * r, c + 2 * r)),
        smooth_step(c, 0.4 * r, window=(c - 2 * r, c + 2 * r)),
    ]


def _matrix_function_trace(decomp, f):
    # Tr f(M) = Tr(V f(Lambda) V^*) assembled as a matrix, not as sum f(lambda_i)
    w, V = decomp
    F = (V * f(w)[None, :]) @ V.conj().T
    return float(np.trace(F).real)


def trace_formula_residual(A, B, phi, quadrature_points=2000, margin=1e-6):
    """Residual of the trace formula for the finite pair ``(A, B)``.

    The left side ``Tr(phi(B) - phi(A))`` is assembled from the matrix
    functions.  The right side is computed twice: exactly, by integrating
    ``phi'`` over each constant piece of the step function ``xi`` (which
    collapses to boundary values of ``phi``), and by composite Gauss-Legendre
    quadrature of ``phi' * xi`` on the same pieces.  Returns the larger of the
    two residuals.
    """
    if quadrature_points < 1000:
        raise ValueError("quadrature_points must be >= 1000")
    da, db = eigh(A), eigh(B)
    wa, wb = da.eigenvalues, db.eigenvalues
    lo, hi = phi.window
    smin = min(wa[0], wb[0])
    smax = max(wa[-1], wb[-1])
    if smin <= lo + margin or smax >= hi - margin:
        raise SupportError(
            f"test function window [{lo:g}, {hi:g}] does not cover the spectral range "
            f"[{smin:.6g}, {smax:.6g}]"
        )
    lhs = _matrix_function_trace(db, phi.f) - _matrix_function_trace(da, phi.f)

    # constant pieces of xi between consecutive jump points
    jumps = np.unique(np.concatenate([wa, wb]))
    edges = np.concatenate([[lo], jumps, [hi]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    xi = np.searchsorted(wa, mids) - np.searchsorted(wb, mids)

    exact = float(np.sum(xi * (phi.f(edges[1:]) - phi.f(edges[:-1]))))

    npieces = len(mids)
    order = max(4, quadrature_points // npieces)
    x, wq = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mids[:, None] + half[:, None] * x[None, :]
    quad = float(np.sum(xi[:, None] * half[:, None] * wq[None, :] * phi.df(nodes)))

    return max(abs(lhs - exact), abs(lhs - quad))
