"""Scattering for the discrete Laplacian on the integer line.

``A`` acts as ``(A u)(n) = u(n + 1) + u(n - 1)`` with a.c. spectrum ``[-2, 2]``
and ``lam = 2 cos k``, ``k in (0, pi)``; ``B = A + V`` with a finitely
supported real potential ``V``.  Each energy in the band carries two channels,
the plane waves ``e^{+ikn}`` (component 0) and ``e^{-ikn}`` (component 1).
Under ``A`` the group velocity of ``e^{+ikn}`` is ``-2 sin k``, so component 0
travels leftwards and component 1 rightwards.

The scattering matrix ``S(lam)`` maps incoming channel amplitudes to outgoing
ones and is computed by two independent routes: plane-wave matching through
the transfer matrix (:func:`s_matrix`) and the stationary formula
``S = I - 2 pi i Z J (I + G R0(lam + i0) G J)^{-1} Z^*`` with
``G = |V|^{1/2}``, ``J = sign V`` (:func:`s_matrix_stationary`).
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernels
from .exceptions import BandError, BKFlowError, SingularSystemError
from .linalg import eig_unitary

BAND_MARGIN = 1e-3
COND_LIMIT = 1e12


@dataclass(frozen=True)
class LatticePotential:
    """Finitely supported real potential ``v(n)`` on strictly increasing sites."""

    sites: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        values = tuple(float(v) for v in self.values)
        if len(sites) != len(values):
            raise BKFlowError(f"sites/values length mismatch: {len(sites)} vs {len(values)}")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise BKFlowError(f"sites must be strictly increasing, got {list(sites)}")
        if not all(math.isfinite(v) for v in values):
            raise BKFlowError("potential values must be finite reals")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "values", values)

    @classmethod
    def single(cls, value, site=0):
        return cls((site,), (value,))

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(tuple(data["sites"]), tuple(data["values"]))
        except (KeyError, TypeError) as exc:
            raise BKFlowError(f"potential must be {{'sites': [...], 'values': [...]}}: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return {"sites": list(self.sites), "values": list(self.values)}

    @property
    def is_zero(self):
        return all(v == 0.0 for v in self.values)

    @property
    def hull(self):
        """First and last site of the support hull (``(0, 0)`` if empty)."""
        if not self.sites:
            return 0, 0
        return self.sites[0], self.sites[-1]

    @property
    def diameter(self):
        lo, hi = self.hull
        return hi - lo

    @property
    def max_abs(self):
        return max((abs(v) for v in self.values), default=0.0)

    def on_hull(self):
        """Potential values on every site of the hull, zeros filled in."""
        lo, hi = self.hull
        out = np.zeros(hi - lo + 1)
        for s, v in zip(self.sites, self.values):
            out[s - lo] = v
        return out

    def scaled(self, c):
        return LatticePotential(self.sites, tuple(c * v for v in self.values))


def check_band(lam, margin=BAND_MARGIN):
    lam = float(lam)
    if not abs(lam) < 2.0 - margin:
        if margin > 0:
            raise BandError(
                f"lambda={lam!r} outside open band (-2,2) with edge margin {margin:g}"
            )
        raise BandError(f"lambda={lam!r} outside open band (-2,2)")
    return lam


def momentum(lam):
    """``k in (0, pi)`` with ``2 cos k = lam``."""
    lam = check_band(lam, margin=0.0)
    return math.acos(lam / 2.0)


def spectral_weight(lam):
    """Normalisation ``w = (4 pi sin k)^{-1/2}`` of the diagonalising map."""
    k = momentum(lam)
    return 1.0 / math.sqrt(4.0 * math.pi * math.sin(k))


def transfer_matrix(pot, lam):
    """Product of one-site matrices ``[[lam - v(n), -1], [1, 0]]`` over the hull.

    Maps ``(u(n0), u(n0 - 1))`` to ``(u(n1 + 1), u(n1))`` for solutions of
    ``u(n + 1) + u(n - 1) + v(n) u(n) = lam u(n)``.
    """
    return kernels.transfer_products(np.array([float(lam)]), pot.on_hull())[0]


def _plane_wave_frame(k, n):
    # (u(n+1), u(n)) = Phi(n) @ (coefficient of e^{ikn}, coefficient of e^{-ikn})
    return np.array(
        [[np.exp(1j * k * (n + 1)), np.exp(-1j * k * (n + 1))],
         [np.exp(1j * k * n), np.exp(-1j * k * n)]]
    )


def _s_from_transfer(M, k, n0, n1):
    K = np.linalg.solve(_plane_wave_frame(k, n1), M @ _plane_wave_frame(k, n0 - 1))
    k11 = K[0, 0]
    if abs(k11) < 1.0 / COND_LIMIT:
        raise SingularSystemError(f"plane-wave matching singular: |K11| = {abs(k11):.3e}")
    # incoming (e^{+ikn} from the right, e^{-ikn} from the left) ->
    # outgoing (e^{+ikn} on the left, e^{-ikn} on the right); det K = 1
    return np.array([[1.0 / k11, -K[0, 1] / k11], [K[1, 0] / k11, K[1, 1] - K[1, 0] * K[0, 1] / k11]])


@dataclass(frozen=True)
class ScatteringPoint:
    lam: float
    k: float
    S: np.ndarray = field(repr=False)
    phases: np.ndarray
    Z: np.ndarray = field(repr=False)
    alpha: float

    @property
    def transmission(self):
        """Transmission amplitudes ``(from the right, from the left)``."""
        return self.S[0, 0], self.S[1, 1]

    @property
    def reflection(self):
        """Reflection amplitudes ``(from the right, from the left)``."""
        return self.S[1, 0], self.S[0, 1]


def half_norm_defect(S):
    """``alpha = ||S - I|| / 2`` (spectral norm)."""
    return 0.5 * float(np.linalg.norm(S - np.eye(S.shape[0]), 2))


def s_matrix(pot, lam, margin=BAND_MARGIN):
    """Scattering matrix by plane-wave matching through the transfer matrix."""
    lam = check_band(lam, margin)
    k = math.acos(lam / 2.0)
    n0, n1 = pot.hull
    if pot.is_zero:
        S = np.eye(2, dtype=np.complex128)
    else:
        S = _s_from_transfer(transfer_matrix(pot, lam), k, n0, n1)
    return ScatteringPoint(
        lam=lam,
        k=k,
        S=S,
        phases=eig_unitary(S),
        Z=smooth_kernel_Z(pot, lam, margin),
        alpha=half_norm_defect(S),
    )


def s_matrix_grid(pot, lams, margin=BAND_MARGIN):
    """Transfer-route ``S`` on an energy grid, shape ``(len(lams), 2, 2)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    for lam in lams:
        check_band(lam, margin)
    out = np.empty((lams.size, 2, 2), dtype=np.complex128)
    if pot.is_zero:
        out[:] = np.eye(2)
        return out
    n0, n1 = pot.hull
    Ms = kernels.transfer_products(lams, pot.on_hull())
    for i, lam in enumerate(lams):
        out[i] = _s_from_transfer(Ms[i], math.acos(lam / 2.0), n0, n1)
    return out


def _decaying_momentum(z):
    # 2 cos(kappa) = z with |e^{-i kappa}| <= 1, i.e. Im kappa <= 0
    kappa = np.arccos(complex(z) / 2.0)
    if kappa.imag > 0:
        kappa = -kappa
    return kappa


def free_resolvent_kernel(lam, eps, n, m):
    """Kernel of ``(A - lam - i eps)^{-1}``: ``i e^{-i kappa |n - m|} / (2 sin kappa)``.

    ``kappa`` solves ``2 cos kappa = lam + i eps`` on the decaying branch; for
    ``eps = 0`` it is the boundary value ``lam + i0`` with ``kappa = k``.
    ``n`` and ``m`` broadcast.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        check_band(lam, margin=0.0)
        kappa = math.acos(float(lam) / 2.0)
    else:
        kappa = _decaying_momentum(complex(lam, eps))
    dist = np.abs(np.asarray(n) - np.asarray(m))
    return 1j * np.exp(-1j * kappa * dist) / (2.0 * np.sin(kappa))


def smooth_kernel_Z(pot, lam, margin=BAND_MARGIN):
    """``Z[+-, j] = w(lam) e^{-+ i k n_j} |v(n_j)|^{1/2}`` over the support sites."""
    lam = check_band(lam, margin)
    k = math.acos(lam / 2.0)
    w = 1.0 / math.sqrt(4.0 * math.pi * math.sin(k))
    sites = np.asarray(pot.sites, dtype=np.float64)
    g = np.sqrt(np.abs(np.asarray(pot.values, dtype=np.float64)))
    return w * np.vstack([np.exp(-1j * k * sites) * g, np.exp(1j * k * sites) * g])


def s_matrix_stationary(pot, lam, margin=BAND_MARGIN):
    """Scattering matrix from the stationary formula over the potential support."""
    lam = check_band(lam, margin)
    if pot.is_zero or not pot.sites:
        return np.eye(2, dtype=np.complex128)
    Z = smooth_kernel_Z(pot, lam, margin)
    sites = np.asarray(pot.sites)
    v = np.asarray(pot.values, dtype=np.float64)
    g = np.sqrt(np.abs(v))
    J = np.sign(v)
    R0 = free_resolvent_kernel(lam, 0.0, sites[:, None], sites[None, :])
    Mmat = np.eye(len(sites)) + (g[:, None] * R0 * g[None, :]) * J[None, :]
    cond = np.linalg.cond(Mmat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(
            f"T-matrix system singular at lambda={lam!r} (condition number {cond:.3e}); "
            "perturb lambda"
        )
    X = np.linalg.solve(Mmat, Z.conj().T)
    return np.eye(2) - 2j * np.pi * (Z * J[None, :]) @ X


def box_hamiltonian(pot, L):
    """Dirichlet truncation to sites ``-L..L``: diagonal and off-diagonal."""
    L = int(L)
    lo, hi = pot.hull
    if pot.sites and (lo < -L or hi > L):
        raise BKFlowError(f"potential support [{lo}, {hi}] does not fit in box [-{L}, {L}]")
    d = np.zeros(2 * L + 1)
    for s, v in zip(pot.sites, pot.values):
        d[s + L] += v
    return d, np.ones(2 * L)


@dataclass(frozen=True)
class BoundState:
    energy: float
    stable: bool
    drift: float


def bound_states(pot, L):
    """Eigenvalues of the box operator outside the closed band ``[-2, 2]``.

    Box eigenvalues of scattering states stay inside the band, so only bound
    states (and possibly a very weakly bound state still feeling the walls)
    qualify.  Each value is recomputed at ``2L``; a drift above 1e-6 marks
    the state as unstable instead of dropping it.
    """
    L = int(L)
    if L < 10 * (pot.diameter + 1):
        raise BKFlowError(f"L={L} below minimum {10 * (pot.diameter + 1)}")
    def outside(LL):
        d, e = box_hamiltonian(pot, LL)
        below = scipy.linalg.eigvalsh_tridiagonal(
            d, e, select="v", select_range=(-np.inf, -2.0))
        above = scipy.linalg.eigvalsh_tridiagonal(
            d, e, select="v", select_range=(2.0, np.inf))
        return np.concatenate([below, above])

    if pot.is_zero:
        return []
    first = outside(L)
    second = outside(2 * L)
    out = []
    for E in first:
        drift = float(np.min(np.abs(second - E))) if second.size else float("inf")
        out.append(BoundState(float(E), drift <= 1e-6, drift))
    return out


def box_resolvent_column(lam, eps, m, L):
    """Column ``m`` of ``(A_L - lam - i eps)^{-1}`` on the Dirichlet box ``-L..L``."""
    n = 2 * L + 1
    z = complex(lam, eps)
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[m + L] = 1.0
    off = np.ones(n - 1, dtype=np.complex128)
    return kernels.thomas_solve(off, np.full(n, -z), off, rhs)


def radiation_box_s_matrix(pot, lam, eps, L):
    """Scattering amplitudes read off a damped box solve (test oracle).

    Solves ``(B_L - z) u_sc = -V u_in`` with ``z = lam + i eps`` for both
    incident plane waves and reads the outgoing amplitudes next to the
    support.  The result is ``S`` continued to ``z``; it tends to
    ``S(lam + i0)`` as ``eps -> 0`` provided ``eps * L`` is large.
    """
    z = complex(lam, eps)
    kappa = _decaying_momentum(z)
    d, e = box_hamiltonian(pot, L)
    sites = np.arange(-L, L + 1)
    off = e.astype(np.complex128)
    diag = d - z
    n0, n1 = pot.hull
    out = {}
    for label, sgn in (("plus", 1), ("minus", -1)):
        u_in = np.exp(sgn * 1j * kappa * sites)
        u_sc = kernels.thomas_solve(off, diag, off, -d * u_in)
        out[label] = (u_in, u_sc)
    left, right = n0 - 1 + L, n1 + 1 + L
    # e^{+i kappa n} incident from the right
    u_in, u_sc = out["plus"]
    t_r = (u_in[left] + u_sc[left]) * np.exp(-1j * kappa * (n0 - 1))
    r_r = u_sc[right] * np.exp(1j * kappa * (n1 + 1))
    # e^{-i kappa n} incident from the left
    u_in, u_sc = out["minus"]
    t_l = (u_in[right] + u_sc[right]) * np.exp(1j * kappa * (n1 + 1))
    r_l = u_sc[left] * np.exp(-1j * kappa * (n0 - 1))
    return np.array([[t_r, r_l], [r_r, t_l]])
