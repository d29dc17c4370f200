"""Dense Hermitian/unitary spectral primitives.

Matrices are plain numpy arrays.  A "Hermitian matrix" is any square array
passing :func:`check_hermitian`; a projection returned by
:func:`spectral_projection` is a Hermitian array with ``P @ P == P``.
"""
import os
from typing import NamedTuple

import numpy as np

from . import kernels
from .exceptions import NotHermitianError, NotUnitaryError, OnSpectrumError

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-8
GAP_TOL = 1e-9
# eigenphases this close to 2*pi are reported as 0
_PHASE_SNAP = 1e-12

EIGH_METHOD = os.environ.get("BKFLOW_EIGH", "lapack").strip().lower()


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def check_hermitian(M, rtol=HERMITIAN_RTOL):
    """Return ``M`` as a square array, raising if it is not Hermitian.

    The deviation ``|M[i, j] - conj(M[j, i])|`` must stay below
    ``rtol * max(1, max|M|)``; the error message names the worst pair.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] == 0:
        raise NotHermitianError("empty matrix")
    dev = np.abs(M - M.conj().T)
    scale = max(1.0, float(np.abs(M).max()))
    worst = float(dev.max())
    if worst > rtol * scale:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise NotHermitianError(
            f"matrix is not Hermitian: |M[{i},{j}] - conj(M[{j},{i}])| = {worst:.3e} "
            f"exceeds {rtol:.0e} * {scale:.3g}"
        )
    return M


def _eigh_householder(M):
    d, e, Q = kernels.householder_tridiagonalize(M)
    # unitary diagonal rescaling making the subdiagonal real and nonnegative
    n = d.shape[0]
    phases = np.ones(n, dtype=np.complex128)
    for j in range(n - 1):
        a = abs(e[j])
        phases[j + 1] = phases[j] * (e[j] / a if a > 0 else 1.0)
    w, Z = kernels.tridiagonal_ql(d, np.abs(e))
    order = np.argsort(w, kind="stable")
    vecs = (Q * phases[None, :]) @ Z[:, order]
    return w[order], vecs


def eigh(M, method=None):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Parameters
    ----------
    M : array_like
        Hermitian matrix (validated by :func:`check_hermitian`).
    method : {"lapack", "householder"}, optional
        ``"householder"`` runs the package's own Householder tridiagonalisation
        followed by implicit QL (numba-accelerated when enabled).  Defaults to
        the ``BKFLOW_EIGH`` environment variable, else ``"lapack"``.

    Returns
    -------
    EigenDecomposition
    """
    M = check_hermitian(M)
    method = (method or EIGH_METHOD).lower()
    H = 0.5 * (M + M.conj().T)
    if method == "lapack":
        w, V = np.linalg.eigh(H)
    elif method == "householder":
        w, V = _eigh_householder(H)
        if not np.iscomplexobj(M):
            V = V.real if np.abs(V.imag).max(initial=0.0) == 0.0 else V
    else:
        raise ValueError(f"unknown eigh method {method!r}")
    return EigenDecomposition(np.asarray(w, dtype=np.float64), V)


def eigvalsh(M, method=None):
    return eigh(M, method=method).eigenvalues


def unitarity_defect(U):
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def eig_unitary(U, tol=UNITARY_TOL):
    """Eigenphases of a unitary matrix in ``[0, 2*pi)``, sorted ascending.

    Multiplicities are kept (a k-fold eigenvalue appears k times).  Phases
    within 1e-12 of ``2*pi`` are reported as 0.
    """
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise NotUnitaryError(f"expected a square matrix, got shape {U.shape}")
    defect = unitarity_defect(U)
    if defect > tol:
        raise NotUnitaryError(f"matrix is not unitary: ||U*U - I|| = {defect:.3e} > {tol:.0e}")
    if U.shape[0] == 1:
        z = np.array([U[0, 0]])
    elif U.shape[0] == 2:
        z = _eig2(U)
    else:
        z = np.linalg.eigvals(U)
    theta = np.mod(np.angle(z), 2 * np.pi)
    theta[theta > 2 * np.pi - _PHASE_SNAP] = 0.0
    return np.sort(theta)


def _eig2(U):
    # closed-form roots of the 2x2 characteristic polynomial; deterministic and
    # cheap for the lattice scattering matrices swept by the spectral-flow engine
    tr = U[0, 0] + U[1, 1]
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    disc = np.sqrt(tr * tr / 4 - det)
    z1 = tr / 2 + disc
    z2 = tr / 2 - disc
    # recover the smaller root from the product when cancellation bites
    if abs(z1) < abs(z2):
        z1, z2 = z2, z1
    if abs(z1) > 0:
        z2 = det / z1
    return np.array([z1, z2])


def count_below(eigenvalues, lam, gap_tol=GAP_TOL):
    """``#{eigenvalues < lam}``; raises if ``lam`` is within ``gap_tol`` of one."""
    w = np.asarray(eigenvalues, dtype=np.float64)
    if w.size and float(np.min(np.abs(w - lam))) <= gap_tol:
        k = int(np.argmin(np.abs(w - lam)))
        raise OnSpectrumError(
            f"lambda={lam!r} on spectrum (eigenvalue {w[k]!r} within {gap_tol:.0e}); "
            "counting ambiguous"
        )
    return int(np.count_nonzero(w < lam))


def spectral_projection(M, lam, gap_tol=GAP_TOL, method=None):
    """Orthogonal projection onto eigenvectors of ``M`` with eigenvalue < ``lam``."""
    w, V = eigh(M, method=method)
    k = count_below(w, lam, gap_tol)
    Vb = V[:, :k]
    return Vb @ Vb.conj().T


def projection_from_decomposition(decomp, lam, gap_tol=GAP_TOL):
    w, V = decomp
    k = count_below(w, lam, gap_tol)
    Vb = V[:, :k]
    return Vb @ Vb.conj().T
