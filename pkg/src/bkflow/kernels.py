"""Hot numerical kernels.

Every kernel exists twice: ``<name>_numba`` is a scalar-loop implementation
compiled with ``numba.njit`` and ``<name>_numpy`` is a vectorised numpy
implementation of the same algorithm.  The public name ``<name>`` is bound to
one of them according to :data:`bkflow._jit.USE_NUMBA`.  Both flavours are
kept importable so that tests and ``benchmarks/bench_kernels.py`` can compare
them directly.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

__all__ = [
    "householder_tridiagonalize",
    "tridiagonal_ql",
    "sturm_count",
    "thomas_solve",
    "transfer_products",
    "KERNELS",
]


# ---------------------------------------------------------------------------
# Householder reduction of a complex Hermitian matrix to tridiagonal form
# ---------------------------------------------------------------------------

def _householder_loops(A):
    n = A.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    d = np.zeros(n)
    e = np.zeros(max(n - 1, 0), dtype=np.complex128)
    for j in range(n - 2):
        m = n - j - 1
        norm2 = 0.0
        for i in range(m):
            x = A[j + 1 + i, j]
            norm2 += x.real * x.real + x.imag * x.imag
        norm = math.sqrt(norm2)
        x0 = A[j + 1, j]
        ax0 = abs(x0)
        # already reduced column: nothing to annihilate below the subdiagonal
        if norm == 0.0 or norm2 - ax0 * ax0 <= 1e-300:
            d[j] = A[j, j].real
            e[j] = x0
            continue
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * norm
        v = np.empty(m, dtype=np.complex128)
        for i in range(m):
            v[i] = A[j + 1 + i, j]
        v[0] -= alpha
        vn = 0.0
        for i in range(m):
            vn += v[i].real * v[i].real + v[i].imag * v[i].imag
        vn = math.sqrt(vn)
        for i in range(m):
            v[i] /= vn
        # p = B v on the trailing block B = A[j+1:, j+1:]
        p = np.zeros(m, dtype=np.complex128)
        for r in range(m):
            acc = 0.0 + 0.0j
            for c in range(m):
                acc += A[j + 1 + r, j + 1 + c] * v[c]
            p[r] = acc
        K = 0.0
        for i in range(m):
            K += (v[i].conjugate() * p[i]).real
        for i in range(m):
            p[i] -= K * v[i]
        for r in range(m):
            for c in range(m):
                A[j + 1 + r, j + 1 + c] -= 2.0 * (
                    v[r] * p[c].conjugate() + p[r] * v[c].conjugate()
                )
        d[j] = A[j, j].real
        e[j] = alpha
        # Q <- Q H with H = I - 2 v v^*
        for r in range(n):
            acc = 0.0 + 0.0j
            for c in range(m):
                acc += Q[r, j + 1 + c] * v[c]
            for c in range(m):
                Q[r, j + 1 + c] -= 2.0 * acc * v[c].conjugate()
    if n >= 2:
        d[n - 2] = A[n - 2, n - 2].real
        e[n - 2] = A[n - 1, n - 2]
    if n >= 1:
        d[n - 1] = A[n - 1, n - 1].real
    return d, e, Q


householder_tridiagonalize_numba = njit(_householder_loops)


def householder_tridiagonalize_numpy(A):
    A = np.array(A, dtype=np.complex128)
    n = A.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    d = np.zeros(n)
    e = np.zeros(max(n - 1, 0), dtype=np.complex128)
    for j in range(n - 2):
        x = A[j + 1:, j]
        norm = np.linalg.norm(x)
        ax0 = abs(x[0])
        if norm == 0.0 or norm * norm - ax0 * ax0 <= 1e-300:
            d[j] = A[j, j].real
            e[j] = x[0]
            continue
        phase = x[0] / ax0 if ax0 > 0.0 else 1.0
        alpha = -phase * norm
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        B = A[j + 1:, j + 1:]
        p = B @ v
        p -= np.real(np.vdot(v, p)) * v
        B -= 2.0 * (np.outer(v, p.conj()) + np.outer(p, v.conj()))
        d[j] = A[j, j].real
        e[j] = alpha
        Qs = Q[:, j + 1:]
        Qs -= 2.0 * np.outer(Qs @ v, v.conj())
    if n >= 2:
        d[n - 2] = A[n - 2, n - 2].real
        e[n - 2] = A[n - 1, n - 2]
    if n >= 1:
        d[n - 1] = A[n - 1, n - 1].real
    return d, e, Q


# ---------------------------------------------------------------------------
# Implicit QL iteration (Wilkinson shift) for a real symmetric tridiagonal
# ---------------------------------------------------------------------------

def _ql_loops(d, e, Z):
    # d: diagonal (n,), e: subdiagonal (n-1,), Z: (k, n) accumulated rotations.
    n = d.shape[0]
    d = d.copy()
    Z = Z.copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    eps = 2.220446049250313e-16
    rows = Z.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise RuntimeError("implicit QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(rows):
                    f = Z[k, i + 1]
                    Z[k, i + 1] = s * Z[k, i] + c * f
                    Z[k, i] = c * Z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return d, Z


tridiagonal_ql_numba = njit(_ql_loops)


def tridiagonal_ql_numpy(d, e, Z):
    """Same iteration as the numba kernel; rotations applied as column ops."""
    n = d.shape[0]
    d = np.array(d, dtype=np.float64)
    Z = np.array(Z, dtype=np.float64)
    ee = np.zeros(n)
    ee[: n - 1] = e
    eps = np.finfo(np.float64).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                if abs(ee[m]) <= eps * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise RuntimeError("implicit QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = Z[:, i].copy()
                zj = Z[:, i + 1]
                Z[:, i] = c * zi - s * zj
                Z[:, i + 1] = s * zi + c * zj
                i -= 1
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return d, Z


# ---------------------------------------------------------------------------
# Sturm-sequence (LDL^T inertia) eigenvalue counting for tridiagonals
# ---------------------------------------------------------------------------

def _sturm_loops(d, e, xs):
    n = d.shape[0]
    out = np.zeros(xs.shape[0], dtype=np.int64)
    scale = 1.0
    for i in range(n):
        scale = max(scale, abs(d[i]))
    for i in range(n - 1):
        scale = max(scale, abs(e[i]))
    tiny = 1e-300 + 2.220446049250313e-16 * scale * 1e-8
    for t in range(xs.shape[0]):
        x = xs[t]
        cnt = 0
        q = d[0] - x
        if q < 0.0:
            cnt += 1
        for i in range(1, n):
            if q == 0.0:
                q = -tiny
            q = d[i] - x - e[i - 1] * e[i - 1] / q
            if q < 0.0:
                cnt += 1
        out[t] = cnt
    return out


sturm_count_numba = njit(_sturm_loops)


def sturm_count_numpy(d, e, xs):
    d = np.asarray(d, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    scale = max(1.0, np.abs(d).max(initial=0.0), np.abs(e).max(initial=0.0))
    tiny = 1e-300 + np.finfo(np.float64).eps * scale * 1e-8
    q = d[0] - xs
    cnt = (q < 0.0).astype(np.int64)
    e2 = e * e
    for i in range(1, d.shape[0]):
        q = np.where(q == 0.0, -tiny, q)
        q = d[i] - xs - e2[i - 1] / q
        cnt += q < 0.0
    return cnt


# ---------------------------------------------------------------------------
# Thomas algorithm for complex tridiagonal systems
# ---------------------------------------------------------------------------

def _thomas_loops(sub, diag, sup, rhs):
    n = diag.shape[0]
    c = np.zeros(n, dtype=np.complex128)
    x = np.zeros(n, dtype=np.complex128)
    piv = diag[0]
    if n > 1:
        c[0] = sup[0] / piv
    x[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = sup[i] / piv
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


thomas_solve_numba = njit(_thomas_loops)


def thomas_solve_numpy(sub, diag, sup, rhs):
    # the elimination recurrence is inherently sequential; the sweep runs on
    # python complex scalars, which beats numpy scalar indexing by ~5x
    sub = np.asarray(sub, dtype=np.complex128).tolist()
    diag = np.asarray(diag, dtype=np.complex128).tolist()
    sup = np.asarray(sup, dtype=np.complex128).tolist()
    rhs = np.asarray(rhs, dtype=np.complex128).tolist()
    n = len(diag)
    c = [0j] * n
    x = [0j] * n
    piv = diag[0]
    if n > 1:
        c[0] = sup[0] / piv
    x[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = sup[i] / piv
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return np.array(x, dtype=np.complex128)


# ---------------------------------------------------------------------------
# Batched lattice transfer-matrix products over an energy grid
# ---------------------------------------------------------------------------

def _transfer_loops(lams, values):
    nl = lams.shape[0]
    out = np.zeros((nl, 2, 2))
    for t in range(nl):
        a = 1.0
        b = 0.0
        c = 0.0
        dd = 1.0
        for s in range(values.shape[0]):
            g = lams[t] - values[s]
            # [[g, -1], [1, 0]] @ [[a, b], [c, dd]]
            na = g * a - c
            nb = g * b - dd
            c = a
            dd = b
            a = na
            b = nb
        out[t, 0, 0] = a
        out[t, 0, 1] = b
        out[t, 1, 0] = c
        out[t, 1, 1] = dd
    return out


transfer_products_numba = njit(_transfer_loops)


def transfer_products_numpy(lams, values):
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    a = np.ones_like(lams)
    b = np.zeros_like(lams)
    c = np.zeros_like(lams)
    dd = np.ones_like(lams)
    for v in np.asarray(values, dtype=np.float64):
        g = lams - v
        a, b, c, dd = g * a - c, g * b - dd, a, b
    return np.stack([np.stack([a, b], -1), np.stack([c, dd], -1)], -2)


KERNELS = {
    "householder_tridiagonalize": (householder_tridiagonalize_numba, householder_tridiagonalize_numpy),
    "tridiagonal_ql": (tridiagonal_ql_numba, tridiagonal_ql_numpy),
    "sturm_count": (sturm_count_numba, sturm_count_numpy),
    "thomas_solve": (thomas_solve_numba, thomas_solve_numpy),
    "transfer_products": (transfer_products_numba, transfer_products_numpy),
}


def _pick(name):
    nb, npy = KERNELS[name]
    return nb if USE_NUMBA else npy


def householder_tridiagonalize(A):
    """Reduce Hermitian ``A`` to tridiagonal form, ``A = Q T Q^*``.

    Returns ``(d, e, Q)`` with ``T[j, j] = d[j]`` and ``T[j+1, j] = e[j]``
    (complex subdiagonal).  ``A`` is not modified.
    """
    A = np.array(A, dtype=np.complex128)
    return _pick("householder_tridiagonalize")(A)


def tridiagonal_ql(d, e, Z=None):
    """Eigen-decompose the real symmetric tridiagonal ``(d, e)`` by implicit QL.

    ``Z`` (default identity) is right-multiplied by the accumulated rotations,
    so passing the basis that produced the tridiagonal yields eigenvectors in
    the original basis.  Eigenvalues are returned unsorted.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    if Z is None:
        Z = np.eye(d.shape[0])
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    return _pick("tridiagonal_ql")(d, e, Z)


def sturm_count(d, e, xs):
    """Number of eigenvalues strictly below each ``x`` in ``xs``."""
    d = np.ascontiguousarray(d, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    xs = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    return _pick("sturm_count")(d, e, xs)


def thomas_solve(sub, diag, sup, rhs):
    """Solve a (complex) tridiagonal system without pivoting."""
    args = [np.ascontiguousarray(a, dtype=np.complex128) for a in (sub, diag, sup, rhs)]
    return _pick("thomas_solve")(*args)


def transfer_products(lams, values):
    """Products ``T_{m-1} ... T_0`` of ``[[lam - v_s, -1], [1, 0]]`` per energy."""
    lams = np.ascontiguousarray(np.atleast_1d(lams), dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _pick("transfer_products")(lams, values)
