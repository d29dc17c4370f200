"""Seeded random models.

Every random object is drawn from its own stream ``Philox(key=[seed, index])``:
the 64-bit config seed fills the first key word and the running item index
the second.  Items are therefore independent of evaluation order, and any
single item can be regenerated without replaying the others.
"""
import numpy as np

from .lattice import LatticePotential

U64 = (1 << 64) - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed, index):
    """Generator for item ``index`` of the run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(key=[check_seed(seed), int(index)]))


def random_hermitian(rng, dim, scale=1.0):
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (X + X.conj().T) / (2 * np.sqrt(dim))


def random_low_rank(rng, dim, rank, scale=1.0):
    """Hermitian ``sum_j c_j |u_j><u_j|`` with orthonormal ``u_j`` and signed ``c_j``."""
    X = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    U, _ = np.linalg.qr(X)
    c = scale * rng.uniform(0.5, 1.5, rank) * rng.choice([-1.0, 1.0], rank)
    return (U * c) @ U.conj().T


def random_pair(rng, dim, rank):
    """``(A, B)`` with ``B - A`` Hermitian of rank ``rank``."""
    A = random_hermitian(rng, dim)
    return A, A + random_low_rank(rng, dim, rank)


def random_projection(rng, dim, rank):
    X = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    U, _ = np.linalg.qr(X)
    return U @ U.conj().T


def random_unitary(rng, dim):
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]


def random_potential(rng, max_support=5, vmax=3.0):
    """Potential on ``1..max_support`` consecutive sites, values uniform in ``[-vmax, vmax]``."""
    size = int(rng.integers(1, max_support + 1))
    start = int(rng.integers(-2, 3))
    values = rng.uniform(-vmax, vmax, size)
    return LatticePotential(tuple(range(start, start + size)), tuple(values))
