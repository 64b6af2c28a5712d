"""Random instances for tests, verification suites and demos.

Every generator takes a :class:`numpy.random.Generator` so runs are
reproducible from a seed.
"""
import numpy as np


def random_orthogonal(rng, d):
    """Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_spd(rng, d, cond=10.0):
    """SPD matrix with eigenvalues log-uniform over a window of ratio ``cond`` around 1."""
    lam = np.exp(rng.uniform(-0.5, 0.5) * np.log(cond) + rng.uniform(-0.5, 0.5, size=d) * np.log(cond))
    q = random_orthogonal(rng, d)
    return 0.5 * ((q * lam) @ q.T + ((q * lam) @ q.T).T)


def random_symmetric(rng, d, scale=1.0):
    m = rng.standard_normal((d, d)) * scale
    return 0.5 * (m + m.T)


def random_skew(rng, d, scale=1.0):
    m = rng.standard_normal((d, d)) * scale
    return 0.5 * (m - m.T)


def random_full_rank(rng, d, spread=0.4):
    """Well-conditioned matrix near ``1.5 I`` (positive determinant)."""
    return 1.5 * np.eye(d) + spread * rng.standard_normal((d, d))


def distinct_spectrum(rng, d, low=0.5, high=3.0, min_gap=0.15):
    """Decreasing positive values with pairwise gaps of at least ``min_gap``."""
    while True:
        s = np.sort(rng.uniform(low, high, size=d))[::-1]
        if d == 1 or np.min(-np.diff(s)) >= min_gap:
            return s


def random_aligned_pair(rng, d, commuting=False):
    """Full-rank ``a = U S V^T`` and ``b = U Q St Q^T V^T``, which share a polar factor.

    With ``commuting=True``, ``Q`` is a signed permutation so ``a`` and ``b``
    share singular vectors.
    """
    u = random_orthogonal(rng, d)
    v = random_orthogonal(rng, d)
    if commuting:
        q = np.eye(d)[rng.permutation(d)] * rng.choice([-1.0, 1.0], size=d)
    else:
        q = random_orthogonal(rng, d)
    s = distinct_spectrum(rng, d)
    st = distinct_spectrum(rng, d)
    a = (u * s) @ v.T
    b = (u @ q * st) @ (v @ q).T
    return a, b


def random_params(rng, d, n, low=0.5, high=2.0):
    """Balanced coordinates with distinct per-layer singular values."""
    from .balanced import BalancedParams

    lam = distinct_spectrum(rng, d, low, high, min_gap=0.1)
    q = np.stack([random_orthogonal(rng, d) for _ in range(n + 1)])
    return BalancedParams(lam, q)
