"""Dense matrix primitives and spectral functional calculus.

Everything here works on small dense real matrices.  Decompositions follow a
fixed sign convention so that coordinates built from them are reproducible:
in every column of the left factor the entry of largest absolute value is
nonnegative (ties go to the lowest row index) and the right factor is flipped
to match.

Most functions accept a single ``(d, d)`` matrix.  :func:`power_kernel` also
broadcasts over leading axes, which the geodesic solvers rely on.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalFailure, RankError

#: Relative eigenvalue gap below which divided differences use the derivative.
DEGENERACY_TOL = 1e-10
#: Reject matrices with sigma_min <= RANK_TOL * sigma_max.
RANK_TOL = 1e-12
#: Relative tolerance for symmetry checks.
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SvdTriple:
    """Singular value decomposition ``x = u @ diag(sigma) @ v.T``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition ``s = q @ diag(lam) @ q.T`` with ``lam`` nonincreasing."""

    q: np.ndarray
    lam: np.ndarray

    def reconstruct(self):
        return (self.q * self.lam) @ self.q.T


def as_matrix(x, name="x"):
    """Return ``x`` as a finite square float array or raise :class:`DomainError`."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] < 1:
        raise DomainError(f"{name} must be a nonempty square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


def sym(x):
    """Symmetric part ``(x + x^T) / 2`` (acts on the last two axes)."""
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def is_symmetric(x, tol=SYMMETRY_TOL):
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(x - x.T) <= tol * max(1.0, np.linalg.norm(x))


def require_symmetric(x, name="x"):
    x = as_matrix(x, name)
    if not is_symmetric(x):
        raise DomainError(f"{name} is not symmetric (so not in the SPD domain)")
    return x


def _sign_fix(u, v):
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def svd(x):
    """Singular value decomposition with the module's sign convention.

    Returns
    -------
    SvdTriple
        ``sigma`` is nonincreasing; ``u`` and ``v`` are orthogonal.
    """
    x = as_matrix(x)
    try:
        u, s, vt = np.linalg.svd(x)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    u, v = _sign_fix(u, vt.T)
    return SvdTriple(u, s, v)


def svd_full_rank(x, name="x"):
    """:func:`svd`, raising :class:`RankError` when ``x`` is not invertible."""
    triple = svd(x)
    if not triple.sigma[-1] > RANK_TOL * triple.sigma[0]:
        raise RankError(f"{name} is rank deficient (sigma_min/sigma_max = "
                        f"{triple.sigma[-1] / max(triple.sigma[0], 1e-300):.3e})")
    return triple


def spectrum(s, name="s"):
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing."""
    s = require_symmetric(s, name)
    try:
        lam, q = np.linalg.eigh(sym(s))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    lam, q = lam[::-1], q[:, ::-1]
    q, _ = _sign_fix(q, q)
    return Spectrum(q, lam)


def spd_spectrum(s, name="s"):
    """:func:`spectrum` for a matrix that must be symmetric positive definite."""
    eig = spectrum(s, name)
    if not eig.lam[-1] > RANK_TOL * eig.lam[0] or eig.lam[0] <= 0:
        raise DomainError(f"{name} is not positive definite (min eigenvalue {eig.lam[-1]:.3e})")
    return eig


def power_kernel(lam, alpha, tol=DEGENERACY_TOL):
    r"""Divided-difference matrix of :math:`f(x) = x^\alpha`.

    Entry ``(i, j)`` is :math:`(\lambda_i^\alpha - \lambda_j^\alpha)/(\lambda_i - \lambda_j)`
    when the pair is separated by more than ``tol * max(lam)``, and
    :math:`\alpha \bar\lambda^{\alpha-1}` (``lam_bar`` the pair mean) otherwise.

    ``lam`` has shape ``(..., d)`` and ``alpha`` broadcasts against ``lam[..., 0]``;
    the result has shape ``(..., d, d)``.  The quotient is evaluated as
    ``lam_j**(alpha-1) * expm1(alpha*u) / expm1(u)`` with ``u = log(lam_i/lam_j)``,
    which avoids cancellation for close eigenvalues.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise DomainError("power_kernel requires strictly positive eigenvalues")
    alpha = np.asarray(alpha, dtype=float)[..., None, None]
    li = lam[..., :, None]
    lj = lam[..., None, :]
    scale = lam.max(axis=-1)[..., None, None]
    separated = np.abs(li - lj) > tol * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.log(li) - np.log(lj)
        quotient = lj ** (alpha - 1.0) * np.expm1(alpha * u) / np.expm1(u)
    limit = alpha * (0.5 * (li + lj)) ** (alpha - 1.0)
    kernel = np.where(separated, quotient, limit)
    return sym(kernel)


def divided_difference(lam, f, fprime, tol=DEGENERACY_TOL):
    """First divided-difference matrix of a scalar function ``f`` on ``lam``.

    ``fprime`` supplies the exact diagonal (and near-degenerate) values.
    """
    lam = np.asarray(lam, dtype=float)
    li = lam[:, None]
    lj = lam[None, :]
    scale = np.max(np.abs(lam)) if lam.size else 1.0
    separated = np.abs(li - lj) > tol * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        fl = np.asarray(f(lam), dtype=float)
        quotient = (fl[:, None] - fl[None, :]) / (li - lj)
        limit = np.asarray(fprime(0.5 * (li + lj)), dtype=float)
    kernel = np.where(separated, quotient, limit)
    if not np.all(np.isfinite(kernel)):
        raise DomainError("divided difference is not finite on this spectrum")
    return sym(kernel)


def _apply(f, lam):
    with np.errstate(all="ignore"):
        vals = np.asarray(f(lam), dtype=float)
    if vals.shape != lam.shape or not np.all(np.isfinite(vals)):
        raise DomainError("function is undefined at some eigenvalue")
    return vals


def func_calc(s, f):
    """Apply a scalar function to a symmetric matrix through its eigenvalues."""
    eig = spectrum(s)
    vals = _apply(f, eig.lam)
    return sym((eig.q * vals) @ eig.q.T)


def frac_power_spd(s, alpha):
    """``s ** alpha`` for symmetric positive definite ``s``."""
    eig = spd_spectrum(s)
    return sym((eig.q * eig.lam ** alpha) @ eig.q.T)


def func_calc_differential(s, z, f, fprime):
    """Fréchet derivative of ``S -> f(S)`` at ``s`` in the direction ``z``.

    Computed as ``Q (f[1](lam) * (Q^T z Q)) Q^T`` where ``f[1]`` is the
    divided-difference matrix of ``f``.
    """
    eig = spectrum(s)
    z = require_symmetric(z, "z")
    kernel = divided_difference(eig.lam, f, fprime)
    q = eig.q
    return sym(q @ (kernel * (q.T @ z @ q)) @ q.T)


def gram_power_differential(x, z, alpha, side="left"):
    """Derivative of ``(x x^T)^alpha`` (``side='left'``) or ``(x^T x)^alpha``
    (``side='right'``) at full-rank ``x`` in the direction ``z``."""
    triple = svd_full_rank(x)
    z = as_matrix(z, "z")
    u, s, v = triple.u, triple.sigma, triple.v
    kernel = power_kernel(s ** 2, alpha)
    zt = u.T @ z @ v
    if side == "left":
        inner = s[:, None] * zt.T + zt * s[None, :]
        return sym(u @ (kernel * inner) @ u.T)
    if side == "right":
        inner = s[:, None] * zt + zt.T * s[None, :]
        return sym(v @ (kernel * inner) @ v.T)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def lyapunov_solve(x, z):
    """Solve ``P x + x P = z`` for SPD ``x``.

    Works in the eigenbasis of ``x``: the transformed right-hand side is
    divided entrywise by ``lam_i + lam_j``.
    """
    eig = spd_spectrum(x, "x")
    z = as_matrix(z, "z")
    q, lam = eig.q, eig.lam
    p = q @ ((q.T @ z @ q) / (lam[:, None] + lam[None, :])) @ q.T
    return sym(p) if is_symmetric(z) else p


def spd_inverse(a):
    """Inverse of an SPD matrix, symmetric by construction."""
    return frac_power_spd(a, -1.0)


def geometric_mean(a, b):
    """Matrix geometric mean ``a # b = a^½ (a^-½ b a^-½)^½ a^½``."""
    eig = spd_spectrum(a, "a")
    spd_spectrum(b, "b")
    q, lam = eig.q, eig.lam
    a_half = (q * np.sqrt(lam)) @ q.T
    a_mhalf = (q / np.sqrt(lam)) @ q.T
    middle = frac_power_spd(sym(a_mhalf @ b @ a_mhalf), 0.5)
    return sym(a_half @ middle @ a_half)


def sqrt_product(a, b, side="left"):
    """``(ab)^½`` via ``a (a^-1 # b)`` (left) or ``(ba)^½`` via ``(a^-1 # b) a`` (right)."""
    g = geometric_mean(spd_inverse(a), b)
    a = np.asarray(a, dtype=float)
    if side == "left":
        return a @ g
    if side == "right":
        return g @ a
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def polar_orthogonal(m):
    """Nearest orthogonal matrix to ``m`` in Frobenius norm."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    return u @ vt
