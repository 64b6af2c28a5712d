r"""Downstairs geometry of the deep linear network on invertible matrices.

For depth :math:`N` the metric operator is

.. math::

    \mathcal{A}_{N,X}(Z) = \sum_{p=1}^N (XX^T)^{\frac{N-p}{N}} Z (X^TX)^{\frac{p-1}{N}},

the metric is :math:`g^N(Z_1, Z_2) = \mathrm{Tr}(Z_1^T \mathcal{A}_{N,X}^{-1}(Z_2))`
and the Hamiltonian is :math:`H = \tfrac12 \mathrm{Tr}(P^T \mathcal{A}_{N,X}(P))`.

With :math:`X = U\Sigma V^T` and :math:`\tilde Z = U^T Z V` the operator is
diagonal: :math:`(\mathcal{A}Z)\tilde{} = s \circ \tilde Z` with
:math:`s_{ij} = \sum_p \sigma_i^{2(N-p)/N}\sigma_j^{2(p-1)/N}`.  The solvers use
this form on stacks of matrices; :func:`a_operator` keeps the direct sum as an
independent route.
"""
import numpy as np

from .errors import DomainError, RankError
from .matcalc import DEGENERACY_TOL, RANK_TOL, as_matrix, svd_full_rank


def _check_depth(n):
    if int(n) != n or n < 1:
        raise DomainError(f"depth must be a positive integer, got {n!r}")
    return int(n)


def _svd_stack(x):
    """Raw SVD of a stack with a rank check; no sign convention needed downstream."""
    u, s, vt = np.linalg.svd(x)
    if np.any(~(s[..., -1] > RANK_TOL * s[..., 0])):
        raise RankError("matrix left the full-rank set")
    return u, s, vt


def _kernels(lam, alphas):
    """Divided differences of ``x**alpha`` at ``lam`` for several exponents at once.

    Lean variant of :func:`~dlngeo.matcalc.power_kernel` for the hot path: no
    validation, result shape ``(..., len(alphas), d, d)``.
    """
    a = alphas[:, None, None]
    loglam = np.log(lam)
    li = lam[..., None, :, None]
    lj = lam[..., None, None, :]
    u = loglam[..., None, :, None] - loglam[..., None, None, :]
    separated = np.abs(li - lj) > DEGENERACY_TOL * lam.max(axis=-1)[..., None, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = np.exp((a - 1.0) * loglam[..., None, None, :]) * np.expm1(a * u) / np.expm1(u)
    limit = a * (0.5 * (li + lj)) ** (a - 1.0)
    return np.where(separated, quotient, limit)


def singular_kernel(sigma, n):
    r"""Multiplier :math:`s_{ij}` of the metric operator in singular coordinates.

    :math:`s_{ij} = (\sigma_i^2-\sigma_j^2)/(\sigma_i^{2/N}-\sigma_j^{2/N})`, i.e. the
    reciprocal of the divided difference of :math:`x^{1/N}` at :math:`\Sigma^2`;
    coincident pairs take the limit :math:`N\sigma_i^{2(N-1)/N}`.  Evaluated
    without cancellation.  Broadcasts over leading axes of ``sigma``.
    """
    n = _check_depth(n)
    sigma = np.asarray(sigma, dtype=float)
    if n == 1:
        return np.ones(sigma.shape + sigma.shape[-1:])
    return 1.0 / _kernels(sigma ** 2, np.array([1.0 / n]))[..., 0, :, :]


def singular_kernel_sum(sigma, n):
    """The N-term sum for :math:`s_{ij}` with no shortcut (reference route)."""
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros((sigma.size, sigma.size))
    for p in range(1, n + 1):
        out += np.outer(sigma ** (2 * (n - p) / n), sigma ** (2 * (p - 1) / n))
    return out


def a_operator(n, x, z):
    """Apply the metric operator by summing the N matrix-power products."""
    n = _check_depth(n)
    triple = svd_full_rank(x)
    z = as_matrix(z, "z")
    u, s, v = triple.u, triple.sigma, triple.v
    out = np.zeros_like(z)
    for p in range(1, n + 1):
        left = (u * s ** (2 * (n - p) / n)) @ u.T
        right = (v * s ** (2 * (p - 1) / n)) @ v.T
        out += left @ z @ right
    return out


def a_operator_inverse(n, x, z):
    """Invert the metric operator by entrywise division in singular coordinates."""
    n = _check_depth(n)
    triple = svd_full_rank(x)
    z = as_matrix(z, "z")
    u, v = triple.u, triple.v
    return u @ ((u.T @ z @ v) / singular_kernel(triple.sigma, n)) @ v.T


def _a_apply_stack(n, x, z):
    u, s, vt = _svd_stack(x)
    ut = np.swapaxes(u, -1, -2)
    v = np.swapaxes(vt, -1, -2)
    return u @ (singular_kernel(s, n) * (ut @ z @ v)) @ vt


def _a_inverse_stack(n, x, z):
    u, s, vt = _svd_stack(x)
    ut = np.swapaxes(u, -1, -2)
    v = np.swapaxes(vt, -1, -2)
    return u @ ((ut @ z @ v) / singular_kernel(s, n)) @ vt


def gn_inner(n, x, z1, z2):
    """Metric ``g^N_x(z1, z2) = Tr(z1^T A^{-1}(z2))``."""
    return float(np.sum(np.asarray(z1, dtype=float) * a_operator_inverse(n, x, z2)))


def gn_inner_scaled(n, x, z1, z2):
    """Metric built from ``A / N`` instead of ``A``; has a finite large-depth limit."""
    return n * gn_inner(n, x, z1, z2)


def dln_hamiltonian(n, x, p):
    """``½ Tr(p^T A(p))``."""
    p = as_matrix(p, "p")
    return 0.5 * float(np.sum(p * a_operator(n, x, p)))


def m_matrices(n, p_index, sigma, p_tilde):
    """The pair ``(P~ S^{2(p-1)/N} P~^T, P~^T S^{2(N-p)/N} P~)`` for layer ``p_index``."""
    n = _check_depth(n)
    if not 1 <= p_index <= n:
        raise DomainError(f"p_index must lie in 1..{n}, got {p_index}")
    sigma = np.asarray(sigma, dtype=float)
    pt = np.asarray(p_tilde, dtype=float)
    m1 = (pt * sigma ** (2 * (p_index - 1) / n)) @ pt.T
    m2 = pt.T @ (sigma[:, None] ** (2 * (n - p_index) / n) * pt)
    return 0.5 * (m1 + m1.T), 0.5 * (m2 + m2.T)


def _dln_rhs_stack(n, x, p):
    u, s, vt = _svd_stack(x)
    ut = np.swapaxes(u, -1, -2)
    v = np.swapaxes(vt, -1, -2)
    pt = ut @ p @ v
    s2 = s ** 2
    # Exponents j/N, j = 0..N-1, cover both (N-p)/N and (p-1)/N.
    expo = np.arange(n, dtype=float) / n
    kern = _kernels(s2, expo)                                  # (..., N, d, d)
    skern = 1.0 / kern[..., 1, :, :] if n > 1 else np.ones_like(pt)
    xdot = u @ (skern * pt) @ vt
    powers = s2[..., None, :] ** expo[:, None]                 # (..., N, d)
    ptj = pt[..., None, :, :]
    m1 = (ptj * powers[..., :, None, :]) @ np.swapaxes(ptj, -1, -2)
    m2 = np.swapaxes(ptj, -1, -2) @ (powers[..., :, :, None] * ptj)
    # Layer p pairs K_{(N-p)/N} with M1 at exponent index p-1, and K_{(p-1)/N}
    # with M2 at index N-p; summing over p reverses one factor of each product.
    g = np.sum(kern[..., ::-1, :, :] * m1, axis=-3) * s[..., None, :] \
        + s[..., :, None] * np.sum(kern * m2[..., ::-1, :, :], axis=-3)
    return xdot, -(u @ g @ vt)


def dln_ode_rhs(n, x, p):
    """Canonical equations of the DLN geodesic flow.

    Returns ``(xdot, pdot)`` with ``xdot = A_{N,x}(p)`` and ``pdot = -dH/dx``
    assembled in singular coordinates as a sum over layers of
    ``[K_{(N-p)/N} * M1] S + S [K_{(p-1)/N} * M2]`` rotated back by ``U, V^T``.
    Accepts stacks of shape ``(..., d, d)``.
    """
    n = _check_depth(n)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return _dln_rhs_stack(n, x, p)


class DlnFlow:
    """Depth-``n`` geodesic flow, callable as ``(x, p) -> (xdot, pdot)``.

    Integrators recognise this type and use the compiled RK4 kernel.
    """

    def __init__(self, n):
        self.depth = _check_depth(n)

    def __call__(self, x, p):
        return _dln_rhs_stack(self.depth, x, p)

    def __repr__(self):
        return f"DlnFlow({self.depth})"


def dln_flow(n):
    """Bind the depth so the result can be handed to an integrator."""
    return DlnFlow(n)
