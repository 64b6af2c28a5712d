r"""The balanced manifold of weight tuples and its projection to matrices.

A weight tuple is stored as an array ``w`` of shape ``(n, d, d)`` ordered from
the output layer: ``w[0] = W_N`` and ``w[-1] = W_1``.  The product map is
:math:`\phi(W) = W_N \cdots W_1`.

A tuple is balanced when :math:`W_{p+1}^T W_{p+1} = W_p W_p^T` for every
``p``.  Balanced tuples are written :math:`W_p = Q_p \Lambda Q_{p-1}^T` with
orthogonal :math:`Q_N, \dots, Q_0`; :class:`BalancedParams` stores ``lam`` (the
per-layer singular values) and ``q`` with ``q[0] = Q_N`` and ``q[-1] = Q_0``,
so layer ``w[i]`` is ``q[i] @ diag(lam) @ q[i+1].T``.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dln import _check_depth
from .errors import AlignmentError, DegenerateSpectrum, DomainError, NotBalanced, NumericalFailure
from .matcalc import as_matrix, polar_orthogonal, svd_full_rank

#: Relative gap under which two per-layer singular values count as equal.
SPECTRAL_GAP_TOL = 1e-8
#: Alignment tolerance for closed-form endpoints.
ALIGNMENT_TOL = 1e-8
#: Largest balance residual accepted by :func:`factor_balanced`.
BALANCE_TOL = 1e-8


def as_weights(w):
    """Return ``w`` as a finite float array of shape ``(n, d, d)``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 3 or w.shape[1] != w.shape[2] or w.shape[0] < 1 or w.shape[1] < 1:
        raise DomainError(f"weights must have shape (n, d, d), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise DomainError("weights have non-finite entries")
    return w


@dataclass(frozen=True)
class BalancedParams:
    """Coordinates ``(lam, Q_N, ..., Q_0)`` of a balanced tuple."""

    lam: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if lam.ndim != 1 or q.ndim != 3 or q.shape[0] < 2 or q.shape[1:] != (lam.size, lam.size):
            raise DomainError(f"incompatible shapes lam {lam.shape}, q {q.shape}")
        if np.any(~(lam > 0)):
            raise DomainError("lam must be strictly positive")
        d = lam.size
        dev = np.abs(np.swapaxes(q, -1, -2) @ q - np.eye(d)).max()
        if dev > 1e-12 * d * 10:
            raise DomainError(f"q factors are not orthogonal (deviation {dev:.2e})")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "q", q)

    @property
    def depth(self):
        return self.q.shape[0] - 1

    @property
    def dim(self):
        return self.lam.size


def phi(w):
    """Product ``W_N @ ... @ W_1``."""
    w = as_weights(w)
    out = w[0]
    for layer in w[1:]:
        out = out @ layer
    return out


def xi(params):
    """Weight tuple with layers ``Q_p diag(lam) Q_{p-1}^T``."""
    q = params.q
    return (q[:-1] * params.lam[None, None, :]) @ np.swapaxes(q[1:], -1, -2)


def balance_residual(w):
    """``max_p ||W_{p+1}^T W_{p+1} - W_p W_p^T||_F`` (0 for a single layer)."""
    w = as_weights(w)
    if w.shape[0] == 1:
        return 0.0
    upper = np.swapaxes(w[:-1], -1, -2) @ w[:-1]
    lower = w[1:] @ np.swapaxes(w[1:], -1, -2)
    return float(np.linalg.norm(upper - lower, axis=(-2, -1)).max())


def _min_gap(lam):
    lam = np.sort(lam)
    if lam.size < 2:
        return np.inf
    return float(np.min(np.diff(lam)))


def _require_distinct(lam, what):
    if _min_gap(lam) <= SPECTRAL_GAP_TOL * lam.max():
        raise DegenerateSpectrum(f"{what}: repeated singular values {np.array2string(lam)}")


def factor_balanced(w, allow_degenerate=False):
    """Recover balanced coordinates of ``w``.

    Factors ``W_1`` by SVD (module sign convention), then propagates
    ``Q_p = W_p Q_{p-1} diag(lam)^{-1}`` upward, re-orthogonalizing each factor.

    Parameters
    ----------
    w : array_like, shape (n, d, d)
    allow_degenerate : bool
        Repeated singular values make the ``Q`` factors non-unique.  By default
        this raises; with ``True`` the SVD's choice in the degenerate block is
        kept.

    Raises
    ------
    NotBalanced
        ``balance_residual(w)`` exceeds ``1e-8`` (relative to the layer scale).
    DegenerateSpectrum
        Repeated singular values and ``allow_degenerate`` is false.
    RankError
        A layer is singular.
    """
    w = as_weights(w)
    scale = max(1.0, float(np.max(np.linalg.norm(w, ord=2, axis=(-2, -1)))) ** 2)
    res = balance_residual(w)
    if res > BALANCE_TOL * scale:
        raise NotBalanced(f"balance residual {res:.3e} exceeds {BALANCE_TOL:g}")
    base = svd_full_rank(w[-1], "W_1")
    lam = base.sigma
    if not allow_degenerate:
        _require_distinct(lam, "factor_balanced")
    qs = [base.v, base.u]
    for layer in w[-2::-1]:
        qs.append(polar_orthogonal((layer @ qs[-1]) / lam[None, :]))
    params = BalancedParams(lam, np.stack(qs[::-1]))
    err = np.linalg.norm(xi(params) - w) / max(np.linalg.norm(w), 1.0)
    if err > 1e-8:
        raise NumericalFailure(f"factorization does not reconstruct the tuple (error {err:.2e})")
    return params


@dataclass(frozen=True)
class LineReport:
    """Straight-line balancedness conditions for ``(1-t) A + t B``.

    ``cond1[j]`` and ``cond2[j]`` are the residuals for ``p = j + 1``.
    """

    cond1: np.ndarray
    cond2: np.ndarray
    tol: float = 1e-10

    @property
    def cond1_holds(self):
        return bool(np.all(self.cond1 <= self.tol))

    @property
    def cond2_holds(self):
        return bool(np.all(self.cond2 <= self.tol))


def line_balance_conditions(pa, pb, tol=1e-10):
    """Residuals of the two straight-line conditions between ``xi(pa)`` and ``xi(pb)``.

    With ``R_p = Qb_p^T Qa_p`` and ``M = diag(lam_b)^{-1} R_p diag(lam_a)``,
    condition 1 is ``R_{p+1} = R_{p-1}`` and condition 2 asks that
    ``S = (R_{p+1} - R_{p-1}) M^T`` be skew; residuals are
    ``||R_{p+1} - R_{p-1}||_F`` and ``||S + S^T||_F`` for ``p = 1..N-1``.
    """
    if pa.q.shape != pb.q.shape:
        raise DomainError("endpoint parameters have different depth or dimension")
    n = pa.depth
    # r[k] = R_{n-k}, matching the storage order of q.
    r = np.swapaxes(pb.q, -1, -2) @ pa.q
    c1, c2 = [], []
    for p in range(1, n):
        diff = r[n - p - 1] - r[n - p + 1]
        m = (r[n - p] * pa.lam[None, :]) / pb.lam[:, None]
        s = diff @ m.T
        c1.append(np.linalg.norm(diff))
        c2.append(np.linalg.norm(s + s.T))
    return LineReport(np.array(c1), np.array(c2), tol)


@dataclass(frozen=True)
class HorizontalBasis:
    """Orthonormal horizontal directions at a balanced point.

    ``elements[j]`` is a weight tuple; ``labels[j]`` is ``("l", k)``,
    ``("u0", k, l)`` or ``("uN", k, l)`` with zero-based ``k < l``.
    """

    elements: np.ndarray
    labels: list
    base: BalancedParams = field(repr=False)

    def __len__(self):
        return self.elements.shape[0]

    def gram(self):
        flat = self.elements.reshape(len(self), -1)
        return flat @ flat.T


def _u_scale(lk, ll, n):
    # sqrt((lk^2 - ll^2) / (lk^2n - ll^2n)) with the quotient expanded as a
    # positive geometric sum, so close pairs do not cancel.
    j = np.arange(n)
    return 1.0 / np.sqrt(np.sum(lk ** (2 * j) * ll ** (2 * (n - 1 - j))))


def horizontal_basis(params):
    """The ``d**2`` rank-one horizontal directions at ``xi(params)``.

    Layer ``s`` of the three families is ``q_{s,k} q_{s-1,k}^T / sqrt(N)``,
    ``c lam_k^{s-1} lam_l^{N-s} q_{s,l} q_{s-1,k}^T`` and
    ``c lam_k^{N-s} lam_l^{s-1} q_{s,k} q_{s-1,l}^T`` with
    ``c = sqrt((lam_k^2 - lam_l^2) / (lam_k^{2N} - lam_l^{2N}))``.

    Raises
    ------
    DegenerateSpectrum
        Two ``lam`` values closer than ``1e-8 * max(lam)``.
    """
    lam, q, n, d = params.lam, params.q, params.depth, params.dim
    _require_distinct(lam, "horizontal_basis")
    s = n - np.arange(n)              # layer number of w[i]
    top, bottom = q[:-1], q[1:]       # Q_s and Q_{s-1} for each layer
    elements, labels = [], []
    for k in range(d):
        elements.append(np.einsum("si,sj->sij", top[:, :, k], bottom[:, :, k]) / np.sqrt(n))
        labels.append(("l", k))
    for k in range(d):
        for l in range(k + 1, d):
            c = _u_scale(lam[k], lam[l], n)
            w0 = c * lam[k] ** (s - 1) * lam[l] ** (n - s)
            elements.append(w0[:, None, None] * np.einsum("si,sj->sij", top[:, :, l], bottom[:, :, k]))
            labels.append(("u0", k, l))
            wn = c * lam[k] ** (n - s) * lam[l] ** (s - 1)
            elements.append(wn[:, None, None] * np.einsum("si,sj->sij", top[:, :, k], bottom[:, :, l]))
            labels.append(("uN", k, l))
    return HorizontalBasis(np.stack(elements), labels, params)


def horizontality_residual(params, z):
    """Least-squares test of ``z`` against the system ``Q_p alpha Q_{p-1}^T = Z_p``.

    Returns
    -------
    alpha : ndarray
        Average over layers of ``Q_p^T Z_p Q_{p-1}``.
    residual : float
        ``max_p ||Q_p alpha Q_{p-1}^T - Z_p||_F``.
    """
    z = as_weights(z)
    q = params.q
    if z.shape != (params.depth, params.dim, params.dim):
        raise DomainError(f"z has shape {z.shape}, expected {(params.depth, params.dim, params.dim)}")
    coords = np.swapaxes(q[:-1], -1, -2) @ z @ q[1:]
    alpha = coords.mean(axis=0)
    recon = q[:-1] @ alpha @ np.swapaxes(q[1:], -1, -2)
    return alpha, float(np.linalg.norm(recon - z, axis=(-2, -1)).max())


def horizontal_projection(params, z):
    """Orthogonal projection of ``z`` onto the span of :func:`horizontal_basis`.

    Returns
    -------
    coeffs : ndarray, shape (d**2,)
    projection : ndarray, shape (n, d, d)
    residual : float
        Frobenius norm of ``z - projection``; zero exactly for horizontal ``z``.
    """
    z = as_weights(z)
    basis = horizontal_basis(params)
    flat = basis.elements.reshape(len(basis), -1)
    coeffs = flat @ z.ravel()
    proj = (coeffs @ flat).reshape(z.shape)
    return coeffs, proj, float(np.linalg.norm(z - proj))


def vertical_direction(w, skews):
    """Tangent direction along which ``phi`` is constant to first order.

    ``skews[j]`` (skew-symmetric) acts between ``w[j]`` and ``w[j+1]``:
    layer ``j`` gains ``w[j] @ A`` and layer ``j+1`` gains ``-A @ w[j+1]``.
    """
    w = as_weights(w)
    skews = np.asarray(skews, dtype=float)
    if skews.shape != (w.shape[0] - 1,) + w.shape[1:]:
        raise DomainError(f"skews must have shape {(w.shape[0] - 1,) + w.shape[1:]}")
    z = np.zeros_like(w)
    for j, a in enumerate(skews):
        z[j] += w[j] @ a
        z[j + 1] -= a @ w[j + 1]
    return z


def differential_phi(w, z):
    """``sum_p W_N ... W_{p+1} Z_p W_{p-1} ... W_1``."""
    w = as_weights(w)
    z = as_weights(z)
    if z.shape != w.shape:
        raise DomainError("w and z must have the same shape")
    n, d = w.shape[0], w.shape[1]
    prefix = [np.eye(d)]
    for layer in w[:-1]:
        prefix.append(prefix[-1] @ layer)
    out = np.zeros((d, d))
    suffix = np.eye(d)
    for i in range(n - 1, -1, -1):
        out += prefix[i] @ z[i] @ suffix
        suffix = w[i] @ suffix
    return out


class Lift(NamedTuple):
    """Balanced lifts of two aligned endpoints and the rotation joining them."""

    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    params_a: BalancedParams
    params_b: BalancedParams


def alignment_defect(a, b):
    """``||U^T Ut - V^T Vt||_F`` for SVDs ``a = U S V^T`` and ``b = Ut St Vt^T``.

    This equals zero exactly when ``a`` and ``b`` share their orthogonal polar
    factor, so it does not depend on which SVDs are chosen.
    """
    ta = svd_full_rank(a, "a")
    tb = svd_full_rank(b, "b")
    return float(np.linalg.norm(ta.u.T @ tb.u - ta.v.T @ tb.v))


def lift_endpoints(a, b, n, tol=ALIGNMENT_TOL):
    """Balanced lifts ``xi(S^{1/N}, U, I, ..., I, V)`` and ``xi(St^{1/N}, Ut, Q, ..., Q, Vt)``.

    Requires an orthogonal ``Q`` with ``Ut = U Q`` and ``Vt = V Q``; ``Q`` is the
    polar projection of ``U^T Ut``.

    Raises
    ------
    AlignmentError
        ``||U^T Ut - V^T Vt||_F > tol``.
    RankError
    """
    n = _check_depth(n)
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DomainError("a and b must have the same shape")
    ta = svd_full_rank(a, "a")
    tb = svd_full_rank(b, "b")
    defect = float(np.linalg.norm(ta.u.T @ tb.u - ta.v.T @ tb.v))
    if defect > tol:
        raise AlignmentError(f"endpoints are not aligned: ||U^T Ut - V^T Vt||_F = {defect:.3e} > {tol:g}")
    q = polar_orthogonal(ta.u.T @ tb.u)
    d = a.shape[0]
    eye = np.eye(d)
    qa = np.stack([ta.u] + [eye] * (n - 1) + [ta.v])
    qb = np.stack([tb.u] + [q] * (n - 1) + [tb.v])
    pa = BalancedParams(ta.sigma ** (1.0 / n), qa)
    pb = BalancedParams(tb.sigma ** (1.0 / n), qb)
    return Lift(xi(pa), xi(pb), q, pa, pb)


def lifted_line(lift, t):
    """Point ``(1-t) A + t B`` of the upstairs straight line."""
    return (1.0 - t) * lift.a + t * lift.b


def dln_geodesic_closed(n, a, b, t, lift=None):
    r"""Closed-form curve between aligned endpoints.

    .. math::

        X(t) = \big((1-t)U\Sigma^{1/N} + t\tilde U\tilde\Sigma^{1/N}Q^T\big)
               \big((1-t)\Sigma^{1/N} + tQ\tilde\Sigma^{1/N}Q^T\big)^{N-2}
               \big((1-t)\Sigma^{1/N}V^T + tQ\tilde\Sigma^{1/N}\tilde V^T\big)

    This is ``phi`` of the lifted straight line.  Endpoints are returned
    exactly.  Pass a precomputed ``lift`` to avoid repeating the SVDs.

    Notes
    -----
    The curve is a geodesic when the endpoints share singular vectors
    (``Q`` a signed permutation).  For other aligned pairs the line's
    velocity is not horizontal and the curve differs from the true
    geodesic; see :func:`dlngeo.solver.solve_bvp_shooting`.
    """
    n = _check_depth(n)
    if n < 2:
        raise DomainError("the closed form needs depth >= 2")
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    t = float(t)
    if t == 0.0:
        return a.copy()
    if t == 1.0:
        return b.copy()
    if lift is None:
        lift = lift_endpoints(a, b, n)
    pa, pb, q = lift.params_a, lift.params_b, lift.q
    u, v, la = pa.q[0], pa.q[-1], pa.lam
    ut, vt, lb = pb.q[0], pb.q[-1], pb.lam
    left = (1 - t) * u * la + t * (ut * lb) @ q.T
    middle = (1 - t) * np.diag(la) + t * (q * lb) @ q.T
    right = (1 - t) * la[:, None] * v.T + t * (q * lb) @ vt.T
    return left @ np.linalg.matrix_power(middle, n - 2) @ right


def closed_form_velocity(lift, t):
    """``d/dt phi(line(t)) = Dphi_{line(t)}(B - A)``."""
    return differential_phi(lifted_line(lift, t), lift.b - lift.a)


def closed_form_trajectory(n, a, b, samples=101):
    """Sampled closed-form curve as a :class:`~dlngeo.solver.Trajectory`.

    Momenta are recovered from the exact velocity as ``P = A^{-1}(Xdot)``, so
    :func:`~dlngeo.solver.speed_profile` applies unchanged.
    """
    from .dln import _a_inverse_stack
    from .solver import Trajectory

    n = _check_depth(n)
    lift = lift_endpoints(a, b, n)
    t = np.linspace(0.0, 1.0, int(samples))
    x = np.stack([dln_geodesic_closed(n, a, b, tk, lift) for tk in t])
    xdot = np.stack([closed_form_velocity(lift, tk) for tk in t])
    p = _a_inverse_stack(n, x, xdot)
    return Trajectory(t, x, p, n, "dln", {"method": "closed"})


def _diag_pd(m, name):
    m = as_matrix(m, name)
    diag = np.diag(m).copy()
    if np.any(m - np.diag(diag)) or np.any(~(diag > 0)):
        raise DomainError(f"{name} must be diagonal with positive entries")
    return diag


def diagonal_geodesic(n, a, b, t):
    """``((1-t) a^{1/N} + t b^{1/N})^N`` for diagonal positive ``a``, ``b``."""
    n = _check_depth(n)
    da, db = _diag_pd(a, "a"), _diag_pd(b, "b")
    return np.diag(((1 - t) * da ** (1.0 / n) + t * db ** (1.0 / n)) ** n)


def diagonal_geodesic_binomial(n, a, b, t):
    """Binomial expansion ``sum_p C(N,p) (1-t)^p t^{N-p} a^{p/N} b^{(N-p)/N}``."""
    from math import comb

    n = _check_depth(n)
    da, db = _diag_pd(a, "a"), _diag_pd(b, "b")
    out = np.zeros_like(da)
    for p in range(n + 1):
        out += comb(n, p) * (1 - t) ** p * t ** (n - p) * da ** (p / n) * db ** ((n - p) / n)
    return np.diag(out)


def infinite_depth_geodesic(a, b, t):
    """Entrywise ``a^{1-t} b^t`` for diagonal positive ``a``, ``b``."""
    da, db = _diag_pd(a, "a"), _diag_pd(b, "b")
    return np.diag(da ** (1 - t) * db ** t)


def trace_metric_norm(p, z):
    """Squared trace-metric norm ``Tr(p^{-1} z p^{-1} z)`` at SPD ``p``."""
    from .bw import as_spd
    from .matcalc import spd_inverse

    pinv = spd_inverse(as_spd(p, "p"))
    z = as_matrix(z, "z")
    return float(np.trace(pinv @ z @ pinv @ z))


def dln_gradient_flow_rhs(w, de):
    """Layer velocities ``-(W_N...W_{p+1})^T dE (W_{p-1}...W_1)^T`` of the training flow."""
    w = as_weights(w)
    de = as_matrix(de, "de")
    n, d = w.shape[0], w.shape[1]
    prefix = [np.eye(d)]
    for layer in w[:-1]:
        prefix.append(prefix[-1] @ layer)
    out = np.empty_like(w)
    suffix = np.eye(d)
    for i in range(n - 1, -1, -1):
        out[i] = -prefix[i].T @ de @ suffix.T
        suffix = w[i] @ suffix
    return out


__all__ = [
    "ALIGNMENT_TOL", "BALANCE_TOL", "SPECTRAL_GAP_TOL",
    "BalancedParams", "HorizontalBasis", "Lift", "LineReport",
    "alignment_defect", "as_weights", "balance_residual", "closed_form_trajectory",
    "closed_form_velocity",
    "differential_phi", "diagonal_geodesic", "diagonal_geodesic_binomial",
    "dln_geodesic_closed", "dln_gradient_flow_rhs", "factor_balanced",
    "horizontal_basis", "horizontal_projection", "horizontality_residual",
    "infinite_depth_geodesic", "lift_endpoints", "lifted_line", "line_balance_conditions",
    "phi", "trace_metric_norm", "vertical_direction", "xi",
]
