r"""Bures-Wasserstein geometry on symmetric positive definite matrices.

The metric at :math:`X` is :math:`g(Z_1, Z_2) = \tfrac12 \mathrm{Tr}(Z_1^T \mathcal{L}_X^{-1}(Z_2))`
where :math:`\mathcal{L}_X(Y) = XY + YX`.  Its Hamiltonian is
:math:`H(X, P) = \mathrm{Tr}(P^2 X)` and the canonical equations

.. math::

    \dot X = \mathcal{L}_X(P), \qquad \dot P = -P^2

are solved in closed form by

.. math::

    X(t) = (1-t)^2 A + t^2 B + t(1-t)\left((AB)^{1/2} + (BA)^{1/2}\right),
    \qquad P(t) = (tP_0 + I)^{-1} P_0,\quad P_0 = A^{-1}\#B - I.
"""
import numpy as np
from scipy.integrate import simpson

from .errors import SingularityError
from .matcalc import (
    as_matrix,
    geometric_mean,
    lyapunov_solve,
    spd_inverse,
    spd_spectrum,
    sqrt_product,
    sym,
)


def as_spd(m, name="x"):
    """Validate an SPD point and return it as a float array."""
    m = as_matrix(m, name)
    spd_spectrum(m, name)
    return m


def lyapunov_apply(x, p):
    """``x p + p x``.  Broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return x @ p + p @ x


def bw_inner(x, z1, z2):
    """Bures-Wasserstein inner product ``½ Tr(z1^T L_x^{-1}(z2))``."""
    return 0.5 * float(np.sum(np.asarray(z1, dtype=float) * lyapunov_solve(x, z2)))


def bw_hamiltonian(x, p):
    """``Tr(p² x)``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(np.sum((p @ p) * x.T))


def bw_ode_rhs(x, p):
    """Right-hand side ``(L_x(p), -p²)`` of the canonical equations.

    Accepts single matrices or stacks of shape ``(..., d, d)``.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return x @ p + p @ x, -(p @ p)


def bw_geodesic(a, b, t):
    """Point at time ``t`` on the closed-form geodesic from ``a`` to ``b``."""
    a = as_spd(a, "a")
    b = as_spd(b, "b")
    t = float(t)
    if t == 0.0:
        return sym(a)
    if t == 1.0:
        return sym(b)
    cross = sqrt_product(a, b, "left") + sqrt_product(a, b, "right")
    return sym((1 - t) ** 2 * a + t ** 2 * b + t * (1 - t) * cross)


def bw_initial_momentum(a, b):
    """``P_0 = a^{-1} # b - I``, the momentum that shoots ``a`` onto ``b`` in unit time."""
    a = as_spd(a, "a")
    b = as_spd(b, "b")
    return sym(geometric_mean(spd_inverse(a), b) - np.eye(a.shape[0]))


def bw_momentum(a, b, t):
    """Momentum ``P(t) = (t P_0 + I)^{-1} P_0`` along the closed-form geodesic."""
    p0 = bw_initial_momentum(a, b)
    m = t * p0 + np.eye(p0.shape[0])
    s = np.linalg.svd(m, compute_uv=False)
    if not s[-1] > 1e-12 * max(s[0], 1.0):
        raise SingularityError(f"t*P0 + I is singular at t={t}")
    return sym(np.linalg.solve(m, p0))


def bw_speed(x, p):
    """``g_x(xdot, xdot)`` with ``xdot = L_x(p)``."""
    xdot = lyapunov_apply(x, p)
    return bw_inner(x, xdot, xdot)


def bw_action(a, b, samples=101):
    """Action of the closed-form geodesic by composite Simpson quadrature.

    Equals the squared Bures-Wasserstein distance for a constant-speed path.
    """
    ts = np.linspace(0.0, 1.0, samples)
    speeds = [bw_speed(bw_geodesic(a, b, t), bw_momentum(a, b, t)) for t in ts]
    return float(simpson(speeds, x=ts))


def bw_distance_squared(a, b):
    """``Tr a + Tr b - 2 Tr (a^½ b a^½)^½`` (the Gaussian optimal transport cost)."""
    a = as_spd(a, "a")
    b = as_spd(b, "b")
    cross = np.trace(sqrt_product(a, b, "left"))
    return float(np.trace(a) + np.trace(b) - 2.0 * cross)
