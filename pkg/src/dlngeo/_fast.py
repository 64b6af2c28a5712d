"""Compiled RK4 integration of the DLN geodesic flow.

Same equations as :func:`dlngeo.dln.dln_ode_rhs`, written as allocation-free
scalar loops so numba can compile them.  The numpy version stays the
reference; the test suite checks the two against each other.
"""
import math

import numpy as np
from numba import njit

from .matcalc import DEGENERACY_TOL, RANK_TOL

OK, RANK_LOST, NOT_FINITE = 0, 1, 2


@njit(cache=True)
def _kernel_entry(li, lj, a, gap):
    if abs(li - lj) > gap:
        u = math.log(li) - math.log(lj)
        return math.exp((a - 1.0) * math.log(lj)) * math.expm1(a * u) / math.expm1(u)
    return a * (0.5 * (li + lj)) ** (a - 1.0)


@njit(cache=True)
def _sandwich(u, m, vt, out):
    """out = u @ m @ vt."""
    d = m.shape[0]
    for i in range(d):
        for k in range(d):
            acc = 0.0
            for r in range(d):
                ur = u[i, r]
                if ur != 0.0:
                    inner = 0.0
                    for c in range(d):
                        inner += m[r, c] * vt[c, k]
                    acc += ur * inner
            out[i, k] = acc


@njit(cache=True)
def _rhs(n, x, p, xdot, pdot, work):
    d = x.shape[0]
    u, s, vt = np.linalg.svd(x)
    if not s[d - 1] > RANK_TOL * s[0]:
        return RANK_LOST
    pt, w, g, kern, pw = work
    # pt = u^T p v
    for i in range(d):
        for k in range(d):
            acc = 0.0
            for r in range(d):
                inner = 0.0
                for c in range(d):
                    inner += p[r, c] * vt[k, c]
                acc += u[r, i] * inner
            pt[i, k] = acc
    gap = DEGENERACY_TOL * s[0] * s[0]
    for j in range(n):
        a = j / n
        for i in range(d):
            pw[j, i] = (s[i] * s[i]) ** a
            for k in range(d):
                kern[j, i, k] = _kernel_entry(s[i] * s[i], s[k] * s[k], a, gap)
    for i in range(d):
        for k in range(d):
            w[i, k] = pt[i, k] / kern[1, i, k] if n > 1 else pt[i, k]
    _sandwich(u, w, vt, xdot)
    for i in range(d):
        for k in range(d):
            g[i, k] = 0.0
    for layer in range(1, n + 1):
        ja = n - layer
        jb = layer - 1
        for i in range(d):
            for k in range(d):
                m1 = 0.0
                m2 = 0.0
                for r in range(d):
                    m1 += pt[i, r] * pw[jb, r] * pt[k, r]
                    m2 += pt[r, i] * pw[ja, r] * pt[r, k]
                g[i, k] += kern[ja, i, k] * m1 * s[k] + s[i] * kern[jb, i, k] * m2
    _sandwich(u, g, vt, pdot)
    for i in range(d):
        for k in range(d):
            pdot[i, k] = -pdot[i, k]
    return OK


@njit(cache=True, nogil=True)
def rk4_dln(n, x0, p0, steps, duration, stride, xs_out, ps_out):
    """Integrate a stack ``(B, d, d)``; stores every ``stride``-th state.

    Returns a status code (``OK``, ``RANK_LOST``, ``NOT_FINITE``).
    """
    nb, d, _ = x0.shape
    h = duration / steps
    work = (np.empty((d, d)), np.empty((d, d)), np.empty((d, d)),
            np.empty((n, d, d)), np.empty((n, d)))
    kx = np.empty((4, d, d))
    kp = np.empty((4, d, d))
    xt = np.empty((d, d))
    pt = np.empty((d, d))
    coef = (0.5 * h, 0.5 * h, h)
    for b in range(nb):
        x = x0[b].copy()
        p = p0[b].copy()
        xs_out[b, 0] = x
        ps_out[b, 0] = p
        slot = 1
        # Sign changes of det(X) between steps mean the path crossed rank loss.
        orient = np.linalg.det(x) > 0.0
        for step in range(1, steps + 1):
            if _rhs(n, x, p, kx[0], kp[0], work) != OK:
                return RANK_LOST
            for stage in range(3):
                c = coef[stage]
                for i in range(d):
                    for k in range(d):
                        xt[i, k] = x[i, k] + c * kx[stage, i, k]
                        pt[i, k] = p[i, k] + c * kp[stage, i, k]
                if _rhs(n, xt, pt, kx[stage + 1], kp[stage + 1], work) != OK:
                    return RANK_LOST
            finite = True
            for i in range(d):
                for k in range(d):
                    x[i, k] += h / 6.0 * (kx[0, i, k] + 2.0 * kx[1, i, k]
                                          + 2.0 * kx[2, i, k] + kx[3, i, k])
                    p[i, k] += h / 6.0 * (kp[0, i, k] + 2.0 * kp[1, i, k]
                                          + 2.0 * kp[2, i, k] + kp[3, i, k])
                    if not (np.isfinite(x[i, k]) and np.isfinite(p[i, k])):
                        finite = False
            if not finite:
                return NOT_FINITE
            if (np.linalg.det(x) > 0.0) != orient:
                return RANK_LOST
            if step % stride == 0:
                xs_out[b, slot] = x
                ps_out[b, slot] = p
                slot += 1
        sv = np.linalg.svd(x)[1]
        if not sv[d - 1] > RANK_TOL * sv[0]:
            return RANK_LOST
    return OK


@njit(cache=True)
def dln_rhs_single(n, x, p):
    d = x.shape[0]
    xdot = np.empty((d, d))
    pdot = np.empty((d, d))
    work = (np.empty((d, d)), np.empty((d, d)), np.empty((d, d)),
            np.empty((n, d, d)), np.empty((n, d)))
    status = _rhs(n, np.ascontiguousarray(x), np.ascontiguousarray(p), xdot, pdot, work)
    return status, xdot, pdot
