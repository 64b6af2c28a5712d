"""Fixed-step RK4 integration of (X, P) phase flows and a shooting BVP solver.

A phase-flow function takes ``(x, p)`` and returns ``(xdot, pdot)``.  The
flows in :mod:`dlngeo.dln` and :mod:`dlngeo.bw` accept stacks of matrices,
which the shooting solver uses to integrate all Jacobian columns at once.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .bw import bw_ode_rhs
from . import _fast
from .dln import (
    DlnFlow,
    _a_apply_stack,
    _a_inverse_stack,
    _check_depth,
    a_operator_inverse,
    dln_flow,
)
from .errors import NoConvergence, NumericalFailure, RankError
from .matcalc import RANK_TOL, as_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    p: np.ndarray
    t: float = 0.0


@dataclass
class Trajectory:
    """Samples ``(t_i, X_i, P_i)`` of a phase-space path on a uniform grid.

    ``metric`` is ``'dln'`` or ``'bw'`` and selects how speeds and energies
    are evaluated; ``depth`` is the DLN depth (2 for Bures-Wasserstein).
    """

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    depth: int = 2
    metric: str = "dln"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        return PhasePoint(self.x[i], self.p[i], float(self.t[i]))

    @property
    def start(self):
        return self.x[0]

    @property
    def end(self):
        return self.x[-1]

    def resample(self, samples):
        """Keep ``samples`` evenly spaced stored points (grid must divide evenly)."""
        m = len(self.t) - 1
        if samples < 2 or m % (samples - 1):
            raise ValueError(f"cannot take {samples} uniform samples from {m} steps")
        idx = np.arange(0, m + 1, m // (samples - 1))
        return Trajectory(self.t[idx], self.x[idx], self.p[idx], self.depth,
                          self.metric, dict(self.meta))


@dataclass(frozen=True)
class ShootingConfig:
    steps: int = 1000
    max_iter: int = 50
    tol: float = 1e-9
    fd_step: float = 1e-6
    damping: float = 1.0
    max_halvings: int = 30

    def __post_init__(self):
        for name in ("steps", "max_iter", "tol", "fd_step", "max_halvings"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


def _check_state(x, p, orient=None):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise NumericalFailure("integration produced non-finite values")
    s = np.linalg.svd(x, compute_uv=False)
    if np.any(~(s[..., -1] > RANK_TOL * s[..., 0])):
        raise RankError("trajectory left the full-rank set")
    # A sign flip of det(X) between steps means the path crossed rank loss.
    if orient is not None and np.any((np.linalg.det(x) > 0) != orient):
        raise RankError("trajectory crossed the rank-deficient set")


def _rk4_step(rhs, x, p, h):
    k1x, k1p = rhs(x, p)
    k2x, k2p = rhs(x + 0.5 * h * k1x, p + 0.5 * h * k1p)
    k3x, k3p = rhs(x + 0.5 * h * k2x, p + 0.5 * h * k2p)
    k4x, k4p = rhs(x + h * k3x, p + h * k3p)
    return (x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))


def _run(rhs, x, p, steps, duration, stride):
    """RK4 on a stack ``(B, d, d)``; returns states at every ``stride`` steps."""
    samples = steps // stride + 1
    if isinstance(rhs, DlnFlow):
        xs = np.empty((x.shape[0], samples) + x.shape[1:])
        ps = np.empty_like(xs)
        status = _fast.rk4_dln(rhs.depth, np.ascontiguousarray(x), np.ascontiguousarray(p),
                               steps, float(duration), stride, xs, ps)
        if status == _fast.RANK_LOST:
            raise RankError("trajectory left the full-rank set")
        if status == _fast.NOT_FINITE:
            raise NumericalFailure("integration produced non-finite values")
        return xs, ps
    _check_state(x, p)
    orient = np.linalg.det(x) > 0
    h = duration / steps
    xs = [x]
    ps = [p]
    for k in range(1, steps + 1):
        x, p = _rk4_step(rhs, x, p, h)
        _check_state(x, p, orient)
        if k % stride == 0:
            xs.append(x)
            ps.append(p)
    return np.stack(xs, axis=1), np.stack(ps, axis=1)


def integrate(rhs, start, steps=1000, duration=1.0, samples=None, depth=2, metric="dln"):
    """Integrate ``rhs`` from ``start`` for ``duration`` with classical RK4.

    Parameters
    ----------
    rhs : callable
        Phase flow ``(x, p) -> (xdot, pdot)``.
    start : PhasePoint
    steps : int
        Number of RK4 steps.
    samples : int, optional
        Number of stored samples (``steps`` must be a multiple of
        ``samples - 1``).  Defaults to every step.

    Returns
    -------
    Trajectory

    Raises
    ------
    RankError
        An intermediate ``X`` lost full rank.
    NumericalFailure
        Non-finite values appeared.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be positive")
    samples = steps + 1 if samples is None else int(samples)
    if samples < 2 or steps % (samples - 1):
        raise ValueError(f"steps={steps} is not a multiple of samples-1={samples - 1}")
    x = np.array(start.x, dtype=float)[None]
    p = np.array(start.p, dtype=float)[None]
    xs, ps = _run(rhs, x, p, steps, duration, steps // (samples - 1))
    t = start.t + duration * np.linspace(0.0, 1.0, samples)
    return Trajectory(t, xs[0], ps[0], depth, metric, {"steps": steps})


def integrate_endpoint(rhs, x, p, steps=1000, duration=1.0):
    """Endpoint ``(x(T), p(T))`` of the flow; ``x``, ``p`` may be stacks."""
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    single = x.ndim == 2
    if single:
        x, p = x[None], p[None]
    xs, ps = _run(rhs, x, p, int(steps), duration, int(steps))
    x1, p1 = xs[:, -1], ps[:, -1]
    return (x1[0], p1[0]) if single else (x1, p1)


def _flow(n, metric):
    if metric == "dln":
        return dln_flow(n)
    if metric == "bw":
        return bw_ode_rhs
    raise ValueError(f"metric must be 'dln' or 'bw', got {metric!r}")


def solve_ivp_geodesic(n, a, p0, steps=1000, samples=None, metric="dln"):
    """Trajectory of the geodesic flow started at ``(a, p0)``."""
    n = _check_depth(n)
    a = as_matrix(a, "a")
    p0 = as_matrix(p0, "p0")
    traj = integrate(_flow(n, metric), PhasePoint(a, p0, 0.0), steps, samples=samples,
                     depth=n, metric=metric)
    energy = energy_profile(traj)
    traj.meta["energy_variation"] = relative_variation(energy)
    return traj


def initial_momentum_guess(n, a, b):
    """Momentum whose flow initially points along the chord ``b - a``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return a_operator_inverse(n, a, b - a)


def solve_bvp_shooting(n, a, b, config=None, metric="dln", p_guess=None, samples=None):
    """Solve the Dirichlet problem ``X(0) = a``, ``X(1) = b`` by single shooting.

    Damped Gauss-Newton on ``p0 -> X(1; p0) - b`` with a forward-difference
    Jacobian; all ``d²`` perturbed flows are integrated as one stack.  The step
    is halved while the residual norm fails to decrease.

    Returns
    -------
    p0 : ndarray
        Initial momentum.
    trajectory : Trajectory
        Flow from ``(a, p0)``; ``meta`` holds the residual and iteration count.

    Raises
    ------
    NoConvergence
        The tolerance was not met; ``best_residual`` is attached.
    """
    cfg = config or ShootingConfig()
    n = _check_depth(n)
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    d = a.shape[0]
    rhs = _flow(n, metric)

    eye = np.eye(d * d).reshape(d * d, d, d)

    def residual(p):
        x1, _ = integrate_endpoint(rhs, a, p, cfg.steps)
        return (x1 - b).ravel()

    def residual_and_jacobian(p):
        # Base point and its d² forward-difference perturbations in one stack.
        h = cfg.fd_step * max(1.0, np.linalg.norm(p))
        stack = np.concatenate([p[None], p[None] + h * eye])
        x1, _ = integrate_endpoint(rhs, np.broadcast_to(a, stack.shape).copy(), stack, cfg.steps)
        res = (x1 - b).reshape(d * d + 1, d * d)
        return res[0], (res[1:] - res[0]).T / h

    p = initial_momentum_guess(n, a, b) if p_guess is None else as_matrix(p_guess, "p_guess")
    res, jac = residual_and_jacobian(p)
    norm = np.linalg.norm(res)
    iterations = 0
    while norm > cfg.tol:
        if iterations >= cfg.max_iter:
            raise NoConvergence(f"no geodesic found by shooting after {iterations} "
                                f"iterations (best residual {norm:.3e})", norm, iterations)
        iterations += 1
        delta = np.linalg.lstsq(jac, -res, rcond=None)[0].reshape(d, d)
        step = cfg.damping
        try:
            trial_res, trial_jac = residual_and_jacobian(p + step * delta)
        except (RankError, NumericalFailure):
            trial_res = None
        if trial_res is not None and np.linalg.norm(trial_res) < norm:
            p, res, jac = p + step * delta, trial_res, trial_jac
        else:
            for _ in range(cfg.max_halvings):
                step *= 0.5
                try:
                    trial_res = residual(p + step * delta)
                except (RankError, NumericalFailure):
                    continue
                if np.linalg.norm(trial_res) < norm:
                    break
            else:
                raise NoConvergence(f"line search failed at iteration {iterations} "
                                    f"(best residual {norm:.3e})", norm, iterations)
            p = p + step * delta
            res, jac = residual_and_jacobian(p)
        norm = np.linalg.norm(res)
        logger.debug("shooting iteration %d: residual %.3e, step %.3g", iterations, norm, step)

    traj = solve_ivp_geodesic(n, a, p, cfg.steps, samples=samples, metric=metric)
    traj.meta.update(residual=float(norm), iterations=iterations, tol=cfg.tol)
    return p, traj


def speed_profile(traj):
    """``g_{X_i}(Xdot_i, Xdot_i)`` at each sample with ``Xdot`` obtained from ``P``."""
    x, p = traj.x, traj.p
    if traj.metric == "bw":
        from .bw import bw_speed
        return np.array([bw_speed(xi, pi) for xi, pi in zip(x, p)])
    xdot = _a_apply_stack(traj.depth, x, p)
    return np.sum(xdot * _a_inverse_stack(traj.depth, x, xdot), axis=(-2, -1))


def energy_profile(traj):
    """Hamiltonian at each sample."""
    x, p = traj.x, traj.p
    if traj.metric == "bw":
        return np.einsum("kij,kji->k", p @ p, x)
    return 0.5 * np.sum(p * _a_apply_stack(traj.depth, x, p), axis=(-2, -1))


def relative_variation(values):
    """``(max - min) / max(|mean|, tiny)``; zero for an all-zero profile."""
    values = np.asarray(values, dtype=float)
    spread = float(values.max() - values.min())
    scale = abs(float(values.mean()))
    return 0.0 if spread == 0.0 else spread / max(scale, 1e-300)


def path_action(t, speeds, samples=101):
    """Composite Simpson integral of a speed profile, on ``samples`` points when possible."""
    t = np.asarray(t, dtype=float)
    speeds = np.asarray(speeds, dtype=float)
    m = len(t) - 1
    if m >= samples - 1 and m % (samples - 1) == 0:
        idx = np.arange(0, m + 1, m // (samples - 1))
        t, speeds = t[idx], speeds[idx]
    return float(simpson(speeds, x=t))


def trajectory_action(traj):
    return path_action(traj.t, speed_profile(traj))
