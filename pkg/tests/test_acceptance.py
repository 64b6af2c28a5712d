"""Acceptance criteria 1-10.

Each test prints ``criterion N: PASS|FAIL`` with the measured quantities and
then asserts.  The lines are repeated in the pytest terminal summary; running
this file directly prints them without pytest.
"""
import numpy as np

from dlngeo import balanced as bal
from dlngeo import bw, dln, solver
from dlngeo.sampling import random_aligned_pair, random_full_rank, random_params, random_skew, random_spd
from dlngeo.verify import _line_instance, condition_two_mismatch, hamiltonian_gradient_error

LINES = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_bw_closed_form_vs_ode():
    rng = np.random.default_rng(101)
    worst_end, worst_path = 0.0, 0.0
    for _ in range(20):
        d = int(rng.integers(1, 5))
        a, b = random_spd(rng, d), random_spd(rng, d)
        p0 = bw.bw_initial_momentum(a, b)
        traj = solver.integrate(bw.bw_ode_rhs, solver.PhasePoint(a, p0), 1000, samples=11, metric="bw")
        worst_end = max(worst_end, float(np.linalg.norm(traj.end - b)))
        for k, t in enumerate(traj.t):
            worst_path = max(worst_path, float(np.linalg.norm(traj.x[k] - bw.bw_geodesic(a, b, t))))
    report(1, worst_end <= 1e-8 and worst_path <= 1e-7,
           f"max ||X(1)-B|| = {worst_end:.2e} (tol 1e-8), max closed-vs-RK4 = {worst_path:.2e} (tol 1e-7)")


def test_criterion_02_gradient_check():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 5))
        x, p = random_full_rank(rng, d), rng.standard_normal((d, d))
        worst = max(worst, hamiltonian_gradient_error(n, x, p, 1e-5))
    report(2, worst <= 1e-6, f"max relative error = {worst:.2e} over 100 instances (tol 1e-6)")


def test_criterion_03_closed_form_oracle():
    rng = np.random.default_rng(103)
    worst_line, worst_shoot = 0.0, 0.0
    for _ in range(20):
        d, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        a, b = random_aligned_pair(rng, d)
        lift = bal.lift_endpoints(a, b, n)
        ts = np.linspace(0, 1, 11)
        closed = np.stack([bal.dln_geodesic_closed(n, a, b, t, lift) for t in ts])
        line = np.stack([bal.phi(bal.lifted_line(lift, t)) for t in ts])
        worst_line = max(worst_line, float(np.abs(closed - line).max()))
        _, traj = solver.solve_bvp_shooting(n, a, b, samples=11)
        worst_shoot = max(worst_shoot, float(np.linalg.norm(traj.x - closed, axis=(-2, -1)).max()))
    report(3, worst_line <= 1e-12 and worst_shoot <= 1e-6,
           f"max |closed - phi(line)| = {worst_line:.2e} (tol 1e-12), "
           f"max ||shooting - closed|| = {worst_shoot:.2e} (tol 1e-6)")


def test_criterion_04_energy_and_speed():
    rng = np.random.default_rng(104)
    worst_h, worst_s = 0.0, 0.0
    for _ in range(8):
        d, n = int(rng.integers(2, 4)), int(rng.integers(2, 7))
        a, b = random_full_rank(rng, d, 0.3), random_full_rank(rng, d, 0.3)
        _, traj = solver.solve_bvp_shooting(n, a, b, samples=11)
        worst_h = max(worst_h, solver.relative_variation(solver.energy_profile(traj)))
        worst_s = max(worst_s, solver.relative_variation(solver.speed_profile(traj)))
    for _ in range(4):
        d = int(rng.integers(1, 5))
        a, b = random_spd(rng, d), random_spd(rng, d)
        _, traj = solver.solve_bvp_shooting(2, a, b, metric="bw", samples=11)
        worst_h = max(worst_h, solver.relative_variation(solver.energy_profile(traj)))
        worst_s = max(worst_s, solver.relative_variation(solver.speed_profile(traj)))
    report(4, worst_h <= 1e-8 and worst_s <= 1e-6,
           f"max relative H variation = {worst_h:.2e} (tol 1e-8), speed variation = {worst_s:.2e} (tol 1e-6)")


def test_criterion_05_basis_orthonormal():
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(20):
        pr = random_params(rng, int(rng.integers(1, 4)), int(rng.integers(2, 6)))
        hb = bal.horizontal_basis(pr)
        worst = max(worst, float(np.abs(hb.gram() - np.eye(len(hb))).max()))
    report(5, worst <= 1e-10, f"max |Gram - I| = {worst:.2e} over 20 bases (tol 1e-10)")


def test_criterion_06_submersion_isometry():
    rng = np.random.default_rng(106)
    worst_norm, worst_vert = 0.0, 0.0
    for _ in range(20):
        pr = random_params(rng, int(rng.integers(1, 4)), int(rng.integers(2, 6)))
        w = bal.xi(pr)
        x = bal.phi(w)
        for e in bal.horizontal_basis(pr).elements:
            v = bal.differential_phi(w, e)
            worst_norm = max(worst_norm, abs(np.sqrt(dln.gn_inner(pr.depth, x, v, v)) - 1.0))
        skews = np.stack([random_skew(rng, pr.dim) for _ in range(pr.depth - 1)])
        z = bal.vertical_direction(w, skews)
        worst_vert = max(worst_vert, float(np.linalg.norm(bal.differential_phi(w, z))))
    report(6, worst_norm <= 1e-8 and worst_vert <= 1e-10,
           f"max | ||Dphi(v)|| - 1 | = {worst_norm:.2e} (tol 1e-8), max ||Dphi(vertical)|| = {worst_vert:.2e} (tol 1e-10)")


def test_criterion_07_condition_two():
    rng = np.random.default_rng(107)
    kinds = np.arange(100) % 2 == 0
    mismatches = sum(condition_two_mismatch(*_line_instance(rng, bool(k))) for k in kinds)
    report(7, mismatches == 0, f"{mismatches} disagreements on 50 positive and 50 negative instances")


def test_criterion_08_diagonal_identities():
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 9))
        a, b = np.diag(rng.uniform(0.2, 5, size=3)), np.diag(rng.uniform(0.2, 5, size=3))
        t = float(rng.uniform())
        worst = max(worst, float(np.abs(bal.diagonal_geodesic(n, a, b, t)
                                        - bal.diagonal_geodesic_binomial(n, a, b, t)).max()))
    a, b = np.diag([1.0, 2.0]), np.diag([3.0, 5.0])
    limit = bal.infinite_depth_geodesic(a, b, 0.3)
    dev = [float(np.linalg.norm(bal.diagonal_geodesic(n, a, b, 0.3) - limit)) for n in (2, 4, 8, 16, 32, 64)]
    monotone = all(x > y for x, y in zip(dev, dev[1:]))
    report(8, worst <= 1e-12 and monotone and dev[-1] < 1e-2,
           f"binomial gap = {worst:.2e} (tol 1e-12), deviations {', '.join(f'{v:.2e}' for v in dev)} "
           f"(monotone {monotone}, N=64 tol 1e-2)")


def test_criterion_09_depth_two_and_trace_limit():
    rng = np.random.default_rng(109)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 5))
        x, z = random_spd(rng, d), rng.standard_normal((d, d))
        worst = max(worst, float(np.abs(dln.a_operator(2, x, z) - bw.lyapunov_apply(x, z)).max()))
    p, z = np.diag([1.0, 3.0]), np.diag([2.0, 6.0])
    scaled = dln.gn_inner_scaled(64, p, z, z)
    target = bal.trace_metric_norm(p, z)
    gap = abs(scaled - target)
    report(9, worst <= 1e-12 and gap <= 1e-3,
           f"max |A_2 - L| = {worst:.2e} (tol 1e-12), scaled g^64 = {scaled:.6f} vs trace metric "
           f"{target:.6f}, gap {gap:.2e} (tol 1e-3)")


def test_criterion_10_integrator_order():
    rng = np.random.default_rng(5)
    a, b = random_spd(rng, 3, cond=100.0), random_spd(rng, 3, cond=100.0)
    p0 = bw.bw_initial_momentum(a, b)
    errs = [float(np.linalg.norm(solver.integrate_endpoint(bw.bw_ode_rhs, a, p0, s)[0] - b)) for s in (500, 1000)]
    ratio = errs[0] / errs[1]
    report(10, 12 <= ratio <= 20,
           f"error(500) = {errs[0]:.3e}, error(1000) = {errs[1]:.3e}, ratio {ratio:.2f} (range [12, 20])")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
