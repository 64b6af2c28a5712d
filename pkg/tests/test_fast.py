"""The compiled RK4 kernel against the numpy reference implementation."""
import numpy as np
import pytest

from dlngeo import _fast, dln
from dlngeo.sampling import random_full_rank, random_orthogonal


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("d", [1, 2, 4])
def test_rhs_matches_numpy(rng, n, d):
    x, p = random_full_rank(rng, d), rng.standard_normal((d, d))
    status, xd, pd = _fast.dln_rhs_single(n, x, p)
    ref_x, ref_p = dln.dln_ode_rhs(n, x, p)
    assert status == _fast.OK
    np.testing.assert_allclose(xd, ref_x, atol=1e-13 * max(1, np.abs(ref_x).max()))
    np.testing.assert_allclose(pd, ref_p, atol=1e-12 * max(1, np.abs(ref_p).max()))


def test_rhs_close_singular_values(rng):
    u, v = random_orthogonal(rng, 3), random_orthogonal(rng, 3)
    x = (u * np.array([1.7, 1.7 * (1 + 1e-12), 0.4])) @ v.T
    p = rng.standard_normal((3, 3))
    _, xd, pd = _fast.dln_rhs_single(4, x, p)
    ref_x, ref_p = dln.dln_ode_rhs(4, x, p)
    np.testing.assert_allclose(xd, ref_x, atol=1e-12)
    np.testing.assert_allclose(pd, ref_p, atol=1e-11)


def test_rhs_flags_rank_loss():
    status, _, _ = _fast.dln_rhs_single(3, np.diag([1.0, 0.0]), np.eye(2))
    assert status == _fast.RANK_LOST


def test_batch_independent_of_stack_order(rng):
    xs = np.stack([random_full_rank(rng, 3) for _ in range(3)])
    ps = 0.2 * rng.standard_normal((3, 3, 3))
    out = np.empty((3, 2, 3, 3))
    outp = np.empty_like(out)
    assert _fast.rk4_dln(4, xs, ps, 100, 1.0, 100, out, outp) == _fast.OK
    rev = np.empty_like(out)
    revp = np.empty_like(out)
    _fast.rk4_dln(4, xs[::-1].copy(), ps[::-1].copy(), 100, 1.0, 100, rev, revp)
    np.testing.assert_array_equal(out, rev[::-1])
