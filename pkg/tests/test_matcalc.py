import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_continuous_lyapunov, sqrtm

from dlngeo import matcalc
from dlngeo.errors import DomainError, RankError
from dlngeo.sampling import random_full_rank, random_spd, random_symmetric


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestSvd:
    def test_identity(self):
        t = matcalc.svd(np.eye(3))
        np.testing.assert_array_equal(t.sigma, np.ones(3))
        np.testing.assert_allclose(t.u, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(t.v, np.eye(3), atol=1e-15)

    def test_reorders_diagonal(self):
        t = matcalc.svd(np.diag([1.0, 4.0]))
        perm = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(t.sigma, [4.0, 1.0])
        np.testing.assert_allclose(t.u, perm, atol=1e-15)
        np.testing.assert_allclose(t.v, perm, atol=1e-15)

    def test_random_reconstruction_and_orthogonality(self, rng):
        for d in (1, 2, 3, 5):
            x = rng.standard_normal((d, d))
            t = matcalc.svd(x)
            assert rel(t.reconstruct(), x) <= 1e-10
            assert np.linalg.norm(t.u.T @ t.u - np.eye(d)) <= 1e-12 * d
            assert np.linalg.norm(t.v.T @ t.v - np.eye(d)) <= 1e-12 * d
            assert np.all(np.diff(t.sigma) <= 0)

    def test_sign_convention(self, rng):
        x = rng.standard_normal((4, 4))
        u = matcalc.svd(x).u
        idx = np.argmax(np.abs(u), axis=0)
        assert np.all(u[idx, np.arange(4)] >= 0)
        # The convention makes the factors a function of x alone.
        u2 = matcalc.svd(-x).u
        np.testing.assert_allclose(u, u2, atol=1e-12)

    def test_full_rank_rejects_singular(self):
        with pytest.raises(RankError):
            matcalc.svd_full_rank(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            matcalc.svd(np.array([[np.nan]]))


class TestPowerKernel:
    def test_hand_value(self):
        k = matcalc.power_kernel(np.array([1.0, 4.0]), 0.5)
        np.testing.assert_allclose(k, [[0.5, 1 / 3], [1 / 3, 0.25]], rtol=1e-14)

    def test_identity_function_gives_ones(self):
        np.testing.assert_allclose(matcalc.power_kernel(np.full(3, 2.5), 1.0), np.ones((3, 3)))

    def test_square(self):
        lam = np.array([1.0, 2.0, 3.0])
        expected = lam[:, None] + lam[None, :]
        np.testing.assert_allclose(matcalc.power_kernel(lam, 2.0), expected, rtol=1e-13)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            matcalc.power_kernel(np.array([1.0, 0.0]), 0.5)

    @given(lam_i=st.floats(0.05, 20.0), alpha=st.floats(-2.0, 3.0), sign=st.sampled_from([-1, 1]))
    def test_continuous_across_threshold(self, lam_i, alpha, sign):
        tau = matcalc.DEGENERACY_TOL
        k = matcalc.power_kernel(np.array([lam_i, lam_i * (1 + sign * 2 * tau)]), alpha)
        limit = alpha * lam_i ** (alpha - 1)
        assert abs(k[0, 1] - limit) <= 1e-6 * max(abs(limit), 1e-300) + 1e-300

    @given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=5), st.floats(-1.0, 2.0))
    def test_symmetric(self, lam, alpha):
        k = matcalc.power_kernel(np.array(lam), alpha)
        np.testing.assert_array_equal(k, k.T)

    def test_separated_pairs_match_quotient(self, rng):
        lam = np.array([5.0, 2.0, 0.3])
        alpha = 0.37
        k = matcalc.power_kernel(lam, alpha)
        for i in range(3):
            for j in range(3):
                if i != j:
                    q = (lam[i] ** alpha - lam[j] ** alpha) / (lam[i] - lam[j])
                    assert k[i, j] == pytest.approx(q, rel=1e-13)

    def test_broadcasts(self):
        lam = np.array([[1.0, 4.0], [9.0, 1.0]])
        k = matcalc.power_kernel(lam, 0.5)
        for b in range(2):
            np.testing.assert_allclose(k[b], matcalc.power_kernel(lam[b], 0.5))


class TestFunctionalCalculus:
    def test_identity(self, rng):
        s = random_symmetric(rng, 3)
        np.testing.assert_allclose(matcalc.func_calc(s, lambda x: x), s, atol=1e-14)

    def test_sqrt_diagonal(self):
        np.testing.assert_allclose(matcalc.func_calc(np.diag([1.0, 4.0]), np.sqrt), np.diag([1.0, 2.0]))

    def test_square_against_product(self, rng):
        s = random_spd(rng, 4)
        out = matcalc.func_calc(s, lambda x: x ** 2)
        assert rel(out, s @ s) <= 1e-10
        assert np.linalg.norm(out @ s - s @ out) <= 1e-10 * np.linalg.norm(out)

    def test_undefined_function(self):
        with pytest.raises(DomainError):
            matcalc.func_calc(np.diag([1.0, -1.0]), np.log)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            matcalc.func_calc(np.array([[1.0, 2.0], [0.0, 1.0]]), np.sqrt)

    def test_frac_power_examples(self, rng):
        np.testing.assert_allclose(matcalc.frac_power_spd(np.eye(3), 0.7), np.eye(3))
        np.testing.assert_allclose(matcalc.frac_power_spd(np.diag([1.0, 16.0]), 0.25), np.diag([1.0, 2.0]))
        s = random_spd(rng, 4)
        r = matcalc.frac_power_spd(s, 1 / 3)
        assert rel(r @ r @ r, s) <= 1e-9
        assert rel(matcalc.frac_power_spd(matcalc.frac_power_spd(s, 0.4), 2.5), s) <= 1e-9

    def test_frac_power_matches_scipy(self, rng):
        s = random_spd(rng, 3)
        assert rel(matcalc.frac_power_spd(s, 0.5), np.real(sqrtm(s))) <= 1e-10

    def test_frac_power_rejects_indefinite(self):
        with pytest.raises(DomainError):
            matcalc.frac_power_spd(np.diag([1.0, -2.0]), 0.5)


class TestDifferentials:
    def test_identity_function(self, rng):
        s, z = random_symmetric(rng, 3), random_symmetric(rng, 3)
        out = matcalc.func_calc_differential(s, z, lambda x: x, np.ones_like)
        np.testing.assert_allclose(out, z, atol=1e-13)

    def test_square_commuting(self):
        s, z = np.diag([1.0, 2.0, 3.0]), np.diag([0.5, -1.0, 2.0])
        out = matcalc.func_calc_differential(s, z, lambda x: x ** 2, lambda x: 2 * x)
        np.testing.assert_allclose(out, 2 * s @ z, atol=1e-13)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_sqrt_against_fd(self, rng, d):
        for _ in range(10):
            s, z = random_spd(rng, d), random_symmetric(rng, d)
            h = 1e-5
            fd = (matcalc.frac_power_spd(s + h * z, 0.5) - matcalc.frac_power_spd(s - h * z, 0.5)) / (2 * h)
            got = matcalc.func_calc_differential(s, z, np.sqrt, lambda x: 0.5 / np.sqrt(x))
            assert rel(got, fd) <= 1e-6

    def test_linear_in_direction(self, rng):
        s, z1, z2 = random_spd(rng, 3), random_symmetric(rng, 3), random_symmetric(rng, 3)
        f, fp = np.log, lambda x: 1 / x
        lhs = matcalc.func_calc_differential(s, 2 * z1 - z2, f, fp)
        rhs = 2 * matcalc.func_calc_differential(s, z1, f, fp) - matcalc.func_calc_differential(s, z2, f, fp)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_gram_alpha_one(self, rng):
        x, z = random_full_rank(rng, 3), rng.standard_normal((3, 3))
        out = matcalc.gram_power_differential(x, z, 1.0, "left")
        np.testing.assert_allclose(out, x @ z.T + z @ x.T, atol=1e-12)
        out = matcalc.gram_power_differential(x, z, 1.0, "right")
        np.testing.assert_allclose(out, x.T @ z + z.T @ x, atol=1e-12)

    def test_gram_identity_half(self, rng):
        z = rng.standard_normal((3, 3))
        out = matcalc.gram_power_differential(np.eye(3), z, 0.5, "left")
        np.testing.assert_allclose(out, 0.5 * (z + z.T), atol=1e-14)

    @pytest.mark.parametrize("d", [2, 3, 5])
    @pytest.mark.parametrize("side", ["left", "right"])
    def test_gram_against_fd(self, rng, d, side):
        for _ in range(10):
            x, z = random_full_rank(rng, d), rng.standard_normal((d, d))
            h = 1e-5

            def g(m):
                return matcalc.frac_power_spd(m @ m.T if side == "left" else m.T @ m, 1 / 3)

            fd = (g(x + h * z) - g(x - h * z)) / (2 * h)
            assert rel(matcalc.gram_power_differential(x, z, 1 / 3, side), fd) <= 1e-6

    def test_gram_rank_error(self):
        with pytest.raises(RankError):
            matcalc.gram_power_differential(np.diag([1.0, 0.0]), np.eye(2), 0.5)

    def test_gram_bad_side(self, rng):
        with pytest.raises(ValueError):
            matcalc.gram_power_differential(np.eye(2), np.eye(2), 0.5, "top")


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50)
def test_trace_identities(d, seed):
    r = np.random.default_rng(seed)
    k, m = random_symmetric(r, d), random_symmetric(r, d)
    sig = np.diag(r.uniform(0.2, 3.0, size=d))
    a = r.standard_normal((d, d))
    t1 = np.trace((k * (sig @ a.T)) @ m)
    t2 = np.trace((k * (a @ sig)) @ m)
    t3 = np.trace(sig @ (k * m) @ a)
    assert abs(t1 - t2) <= 1e-12
    assert abs(t1 - t3) <= 1e-12


class TestLyapunov:
    def test_identity(self, rng):
        z = random_symmetric(rng, 3)
        np.testing.assert_allclose(matcalc.lyapunov_solve(np.eye(3), z), z / 2, atol=1e-15)

    def test_hand_value(self):
        out = matcalc.lyapunov_solve(np.diag([1.0, 3.0]), np.array([[2.0, 4.0], [4.0, 6.0]]))
        np.testing.assert_allclose(out, np.ones((2, 2)), atol=1e-15)

    def test_against_scipy(self, rng):
        for d in (1, 2, 4, 6):
            x, z = random_spd(rng, d), random_symmetric(rng, d)
            p = matcalc.lyapunov_solve(x, z)
            assert np.linalg.norm(p @ x + x @ p - z) <= 1e-10 * np.linalg.norm(z)
            np.testing.assert_allclose(p, solve_continuous_lyapunov(x, z), atol=1e-10)
            np.testing.assert_array_equal(p, p.T)

    def test_rejects_non_spd(self):
        with pytest.raises(DomainError):
            matcalc.lyapunov_solve(np.diag([1.0, -1.0]), np.eye(2))


class TestGeometricMean:
    def test_identity(self, rng):
        b = random_spd(rng, 3)
        assert rel(matcalc.geometric_mean(np.eye(3), b), np.real(sqrtm(b))) <= 1e-12

    def test_commuting(self):
        out = matcalc.geometric_mean(np.diag([1.0, 4.0]), np.diag([4.0, 16.0]))
        np.testing.assert_allclose(out, np.diag([2.0, 8.0]), rtol=1e-14)

    def test_riccati_and_symmetry(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 5))
            a, b = random_spd(rng, d), random_spd(rng, d)
            g = matcalc.geometric_mean(a, b)
            assert rel(g @ np.linalg.inv(a) @ g, b) <= 1e-9
            assert np.linalg.norm(g - matcalc.geometric_mean(b, a)) <= 1e-10 * np.linalg.norm(g)
            assert np.all(np.linalg.eigvalsh(g) > 0)

    def test_rejects_non_spd(self):
        with pytest.raises(DomainError):
            matcalc.geometric_mean(np.eye(2), -np.eye(2))


class TestSqrtProduct:
    def test_identity(self, rng):
        b = random_spd(rng, 3)
        root = np.real(sqrtm(b))
        for side in ("left", "right"):
            assert rel(matcalc.sqrt_product(np.eye(3), b, side), root) <= 1e-12

    def test_commuting(self):
        a, b = np.diag([2.0, 3.0]), np.diag([8.0, 12.0])
        for side in ("left", "right"):
            np.testing.assert_allclose(matcalc.sqrt_product(a, b, side), np.diag([4.0, 6.0]), rtol=1e-14)

    def test_square_back_and_scipy(self, rng):
        a, b = random_spd(rng, 4), random_spd(rng, 4)
        left = matcalc.sqrt_product(a, b, "left")
        right = matcalc.sqrt_product(a, b, "right")
        assert rel(left @ left, a @ b) <= 1e-9
        assert rel(right @ right, b @ a) <= 1e-9
        # (ab)^(1/2) is the principal root: eigenvalues positive.
        assert rel(left, np.real(sqrtm(a @ b))) <= 1e-9

    def test_bad_side(self):
        with pytest.raises(ValueError):
            matcalc.sqrt_product(np.eye(2), np.eye(2), "up")


def test_polar_orthogonal(rng):
    m = random_full_rank(rng, 4)
    q = matcalc.polar_orthogonal(m)
    np.testing.assert_allclose(q.T @ q, np.eye(4), atol=1e-14)
    # The polar factor makes q^T m symmetric positive definite.
    h = q.T @ m
    np.testing.assert_allclose(h, h.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(0.5 * (h + h.T)) > 0)
