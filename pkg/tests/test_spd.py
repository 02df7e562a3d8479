import numpy as np
import pytest

from restent.spd import (LN2, SingularMatrixError, as_spd, as_symmetric,
                         eigh_desc, geodesic_from_velocity, geodesic_point,
                         log_singular_vector, lyapunov_sqrt_solve, onb_at,
                         spd_power, spd_sqrt_pair, sym_basis, symmetrize,
                         trace_inner)
from conftest import random_invertible, random_spd, random_sym

REL = lambda a, b: np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestValidation:
    def test_as_symmetric_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            as_symmetric(np.ones((2, 3)))

    def test_as_symmetric_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            as_symmetric([[0.0, 1.0], [0.0, 0.0]])

    def test_as_symmetric_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            as_symmetric([[np.nan, 0.0], [0.0, 1.0]])

    def test_as_spd_rejects_indefinite(self):
        with pytest.raises(ValueError):
            as_spd(np.diag([1.0, -1.0]))

    def test_as_spd_rejects_near_singular(self):
        with pytest.raises(ValueError):
            as_spd(np.diag([1.0, 1e-16]))


class TestPower:
    def test_identity_root(self):
        assert np.allclose(spd_power(np.eye(3), 0.5), np.eye(3))

    def test_diagonal_root(self):
        assert np.allclose(spd_power(np.diag([4.0, 9.0]), 0.5),
                           np.diag([2.0, 3.0]))

    def test_scalar_inverse_root(self):
        assert np.allclose(spd_power(np.array([[4.0]]), -0.5),
                           np.array([[0.5]]))

    def test_sqrt_pair_consistency(self, rng):
        for _ in range(50):
            p = random_spd(rng, 4)
            ps, pis = spd_sqrt_pair(p)
            assert REL(ps @ ps, p) < 1e-10
            assert REL(ps @ pis, np.eye(4)) < 1e-10


class TestGeodesics:
    def test_endpoints(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 6))
            p, q = random_spd(rng, n), random_spd(rng, n)
            assert REL(geodesic_point(p, q, 0.0), p) < 1e-10
            assert REL(geodesic_point(p, q, 1.0), q) < 1e-10

    def test_scalar_geodesic(self):
        g = geodesic_point(np.eye(2), np.diag([4.0, 4.0]), 0.5)
        assert np.allclose(g, np.diag([2.0, 2.0]))

    def test_inverse_midpoint_is_identity(self, rng):
        for _ in range(20):
            p = random_spd(rng, 3)
            g = geodesic_point(p, np.linalg.inv(p), 0.5)
            assert REL(g, np.eye(3)) < 1e-9

    def test_theta_range_error(self, rng):
        p, q = random_spd(rng, 2), random_spd(rng, 2)
        with pytest.raises(ValueError):
            geodesic_point(p, q, 1.5)
        with pytest.raises(ValueError):
            geodesic_point(p, q, -0.1)

    def test_scalar_rule(self, rng):
        for _ in range(100):
            p, q = random_spd(rng, 3), random_spd(rng, 3)
            a, b = rng.uniform(0.1, 10.0, 2)
            theta = rng.uniform(0.0, 1.0)
            lhs = geodesic_point(a * p, b * q, theta)
            rhs = a ** (1 - theta) * b ** theta * geodesic_point(p, q, theta)
            assert REL(lhs, rhs) < 1e-10

    def test_congruence_invariance(self, rng):
        for _ in range(100):
            p, q = random_spd(rng, 3), random_spd(rng, 3)
            g = random_invertible(rng, 3)
            theta = rng.uniform(0.0, 1.0)
            lhs = g @ geodesic_point(p, q, theta) @ g.T
            rhs = geodesic_point(symmetrize(g @ p @ g.T),
                                 symmetrize(g @ q @ g.T), theta)
            assert REL(lhs, rhs) < 1e-9

    def test_inversion_identity(self, rng):
        for _ in range(100):
            p, q = random_spd(rng, 3), random_spd(rng, 3)
            theta = rng.uniform(0.0, 1.0)
            lhs = np.linalg.inv(geodesic_point(p, q, theta))
            rhs = geodesic_point(np.linalg.inv(p), np.linalg.inv(q), theta)
            assert REL(lhs, rhs) < 1e-9


class TestVelocityGeodesics:
    def test_zero_velocity(self, rng):
        p = random_spd(rng, 3)
        assert REL(geodesic_from_velocity(p, np.zeros((3, 3)), 2.0), p) < 1e-12

    def test_identity_base_is_expm(self, rng):
        v = random_sym(rng, 3)
        w, u = eigh_desc(v)
        expected = (u * np.exp(0.7 * w)) @ u.T
        assert REL(geodesic_from_velocity(np.eye(3), v, 0.7), expected) < 1e-10

    def test_diagonal_exp(self):
        g = geodesic_from_velocity(np.eye(2), np.diag([1.0, -1.0]), 1.0)
        assert np.allclose(g, np.diag([np.e, 1.0 / np.e]))

    def test_consistency_with_point_geodesic(self, rng):
        for _ in range(50):
            # moderate conditioning: the endpoint condition number grows
            # like cond(p) * e^{2|v|}, and geodesic_point validates it
            p = random_spd(rng, 3, log_cond=4.0)
            v = 0.5 * random_sym(rng, 3)
            end = geodesic_from_velocity(p, v, 1.0)
            theta = rng.uniform(0.0, 1.0)
            assert REL(geodesic_from_velocity(p, v, theta),
                       geodesic_point(p, end, theta)) < 1e-9

    def test_negative_theta_rejected(self, rng):
        with pytest.raises(ValueError):
            geodesic_from_velocity(random_spd(rng, 2), np.eye(2), -1.0)


class TestTraceInner:
    def test_identity_base(self, rng):
        v, w = random_sym(rng, 3), random_sym(rng, 3)
        assert abs(trace_inner(np.eye(3), v, w) - np.trace(v @ w)) < 1e-12

    def test_self_inner_is_dimension(self, rng):
        p = random_spd(rng, 4)
        assert abs(trace_inner(p, p, p) - 4.0) < 1e-10

    def test_dimension_one(self):
        assert abs(trace_inner([[2.0]], [[1.0]], [[1.0]]) - 0.25) < 1e-14

    def test_positive_definite(self, rng):
        p = random_spd(rng, 3)
        for _ in range(20):
            v = random_sym(rng, 3)
            assert trace_inner(p, v, v) > 0.0


class TestLyapunov:
    def test_identity(self, rng):
        h = random_sym(rng, 3)
        assert REL(lyapunov_sqrt_solve(np.eye(3), h), h / 2) < 1e-12

    def test_scaled_identity(self, rng):
        h = random_sym(rng, 3)
        assert REL(lyapunov_sqrt_solve(4.0 * np.eye(3), h), h / 4) < 1e-12

    def test_derived_example(self):
        x = lyapunov_sqrt_solve(np.diag([1.0, 4.0]),
                                np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(x, [[0.0, 1 / 3], [1 / 3, 0.0]])

    def test_residual(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 6))
            p = random_spd(rng, n)
            h = random_sym(rng, n)
            x = lyapunov_sqrt_solve(p, h)
            ps, _ = spd_sqrt_pair(p)
            res = np.linalg.norm(ps @ x + x @ ps - h)
            assert res <= 1e-12 * max(np.linalg.norm(h), 1e-300)


class TestTangentBases:
    def test_sym_basis_identity_orthonormal(self):
        basis = sym_basis(3)
        assert len(basis) == 6
        gram = np.array([[np.trace(a @ b) for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(6), atol=1e-14)

    def test_onb_identity(self):
        basis = onb_at(np.eye(2))
        expected = sym_basis(2)
        for got, want in zip(basis, expected):
            assert np.allclose(got, want)

    def test_onb_scalar(self):
        (e,) = onb_at(np.array([[4.0]]))
        assert np.allclose(e, [[4.0]])

    def test_onb_gram_is_identity(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 5))
            p = random_spd(rng, n)
            basis = onb_at(p)
            k = len(basis)
            assert k == n * (n + 1) // 2
            gram = np.array([[trace_inner(p, a, b) for b in basis]
                             for a in basis])
            assert np.max(np.abs(gram - np.eye(k))) < 1e-10


class TestLogSingular:
    def test_identity(self):
        assert np.allclose(log_singular_vector(np.eye(3)), 0.0)

    def test_diagonal(self):
        assert np.allclose(log_singular_vector(np.diag([4.0, 0.5])),
                           [2.0, -1.0])

    def test_henon_jacobian_origin(self):
        got = log_singular_vector(np.array([[0.0, 0.3], [1.0, 0.0]]))
        assert np.allclose(got, [0.0, np.log2(0.3)])

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrixError):
            log_singular_vector(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_horn_majorization(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 5))
            g, h = random_invertible(rng, n), random_invertible(rng, n)
            lhs = np.cumsum(log_singular_vector(g @ h))
            rhs = np.cumsum(log_singular_vector(g) + log_singular_vector(h))
            assert np.all(lhs <= rhs + 1e-9)
            assert abs(lhs[-1] - rhs[-1]) < 1e-9

    def test_weyl_majorization(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 5))
            g = random_invertible(rng, n)
            chi = np.sort(np.log2(np.abs(np.linalg.eigvals(g))))[::-1]
            sigma = log_singular_vector(g)
            lhs, rhs = np.cumsum(chi), np.cumsum(sigma)
            assert np.all(lhs <= rhs + 1e-9)
            assert abs(lhs[-1] - rhs[-1]) < 1e-9
