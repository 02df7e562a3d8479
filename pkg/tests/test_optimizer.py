import numpy as np
import pytest

from restent.objective import ConformalMetric, identity_metric, maximize
from restent.optimizer import (IterationError, StepRule, evaluate_metric,
                               run, step)
from restent.poly import PolyBasis, PolyCoeffs
from restent.spd import trace_inner
from restent.subgrad import TangentVector, tangent_vector
from restent.systems import (bouncing_ball_case, bouncing_ball_entropy,
                             get_case, henon_case, lorenz_case,
                             lorenz_entropy)
from conftest import random_metric, random_spd, random_sym


class TestStepRule:
    def test_values(self):
        rule = StepRule(16.0, 0.0)
        assert rule.theta(1) == 16.0
        assert rule.theta(4) == 4.0

    def test_validation(self):
        with pytest.raises(ValueError):
            StepRule(0.0)
        with pytest.raises(ValueError):
            StepRule(1.0, -1.0)


class TestStep:
    def test_pure_euclidean_move(self, rng):
        case = henon_case()
        m = random_metric(case, rng, 2)
        s1 = np.zeros(len(m.basis))
        s1[0] = 2.0
        s = tangent_vector(m.p, s1, np.zeros((2, 2)))
        out = step(m, s, 0.5)
        assert np.allclose(out.p, m.p)
        want = m.a.copy()
        want[0] -= 0.5
        assert np.allclose(out.a, want)

    def test_exp_at_identity(self):
        m = identity_metric(2, 0)
        v = np.diag([1.0, -1.0]) / np.sqrt(2.0)
        s = tangent_vector(m.p, np.zeros(0), -v)
        out = step(m, s, 0.3)
        assert np.allclose(out.p, np.diag([np.exp(0.3 / np.sqrt(2)),
                                           np.exp(-0.3 / np.sqrt(2))]))

    def test_unit_velocity(self, rng):
        case = lorenz_case()
        m = random_metric(case, rng, 2)
        s = tangent_vector(m.p, rng.standard_normal(len(m.basis)),
                           random_sym(rng, 3))
        v1 = -s.s1 / s.norm
        v2 = -s.s2 / s.norm
        norm_sq = v1 @ v1 + trace_inner(m.p, v2, v2)
        assert abs(norm_sq - 1.0) < 1e-10

    def test_zero_subgradient_rejected(self, rng):
        case = henon_case()
        m = random_metric(case, rng, 2)
        s = TangentVector(np.zeros(len(m.basis)), np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError):
            step(m, s, 0.1)


class TestRun:
    def test_zero_iterations_reports_initial(self):
        case = bouncing_ball_case()
        res = run(case, identity_metric(2, 0), StepRule(1.0), 0, (100, 100))
        assert len(res.records) == 1
        init = maximize(case, identity_metric(2, 0), (100, 100)).value
        assert res.records[0].value == init
        assert res.best_value == init
        assert res.best_iteration == 1

    def test_best_tracking_invariants(self):
        case = bouncing_ball_case()
        res = run(case, identity_metric(2, 0), StepRule(1.0), 15, (100, 100))
        assert len(res.records) == 16
        best = np.inf
        for r in res.records:
            best = min(best, r.value)
            assert r.best_value == best
            assert r.best_value <= r.value
        assert res.best_value == best

    def test_best_metric_reevaluates_to_best_value(self):
        case = bouncing_ball_case()
        counts = (100, 100)
        res = run(case, identity_metric(2, 0), StepRule(1.0), 15, counts)
        again = evaluate_metric(case, res.best_metric, counts)
        assert abs(again - res.best_value) <= 1e-12 * (1 + abs(res.best_value))

    def test_values_stay_above_closed_form(self):
        case = bouncing_ball_case()
        res = run(case, identity_metric(2, 0), StepRule(1.0), 15, (100, 100))
        ref = bouncing_ball_entropy(0.1, 2.0)
        for r in res.records:
            assert r.value >= ref - 1e-6
        case = lorenz_case()
        res = run(case, identity_metric(3, 2), StepRule(2.0), 5, (40, 12, 20))
        ref = lorenz_entropy(10.0, 28.0, 8 / 3)
        for r in res.records:
            assert r.value >= ref - 1e-6

    def test_deterministic_across_worker_counts(self):
        case = lorenz_case()
        runs = [run(case, identity_metric(3, 2), StepRule(2.0), 5,
                    (30, 10, 14), workers=w) for w in (1, 4)]
        for r1, r4 in zip(runs[0].records, runs[1].records):
            assert r1.value == r4.value
            assert r1.subgrad_norm == r4.subgrad_norm
            assert np.array_equal(r1.x_star, r4.x_star)

    def test_iteration_error_keeps_records(self):
        from restent.systems import (Box, DiscreteSystem, SystemCase)

        def phi(X):
            return 0.5 * X

        def jac(X):
            # Jacobian degenerates after the map contracts toward 0.4
            J = np.zeros((X.shape[0], 1, 1))
            J[:, 0, 0] = np.maximum(X[:, 0] - 0.4, 0.0)
            return J

        case = SystemCase(name="degenerate",
                          system=DiscreteSystem(1, phi, jac),
                          domain=Box(np.array([0.0]), np.array([1.0])))
        basis = PolyBasis.create(1, 0)
        m = ConformalMetric(PolyCoeffs(basis, np.zeros(0)),
                            np.array([[1.0]]))
        with pytest.raises(IterationError):
            run(case, m, StepRule(1.0), 3, (11,))

    def test_paper_bouncing_ball_metric_evaluates_to_best(self):
        case = bouncing_ball_case()
        p = np.array([[1.362257, 0.1134348], [0.1134348, 0.7435217]])
        basis = PolyBasis.create(2, 0)
        m = ConformalMetric(PolyCoeffs(basis, np.zeros(0)), p)
        got = evaluate_metric(case, m, (1000, 1000), workers=2)
        assert abs(got - 1.617015883762) < 1e-9
