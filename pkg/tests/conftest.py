import numpy as np
import pytest

from restent.objective import ConformalMetric
from restent.poly import PolyBasis, PolyCoeffs
from restent.spd import symmetrize


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, log_cond=6.0):
    """Random SPD matrix with condition number up to e^log_cond."""
    q = random_orthogonal(rng, n)
    lam = np.exp(rng.uniform(-0.5 * log_cond, 0.5 * log_cond, n))
    return symmetrize((q * lam) @ q.T)


def random_invertible(rng, n, min_sv=1e-3):
    """Random GL(n) matrix with smallest singular value bounded away from 0."""
    u = random_orthogonal(rng, n)
    v = random_orthogonal(rng, n)
    sv = rng.uniform(min_sv, 3.0, n)
    return (u * sv) @ v.T


def random_sym(rng, n):
    return symmetrize(rng.standard_normal((n, n)))


#: Coefficient scales keeping e^{r_a} finite over each case's domain.
COEFF_SCALE = {"henon": 0.05, "bouncing_ball": 0.0, "lorenz": 2e-4}


def random_metric(case, rng, degree, coeff_scale=None, log_cond=1.0):
    """Random conformal metric adapted to a case's domain size."""
    n = case.system.dimension
    basis = PolyBasis.create(n, degree)
    scale = COEFF_SCALE[case.name] if coeff_scale is None else coeff_scale
    a = scale * rng.standard_normal(len(basis))
    return ConformalMetric(PolyCoeffs(basis, a), random_spd(rng, n, log_cond))


def random_domain_points(case, rng, count):
    """Uniform random points in the parameter box, mapped through the chart."""
    axes = case.domain.axes
    U = np.stack([rng.uniform(ax.lower, ax.upper, count) for ax in axes],
                 axis=1)
    return case.domain.chart(U)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
