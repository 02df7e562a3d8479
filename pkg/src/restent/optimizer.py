"""Riemannian subgradient iteration over conformal metrics.

Normalized negative-subgradient steps along product geodesics with a
diminishing step rule theta_k = a/(k+b).  The polynomial coefficient
block is measured in the L2 inner product of the search grid (see
GridWorkspace.gram), which makes the step geometry independent of the
monomial scaling of the domain.  The value sequence is not monotone,
so the best value and the metric achieving it are tracked across the
whole run.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .objective import ConformalMetric, GridWorkspace, InnerMaxResult, LN2
from .poly import PolyCoeffs
from .spd import geodesic_from_velocity, trace_inner
from .subgrad import TangentVector, full_subgradient
from .systems import SystemCase

#: Relative threshold under which a subgradient counts as zero and the
#: iteration stops (an exact zero is measure-zero in floating point).
ZERO_SUBGRAD_RTOL = 1e-14


@dataclass(frozen=True)
class StepRule:
    """Diminishing steps theta_k = a/(k+b); sum theta_k diverges while
    sum theta_k^2 converges, as the method requires."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"step rule needs a > 0, got {self.a}")
        if self.b < 0.0:
            raise ValueError(f"step rule needs b >= 0, got {self.b}")

    def theta(self, k: int) -> float:
        return self.a / (k + self.b)


@dataclass(frozen=True)
class IterationRecord:
    k: int
    theta: float
    value: float
    best_value: float
    x_star: np.ndarray
    k_star: int
    subgrad_norm: float
    gap_ok: bool
    wall_time_ms: float


@dataclass(frozen=True)
class RunResult:
    best_value: float
    best_metric: ConformalMetric
    best_iteration: int
    records: list[IterationRecord]
    config: dict


class IterationError(RuntimeError):
    """An iteration failed; the records collected so far are preserved."""

    def __init__(self, message: str, records: list[IterationRecord]):
        super().__init__(message)
        self.records = records


def riesz_direction(p: np.ndarray, s: TangentVector,
                    gram: np.ndarray | None = None):
    """Riesz representative of the subgradient and its Riemannian norm.

    The polynomial block of the product metric carries the L2(grid)
    inner product <u, v> = a_u^T G a_v (G from GridWorkspace.gram); its
    Riesz representative is G^{-1} s1.  With gram=None the coefficient
    block is treated as Euclidean.  The matrix block s2 is already the
    representative in the trace metric at p.
    """
    if gram is not None and s.s1.size:
        g1 = np.linalg.solve(gram, s.s1)
        norm = float(np.sqrt(s.s1 @ g1 + trace_inner(p, s.s2, s.s2)))
    else:
        g1 = s.s1
        norm = s.norm
    return g1, norm


def step(m: ConformalMetric, s: TangentVector, theta: float,
         gram: np.ndarray | None = None) -> ConformalMetric:
    """Geodesic step of length theta along the unit vector -s/|s|."""
    g1, norm = riesz_direction(m.p, s, gram)
    if not norm > 0.0:
        raise ValueError("cannot step along a zero subgradient")
    if not theta > 0.0:
        raise ValueError(f"step size must be positive, got {theta}")
    v1 = -g1 / norm
    v2 = -s.s2 / norm
    a_next = m.a + theta * v1
    p_next = geodesic_from_velocity(m.p, v2, theta)
    return ConformalMetric(PolyCoeffs(m.basis, a_next), p_next)


def run(case: SystemCase, initial: ConformalMetric, steps: StepRule,
        max_iters: int, counts, refine: bool = True, workers: int = 1,
        config: dict | None = None) -> RunResult:
    """Iterate maximize -> subgradient -> step for max_iters steps.

    Records one entry per visited point (max_iters + 1 in total, the
    initial metric included as iteration 1).  Terminates early on a
    numerically zero subgradient.  Any failure mid-run raises
    IterationError carrying the partial records.
    """
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    ws = GridWorkspace(case, counts, refine=refine, workers=workers)
    gram = ws.gram(initial.basis) if len(initial.basis) else None
    records: list[IterationRecord] = []
    metric = initial
    best_value = np.inf
    best_metric = initial
    best_iteration = 0
    divisor = 1.0 if case.is_discrete else 2.0 * LN2

    for k in range(1, max_iters + 2):
        t0 = time.perf_counter()
        try:
            inner = ws.maximize(metric)
            value = inner.value / divisor
            sub = full_subgradient(case, metric, inner)
            _, norm = riesz_direction(metric.p, sub, gram)
        except Exception as exc:
            raise IterationError(f"iteration {k} failed: {exc}",
                                 records) from exc
        if value < best_value:
            best_value = value
            best_metric = metric
            best_iteration = k
        theta = steps.theta(k)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        records.append(IterationRecord(
            k=k, theta=theta, value=value, best_value=best_value,
            x_star=inner.x_star, k_star=inner.k_star,
            subgrad_norm=norm, gap_ok=inner.gap_ok,
            wall_time_ms=elapsed_ms))
        if k == max_iters + 1:
            break
        if norm <= ZERO_SUBGRAD_RTOL * (1.0 + abs(value)):
            break
        try:
            metric = step(metric, sub, theta, gram)
        except Exception as exc:
            raise IterationError(f"iteration {k} step failed: {exc}",
                                 records) from exc

    return RunResult(best_value, best_metric, best_iteration, records,
                     dict(config or {}))


def evaluate_metric(case: SystemCase, m: ConformalMetric, counts,
                    refine: bool = True, workers: int = 1) -> float:
    """Entropy estimate of a stored metric on the given grid."""
    return GridWorkspace(case, counts, refine=refine,
                         workers=workers).entropy_estimate(m)
