"""Pointwise objectives and the inner maximization over the domain.

For a conformal metric P(x) = e^{r_a(x)} p the discrete functional at x is
the sum of positive base-2 log singular values of

    B(x) = e^{(r_a(phi(x)) - r_a(x))/2} p^{1/2} A(x) p^{-1/2},

and the continuous analog sums the positive eigenvalues of

    p^{1/2} A(x) p^{-1/2} + p^{-1/2} A(x)^T p^{1/2} + rdot_a(x) I.

The inner maximization is a brute-force grid search with exactly one
refinement pass around the coarse maximizer.  Grid evaluation dominates
the run time, so the per-grid data that does not depend on the metric
(Jacobians, monomial matrices) is computed once and cached, and the
per-metric sweep runs on vectorized closed-form kernels for the small
dimensions that actually occur (2x2 singular values, symmetric 3x3
eigenvalues) with a LAPACK fallback for everything else.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .poly import PolyBasis, PolyCoeffs, eval_poly, grad_poly_x, \
    monomial_matrix, orbital_matrix
from .spd import EIG_RATIO_FLOOR, LN2, LOG2E, as_spd, eigh_desc, \
    geodesic_point, spd_sqrt_pair, symmetrize
from .systems import ContinuousSystem, DiscreteSystem, GridPoints, \
    SystemCase, grid_points, refine_around

#: Grid sweeps are split into fixed-size chunks; the chunking (and hence
#: every floating-point reduction) is independent of the worker count, so
#: results are bit-identical for any level of parallelism.
CHUNK_SIZE = 1 << 16

#: Relative spectral-gap margin below which gap_ok is flagged false.
GAP_MARGIN = 1e-8


class DomainAssumptionError(ValueError):
    """A standing assumption of the method fails at a concrete point."""


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class ConformalMetric:
    """The optimization variable (a, p) representing P(x) = e^{r_a(x)} p."""

    coeffs: PolyCoeffs
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", as_spd(self.p))

    @property
    def basis(self) -> PolyBasis:
        return self.coeffs.basis

    @property
    def a(self) -> np.ndarray:
        return self.coeffs.a


def identity_metric(dimension: int, degree: int,
                    include_constant: bool = False) -> ConformalMetric:
    """The standard starting point a = 0, p = I."""
    basis = PolyBasis.create(dimension, degree, include_constant)
    return ConformalMetric(PolyCoeffs(basis, np.zeros(len(basis))),
                           np.eye(dimension))


def metric_geodesic(m0: ConformalMetric, m1: ConformalMetric,
                    theta: float) -> ConformalMetric:
    """Product geodesic ((1-theta) a + theta b, p #_theta q)."""
    if m0.basis != m1.basis:
        raise ValueError("metrics live over different bases")
    a = (1.0 - theta) * m0.a + theta * m1.a
    return ConformalMetric(PolyCoeffs(m0.basis, a),
                           geodesic_point(m0.p, m1.p, theta))


@dataclass(frozen=True)
class InnerMaxResult:
    """Outcome of the inner maximization.

    value is in bits for discrete systems and the pre-division sum of
    positive generalized eigenvalues for continuous ones; spectrum is the
    full descending spectrum at the maximizer.
    """

    x_star: np.ndarray
    x_star_param: np.ndarray
    k_star: int
    value: float
    spectrum: np.ndarray
    gap_ok: bool


# ---------------------------------------------------------------------------
# pointwise objectives

def _k_star_and_value(spectrum: np.ndarray) -> tuple[int, float]:
    """Largest partial sum over a descending spectrum; smallest k on ties,
    so only strictly positive entries count."""
    k = int(np.sum(spectrum > 0.0))
    return k, (float(np.sum(spectrum[:k])) if k else 0.0)


def _gap_ok(levels: np.ndarray, k_star: int) -> bool:
    """Relative spectral gap at the cut index; trivially true at the ends."""
    if k_star <= 0 or k_star >= levels.size:
        return True
    scale = float(np.max(np.abs(levels)))
    if scale == 0.0:
        return False
    return bool((levels[k_star - 1] - levels[k_star]) / scale >= GAP_MARGIN)


def discrete_spectrum_at(sys: DiscreteSystem, m: ConformalMetric, x,
                         sqrt_pair=None) -> np.ndarray:
    """Descending log2 singular values of B(x) for P = e^{r_a} p."""
    x = np.asarray(x, dtype=float)
    ps, pis = sqrt_pair if sqrt_pair is not None else spd_sqrt_pair(m.p)
    A = sys.jac_point(x)
    C = ps @ A @ pis
    sv = np.linalg.svd(C, compute_uv=False)
    if sv[-1] <= EIG_RATIO_FLOOR * sv[0]:
        raise DomainAssumptionError(
            f"Jacobian is numerically singular at x = {x.tolist()}")
    shift = 0.5 * LOG2E * (eval_poly(m.coeffs, sys.map_point(x))
                           - eval_poly(m.coeffs, x))
    return np.log2(sv) + shift


def continuous_spectrum_at(sys: ContinuousSystem, m: ConformalMetric, x,
                           sqrt_pair=None) -> np.ndarray:
    """Descending eigenvalues zeta_i of p^{1/2}Ap^{-1/2} + transpose + rdot I."""
    x = np.asarray(x, dtype=float)
    ps, pis = sqrt_pair if sqrt_pair is not None else spd_sqrt_pair(m.p)
    A = sys.jac_point(x)
    H = ps @ A @ pis
    rdot = float(grad_poly_x(m.coeffs, x) @ sys.field_point(x))
    w = np.linalg.eigvalsh(symmetrize(H + H.T))[::-1]
    return w + rdot


def discrete_sigma_at(sys: DiscreteSystem, m: ConformalMetric, x,
                      sqrt_pair=None) -> tuple[float, int, np.ndarray]:
    """(value, k_star, spectrum) of the discrete pointwise objective."""
    spectrum = discrete_spectrum_at(sys, m, x, sqrt_pair)
    k, value = _k_star_and_value(spectrum)
    return value, k, spectrum


def continuous_sigma_at(sys: ContinuousSystem, m: ConformalMetric, x,
                        sqrt_pair=None) -> tuple[float, int, np.ndarray]:
    """(value, k_star, spectrum) of the continuous pointwise objective
    (value before division by 2 ln 2)."""
    spectrum = continuous_spectrum_at(sys, m, x, sqrt_pair)
    k, value = _k_star_and_value(spectrum)
    return value, k, spectrum


# ---------------------------------------------------------------------------
# vectorized kernels

def _sandwich(ms: np.ndarray, A: np.ndarray, mi: np.ndarray) -> np.ndarray:
    """ms @ A[i] @ mi for a batch, via two large matrix products."""
    m, n, _ = A.shape
    AW = (A.reshape(m * n, n) @ mi).reshape(m, n, n)
    # ms @ B = (B^T @ ms^T)^T, batched through one flat product
    T = (np.ascontiguousarray(AW.transpose(0, 2, 1)).reshape(m * n, n)
         @ ms.T).reshape(m, n, n)
    return T.transpose(0, 2, 1)


def _discrete_values_2x2(C: np.ndarray, shift, points) -> np.ndarray:
    c00, c01 = C[:, 0, 0], C[:, 0, 1]
    c10, c11 = C[:, 1, 0], C[:, 1, 1]
    t = c00 * c00 + c01 * c01 + c10 * c10 + c11 * c11
    det = c00 * c11 - c01 * c10
    adet = np.abs(det)
    disc = np.sqrt(np.maximum(t * t - 4.0 * det * det, 0.0))
    a1sq = 0.5 * (t + disc)
    bad = adet <= EIG_RATIO_FLOOR * a1sq
    if np.any(bad):
        x = points[int(np.argmax(bad))]
        raise DomainAssumptionError(
            f"Jacobian is numerically singular at x = {x.tolist()}")
    log_a1 = 0.5 * np.log2(a1sq)
    s1 = log_a1 + shift
    s2 = (np.log2(adet) - log_a1) + shift
    return np.maximum(s1, 0.0) + np.maximum(s2, 0.0)


def _discrete_values_generic(C: np.ndarray, shift, points) -> np.ndarray:
    sv = np.linalg.svd(C, compute_uv=False)
    bad = sv[:, -1] <= EIG_RATIO_FLOOR * sv[:, 0]
    if np.any(bad):
        x = points[int(np.argmax(bad))]
        raise DomainAssumptionError(
            f"Jacobian is numerically singular at x = {x.tolist()}")
    logs = np.log2(sv) + np.asarray(shift).reshape(-1, 1)
    return np.maximum(logs, 0.0).sum(axis=1)


def _continuous_values_3x3(H2: np.ndarray, rdot) -> np.ndarray:
    """Sum of positive eigenvalues of symmetric 3x3 batch H2 + rdot*I,
    by the trigonometric closed form."""
    a = H2[:, 0, 0] + rdot
    b = H2[:, 1, 1] + rdot
    c = H2[:, 2, 2] + rdot
    d, e, f = H2[:, 0, 1], H2[:, 0, 2], H2[:, 1, 2]
    q = (a + b + c) / 3.0
    aa, bb, cc = a - q, b - q, c - q
    p2 = aa * aa + bb * bb + cc * cc + 2.0 * (d * d + e * e + f * f)
    p = np.sqrt(p2 / 6.0)
    detB = (aa * (bb * cc - f * f) - d * (d * cc - f * e)
            + e * (d * f - bb * e))
    safe = np.where(p > 0.0, p, 1.0)
    r = np.clip(detB / (2.0 * safe ** 3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return (np.maximum(e1, 0.0) + np.maximum(e2, 0.0)
            + np.maximum(e3, 0.0))


def _continuous_values_2x2(H2: np.ndarray, rdot) -> np.ndarray:
    a = H2[:, 0, 0] + rdot
    b = H2[:, 1, 1] + rdot
    d = H2[:, 0, 1]
    mid = 0.5 * (a + b)
    rad = np.sqrt(0.25 * (a - b) ** 2 + d * d)
    return np.maximum(mid + rad, 0.0) + np.maximum(mid - rad, 0.0)


def _continuous_values_generic(H2: np.ndarray, rdot) -> np.ndarray:
    w = np.linalg.eigvalsh(symmetrize(H2))
    w = w + np.asarray(rdot).reshape(-1, 1)
    return np.maximum(w, 0.0).sum(axis=1)


# ---------------------------------------------------------------------------
# cached grid data and the sweep

class _StaticGrid:
    """Per-grid data that does not depend on the metric."""

    def __init__(self, case: SystemCase, grid: GridPoints):
        self.grid = grid
        self.npoints = grid.points.shape[0]
        self.A = case.system.jacobian(grid.points)
        if case.is_discrete:
            self.phi_points = case.system.phi(grid.points)
        else:
            self.F = case.system.field(grid.points)
        self._per_basis: dict[PolyBasis, np.ndarray] = {}
        self._case = case

    def linear_term(self, basis: PolyBasis) -> np.ndarray:
        """(m, len(basis)) matrix L with L @ a = Delta r (discrete) or
        rdot_a (continuous) at the grid points."""
        cached = self._per_basis.get(basis)
        if cached is not None:
            return cached
        if self._case.is_discrete:
            L = monomial_matrix(basis, self.phi_points) \
                - monomial_matrix(basis, self.grid.points)
        else:
            L = orbital_matrix(basis, self.grid.points, self.F)
        self._per_basis[basis] = L
        return L


def _sweep_values(static: _StaticGrid, discrete: bool, a: np.ndarray,
                  ms: np.ndarray, mi: np.ndarray, workers: int) -> np.ndarray:
    m = static.npoints
    n = ms.shape[0]
    have_a = a.size > 0
    out = np.empty(m)

    def work(sl: slice) -> None:
        A = static.A[sl]
        C = _sandwich(ms, A, mi)
        if discrete:
            shift = 0.5 * LOG2E * static._lin[sl] if have_a else 0.0
            pts = static.grid.points[sl]
            if n == 2:
                out[sl] = _discrete_values_2x2(C, shift, pts)
            else:
                out[sl] = _discrete_values_generic(C, shift, pts)
        else:
            H2 = C + C.transpose(0, 2, 1)
            rdot = static._lin[sl] if have_a else 0.0
            if n == 3:
                out[sl] = _continuous_values_3x3(H2, rdot)
            elif n == 2:
                out[sl] = _continuous_values_2x2(H2, rdot)
            else:
                out[sl] = _continuous_values_generic(H2, rdot)

    slices = [slice(i, min(i + CHUNK_SIZE, m))
              for i in range(0, m, CHUNK_SIZE)]
    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, slices))
    else:
        for sl in slices:
            work(sl)
    return out


class GridWorkspace:
    """Reusable inner-maximization engine for one (case, grid) pair.

    Holds the metric-independent grid data across iterations of the outer
    optimization; maximize() is then a pure, deterministic function of the
    metric regardless of the worker count.
    """

    def __init__(self, case: SystemCase, counts, refine: bool = True,
                 workers: int = 1):
        self.case = case
        self.counts = tuple(int(c) for c in counts)
        self.refine = bool(refine)
        self.workers = max(1, int(workers))
        self._coarse = _StaticGrid(case, grid_points(case.domain, self.counts))
        self._refine_key: tuple | None = None
        self._refine_static: _StaticGrid | None = None
        self._gram: dict[PolyBasis, np.ndarray] = {}

    # -- internals --------------------------------------------------------

    def _values(self, static: _StaticGrid, m: ConformalMetric,
                ms, mi) -> np.ndarray:
        a = m.a
        static._lin = static.linear_term(m.basis) @ a if a.size else None
        try:
            return _sweep_values(static, self.case.is_discrete, a, ms, mi,
                                 self.workers)
        finally:
            static._lin = None

    def _refined(self, x_param: np.ndarray) -> _StaticGrid | None:
        key = tuple(float(v) for v in x_param)
        if key != self._refine_key:
            grid = refine_around(self.case.domain, self.counts, x_param)
            self._refine_static = _StaticGrid(self.case, grid) \
                if grid.points.shape[0] else None
            self._refine_key = key
        return self._refine_static

    def _precise(self, m: ConformalMetric, x, sqrt_pair):
        if self.case.is_discrete:
            return discrete_sigma_at(self.case.system, m, x, sqrt_pair)
        return continuous_sigma_at(self.case.system, m, x, sqrt_pair)

    # -- public -----------------------------------------------------------

    def gram(self, basis: PolyBasis) -> np.ndarray:
        """Gram matrix of the basis monomials in the L2 inner product of
        the coarse grid, <u, v> = mean over grid points of u(x)v(x).

        This is the inner product under which polynomial subgradient
        steps are measured; it makes the iteration independent of the
        monomial scaling (the raw monomials are wildly unbalanced on
        large domains, e.g. z^2 vs. x on the Lorenz ball).
        """
        cached = self._gram.get(basis)
        if cached is not None:
            return cached
        pts = self._coarse.grid.points
        G = np.zeros((len(basis), len(basis)))
        for lo in range(0, pts.shape[0], CHUNK_SIZE):
            M = monomial_matrix(basis, pts[lo:lo + CHUNK_SIZE])
            G += M.T @ M
        G /= pts.shape[0]
        self._gram[basis] = G
        return G

    def maximize(self, m: ConformalMetric) -> InnerMaxResult:
        if m.basis.n_vars != self.case.system.dimension:
            raise ValueError("metric basis dimension does not match system")
        sqrt_pair = spd_sqrt_pair(m.p)
        coarse = self._coarse
        vals = self._values(coarse, m, *sqrt_pair)
        i = int(np.argmax(vals))  # first occurrence = smallest linear index
        best_x = coarse.grid.points[i]
        best_param = coarse.grid.params[i]
        value, k_star, spectrum = self._precise(m, best_x, sqrt_pair)

        if self.refine:
            fine = self._refined(best_param)
            if fine is not None:
                fvals = self._values(fine, m, *sqrt_pair)
                order = np.argsort(fine.grid.indices, kind="stable")
                j = int(order[np.argmax(fvals[order])])
                fval, fk, fspec = self._precise(m, fine.grid.points[j],
                                                sqrt_pair)
                if fval > value:
                    best_x = fine.grid.points[j]
                    best_param = fine.grid.params[j]
                    value, k_star, spectrum = fval, fk, fspec

        if self.case.is_discrete:
            levels = np.exp2(spectrum)
        else:
            levels = spectrum
        return InnerMaxResult(np.array(best_x), np.array(best_param),
                              k_star, value, spectrum,
                              _gap_ok(levels, k_star))

    def entropy_estimate(self, m: ConformalMetric) -> float:
        res = self.maximize(m)
        return res.value if self.case.is_discrete \
            else res.value / (2.0 * LN2)


def maximize(case: SystemCase, m: ConformalMetric, counts,
             refine: bool = True, workers: int = 1) -> InnerMaxResult:
    """One-shot inner maximization (builds a workspace and discards it)."""
    return GridWorkspace(case, counts, refine, workers).maximize(m)


def entropy_estimate(case: SystemCase, m: ConformalMetric, counts,
                     refine: bool = True, workers: int = 1) -> float:
    """Upper bound estimate: the discrete value directly (bits), or the
    continuous inner maximum divided by 2 ln 2."""
    return GridWorkspace(case, counts, refine, workers).entropy_estimate(m)
