"""Riemannian subgradients of the outer objective at (a, p).

Given the inner-max data (x*, k*), the objective splits into a part that
is linear in the coefficient vector a and a spectral part in p.  The
linear parts have explicit gradients (monomial-vector differences and
orbital-derivative vectors).  The spectral parts go through the
subdifferential of the sum of the k* largest (log) singular values or
eigenvalues: a Euclidean subgradient S of the spectral function composed
with X = zeta(p), pushed to the tangent space at p by the Riesz identity
<s2, v>_p = tr(S^T Dzeta(p) v) over an orthonormal tangent basis, with
each directional derivative Dzeta(p) v obtained from one Lyapunov solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import ConformalMetric, InnerMaxResult
from .poly import PolyBasis, monomial_vector, orbital_derivative_vector
from .spd import LN2, as_spd, eigh_desc, lyapunov_sqrt_solve, onb_at, \
    spd_sqrt_pair, symmetrize, trace_inner
from .systems import SystemCase


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector (s1, s2) at (a, p) with its product-metric norm
    sqrt(|s1|^2 + <s2, s2>_p)."""

    s1: np.ndarray
    s2: np.ndarray
    norm: float


def tangent_vector(p: np.ndarray, s1: np.ndarray,
                   s2: np.ndarray) -> TangentVector:
    s1 = np.asarray(s1, dtype=float).reshape(-1)
    s2 = symmetrize(np.asarray(s2, dtype=float))
    sq = float(s1 @ s1)
    if s2.size:
        sq += trace_inner(p, s2, s2)
    return TangentVector(s1, s2, float(np.sqrt(max(sq, 0.0))))


# ---------------------------------------------------------------------------
# linear (coefficient) parts

def discrete_linear_subgrad(basis: PolyBasis, x_star, phi_x_star,
                            k_star: int) -> np.ndarray:
    """(k*/(2 ln 2)) (m(phi(x*)) - m(x*)); zero when k* = 0."""
    if len(basis) == 0 or k_star == 0:
        return np.zeros(len(basis))
    diff = monomial_vector(basis, phi_x_star) - monomial_vector(basis, x_star)
    return (k_star / (2.0 * LN2)) * diff


def continuous_linear_subgrad(basis: PolyBasis, x_star, F_x_star,
                              k_star: int) -> np.ndarray:
    """k* times the orbital-derivative vector at x*; zero when k* = 0."""
    if len(basis) == 0 or k_star == 0:
        return np.zeros(len(basis))
    return k_star * orbital_derivative_vector(basis, x_star, F_x_star)


# ---------------------------------------------------------------------------
# spectral (matrix) parts

def _riesz_assemble(p: np.ndarray, S: np.ndarray, A: np.ndarray,
                    ps: np.ndarray, pis: np.ndarray,
                    continuous: bool) -> np.ndarray:
    """s2 = sum_i tr(S^T Dzeta(p) e_i) e_i over an ONB of (S_n, <.,.>_p)."""
    Api = A @ pis
    psApi = ps @ Api
    s2 = np.zeros_like(p)
    for e in onb_at(p):
        Y = lyapunov_sqrt_solve(p, e)
        D = Y @ Api - psApi @ (Y @ pis)
        if continuous:
            piY = pis @ Y
            D = D - piY @ (pis @ A.T @ ps) + pis @ A.T @ Y
        coeff = float(np.sum(S * D))
        if coeff != 0.0:
            s2 = s2 + coeff * e
    return symmetrize(s2)


def discrete_matrix_subgrad(p: np.ndarray, A: np.ndarray,
                            k_star: int) -> np.ndarray:
    """Subgradient in p of the sum of the k* largest log2 singular values
    of zeta(p) = p^{1/2} A p^{-1/2}."""
    p = as_spd(p)
    n = p.shape[0]
    if k_star == 0:
        return np.zeros((n, n))
    ps, pis = spd_sqrt_pair(p)
    X = ps @ A @ pis
    U, sv, Vt = np.linalg.svd(X)
    inv = np.zeros(n)
    inv[:k_star] = 1.0 / sv[:k_star]
    S = (U * inv) @ Vt / LN2
    return _riesz_assemble(p, S, A, ps, pis, continuous=False)


def continuous_matrix_subgrad(p: np.ndarray, A: np.ndarray,
                              k_star: int) -> np.ndarray:
    """Subgradient in p of the sum of the k* largest eigenvalues of
    zetahat(p) = p^{1/2} A p^{-1/2} + p^{-1/2} A^T p^{1/2}."""
    p = as_spd(p)
    n = p.shape[0]
    if k_star == 0:
        return np.zeros((n, n))
    ps, pis = spd_sqrt_pair(p)
    X = symmetrize(ps @ A @ pis + pis @ A.T @ ps)
    _, V = eigh_desc(X)
    Uk = V[:, :k_star]
    S = Uk @ Uk.T
    return _riesz_assemble(p, S, A, ps, pis, continuous=True)


def full_subgradient(case: SystemCase, m: ConformalMetric,
                     inner: InnerMaxResult) -> TangentVector:
    """Assemble (s1, s2) from the inner-max data for the case type.

    The conformal factor contributes only to s1; the spectral part is
    evaluated with the constant-metric matrix built from p and A(x*).
    """
    x_star = inner.x_star
    k_star = inner.k_star
    A = case.system.jac_point(x_star)
    if case.is_discrete:
        s1 = discrete_linear_subgrad(m.basis, x_star,
                                     case.system.map_point(x_star), k_star)
        s2 = discrete_matrix_subgrad(m.p, A, k_star)
    else:
        s1 = continuous_linear_subgrad(m.basis, x_star,
                                       case.system.field_point(x_star),
                                       k_star)
        s2 = continuous_matrix_subgrad(m.p, A, k_star)
    return tangent_vector(m.p, s1, s2)
