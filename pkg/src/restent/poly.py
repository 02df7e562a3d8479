"""Multi-index polynomial bases of bounded degree in n variables.

Home of the conformal exponent r_a(x): evaluation, monomial vectors,
spatial gradients and orbital derivatives, all linear in the coefficient
vector a.  No polynomial arithmetic (products, composition) is provided.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

#: Serialization tag for the monomial ordering below.  A coefficient
#: vector is meaningless without it.
ORDERING_TAG = "grlex-v1"


def _ordered_monomials(n_vars: int, degree: int, include_constant: bool):
    """Graded ordering: ascending total degree; within a degree, mixed
    monomials (two or more variables) before pure powers, each group in
    descending lexicographic order of the exponent tuple.

    For n=2, d=2 this yields 1, x1, x2, x1*x2, x1^2, x2^2.
    """
    monomials = []
    lo = 0 if include_constant else 1
    for deg in range(lo, degree + 1):
        if deg == 0:
            monomials.append((0,) * n_vars)
            continue
        of_degree = [e for e in product(range(deg + 1), repeat=n_vars)
                     if sum(e) == deg]
        mixed = sorted((e for e in of_degree if sum(v > 0 for v in e) >= 2),
                       reverse=True)
        pure = sorted((e for e in of_degree if sum(v > 0 for v in e) <= 1),
                      reverse=True)
        monomials.extend(mixed)
        monomials.extend(pure)
    return tuple(monomials)


@dataclass(frozen=True)
class PolyBasis:
    """Ordered monomial basis of degree <= degree in n_vars variables."""

    n_vars: int
    degree: int
    include_constant: bool
    monomials: tuple[tuple[int, ...], ...]

    @classmethod
    def create(cls, n_vars: int, degree: int,
               include_constant: bool = False) -> "PolyBasis":
        if n_vars < 1:
            raise ValueError("n_vars must be positive")
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        return cls(n_vars, degree, include_constant,
                   _ordered_monomials(n_vars, degree, include_constant))

    def __len__(self) -> int:
        return len(self.monomials)

    def descriptor(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "degree": self.degree,
            "include_constant": self.include_constant,
            "ordering": ORDERING_TAG,
        }


def monomial_count(n_vars: int, degree: int, include_constant: bool) -> int:
    full = math.comb(degree + n_vars, n_vars)
    return full if include_constant else full - 1


@dataclass(frozen=True)
class PolyCoeffs:
    """Coefficient vector a over a fixed basis; represents r_a."""

    basis: PolyBasis
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if a.size != len(self.basis):
            raise ValueError(
                f"coefficient length {a.size} does not match basis size "
                f"{len(self.basis)}"
            )
        if a.size and not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "a", a)


def _check_points(basis: PolyBasis, x) -> tuple[np.ndarray, bool]:
    """Normalize to an (m, n_vars) array; flag whether input was 1-D."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != basis.n_vars:
        raise ValueError(
            f"points have dimension {arr.shape[1]}, basis expects {basis.n_vars}"
        )
    return arr, single


def _var_powers(basis: PolyBasis, X: np.ndarray) -> list[list[np.ndarray]]:
    m = X.shape[0]
    pows = []
    for v in range(basis.n_vars):
        col = [np.ones(m)]
        for _ in range(basis.degree):
            col.append(col[-1] * X[:, v])
        pows.append(col)
    return pows


def monomial_matrix(basis: PolyBasis, X) -> np.ndarray:
    """(m, len(basis)) matrix of monomial values at the rows of X."""
    X, _ = _check_points(basis, X)
    pows = _var_powers(basis, X)
    out = np.empty((X.shape[0], len(basis)))
    for j, expo in enumerate(basis.monomials):
        col = None
        for v, ev in enumerate(expo):
            if ev:
                col = pows[v][ev] if col is None else col * pows[v][ev]
        out[:, j] = 1.0 if col is None else col
    return out


def monomial_vector(basis: PolyBasis, x) -> np.ndarray:
    """m(x) with eval_poly(a, x) = <a, m(x)> for all a."""
    return monomial_matrix(basis, x)[0]


def eval_poly_batch(basis: PolyBasis, a: np.ndarray, X) -> np.ndarray:
    if len(basis) == 0:
        X, _ = _check_points(basis, X)
        return np.zeros(X.shape[0])
    return monomial_matrix(basis, X) @ a


def eval_poly(coeffs: PolyCoeffs, x) -> float:
    """r_a(x) = sum of a_m x^m over the basis monomials."""
    _, single = _check_points(coeffs.basis, x)
    if not single:
        raise ValueError("eval_poly expects a single point")
    if len(coeffs.basis) == 0:
        return 0.0
    return float(monomial_vector(coeffs.basis, x) @ coeffs.a)


def grad_poly_x(coeffs: PolyCoeffs, x) -> np.ndarray:
    """Spatial gradient of r_a at a single point x."""
    X, single = _check_points(coeffs.basis, x)
    if not single:
        raise ValueError("grad_poly_x expects a single point")
    basis = coeffs.basis
    pows = _var_powers(basis, X)
    grad = np.zeros(basis.n_vars)
    for j, expo in enumerate(basis.monomials):
        aj = coeffs.a[j]
        if aj == 0.0:
            continue
        for v, ev in enumerate(expo):
            if not ev:
                continue
            term = aj * ev
            for u, eu in enumerate(expo):
                k = eu - (1 if u == v else 0)
                if k:
                    term = term * pows[u][k][0]
            grad[v] += term
    return grad


def orbital_matrix(basis: PolyBasis, X, FX) -> np.ndarray:
    """(m, len(basis)) matrix with <a, row> = grad r_a(x) . F(x) per row.

    The constant monomial's column is identically zero.
    """
    X, _ = _check_points(basis, X)
    FX = np.atleast_2d(np.asarray(FX, dtype=float))
    if FX.shape != X.shape:
        raise ValueError(f"F values shape {FX.shape} does not match points {X.shape}")
    pows = _var_powers(basis, X)
    m = X.shape[0]
    out = np.zeros((m, len(basis)))
    for j, expo in enumerate(basis.monomials):
        acc = None
        for v, ev in enumerate(expo):
            if not ev:
                continue
            term = ev * FX[:, v]
            for u, eu in enumerate(expo):
                k = eu - (1 if u == v else 0)
                if k:
                    term = term * pows[u][k]
            acc = term if acc is None else acc + term
        if acc is not None:
            out[:, j] = acc
    return out


def orbital_derivative_vector(basis: PolyBasis, x, Fx) -> np.ndarray:
    """Vector whose inner product with a equals the orbital derivative
    of r_a at x along Fx."""
    _, single = _check_points(basis, x)
    if not single:
        raise ValueError("orbital_derivative_vector expects a single point")
    return orbital_matrix(basis, np.asarray(x, dtype=float)[None, :],
                          np.asarray(Fx, dtype=float)[None, :])[0]
