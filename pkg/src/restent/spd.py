"""Geometry of the manifold of symmetric positive definite matrices.

The manifold S+_n carries the trace metric <v,w>_p = tr(p^-1 v p^-1 w).
Everything here works on plain float ndarrays; symmetric / positive
definite inputs are validated on entry, and every matrix assembled from
products is re-symmetrized before it is fed to a symmetric eigensolver.

All fractional powers and square roots go through one symmetric
eigendecomposition, so p^{1/2}, p^{-1/2} and [.]^theta share a single
factorization.
"""
from __future__ import annotations

import numpy as np

#: Relative eigenvalue floor: a symmetric matrix with min eigenvalue below
#: this fraction of the max is rejected as not positive definite, and a
#: general matrix with such a singular-value ratio is treated as singular.
EIG_RATIO_FLOOR = 1e-14

LN2 = float(np.log(2.0))
LOG2E = 1.0 / LN2


class SingularMatrixError(ValueError):
    """A matrix required to be invertible is numerically singular."""


def symmetrize(m: np.ndarray) -> np.ndarray:
    """(m + m^T)/2, batched over leading axes."""
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def as_symmetric(m, tol: float = 1e-10) -> np.ndarray:
    """Validate and return a symmetrized float copy of a square matrix."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
    if float(np.abs(a - a.T).max(initial=0.0)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return symmetrize(a)


def as_spd(m) -> np.ndarray:
    """Validate symmetric positive definiteness (eigenvalue check)."""
    a = as_symmetric(m)
    w = np.linalg.eigvalsh(a)
    if w[-1] <= 0.0 or w[0] <= EIG_RATIO_FLOOR * w[-1]:
        raise ValueError(
            "matrix is not positive definite "
            f"(eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
        )
    return a


def eigh_desc(p) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with eigenvalues sorted descending."""
    w, v = np.linalg.eigh(symmetrize(np.asarray(p, dtype=float)))
    return np.ascontiguousarray(w[::-1]), np.ascontiguousarray(v[:, ::-1])


def spd_power(p, t: float) -> np.ndarray:
    """p^t for SPD p, via the eigendecomposition V diag(lambda^t) V^T."""
    p = as_spd(p)
    if not np.isfinite(t):
        raise ValueError("exponent must be finite")
    w, v = eigh_desc(p)
    return symmetrize((v * w ** float(t)) @ v.T)


def spd_sqrt_pair(p) -> tuple[np.ndarray, np.ndarray]:
    """(p^{1/2}, p^{-1/2}) from one eigendecomposition."""
    p = as_spd(p)
    w, v = eigh_desc(p)
    rw = np.sqrt(w)
    return symmetrize((v * rw) @ v.T), symmetrize((v / rw) @ v.T)


def geodesic_point(p, q, theta: float) -> np.ndarray:
    """Geodesic p #_theta q = p^{1/2} [p^{-1/2} q p^{-1/2}]^theta p^{1/2}."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    q = as_spd(q)
    ps, pis = spd_sqrt_pair(p)
    inner = spd_power(symmetrize(pis @ q @ pis), theta)
    return symmetrize(ps @ inner @ ps)


def geodesic_from_velocity(p, v, theta: float) -> np.ndarray:
    """gamma_v(theta) = p^{1/2} exp(theta p^{-1/2} v p^{-1/2}) p^{1/2}."""
    if theta < 0.0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    v = as_symmetric(v)
    ps, pis = spd_sqrt_pair(p)
    w, u = eigh_desc(symmetrize(theta * (pis @ v @ pis)))
    expm = (u * np.exp(w)) @ u.T
    return symmetrize(ps @ expm @ ps)


def trace_inner(p, v, w) -> float:
    """Trace metric <v,w>_p = tr(p^-1 v p^-1 w)."""
    p = as_spd(p)
    a = np.linalg.solve(p, as_symmetric(v))
    b = np.linalg.solve(p, as_symmetric(w))
    return float(np.sum(a * b.T))


def lyapunov_sqrt_solve(p, h) -> np.ndarray:
    """Solve p^{1/2} X + X p^{1/2} = h for symmetric X.

    In the eigenbasis of p the solution is entrywise
    X~_ij = h~_ij / (sqrt(lambda_i) + sqrt(lambda_j)); the denominators are
    strictly positive since p is SPD.
    """
    h = as_symmetric(h)
    w, v = eigh_desc(as_spd(p))
    rw = np.sqrt(w)
    ht = v.T @ h @ v
    xt = ht / (rw[:, None] + rw[None, :])
    return symmetrize(v @ xt @ v.T)


def sym_basis(n: int) -> list[np.ndarray]:
    """Standard <.,.>_I-orthonormal basis of S_n.

    Diagonal units E_kk first, then (E_kl + E_lk)/sqrt(2) for k < l.
    """
    basis = []
    for k in range(n):
        e = np.zeros((n, n))
        e[k, k] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for k in range(n):
        for l in range(k + 1, n):
            e = np.zeros((n, n))
            e[k, l] = e[l, k] = inv_sqrt2
            basis.append(e)
    return basis


def onb_at(p) -> list[np.ndarray]:
    """Orthonormal basis of the tangent space (S_n, <.,.>_p).

    Congruence with p^{1/2} maps the <.,.>_I-orthonormal standard basis to
    an exactly <.,.>_p-orthonormal one:
    <p^{1/2} E p^{1/2}, p^{1/2} F p^{1/2}>_p = tr(E F).
    """
    ps, _ = spd_sqrt_pair(p)
    return [symmetrize(ps @ e @ ps) for e in sym_basis(ps.shape[0])]


def log_singular_vector(g) -> np.ndarray:
    """Base-2 logs of the singular values of an invertible matrix, descending."""
    a = np.asarray(g, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= EIG_RATIO_FLOOR * sv[0]:
        raise SingularMatrixError(
            f"matrix is numerically singular (singular values {sv})"
        )
    return np.log2(sv)
