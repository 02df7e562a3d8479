"""Built-in dynamical systems with trapping regions and reference values.

Each case bundles a discrete map or vector field with its Jacobian, a
compact forward-invariant domain charted from a parameter box (so the
inner maximization can run a regular grid search in chart coordinates),
and closed-form restoration entropy references where available.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# systems

@dataclass(frozen=True)
class DiscreteSystem:
    dimension: int
    phi: Callable[[np.ndarray], np.ndarray]        # (m, n) -> (m, n)
    jacobian: Callable[[np.ndarray], np.ndarray]   # (m, n) -> (m, n, n)

    def map_point(self, x) -> np.ndarray:
        return self.phi(np.asarray(x, dtype=float)[None, :])[0]

    def jac_point(self, x) -> np.ndarray:
        return self.jacobian(np.asarray(x, dtype=float)[None, :])[0]


@dataclass(frozen=True)
class ContinuousSystem:
    dimension: int
    field: Callable[[np.ndarray], np.ndarray]      # (m, n) -> (m, n)
    jacobian: Callable[[np.ndarray], np.ndarray]   # (m, n) -> (m, n, n)

    def field_point(self, x) -> np.ndarray:
        return self.field(np.asarray(x, dtype=float)[None, :])[0]

    def jac_point(self, x) -> np.ndarray:
        return self.jacobian(np.asarray(x, dtype=float)[None, :])[0]


def numerical_jacobian(f: Callable[[np.ndarray], np.ndarray], dimension: int,
                       h: float = 1e-6) -> Callable[[np.ndarray], np.ndarray]:
    """Central-difference Jacobian for user-registered systems without one."""

    def jac(X: np.ndarray) -> np.ndarray:
        m = X.shape[0]
        J = np.empty((m, dimension, dimension))
        for j in range(dimension):
            dx = np.zeros(dimension)
            dx[j] = h
            J[:, :, j] = (f(X + dx) - f(X - dx)) / (2.0 * h)
        return J

    return jac


# ---------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Axis:
    """One parameter-box axis.  Periodic axes exclude the seam endpoint."""

    lower: float
    upper: float
    periodic: bool = False

    def grid(self, count: int) -> tuple[np.ndarray, float]:
        if count < 2:
            raise ValueError(f"grid count must be >= 2, got {count}")
        span = self.upper - self.lower
        h = span / count if self.periodic else span / (count - 1)
        return self.lower + h * np.arange(count), h


class Domain:
    """Chart from a parameter box onto a compact set K, plus membership."""

    axes: tuple[Axis, ...]
    dimension: int

    def chart(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Box(Domain):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi <= lo):
            raise ValueError("box bounds must be 1-D with upper > lower")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "axes",
                           tuple(Axis(l, u) for l, u in zip(lo, hi)))
        object.__setattr__(self, "dimension", lo.size)

    def chart(self, U):
        return np.array(U, dtype=float)

    def contains(self, X, tol=1e-9):
        scale = 1.0 + np.abs(self.lower) + np.abs(self.upper)
        return np.all((X >= self.lower - tol * scale)
                      & (X <= self.upper + tol * scale), axis=1)


@dataclass(frozen=True)
class Quadrilateral(Domain):
    """Convex planar quadrilateral, charted bilinearly from the unit square."""

    corners: np.ndarray  # (4, 2), in boundary order

    def __post_init__(self):
        c = np.asarray(self.corners, dtype=float)
        if c.shape != (4, 2):
            raise ValueError("corners must be a (4, 2) array")
        object.__setattr__(self, "corners", c)
        object.__setattr__(self, "axes", (Axis(0.0, 1.0), Axis(0.0, 1.0)))
        object.__setattr__(self, "dimension", 2)
        edges = np.roll(c, -1, axis=0) - c
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] \
            - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if not (np.all(cross > 0) or np.all(cross < 0)):
            raise ValueError("quadrilateral must be convex")
        object.__setattr__(self, "_orientation", 1.0 if cross[0] > 0 else -1.0)

    def chart(self, U):
        U = np.asarray(U, dtype=float)
        u, v = U[:, 0:1], U[:, 1:2]
        a, b, c, d = self.corners
        return ((1 - u) * (1 - v) * a + u * (1 - v) * b
                + u * v * c + (1 - u) * v * d)

    def contains(self, X, tol=1e-9):
        X = np.asarray(X, dtype=float)
        scale = 1.0 + np.abs(self.corners).max()
        inside = np.ones(X.shape[0], dtype=bool)
        for k in range(4):
            p0 = self.corners[k]
            e = self.corners[(k + 1) % 4] - p0
            cross = e[0] * (X[:, 1] - p0[1]) - e[1] * (X[:, 0] - p0[0])
            inside &= self._orientation * cross >= -tol * scale * scale
        return inside


@dataclass(frozen=True)
class Ball(Domain):
    """Closed 3-D ball charted by spherical coordinates (r, azimuthal, polar).

    Both angular axes include their endpoints; the 0/2pi polar seam is
    duplicated, which is harmless for a maximum search.
    """

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (3,) or self.radius <= 0:
            raise ValueError("ball requires a 3-D center and positive radius")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes",
                           (Axis(0.0, float(self.radius)),
                            Axis(0.0, np.pi), Axis(0.0, TWO_PI)))
        object.__setattr__(self, "dimension", 3)

    def chart(self, U):
        U = np.asarray(U, dtype=float)
        r, az, pol = U[:, 0], U[:, 1], U[:, 2]
        sin_az = np.sin(az)
        out = np.empty((U.shape[0], 3))
        out[:, 0] = r * sin_az * np.cos(pol)
        out[:, 1] = r * sin_az * np.sin(pol)
        out[:, 2] = r * np.cos(az)
        return out + self.center

    def contains(self, X, tol=1e-9):
        d = np.linalg.norm(np.asarray(X, dtype=float) - self.center, axis=1)
        return d <= self.radius * (1.0 + tol)


@dataclass(frozen=True)
class Cylinder(Domain):
    """S^1 x [lower, upper]: angle axis first, with period 2*pi."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.upper <= self.lower:
            raise ValueError("cylinder band requires upper > lower")
        object.__setattr__(self, "axes",
                           (Axis(0.0, TWO_PI, periodic=True),
                            Axis(float(self.lower), float(self.upper))))
        object.__setattr__(self, "dimension", 2)

    def chart(self, U):
        out = np.array(U, dtype=float)
        out[:, 0] = np.mod(out[:, 0], TWO_PI)
        return out

    def contains(self, X, tol=1e-9):
        X = np.asarray(X, dtype=float)
        scale = 1.0 + abs(self.lower) + abs(self.upper)
        return ((X[:, 1] >= self.lower - tol * scale)
                & (X[:, 1] <= self.upper + tol * scale))


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class GridPoints:
    """Deterministic grid sample of a domain.

    indices are row-major linear indices into the full parameter-space
    grid, kept stable under membership filtering so argmax tie-breaking is
    reproducible regardless of chunking.
    """

    indices: np.ndarray   # (m,)
    params: np.ndarray    # (m, k) parameter-space points
    points: np.ndarray    # (m, n) ambient points in K
    spacings: np.ndarray  # (k,) per-axis grid spacing h_i


def _mesh(axis_values: list[np.ndarray]) -> np.ndarray:
    grids = np.meshgrid(*axis_values, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def grid_points(domain: Domain, counts) -> GridPoints:
    """Regular grid in the parameter box, mapped through the chart and
    filtered by membership.  Non-periodic axes include both endpoints."""
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(domain.axes):
        raise ValueError(
            f"expected {len(domain.axes)} grid counts, got {len(counts)}")
    values, spacings = [], []
    for ax, c in zip(domain.axes, counts):
        vals, h = ax.grid(c)
        values.append(vals)
        spacings.append(h)
    params = _mesh(values)
    points = domain.chart(params)
    mask = domain.contains(points)
    idx = np.flatnonzero(mask)
    if idx.size != params.shape[0]:
        params, points = params[idx], points[idx]
    return GridPoints(idx, params, points, np.asarray(spacings))


def refine_around(domain: Domain, counts, x_pre) -> GridPoints:
    """Scaled-down copy of the grid on the half-spacing cube around x_pre.

    Per-axis values outside the parameter box are dropped (periodic axes
    wrap instead), so a boundary maximizer yields fewer points.
    """
    counts = tuple(int(c) for c in counts)
    x_pre = np.asarray(x_pre, dtype=float)
    if x_pre.shape != (len(domain.axes),):
        raise ValueError("x_pre must be a parameter-space point")
    values, positions, spacings = [], [], []
    for ax, c, x0 in zip(domain.axes, counts, x_pre):
        _, h = ax.grid(c)
        vals = x0 + np.linspace(-0.5 * h, 0.5 * h, c)
        pos = np.arange(c)
        if not ax.periodic:
            span = ax.upper - ax.lower
            keep = (vals >= ax.lower - 1e-12 * span) \
                & (vals <= ax.upper + 1e-12 * span)
            vals, pos = vals[keep], pos[keep]
        values.append(vals)
        positions.append(pos)
        spacings.append(h / (c - 1))
    params = _mesh(values)
    pos_mesh = _mesh([p.astype(float) for p in positions]).astype(int)
    indices = np.ravel_multi_index(tuple(pos_mesh.T), counts)
    points = domain.chart(params)
    mask = domain.contains(points)
    keep = np.flatnonzero(mask)
    if keep.size != params.shape[0]:
        indices, params, points = indices[keep], params[keep], points[keep]
    return GridPoints(indices, params, points, np.asarray(spacings))


# ---------------------------------------------------------------------------
# cases

@dataclass(frozen=True)
class RunDefaults:
    counts: tuple[int, ...]
    step_a: float          # theta_k = step_a / (k + step_b)
    step_b: float
    degree: int


@dataclass(frozen=True)
class SystemCase:
    name: str
    system: DiscreteSystem | ContinuousSystem
    domain: Domain
    reference: dict[str, float] = field(default_factory=dict)
    defaults: RunDefaults | None = None
    params: dict[str, float] = field(default_factory=dict)

    @property
    def is_discrete(self) -> bool:
        return isinstance(self.system, DiscreteSystem)


def henon_bounds(a: float = 1.4, b: float = 0.3) -> tuple[float, float]:
    """Theoretical (lower, upper) bounds from the fixed points of the map."""
    disc = np.sqrt((b - 1.0) ** 2 + 4.0 * a)
    x_minus = ((b - 1.0) - disc) / 2.0
    x_plus = ((b - 1.0) + disc) / 2.0
    upper = np.log2(np.sqrt(x_minus ** 2 + b) - x_minus)
    lower = np.log2(np.sqrt(x_plus ** 2 + b) + x_plus)
    return float(lower), float(upper)


def henon_case() -> SystemCase:
    """Henon map with standard parameters a=1.4, b=0.3 on its trapping
    quadrilateral."""

    def phi(X):
        return np.stack([1.4 - X[:, 0] ** 2 + 0.3 * X[:, 1], X[:, 0]], axis=1)

    def jac(X):
        m = X.shape[0]
        J = np.empty((m, 2, 2))
        J[:, 0, 0] = -2.0 * X[:, 0]
        J[:, 0, 1] = 0.3
        J[:, 1, 0] = 1.0
        J[:, 1, 1] = 0.0
        return J

    corners = np.array([[-1.862, 1.96], [1.848, 0.6267],
                        [1.743, -0.6533], [-1.484, -2.3333]])
    lower, upper = henon_bounds()
    return SystemCase(
        name="henon",
        system=DiscreteSystem(2, phi, jac),
        domain=Quadrilateral(corners),
        reference={"lower": lower, "upper": upper},
        defaults=RunDefaults((1000, 1000), 16.0, 0.0, 3),
    )


def bouncing_ball_entropy(gamma: float, delta: float) -> float:
    """Closed-form entropy of the forced bouncing ball on its band."""
    s = 1.0 + gamma + delta
    return float(np.log2(s + np.sqrt(s * s - 4.0 * gamma)) - 1.0)


def bouncing_ball_case(gamma: float = 0.1, delta: float = 2.0) -> SystemCase:
    """Harmonically forced bouncing ball on S^1 x [-d/(1-g), d/(1-g)].

    A constant metric suffices here, so the default polynomial degree is 0.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")

    def phi(X):
        s = X[:, 0] + X[:, 1]
        return np.stack([np.mod(s, TWO_PI),
                         gamma * X[:, 1] - delta * np.cos(s)], axis=1)

    def jac(X):
        s = X[:, 0] + X[:, 1]
        ds = delta * np.sin(s)
        m = X.shape[0]
        J = np.empty((m, 2, 2))
        J[:, 0, 0] = 1.0
        J[:, 0, 1] = 1.0
        J[:, 1, 0] = ds
        J[:, 1, 1] = gamma + ds
        return J

    band = delta / (1.0 - gamma)
    return SystemCase(
        name="bouncing_ball",
        system=DiscreteSystem(2, phi, jac),
        domain=Cylinder(-band, band),
        reference={"entropy": bouncing_ball_entropy(gamma, delta)},
        defaults=RunDefaults((1000, 1000), 1.0, 0.0, 0),
        params={"gamma": gamma, "delta": delta},
    )


def lorenz_entropy(sigma: float, rho: float, beta: float) -> float:
    """Closed-form entropy of the Lorenz system on its invariant ball."""
    rad = np.sqrt((sigma - 1.0) ** 2 + 4.0 * rho * sigma)
    return float((rad - (sigma + 1.0)) / (2.0 * np.log(2.0)))


def lorenz_case(sigma: float = 10.0, rho: float = 28.0,
                beta: float = 8.0 / 3.0) -> SystemCase:
    """Lorenz system on the invariant ball centered at (0, 0, sigma+rho)."""
    if sigma <= 0 or rho <= 0 or beta <= 0:
        raise ValueError("lorenz parameters must be positive")

    def field(X):
        x, y, z = X[:, 0], X[:, 1], X[:, 2]
        return np.stack([sigma * (y - x), x * (rho - z) - y,
                         x * y - beta * z], axis=1)

    def jac(X):
        m = X.shape[0]
        J = np.empty((m, 3, 3))
        J[:, 0, 0] = -sigma
        J[:, 0, 1] = sigma
        J[:, 0, 2] = 0.0
        J[:, 1, 0] = rho - X[:, 2]
        J[:, 1, 1] = -1.0
        J[:, 1, 2] = -X[:, 0]
        J[:, 2, 0] = X[:, 1]
        J[:, 2, 1] = X[:, 0]
        J[:, 2, 2] = -beta
        return J

    radius = np.sqrt(beta / 2.0) * (sigma + rho)
    return SystemCase(
        name="lorenz",
        system=ContinuousSystem(3, field, jac),
        domain=Ball(np.array([0.0, 0.0, sigma + rho]), float(radius)),
        reference={"entropy": lorenz_entropy(sigma, rho, beta)},
        defaults=RunDefaults((500, 50, 100), 2.0, 0.0, 2),
        params={"sigma": sigma, "rho": rho, "beta": beta},
    )


def lorenz_reference_constants(sigma: float = 10.0, rho: float = 28.0,
                               beta: float = 8.0 / 3.0) -> dict[str, float]:
    """Constants of the analytically known optimal conformal metric.

    gamma3 is negative (the z-term of the exponent is negative); published
    tables list its magnitude.
    """
    a = sigma / np.sqrt(rho * sigma + (beta - 1.0) * (sigma - beta))
    theta = 1.0 / (2.0 * np.sqrt((sigma + 1.0 - 2.0 * beta) ** 2
                                 + (2.0 * sigma / a) ** 2))
    gamma3 = -4.0 * sigma / (a * beta)
    gamma2 = a / 2.0
    gamma1 = -(2.0 * (gamma2 / sigma) * (rho * sigma - (beta - 1.0) ** 2)
               + gamma3 + (2.0 / sigma) * a * (beta - 1.0)) / (2.0 * sigma)
    return {"a": float(a), "theta": float(theta), "gamma1": float(gamma1),
            "gamma2": float(gamma2), "gamma3": float(gamma3)}


def lorenz_reference_matrix(sigma: float = 10.0, rho: float = 28.0,
                            beta: float = 8.0 / 3.0) -> np.ndarray:
    """Constant factor of the analytically known optimal Lorenz metric."""
    return np.array([
        [(rho * sigma + (beta - 1.0) * (sigma - 1.0)) / sigma ** 2,
         -(beta - 1.0) / sigma, 0.0],
        [-(beta - 1.0) / sigma, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])


def lorenz_reference_exponent(x: float, y: float, z: float,
                              sigma: float = 10.0, rho: float = 28.0,
                              beta: float = 8.0 / 3.0) -> float:
    """Quadratic exponent r(x, y, z) of the known optimal Lorenz metric."""
    c = lorenz_reference_constants(sigma, rho, beta)
    quad = (c["gamma1"] * x ** 2
            + c["gamma2"] * (y ** 2 + z ** 2
                             + ((beta - 1.0) ** 2 / sigma ** 2) * x ** 2)
            + c["gamma3"] * z)
    return float(c["a"] * c["theta"] * quad)


def lorenz_reference_metric(x: float, y: float, z: float,
                            sigma: float = 10.0, rho: float = 28.0,
                            beta: float = 8.0 / 3.0) -> np.ndarray:
    """Pointwise value e^{r(x,y,z)} p of the known optimal Lorenz metric."""
    return np.exp(lorenz_reference_exponent(x, y, z, sigma, rho, beta)) \
        * lorenz_reference_matrix(sigma, rho, beta)


# ---------------------------------------------------------------------------
# registry

_REGISTRY: dict[str, Callable[..., SystemCase]] = {
    "henon": henon_case,
    "bouncing_ball": bouncing_ball_case,
    "lorenz": lorenz_case,
}


def register_system(name: str, factory: Callable[..., SystemCase]) -> None:
    """Register a user-defined case factory under a CLI-selectable name."""
    _REGISTRY[name] = factory


def available_systems() -> list[str]:
    return sorted(_REGISTRY)


def get_case(name: str, **params) -> SystemCase:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown system {name!r}; available: {available_systems()}"
        ) from None
    return factory(**params)
