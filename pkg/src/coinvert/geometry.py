"""Parametric boundary curves, trapezoidal meshes, polar sampling grids and source sets."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ParametricCurve:
    """A smooth, closed, 2*pi-periodic curve t -> x(t).

    ``position``, ``velocity`` and ``acceleration`` take an array of
    parameters and return ``(n, 2)`` arrays.  Use :meth:`counterclockwise` (or
    :func:`builtin_curve`, which calls it) to fix the orientation so that
    ``(x2', -x1')`` points outward.
    """

    position: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    acceleration: Callable[[np.ndarray], np.ndarray]
    label: str = "curve"

    def __call__(self, t):
        return self.position(np.atleast_1d(np.asarray(t, dtype=float)))

    def signed_area(self, n=512):
        t = TWO_PI * np.arange(n) / n
        x = self.position(t)
        dx = self.velocity(t)
        return 0.5 * np.mean(x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]) * TWO_PI

    def counterclockwise(self):
        """Return the same curve traversed counterclockwise."""
        if self.signed_area() > 0:
            return self
        pos, vel, acc = self.position, self.velocity, self.acceleration
        return ParametricCurve(
            position=lambda t: pos(-t),
            velocity=lambda t: -vel(-t),
            acceleration=lambda t: acc(-t),
            label=self.label,
        )

    def length(self, n=1024):
        t = TWO_PI * np.arange(n) / n
        return TWO_PI * np.mean(np.linalg.norm(self.velocity(t), axis=1))

    def polygon(self, n=2048):
        t = TWO_PI * np.arange(n) / n
        return self.position(t)

    def contains(self, points, n=2048):
        """Boolean mask of points strictly enclosed by the curve (even-odd rule)."""
        return polygon_contains(self.polygon(n), points)

    def distance(self, points, n=8192):
        """Approximate distance from each point to the curve via a dense polyline."""
        from scipy.spatial import cKDTree

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist, _ = cKDTree(self.polygon(n)).query(pts)
        return dist


def polygon_contains(vertices, points):
    """Even-odd point-in-polygon test, vectorised over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = vertices[:, 0], vertices[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    crosses = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_at = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(crosses & (px < x_at), axis=1) % 2 == 1


def _stack(a, b):
    return np.stack([a, b], axis=-1)


def _affine(shape, center, scale, label):
    cx, cy = center
    p, v, a = shape
    return ParametricCurve(
        position=lambda t: scale * p(t) + np.array([cx, cy]),
        velocity=lambda t: scale * v(t),
        acceleration=lambda t: scale * a(t),
        label=label,
    )


def _kite():
    return (
        lambda t: _stack(np.cos(t) + 0.65 * np.cos(2 * t) - 0.65, 1.5 * np.sin(t)),
        lambda t: _stack(-np.sin(t) - 1.3 * np.sin(2 * t), 1.5 * np.cos(t)),
        lambda t: _stack(-np.cos(t) - 2.6 * np.cos(2 * t), -1.5 * np.sin(t)),
    )


def _small_kite():
    return (
        lambda t: _stack(0.5 * np.cos(t) + 0.325 * np.cos(2 * t) + 0.675,
                         0.75 * np.sin(t) - 1.0),
        lambda t: _stack(-0.5 * np.sin(t) - 0.65 * np.sin(2 * t), 0.75 * np.cos(t)),
        lambda t: _stack(-0.5 * np.cos(t) - 1.3 * np.cos(2 * t), -0.75 * np.sin(t)),
    )


def _astroid_like():
    # 0.5 (cos^3 t + cos t, sin^3 t + sin t)
    return (
        lambda t: 0.5 * _stack(np.cos(t) ** 3 + np.cos(t), np.sin(t) ** 3 + np.sin(t)),
        lambda t: 0.5 * _stack(-3 * np.cos(t) ** 2 * np.sin(t) - np.sin(t),
                               3 * np.sin(t) ** 2 * np.cos(t) + np.cos(t)),
        lambda t: 0.5 * _stack(6 * np.cos(t) * np.sin(t) ** 2 - 3 * np.cos(t) ** 3 - np.cos(t),
                               6 * np.sin(t) * np.cos(t) ** 2 - 3 * np.sin(t) ** 3 - np.sin(t)),
    )


def _starfish():
    # (1 + 0.2 cos 5t)(cos t, sin t)
    def pos(t):
        rho = 1 + 0.2 * np.cos(5 * t)
        return _stack(rho * np.cos(t), rho * np.sin(t))

    def vel(t):
        rho, drho = 1 + 0.2 * np.cos(5 * t), -np.sin(5 * t)
        return _stack(drho * np.cos(t) - rho * np.sin(t), drho * np.sin(t) + rho * np.cos(t))

    def acc(t):
        rho, drho, ddrho = 1 + 0.2 * np.cos(5 * t), -np.sin(5 * t), -5 * np.cos(5 * t)
        return _stack((ddrho - rho) * np.cos(t) - 2 * drho * np.sin(t),
                      (ddrho - rho) * np.sin(t) + 2 * drho * np.cos(t))

    return pos, vel, acc


def _bumpy_kite():
    # (cos t - 0.4 cos 4t, sin t)
    return (
        lambda t: _stack(np.cos(t) - 0.4 * np.cos(4 * t), np.sin(t)),
        lambda t: _stack(-np.sin(t) + 1.6 * np.sin(4 * t), np.cos(t)),
        lambda t: _stack(-np.cos(t) + 6.4 * np.cos(4 * t), -np.sin(t)),
    )


def _unit_circle():
    return (
        lambda t: _stack(np.cos(t), np.sin(t)),
        lambda t: _stack(-np.sin(t), np.cos(t)),
        lambda t: _stack(-np.cos(t), -np.sin(t)),
    )


_SHAPES = {
    "kite": _kite,
    "small_kite": _small_kite,
    "astroid_like": _astroid_like,
    "starfish": _starfish,
    "bumpy_kite": _bumpy_kite,
}

CURVE_NAMES = ("circle",) + tuple(_SHAPES)


def builtin_curve(name, **params):
    """Build one of the named boundary curves.

    ``circle`` needs ``radius`` (``center`` defaults to the origin).  The
    other shapes are used exactly as parameterised, optionally scaled by
    ``scale`` and then shifted by ``center``.
    """
    center = tuple(params.pop("center", (0.0, 0.0)))
    if len(center) != 2:
        raise ValueError("center must be a 2-vector")
    if name == "circle":
        if "radius" not in params:
            raise ValueError("circle requires a 'radius' parameter")
        radius = float(params.pop("radius"))
        if radius <= 0:
            raise ValueError("circle radius must be positive")
        shape, scale = _unit_circle(), radius
    elif name in _SHAPES:
        shape, scale = _SHAPES[name](), float(params.pop("scale", 1.0))
    else:
        raise ValueError(f"unknown curve {name!r}; expected one of {CURVE_NAMES}")
    if params:
        raise ValueError(f"unexpected parameters for {name}: {sorted(params)}")
    return _affine(shape, center, scale, name).counterclockwise()


@dataclass(frozen=True)
class QuadratureMesh:
    """Equispaced parameter nodes with arclength weights and outward normals."""

    curve: ParametricCurve
    params: np.ndarray
    nodes: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    speed: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    @property
    def n(self):
        return len(self.params)

    @property
    def spacing(self):
        return float(self.weights.max())


def mesh(curve, n):
    """Trapezoidal mesh of ``n`` (even, >= 8) nodes t_j = 2*pi*j/n."""
    if n < 8 or n % 2:
        raise ValueError(f"mesh size must be an even integer >= 8, got {n}")
    t = TWO_PI * np.arange(n) / n
    x = curve.position(t)
    dx = curve.velocity(t)
    ddx = curve.acceleration(t)
    speed = np.linalg.norm(dx, axis=1)
    if np.any(speed <= 0):
        raise ValueError("curve has a vanishing tangent")
    normals = np.stack([dx[:, 1], -dx[:, 0]], axis=1) / speed[:, None]
    return QuadratureMesh(curve, t, x, dx, ddx, speed, (TWO_PI / n) * speed, normals)


@dataclass(frozen=True)
class PolarGrid:
    """Equidistant tensor grid in (r, theta) over an annular sector.

    Radii honour the inclusivity flags, e.g. ``[3, 10)`` with 100 radii gives
    ``3, 3.07, ..., 9.93``.  Angles are always half-open ``[theta_a, theta_b)``.
    """

    r_min: float
    r_max: float
    r_count: int
    theta_count: int
    r_min_inclusive: bool = True
    r_max_inclusive: bool = False
    theta_a: float = 0.0
    theta_b: float = TWO_PI

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max:
            raise ValueError("polar grid needs 0 <= r_min < r_max")
        if self.r_count < 1 or self.theta_count < 1:
            raise ValueError("polar grid needs positive counts")
        if not self.theta_a < self.theta_b <= self.theta_a + TWO_PI + 1e-12:
            raise ValueError("polar grid needs a non-empty angular range within 2*pi")
        if self.r_count == 1 and self.r_min_inclusive and self.r_max_inclusive:
            raise ValueError("a single radius cannot include both endpoints")

    @property
    def shape(self):
        return (self.r_count, self.theta_count)

    @property
    def size(self):
        return self.r_count * self.theta_count

    @property
    def dr(self):
        gaps = self.r_count - 1 + (not self.r_min_inclusive) + (not self.r_max_inclusive)
        return (self.r_max - self.r_min) / gaps

    @property
    def dtheta(self):
        return (self.theta_b - self.theta_a) / self.theta_count

    @property
    def full_circle(self):
        return self.theta_b - self.theta_a >= TWO_PI - 1e-12

    def radii(self):
        offset = 0 if self.r_min_inclusive else 1
        return self.r_min + self.dr * (np.arange(self.r_count) + offset)

    def angles(self):
        return self.theta_a + self.dtheta * np.arange(self.theta_count)

    def polar(self):
        """``(r, theta)`` arrays in row-major order (r outer, theta inner)."""
        r, th = np.meshgrid(self.radii(), self.angles(), indexing="ij")
        return r.ravel(), th.ravel()


def polar_points(grid):
    """Cartesian sampling points of ``grid``, shape ``(r_count * theta_count, 2)``."""
    r, th = grid.polar()
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def polar_grid(r_range, counts, closed="[)", theta_range=(0.0, TWO_PI)):
    """Shorthand: ``polar_grid((3, 10), (100, 300), "[)")``."""
    if len(closed) != 2 or closed[0] not in "[(" or closed[1] not in "])":
        raise ValueError(f"bad interval spec {closed!r}")
    return PolarGrid(float(r_range[0]), float(r_range[1]), int(counts[0]), int(counts[1]),
                     closed[0] == "[", closed[1] == "]",
                     float(theta_range[0]), float(theta_range[1]))


@dataclass(frozen=True)
class SourceSet:
    points: np.ndarray
    measurement_radius: float
    obstacles: Sequence[ParametricCurve] = field(default=())

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        radii = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(np.isclose(radii, self.measurement_radius, rtol=0, atol=1e-12)):
            raise ValueError("a source lies on the measurement circle")
        if len(pts) > 1:
            gaps = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
            gaps[np.diag_indices(len(pts))] = np.inf
            if gaps.min() == 0:
                raise ValueError("source points must be pairwise distinct")
        for curve in self.obstacles:
            if len(pts) and curve.contains(pts).any():
                raise ValueError(f"a source lies inside obstacle {curve.label!r}")


def partition_sources(sources: SourceSet):
    """Split into sources inside (S1) and outside (S2) the measurement circle."""
    pts = sources.points
    radii = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(np.isclose(radii, sources.measurement_radius, rtol=0, atol=1e-12)):
        raise ValueError("a source lies on the measurement circle")
    inside = radii < sources.measurement_radius
    return pts[inside], pts[~inside]


def circle_mesh(radius, n, center=(0.0, 0.0)) -> QuadratureMesh:
    return mesh(builtin_curve("circle", radius=radius, center=center), n)


def distance_to_boundary(curves: Sequence[ParametricCurve], points, n: Optional[int] = 8192):
    """Distance from points to the union of curves."""
    dist = np.full(len(np.atleast_2d(points)), np.inf)
    for curve in curves:
        dist = np.minimum(dist, curve.distance(points, n))
    return dist
