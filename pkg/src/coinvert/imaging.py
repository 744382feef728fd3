"""Direct-sampling indicators for sources and obstacles, and peak extraction.

Source indicators work on the two decomposed fields:

* ``I1``: back-propagation of the Gamma_1 potential from a far circle; peaks at
  sources enclosed by the measurement circle.
* ``I2``: L1 mismatch on Gamma between Phi(., y) and the Gamma_2 potential;
  troughs at sources outside the measurement circle.
* ``I2hat``: imaginary part of the Gamma_2 potential; peaks (about 1/4) there.

Obstacle indicators correlate scattered Cauchy data of auxiliary point sources
with Phi(., y) and its normal derivative on the receivers.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import maximum_filter, minimum_filter

from .decompose import DensityPair, LayerGeometry, eval_ui2, eval_v
from .geometry import PolarGrid, polar_points
from .special import bessel01

_CHUNK = 400_000
KINDS = ("I1", "I2", "I2hat", "ID", "IC")


@dataclass(frozen=True)
class IndicatorField:
    grid: PolarGrid
    values: np.ndarray
    kind: str
    k: float
    normalization: str = "raw"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown indicator kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise ValueError("indicator values must match the grid size")
        if not np.all(np.isfinite(vals)):
            raise ValueError("indicator values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def points(self):
        return polar_points(self.grid)

    def as_image(self):
        """Values reshaped to (r_count, theta_count)."""
        return self.values.reshape(self.grid.shape)

    def normalized(self):
        top = np.max(np.abs(self.values))
        vals = self.values / top if top > 0 else self.values.copy()
        return IndicatorField(self.grid, vals, self.kind, self.k, "max-normalized")

    def display_values(self):
        """Values as rendered: I2 is shown through its reciprocal."""
        if self.kind == "I2":
            return 1.0 / np.maximum(self.values, np.finfo(float).tiny)
        return self.values


@dataclass(frozen=True)
class PeakSet:
    points: np.ndarray
    values: np.ndarray
    mode: str
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.values)

    def nearest(self, z):
        """Index and distance of the peak closest to ``z``."""
        if not len(self):
            return -1, np.inf
        d = np.hypot(*(self.points - np.asarray(z, dtype=float)).T)
        i = int(np.argmin(d))
        return i, float(d[i])


@dataclass(frozen=True)
class FarCircle:
    radius: float = 200.0
    nodes: Optional[int] = None

    def node_count(self, k):
        if self.nodes is not None:
            return int(self.nodes)
        n = int(np.ceil(8.0 * k * self.radius / (2.0 * np.pi)))
        return max(1024, n + (n % 2))

    def quadrature(self, k):
        n = self.node_count(k)
        theta = 2.0 * np.pi * np.arange(n) / n
        pts = self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return pts, np.full(n, 2.0 * np.pi * self.radius / n)


def _chunks(n_rows, n_cols):
    step = max(1, _CHUNK // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def indicator_I1(dens: DensityPair, geom: LayerGeometry, far: FarCircle, k, grid: PolarGrid):
    if far.radius <= geom.r2 or k * far.radius < 100:
        raise ValueError("far circle needs R > R2 and kR >= 100")
    if grid.r_max > geom.radius or (grid.r_max == geom.radius and grid.r_max_inclusive):
        raise ValueError("I1 sampling grid must lie inside the measurement circle")
    x, w = far.quadrature(k)
    weighted = w * eval_v(dens, geom, x, k) * np.exp(-0.25j * np.pi)
    y = polar_points(grid)
    vals = np.empty(len(y))
    for sl in _chunks(len(y), len(x)):
        r = np.hypot(y[sl, None, 0] - x[None, :, 0], y[sl, None, 1] - x[None, :, 1])
        vals[sl] = np.real(np.exp(-1j * k * r) @ weighted)
    return IndicatorField(grid, vals / np.sqrt(far.radius), "I1", k)


def _check_exterior_grid(grid, geom):
    if grid.r_min < geom.radius or (grid.r_min == geom.radius and grid.r_min_inclusive):
        raise ValueError("sampling grid must lie outside the measurement circle")
    if grid.r_max > geom.r2:
        raise ValueError("sampling grid must lie inside Gamma_2")


def indicator_I2(dens: DensityPair, geom: LayerGeometry, k, grid: PolarGrid, receivers=None):
    """I2(y) = sum_m w_m |Phi(x_m, y) - u^i_2(x_m)| over the receivers."""
    _check_exterior_grid(grid, geom)
    x, w = (geom.receivers, geom.weights) if receivers is None else receivers
    ui2 = eval_ui2(dens, geom, x, k)
    y = polar_points(grid)
    vals = np.empty(len(y))
    for sl in _chunks(len(y), len(x)):
        r = np.hypot(y[sl, None, 0] - x[None, :, 0], y[sl, None, 1] - x[None, :, 1])
        j0, _, y0, _ = bessel01(k * r)
        vals[sl] = np.abs(0.25j * (j0 + 1j * y0) - ui2[None, :]) @ w
    return IndicatorField(grid, vals, "I2", k)


def indicator_I2hat(dens: DensityPair, geom: LayerGeometry, k, grid: PolarGrid):
    _check_exterior_grid(grid, geom)
    vals = np.imag(eval_ui2(dens, geom, polar_points(grid), k))
    return IndicatorField(grid, vals, "I2hat", k)


def _aux_arrays(aux_scatter):
    if not aux_scatter:
        raise ValueError("at least one auxiliary data set is required")
    first = aux_scatter[0]
    for d in aux_scatter[1:]:
        if not (np.array_equal(d.receivers, first.receivers) and np.array_equal(d.weights, first.weights)):
            raise ValueError("auxiliary data sets must share receivers")
    us = np.stack([d.u for d in aux_scatter], axis=1)
    dus = np.stack([d.du for d in aux_scatter], axis=1)
    return first, us, dus


def _correlations(aux_scatter, k, grid, with_derivative):
    first, us, dus = _aux_arrays(aux_scatter)
    x, nx, w = first.receivers, first.normals, first.weights
    wu = w[:, None] * us
    wdu = w[:, None] * dus
    y = polar_points(grid)
    c1 = np.empty(len(y))
    c2 = np.zeros(len(y))
    for sl in _chunks(len(y), len(x)):
        d = x[None, :, :] - y[sl, None, :]
        r = np.hypot(d[..., 0], d[..., 1])
        j0, j1, y0, y1 = bessel01(k * r)
        phi = 0.25j * (j0 + 1j * y0)
        c1[sl] = np.abs(phi.conj() @ wu).sum(axis=1)
        if with_derivative:
            proj = (d[..., 0] * nx[None, :, 0] + d[..., 1] * nx[None, :, 1]) / r
            dphi = -0.25j * k * (j1 + 1j * y1) * proj
            c2[sl] = np.abs(dphi.conj() @ wdu).sum(axis=1)
    return c1, c2


def indicator_ID(aux_scatter, k, grid: PolarGrid):
    """Sum over auxiliary sources of |<u^s, Phi(., y)>| + |<du^s, dPhi(., y)/dn>|."""
    c1, c2 = _correlations(aux_scatter, k, grid, True)
    return IndicatorField(grid, c1 + c2, "ID", k)


def indicator_IC(aux_scatter, k, grid: PolarGrid):
    c1, _ = _correlations(aux_scatter, k, grid, False)
    return IndicatorField(grid, c1, "IC", k)


def indicator_pair(aux_scatter, k, grid: PolarGrid):
    """(I_D, I_C) from a single kernel sweep."""
    c1, c2 = _correlations(aux_scatter, k, grid, True)
    return IndicatorField(grid, c1 + c2, "ID", k), IndicatorField(grid, c1, "IC", k)


def _local_extrema(img, mode, periodic):
    size = (3, 3)
    wrap = ("nearest", "wrap" if periodic else "nearest")
    if mode == "maxima":
        return img >= maximum_filter(img, size=size, mode=wrap)
    return img <= minimum_filter(img, size=size, mode=wrap)


def _significance(vals, mode):
    if mode == "maxima" and vals.max() > 0:
        return vals.copy()
    if mode == "minima" and vals.min() > 0:
        return 1.0 / vals
    span = vals.max() - vals.min()
    sig = (vals - vals.min()) if mode == "maxima" else (vals.max() - vals)
    return sig / span if span > 0 else np.ones_like(vals)


def extract_peaks(fld: IndicatorField, mode="maxima", count=None, threshold_ratio=0.5,
                  exclusion_radius=None) -> PeakSet:
    """Greedy selection of well-separated local extrema.

    Significance is the value for maxima and, for minima of a strictly
    positive field, the reciprocal value (the displayed ``1/I2`` peaks);
    candidates below ``threshold_ratio`` times the largest significance are
    discarded.  Fields whose significance is not positive anywhere fall back
    to significance relative to the value range.
    """
    if mode not in ("maxima", "minima"):
        raise ValueError("mode must be 'maxima' or 'minima'")
    if fld.grid.size == 0:
        raise ValueError("empty field")
    if exclusion_radius is None:
        exclusion_radius = np.pi / fld.k
    if not exclusion_radius > 0:
        raise ValueError("exclusion radius must be positive")
    img = fld.as_image()
    vals = fld.values
    sig = _significance(vals, mode)
    cand = np.flatnonzero(_local_extrema(img, mode, fld.grid.full_circle).ravel())
    cand = cand[sig[cand] >= threshold_ratio * sig.max()]
    order = cand[np.lexsort((cand, -sig[cand]))]
    pts = fld.points
    chosen = []
    for idx in order:
        if count is not None and len(chosen) >= count:
            break
        if all(np.hypot(*(pts[idx] - pts[j])) >= exclusion_radius for j in chosen):
            chosen.append(idx)
    chosen = np.array(chosen, dtype=int)
    return PeakSet(pts[chosen].reshape(-1, 2), vals[chosen], mode, chosen)


def within_cell(z, peaks: PeakSet, grid: PolarGrid):
    """True if some peak lies within one grid cell (|dr| <= dr, |dtheta| <= dtheta) of z."""
    if not len(peaks):
        return False
    rz, tz = np.hypot(*z), np.arctan2(z[1], z[0])
    rp = np.hypot(peaks.points[:, 0], peaks.points[:, 1])
    tp = np.arctan2(peaks.points[:, 1], peaks.points[:, 0])
    dt = np.abs((tp - tz + np.pi) % (2.0 * np.pi) - np.pi)
    tol = 1e-9
    return bool(np.any((np.abs(rp - rz) <= grid.dr * (1 + tol)) & (dt <= grid.dtheta * (1 + tol))))


def top_decile_distance(fld: IndicatorField, curves, quantile=0.9):
    """Mean and max distance to the boundary over the top-decile grid samples."""
    from .geometry import distance_to_boundary

    cut = np.quantile(fld.values, quantile)
    pts = fld.points[fld.values >= cut]
    dist = distance_to_boundary(curves, pts)
    return float(dist.mean()), float(dist.max())
