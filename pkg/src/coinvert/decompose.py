"""Single-layer decomposition of measured Cauchy data on a circle.

The total field on the measurement circle Gamma (radius between R1 and R2) is
fitted by two single-layer potentials,

    u = S1 phi1 + S2 phi2,    du = K1 phi1 + K2 phi2,

with densities on the concentric circles Gamma_1 (inside) and Gamma_2 (outside).
The Gamma_1 potential reproduces sources and scatterers enclosed by Gamma,
the Gamma_2 potential the incident field of sources outside Gamma.  The system
is ill-posed and solved by Tikhonov regularisation with Morozov's discrepancy
principle in discrete L2 norms carrying trapezoid arclength weights.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize
import scipy.special as sp

from .forward import CauchyData
from .geometry import QuadratureMesh, circle_mesh
from .special import bessel01

_CHUNK = 400_000  # kernel evaluations per block, keeps memory bounded
LOG_ALPHA_RANGE = (-16.0, 4.0)


class EigenvalueError(ValueError):
    """k^2 is (numerically) a Dirichlet eigenvalue of one of the auxiliary disks."""


@dataclass(frozen=True)
class LayerGeometry:
    receivers: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    radius: float
    gamma1: QuadratureMesh
    gamma2: QuadratureMesh

    def __post_init__(self):
        r1, r2 = self.r1, self.r2
        if not 0 < r1 < self.radius < r2:
            raise ValueError(f"need 0 < R1 < measurement radius < R2, got {r1}, {self.radius}, {r2}")
        rr = np.hypot(self.receivers[:, 0], self.receivers[:, 1])
        if np.max(np.abs(rr - self.radius)) > 1e-9 * self.radius:
            raise ValueError("receivers must lie on a circle centred at the origin")

    @classmethod
    def from_data(cls, data: CauchyData, r1=9.0, r2=18.0, n1=512, n2=512):
        return cls(data.receivers, data.normals, data.weights, data.radius,
                   circle_mesh(r1, n1), circle_mesh(r2, n2))

    @property
    def r1(self):
        return float(np.hypot(*self.gamma1.nodes[0]))

    @property
    def r2(self):
        return float(np.hypot(*self.gamma2.nodes[0]))

    def check_sources(self, s1, s2, obstacle=None):
        """Raise if S1 (or the obstacle) is not inside Gamma_1 or S2 not between Gamma and Gamma_2."""
        s1 = np.reshape(np.asarray(s1, dtype=float), (-1, 2))
        s2 = np.reshape(np.asarray(s2, dtype=float), (-1, 2))
        if len(s1) and np.hypot(s1[:, 0], s1[:, 1]).max() >= self.r1:
            raise ValueError("interior sources must lie inside Gamma_1")
        if len(s2):
            r = np.hypot(s2[:, 0], s2[:, 1])
            if r.min() <= self.radius or r.max() >= self.r2:
                raise ValueError("exterior sources must lie between Gamma and Gamma_2")
        if obstacle is not None:
            for comp in obstacle.components:
                if np.hypot(*comp.curve.polygon(512).T).max() >= self.r1:
                    raise ValueError("obstacle must lie inside Gamma_1")


def check_eigenvalues(k, radius, tol=1e-8):
    """Raise :class:`EigenvalueError` if J_n(k radius) is within ``tol`` of zero.

    Zeros of J_n lie beyond n, so only orders |n| <= k radius can vanish.
    """
    orders = np.arange(0, int(np.floor(k * radius)) + 1)
    vals = np.abs(sp.jv(orders, k * radius))
    bad = orders[vals <= tol]
    if bad.size:
        raise EigenvalueError(
            f"k^2 is close to a Dirichlet eigenvalue of the disk of radius {radius} "
            f"(J_{bad[0]}(kR) = {vals[bad[0]]:.2e}); perturb the radius by about 1%")


class OperatorSystem:
    """Discrete [[S1, S2], [K1, K2]] with weighted inner products and a cached SVD."""

    def __init__(self, geom, k, matrix, derivative_scale=1.0):
        self.geom = geom
        self.k = float(k)
        self.matrix = matrix
        self.derivative_scale = float(derivative_scale)
        m = len(geom.receivers)
        self.n_receivers = m
        self.n1 = geom.gamma1.n
        self.n2 = geom.gamma2.n
        self.row_weights = np.concatenate([geom.weights, geom.weights])
        self.col_weights = np.concatenate([geom.gamma1.weights, geom.gamma2.weights])
        self._svd = None

    @property
    def blocks(self):
        m, n1 = self.n_receivers, self.n1
        t = self.matrix
        return t[:m, :n1], t[:m, n1:], t[m:, :n1], t[m:, n1:]

    def apply(self, phi):
        return self.matrix @ phi

    def adjoint(self, g):
        """T* g with respect to the weighted inner products on both sides."""
        return (self.matrix.conj().T @ (self.row_weights * g)) / self.col_weights

    def data_inner(self, a, b):
        return np.sum(self.row_weights * a * np.conj(b))

    def density_inner(self, a, b):
        return np.sum(self.col_weights * a * np.conj(b))

    def data_norm(self, g):
        return float(np.sqrt(np.real(self.data_inner(g, g))))

    def density_norm(self, phi):
        return float(np.sqrt(np.real(self.density_inner(phi, phi))))

    def rhs(self, data: CauchyData):
        if len(data.u) != self.n_receivers:
            raise ValueError("data and system have different receiver counts")
        return np.concatenate([data.u, self.derivative_scale * data.du])

    @property
    def svd(self):
        """Economy SVD of W_r^(1/2) T W_c^(-1/2), computed once."""
        if self._svd is None:
            b = np.sqrt(self.row_weights)[:, None] * self.matrix / np.sqrt(self.col_weights)[None, :]
            self._svd = np.linalg.svd(b, full_matrices=False)
        return self._svd

    def spectral_data(self, g):
        """Return (sigma, beta, ||b_perp||^2) for the weighted right-hand side."""
        u, s, _ = self.svd
        b = np.sqrt(self.row_weights) * g
        beta = u.conj().T @ b
        perp = max(float(np.vdot(b, b).real - np.vdot(beta, beta).real), 0.0)
        return s, beta, perp


@dataclass(frozen=True)
class DensityPair:
    phi1: np.ndarray
    phi2: np.ndarray

    @classmethod
    def from_vector(cls, vec, n1):
        return cls(vec[:n1].copy(), vec[n1:].copy())

    @classmethod
    def zeros(cls, geom):
        return cls(np.zeros(geom.gamma1.n, complex), np.zeros(geom.gamma2.n, complex))

    @property
    def vector(self):
        return np.concatenate([self.phi1, self.phi2])


@dataclass(frozen=True)
class RegularizationResult:
    alpha: float
    densities: DensityPair
    discrepancy: float
    target: float
    status: str = "ok"  # "ok" or "floor" (target below the alpha -> 0 residual)

    @property
    def floor_flagged(self):
        return self.status == "floor"


def _pairwise_blocks(x, nx, y, w, k):
    """Phi(x_i, y_j) w_j and n(x_i) . grad_x Phi(x_i, y_j) w_j."""
    d = x[:, None, :] - y[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    j0, j1, y0, y1 = bessel01(k * r)
    s = 0.25j * (j0 + 1j * y0) * w
    proj = np.einsum("ik,ijk->ij", nx, d) / r
    kk = -0.25j * k * (j1 + 1j * y1) * proj * w
    return s, kk


def assemble_system(geom: LayerGeometry, k, derivative_scale=1.0, check=True) -> OperatorSystem:
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    if check:
        check_eigenvalues(k, geom.r1)
        check_eigenvalues(k, geom.r2)
    x, nx = geom.receivers, geom.normals
    s1, k1 = _pairwise_blocks(x, nx, geom.gamma1.nodes, geom.gamma1.weights, k)
    s2, k2 = _pairwise_blocks(x, nx, geom.gamma2.nodes, geom.gamma2.weights, k)
    top = np.hstack([s1, s2])
    bottom = derivative_scale * np.hstack([k1, k2])
    return OperatorSystem(geom, k, np.vstack([top, bottom]), derivative_scale)


def _filtered(system, g, alpha):
    _, _, vh = system.svd
    s, beta, perp = system.spectral_data(g)
    coef = s / (s * s + alpha) * beta
    vec = (vh.conj().T @ coef) / np.sqrt(system.col_weights)
    disc = np.sqrt(np.sum((alpha / (s * s + alpha)) ** 2 * np.abs(beta) ** 2) + perp)
    return vec, float(disc)


def tikhonov_solve(system: OperatorSystem, data: CauchyData, alpha) -> DensityPair:
    """Minimiser of ||T phi - u||^2 + alpha ||phi||^2 (weighted norms)."""
    if not alpha > 0:
        raise ValueError("regularisation parameter must be positive")
    vec, _ = _filtered(system, system.rhs(data), alpha)
    return DensityPair.from_vector(vec, system.n1)


def discrepancy(system: OperatorSystem, data: CauchyData, alpha):
    g = system.rhs(data)
    s, beta, perp = system.spectral_data(g)
    return float(np.sqrt(np.sum((alpha / (s * s + alpha)) ** 2 * np.abs(beta) ** 2) + perp))


def solve_morozov(system: OperatorSystem, data: CauchyData, target, rtol=1e-3) -> RegularizationResult:
    """Choose alpha with ||T phi_alpha - u|| = target by bisection in log10(alpha)."""
    g = system.rhs(data)
    norm = system.data_norm(g)
    if not target < norm:
        raise ValueError(f"discrepancy target {target:.3g} must be below the data norm {norm:.3g}")
    if target < 0:
        raise ValueError("discrepancy target must be non-negative")
    s, beta, perp = system.spectral_data(g)
    abs2 = np.abs(beta) ** 2

    def disc(log_alpha):
        a = 10.0 ** log_alpha
        return float(np.sqrt(np.sum((a / (s * s + a)) ** 2 * abs2) + perp))

    lo, hi = LOG_ALPHA_RANGE
    if disc(lo) >= target:
        vec, achieved = _filtered(system, g, 10.0 ** lo)
        return RegularizationResult(10.0 ** lo, DensityPair.from_vector(vec, system.n1),
                                    achieved, float(target), "floor")
    while disc(hi) < target:  # discrepancy tends to ||u|| > target as alpha grows
        hi += 2.0
    log_alpha = scipy.optimize.brentq(lambda la: disc(la) - target, lo, hi,
                                      xtol=1e-12, rtol=1e-12, maxiter=500)
    vec, achieved = _filtered(system, g, 10.0 ** log_alpha)
    if target > 0 and abs(achieved - target) > rtol * target:
        raise RuntimeError("discrepancy bisection did not converge")
    return RegularizationResult(10.0 ** log_alpha, DensityPair.from_vector(vec, system.n1),
                                achieved, float(target))


# ---------------------------------------------------------------------------
# potential evaluation


def _trapezoid_potential(x, msh, phi, k):
    out = np.empty(len(x), dtype=complex)
    step = max(1, _CHUNK // msh.n)
    y, w = msh.nodes, msh.weights * phi
    for start in range(0, len(x), step):
        blk = x[start:start + step]
        r = np.hypot(blk[:, None, 0] - y[None, :, 0], blk[:, None, 1] - y[None, :, 1])
        j0, _, y0, _ = bessel01(k * r)
        out[start:start + step] = (0.25j * (j0 + 1j * y0)) @ w
    return out


def _mode_products(orders, k, r, radius, inside):
    """J_n(k r) H_n(k R) (inside) or H_n(k r) J_n(k R) (outside), overflow-safe."""
    n = np.abs(orders)
    with np.errstate(all="ignore"):
        if inside:
            prod = sp.jv(n[None, :], k * r[:, None]) * sp.hankel1(n[None, :], k * radius)
        else:
            prod = sp.hankel1(n[None, :], k * r[:, None]) * sp.jv(n[None, :], k * radius)
    bad = ~np.isfinite(prod)
    if bad.any():
        # leading term of the uniform expansion for orders n >> k max(r, R)
        ratio = (r / radius) if inside else (radius / r)
        approx = -1j / (np.pi * np.maximum(n, 1))[None, :] * ratio[:, None] ** n[None, :]
        prod = np.where(bad, approx, prod)
    return prod


def _fourier_bessel_potential(x, radius, phi, k, inside):
    """Integral of Phi against the trigonometric interpolant of phi over a circle."""
    n = len(phi)
    coef = np.fft.fft(phi) / n
    orders = np.fft.fftfreq(n, 1.0 / n).astype(int)
    r = np.hypot(x[:, 0], x[:, 1])
    theta = np.arctan2(x[:, 1], x[:, 0])
    radii, inverse = np.unique(r, return_inverse=True)
    prod = _mode_products(orders, k, radii, radius, inside)[inverse]
    phase = np.exp(1j * np.outer(theta, orders))
    nyq = n // 2
    phase[:, nyq] = np.cos(nyq * theta)
    return 0.5j * np.pi * radius * np.sum(prod * coef[None, :] * phase, axis=1)


def _circle_potential(x, msh, phi, k, inside, near_spacings=4.0):
    radius = float(np.hypot(*msh.nodes[0]))
    r = np.hypot(x[:, 0], x[:, 1])
    near = np.abs(r - radius) < near_spacings * msh.spacing
    out = np.empty(len(x), dtype=complex)
    if (~near).any():
        out[~near] = _trapezoid_potential(x[~near], msh, phi, k)
    if near.any():
        out[near] = _fourier_bessel_potential(x[near], radius, phi, k, inside)
    return out


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2), x.shape[:-1]


def eval_v(dens: DensityPair, geom: LayerGeometry, x, k):
    """Gamma_1 single-layer potential, valid for |x| > R1."""
    pts, shape = _as_points(x)
    if np.any(np.hypot(pts[:, 0], pts[:, 1]) <= geom.r1):
        raise ValueError("v is only defined outside Gamma_1")
    return _circle_potential(pts, geom.gamma1, dens.phi1, k, inside=False).reshape(shape)


def eval_ui2(dens: DensityPair, geom: LayerGeometry, x, k):
    """Gamma_2 single-layer potential, valid for |x| <= R2.

    Points on Gamma_2 itself are accepted; near the circle the potential is
    evaluated from the Fourier-Bessel expansion of the interpolated density.
    """
    pts, shape = _as_points(x)
    r = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(r > geom.r2 * (1 + 1e-12)):
        raise ValueError("the Gamma_2 potential is only evaluated inside Gamma_2")
    return _circle_potential(pts, geom.gamma2, dens.phi2, k, inside=True).reshape(shape)


def eval_v_normal(dens: DensityPair, geom: LayerGeometry, x, normals, k):
    """n . grad of the Gamma_1 potential at points outside Gamma_1 (trapezoid)."""
    pts, shape = _as_points(x)
    nrm = np.broadcast_to(np.asarray(normals, dtype=float), pts.shape)
    _, kk = _pairwise_blocks(pts, nrm, geom.gamma1.nodes, geom.gamma1.weights, k)
    return (kk @ dens.phi1).reshape(shape)


def eval_ui2_normal(dens: DensityPair, geom: LayerGeometry, x, normals, k):
    """n . grad of the Gamma_2 potential at points inside Gamma_2 (trapezoid)."""
    pts, shape = _as_points(x)
    nrm = np.broadcast_to(np.asarray(normals, dtype=float), pts.shape)
    _, kk = _pairwise_blocks(pts, nrm, geom.gamma2.nodes, geom.gamma2.weights, k)
    return (kk @ dens.phi2).reshape(shape)


@dataclass(frozen=True)
class Decomposition:
    """Result of splitting measured data into the two layer potentials."""

    geom: LayerGeometry
    k: float
    result: RegularizationResult

    @property
    def densities(self):
        return self.result.densities

    def v(self, x):
        return eval_v(self.densities, self.geom, x, self.k)

    def ui2(self, x):
        return eval_ui2(self.densities, self.geom, x, self.k)

    def v_cauchy(self, data: CauchyData):
        d = self.densities
        return data.with_values(eval_v(d, self.geom, data.receivers, self.k),
                                eval_v_normal(d, self.geom, data.receivers, data.normals, self.k))

    def ui2_cauchy(self, data: CauchyData):
        d = self.densities
        return data.with_values(eval_ui2(d, self.geom, data.receivers, self.k),
                                eval_ui2_normal(d, self.geom, data.receivers, data.normals, self.k))


def decompose(system: OperatorSystem, data: CauchyData, target: Optional[float] = None,
              noise_fraction=0.05 / np.sqrt(3.0)) -> Decomposition:
    """Morozov-regularised decomposition; default target is a fraction of ||u||."""
    if target is None:
        target = noise_fraction * system.data_norm(system.rhs(data))
    result = solve_morozov(system, data, target)
    return Decomposition(system.geom, system.k, result)
