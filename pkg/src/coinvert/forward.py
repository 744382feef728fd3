"""Exterior Helmholtz scattering by sound-soft / impedance obstacles (Nystrom method).

The scattered field is represented by the combined potential

    u^s(x) = sum_c int_{dD_c} [dPhi(x, y)/dnu(y) - i eta Phi(x, y)] phi_c(y) ds(y),

with coupling ``eta = k``, which is uniquely solvable at every wavenumber for
both boundary conditions.  Logarithmically singular self-interactions use
Kress's product quadrature; the hypersingular normal derivative of the double
layer uses Maue's formula with trigonometric differentiation.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.special as sp

from .geometry import QuadratureMesh, builtin_curve, mesh
from .special import EULER_GAMMA, bessel01, kernel_values


class ProximityError(ValueError):
    """Raised when a field point is too close to (or inside) the obstacle."""


class SingularSystemError(RuntimeError):
    """Raised when the Nystrom matrix is numerically singular."""


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = "sound_soft"
    impedance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sound_soft", "impedance"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if not np.isfinite(self.impedance):
            raise ValueError("impedance must be a finite real number")

    @classmethod
    def parse(cls, text, impedance=0.0):
        aliases = {"sound_soft": ("sound_soft", 0.0), "dirichlet": ("sound_soft", 0.0),
                   "sound_hard": ("impedance", 0.0), "neumann": ("impedance", 0.0),
                   "impedance": ("impedance", float(impedance))}
        key = text.lower().replace("-", "_")
        if key not in aliases:
            raise ValueError(f"unknown boundary condition {text!r}")
        return cls(*aliases[key])

    @property
    def label(self):
        if self.kind == "sound_soft":
            return "sound_soft"
        return "sound_hard" if self.impedance == 0 else "impedance"


SOUND_SOFT = BoundaryCondition("sound_soft")
SOUND_HARD = BoundaryCondition("impedance", 0.0)


@dataclass(frozen=True)
class ObstacleComponent:
    curve: object
    bc: BoundaryCondition
    mesh: QuadratureMesh


@dataclass(frozen=True)
class Obstacle:
    components: tuple = ()

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        for i, a in enumerate(comps):
            for b in comps[i + 1:]:
                if a.curve.contains(b.curve.polygon(256)).any() or \
                        b.curve.contains(a.curve.polygon(256)).any():
                    raise ValueError("obstacle components must be disjoint")

    @classmethod
    def from_curves(cls, parts, n=64):
        """``parts`` is a sequence of ``(curve, bc)`` or ``(curve, bc, n)``."""
        comps = []
        for part in parts:
            curve, bc = part[0], part[1]
            nodes = part[2] if len(part) > 2 else n
            comps.append(ObstacleComponent(curve, bc, mesh(curve, nodes)))
        return cls(tuple(comps))

    @property
    def curves(self):
        return [c.curve for c in self.components]

    @property
    def empty(self):
        return not self.components

    def contains(self, points):
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        for c in self.components:
            inside |= c.curve.contains(pts)
        return inside

    def with_nodes(self, n):
        return Obstacle.from_curves([(c.curve, c.bc, n) for c in self.components])


@dataclass(frozen=True)
class CauchyData:
    """Dirichlet and Neumann traces at receivers on a measurement circle."""

    receivers: np.ndarray
    normals: np.ndarray
    u: np.ndarray
    du: np.ndarray
    weights: np.ndarray
    angles: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.receivers)
        for name in ("normals", "u", "du", "weights"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"CauchyData.{name} has the wrong length")

    @property
    def radius(self):
        return float(np.mean(np.hypot(self.receivers[:, 0], self.receivers[:, 1])))

    @property
    def stacked(self):
        return np.concatenate([self.u, self.du])

    def norm(self):
        """Product L2(Gamma) x L2(Gamma) norm of (u, du)."""
        w = self.weights
        return float(np.sqrt(np.sum(w * (np.abs(self.u) ** 2 + np.abs(self.du) ** 2))))

    def with_values(self, u, du):
        return replace(self, u=np.asarray(u, dtype=complex), du=np.asarray(du, dtype=complex))

    def __add__(self, other):
        if not np.array_equal(self.receivers, other.receivers):
            raise ValueError("cannot add Cauchy data on different receivers")
        return self.with_values(self.u + other.u, self.du + other.du)

    def __sub__(self, other):
        if not np.array_equal(self.receivers, other.receivers):
            raise ValueError("cannot subtract Cauchy data on different receivers")
        return self.with_values(self.u - other.u, self.du - other.du)


def measurement_circle(n, radius):
    """Receivers x_m = radius (cos 2 pi m/n, sin 2 pi m/n) with radial normals."""
    theta = 2.0 * np.pi * np.arange(n) / n
    normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    weights = np.full(n, 2.0 * np.pi * radius / n)
    return radius * normals, normals, weights, theta


@dataclass(frozen=True)
class ScatterSolution:
    obstacle: Obstacle
    k: float
    eta: float
    densities: tuple
    sources: np.ndarray
    separate: bool = False
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# quadrature building blocks


def kress_weights(n):
    """Kress weights R_ij for int ln(4 sin^2((t - tau)/2)) f(tau) dtau on n nodes."""
    half = n // 2
    t = 2.0 * np.pi * np.arange(n) / n
    m = np.arange(1, half)
    diff = t[:, None] - t[None, :]
    base = -(2.0 * np.pi / half) * (np.cos(np.multiply.outer(diff, m)) / m).sum(-1)
    return base - (np.pi / half ** 2) * np.cos(half * diff)


def spectral_derivative(n):
    """Trigonometric differentiation matrix on n (even) equispaced nodes."""
    t = 2.0 * np.pi * np.arange(n) / n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    with np.errstate(divide="ignore"):
        d = 0.5 * (-1.0) ** (i - j) / np.tan(0.5 * (t[:, None] - t[None, :]))
    d[np.diag_indices(n)] = 0.0
    return d


def _self_operators(msh, k, need_hypersingular):
    """Kress-discretised S, K (double layer), K' and optionally T on one curve."""
    n = msh.n
    h = 2.0 * np.pi / n
    x, dx, ddx, speed = msh.nodes, msh.velocity, msh.acceleration, msh.speed
    nvec = np.stack([dx[:, 1], -dx[:, 0]], axis=1)  # un-normalised outward normal
    d = x[:, None, :] - x[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    diag = np.diag_indices(n)
    r[diag] = 1.0
    j0, j1, y0, y1 = bessel01(k * r)
    h0 = j0 + 1j * y0
    h1 = j1 + 1j * y1
    t = msh.params
    logterm = np.log(4.0 * np.sin(0.5 * (t[:, None] - t[None, :])) ** 2 + np.eye(n))
    R = kress_weights(n)
    curvature_term = (dx[:, 1] * ddx[:, 0] - dx[:, 0] * ddx[:, 1]) / (2.0 * np.pi * speed ** 2)

    # single layer without the speed factor (used for Maue's formula)
    m_plain = 0.5j * h0
    m1_plain = -j0 / (2.0 * np.pi)
    m2_plain = m_plain - m1_plain * logterm
    m1_plain[diag] = -1.0 / (2.0 * np.pi)
    m2_plain[diag] = 0.5j - EULER_GAMMA / np.pi - np.log(0.5 * k * speed) / np.pi
    a_plain = 0.5 * (R * m1_plain + h * m2_plain)
    single = a_plain * speed[None, :]

    nd_src = np.einsum("jk,ijk->ij", nvec, d)       # n(tau) . (x(t) - x(tau))
    nd_tgt = np.einsum("ik,ijk->ij", nvec, d)       # n(t) . (x(t) - x(tau))
    ratio = speed[None, :] / speed[:, None]

    l_full = 0.5j * k * nd_src * h1 / r
    l1 = -(k / (2.0 * np.pi)) * nd_src * j1 / r
    l2 = l_full - l1 * logterm
    l1[diag] = 0.0
    l2[diag] = curvature_term
    double = 0.5 * (R * l1 + h * l2)

    la_full = -0.5j * k * nd_tgt * h1 / r * ratio
    la1 = (k / (2.0 * np.pi)) * nd_tgt * j1 / r * ratio
    la2 = la_full - la1 * logterm
    la1[diag] = 0.0
    la2[diag] = curvature_term
    adjoint = 0.5 * (R * la1 + h * la2)

    hyper = None
    if need_hypersingular:
        D = spectral_derivative(n)
        nu = msh.normals
        hyper = (D @ a_plain @ D) / speed[:, None] + k * k * (nu @ nu.T) * single
    return single, double, adjoint, hyper


def _cross_operators(tgt, src, k):
    """Trapezoidal S, K, K', T blocks between disjoint curves (targets tgt, sources src)."""
    x, y = tgt.nodes, src.nodes
    nu_x, nu_y, w = tgt.normals, src.normals, src.weights
    return _layer_kernels(x, nu_x, y, nu_y, w, k, derivative=True)


def _layer_kernels(x, nu_x, y, nu_y, w, k, derivative):
    d = x[:, None, :] - y[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    j0, j1, y0, y1 = bessel01(k * r)
    h0 = j0 + 1j * y0
    h1 = j1 + 1j * y1
    ny = np.einsum("jk,ijk->ij", nu_y, d) / r
    single = 0.25j * h0 * w
    double = 0.25j * k * h1 * ny * w
    if not derivative:
        return single, double, None, None
    nx = np.einsum("ik,ijk->ij", nu_x, d) / r
    adjoint = -0.25j * k * h1 * nx * w
    hyper = 0.25j * k * ((k * h0 - 2.0 * h1 / r) * nx * ny + h1 * (nu_x @ nu_y.T) / r) * w
    return single, double, adjoint, hyper


def _system_matrix(obstacle, k, eta):
    comps = obstacle.components
    sizes = [c.mesh.n for c in comps]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    A = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
    for a, ca in enumerate(comps):
        rows = slice(offsets[a], offsets[a + 1])
        impedance = ca.bc.kind == "impedance"
        lam = ca.bc.impedance
        for b, cb in enumerate(comps):
            cols = slice(offsets[b], offsets[b + 1])
            if a == b:
                S, K, Kp, T = _self_operators(ca.mesh, k, impedance)
                eye = np.eye(ca.mesh.n)
                dirichlet = 0.5 * eye + K - 1j * eta * S
                if impedance:
                    block = T - 1j * eta * (Kp - 0.5 * eye) + 1j * k * lam * dirichlet
                else:
                    block = dirichlet
            else:
                S, K, Kp, T = _cross_operators(ca.mesh, cb.mesh, k)
                dirichlet = K - 1j * eta * S
                if impedance:
                    block = T - 1j * eta * Kp + 1j * k * lam * dirichlet
                else:
                    block = dirichlet
            A[rows, cols] = block
    return A, offsets


def incident_field(x, sources, k, normals=None):
    """u^i(x; S) = sum_j Phi(x, z_j) and, with normals, its normal derivative.

    Returns arrays of shape ``(len(x), len(sources))`` (one column per source).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(sources, dtype=float)).reshape(-1, 2)
    if normals is None:
        return kernel_values(x, z, k)
    phi, grad = kernel_values(x, z, k, gradient=True)
    dphi = np.einsum("ik,ijk->ij", np.atleast_2d(normals), grad)
    return phi, dphi


def solve_scattering(obstacle, k, sources, separate=False, cond_limit=1e13):
    """Solve for the boundary densities generated by point sources.

    Args:
        obstacle: the scatterer.
        k: wavenumber.
        sources: ``(m, 2)`` source locations outside the obstacle.
        separate: one right-hand side per source instead of their superposition.

    Raises:
        ProximityError: a source lies inside the obstacle.
        SingularSystemError: the Nystrom matrix is numerically singular.
    """
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    z = np.atleast_2d(np.asarray(sources, dtype=float)).reshape(-1, 2)
    eta = float(k)
    if obstacle is None or obstacle.empty:
        return ScatterSolution(Obstacle(()), k, eta, (), z, separate)
    if len(z) and obstacle.contains(z).any():
        raise ProximityError("a source lies inside the obstacle")
    A, offsets = _system_matrix(obstacle, k, eta)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularSystemError(f"Nystrom matrix condition number {cond:.3g}")
    rhs = np.zeros((A.shape[0], len(z)), dtype=complex)
    for a, comp in enumerate(obstacle.components):
        rows = slice(offsets[a], offsets[a + 1])
        msh = comp.mesh
        ui, dui = incident_field(msh.nodes, z, k, msh.normals)
        if comp.bc.kind == "sound_soft":
            rhs[rows] = -ui
        else:
            rhs[rows] = -(dui + 1j * k * comp.bc.impedance * ui)
    if not separate:
        rhs = rhs.sum(axis=1, keepdims=True)
    lu = scipy.linalg.lu_factor(A)
    phi = scipy.linalg.lu_solve(lu, rhs)
    dens = tuple(phi[offsets[a]:offsets[a + 1]] for a in range(len(obstacle.components)))
    return ScatterSolution(obstacle, k, eta, dens, z, separate, {"cond": float(cond)})


def _check_points(sol, x):
    for comp in sol.obstacle.components:
        gap = np.min(np.linalg.norm(x[:, None, :] - comp.mesh.nodes[None], axis=-1), axis=1)
        if np.any(gap < 2.0 * comp.mesh.spacing) or comp.curve.contains(x).any():
            raise ProximityError("field point inside or within two mesh spacings of the obstacle")


def _columns(sol):
    return len(sol.sources) if sol.separate else 1


def _evaluate(sol, x, normals=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ncol = _columns(sol)
    u = np.zeros((len(x), ncol), dtype=complex)
    du = np.zeros((len(x), ncol), dtype=complex) if normals is not None else None
    if sol.obstacle.empty:
        return u, du
    _check_points(sol, x)
    for comp, phi in zip(sol.obstacle.components, sol.densities):
        msh = comp.mesh
        nu_x = np.atleast_2d(normals) if normals is not None else np.zeros_like(x)
        S, K, Kp, T = _layer_kernels(x, nu_x, msh.nodes, msh.normals, msh.weights, sol.k,
                                     derivative=normals is not None)
        u += (K - 1j * sol.eta * S) @ phi
        if normals is not None:
            du += (T - 1j * sol.eta * Kp) @ phi
    return u, du


def _squeeze(values, sol):
    return values[:, 0] if not sol.separate else values


def eval_scattered(sol, x):
    """Scattered field u^s at points ``x`` (``(m,)``, or ``(m, n_src)`` if separate)."""
    u, _ = _evaluate(sol, x)
    return _squeeze(u, sol)


def eval_scattered_normal_derivative(sol, x, normals):
    """n . grad u^s at points ``x`` with unit vectors ``normals``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    normals = np.broadcast_to(np.asarray(normals, dtype=float), x.shape)
    _, du = _evaluate(sol, x, normals)
    return _squeeze(du, sol)


def _trig_interpolate(values, t):
    n = len(values)
    coef = np.fft.fft(values, axis=0) / n
    freq = np.fft.fftfreq(n, 1.0 / n)
    basis = np.exp(1j * np.outer(t, freq))
    basis[:, n // 2] = np.cos(0.5 * n * t)  # split Nyquist mode
    return basis @ coef


def boundary_trace(sol, index, t):
    """Exterior limit of u^s on component ``index`` at parameters ``t`` (off the nodes).

    Uses the Nystrom interpolant: Kress weights are evaluated at the new
    parameters and the density is interpolated trigonometrically.
    """
    comp = sol.obstacle.components[index]
    msh = comp.mesh
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n, half, k = msh.n, msh.n // 2, sol.k
    h = 2.0 * np.pi / n
    x = comp.curve.position(t)
    diff = t[:, None] - msh.params[None, :]
    d = x[:, None, :] - msh.nodes[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r < 1e-12):
        raise ProximityError("trace parameters must avoid the quadrature nodes")
    m = np.arange(1, half)
    R = (-(2.0 * np.pi / half) * (np.cos(np.multiply.outer(diff, m)) / m).sum(-1)
         - (np.pi / half ** 2) * np.cos(half * diff))
    logterm = np.log(4.0 * np.sin(0.5 * diff) ** 2)
    j0, j1, y0, y1 = bessel01(k * r)
    nvec = np.stack([msh.velocity[:, 1], -msh.velocity[:, 0]], axis=1)
    nd = np.einsum("jk,ijk->ij", nvec, d)
    speed = msh.speed[None, :]
    m1 = -j0 / (2.0 * np.pi) * speed
    m2 = 0.5j * (j0 + 1j * y0) * speed - m1 * logterm
    l1 = -(k / (2.0 * np.pi)) * nd * j1 / r
    l2 = 0.5j * k * nd * (j1 + 1j * y1) / r - l1 * logterm
    op = 0.5 * (R * l1 + h * l2) - 1j * sol.eta * 0.5 * (R * m1 + h * m2)
    phi = sol.densities[index]
    u = 0.5 * _trig_interpolate(phi, t) + op @ phi
    for other, (c, p) in enumerate(zip(sol.obstacle.components, sol.densities)):
        if other != index:
            S, K, _, _ = _layer_kernels(x, None, c.mesh.nodes, c.mesh.normals, c.mesh.weights,
                                        k, derivative=False)
            u += (K - 1j * sol.eta * S) @ p
    return _squeeze(u, sol)


def synthesize_cauchy(obstacle, sources, k, n_receivers=512, radius=10.0, nodes=None):
    """Total-field Cauchy data (u, du) of the sources on the measurement circle."""
    if nodes is not None and obstacle is not None and not obstacle.empty:
        obstacle = obstacle.with_nodes(nodes)
    z = np.atleast_2d(np.asarray(sources, dtype=float)).reshape(-1, 2)
    x, normals, weights, theta = measurement_circle(n_receivers, radius)
    if obstacle is not None and not obstacle.empty:
        if any(np.hypot(*c.mesh.nodes.T).max() >= radius for c in obstacle.components):
            raise ValueError("measurement circle must enclose the obstacle")
    ui, dui = incident_field(x, z, k, normals)
    sol = solve_scattering(obstacle, k, z)
    us, dus = _evaluate(sol, x, normals)
    u = ui.sum(axis=1) + us[:, 0]
    du = dui.sum(axis=1) + dus[:, 0]
    return CauchyData(x, normals, u, du, weights, theta)


def scattered_cauchy(obstacle, sources, k, data_like: CauchyData):
    """Scattered-only Cauchy data, one :class:`CauchyData` per source."""
    z = np.atleast_2d(np.asarray(sources, dtype=float)).reshape(-1, 2)
    sol = solve_scattering(obstacle, k, z, separate=True)
    us, dus = _evaluate(sol, data_like.receivers, data_like.normals)
    return [data_like.with_values(us[:, j], dus[:, j]) for j in range(len(z))]


def add_noise(data, eps, seed):
    """Multiplicative noise u + eps r1 |u| exp(i pi r2), r1, r2 ~ U(-1, 1).

    Draws are made receiver by receiver in the order (r1, r2) for u and then
    (r1, r2) for du from ``numpy.random.default_rng(seed)``.
    """
    if eps < 0:
        raise ValueError("noise level must be non-negative")
    if eps == 0:
        return data
    draws = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(len(data.u), 4))
    u = data.u + eps * draws[:, 0] * np.abs(data.u) * np.exp(1j * np.pi * draws[:, 1])
    du = data.du + eps * draws[:, 2] * np.abs(data.du) * np.exp(1j * np.pi * draws[:, 3])
    return data.with_values(u, du)


# ---------------------------------------------------------------------------
# separation-of-variables reference for a disk


def disk_scattered_series(x, source, k, radius, bc=SOUND_SOFT, normals=None, n_terms=None):
    """Scattered field of a point source by a disk centred at the origin.

    Uses Graf's addition theorem for Phi(x, z) and the boundary condition mode
    by mode; returns u^s (and n . grad u^s if ``normals`` is given) at ``x``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.asarray(source, dtype=float)
    rz, tz = np.hypot(*z), np.arctan2(z[1], z[0])
    rx, tx = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
    if n_terms is None:
        n_terms = int(np.ceil(k * max(rz, radius))) + 40
    n = np.arange(-n_terms, n_terms + 1)
    ka = k * radius
    if bc.kind == "sound_soft":
        coef = sp.jv(n, ka) / sp.hankel1(n, ka)
    else:
        lam = bc.impedance
        coef = (sp.jvp(n, ka) + 1j * lam * sp.jv(n, ka)) / (sp.h1vp(n, ka) + 1j * lam * sp.hankel1(n, ka))
    coef = -0.25j * coef * sp.hankel1(n, k * rz)
    phase = np.exp(1j * np.outer(tx - tz, n))
    hx = sp.hankel1(n[None, :], k * rx[:, None])
    us = (phase * hx) @ coef
    if normals is None:
        return us
    nrm = np.atleast_2d(np.asarray(normals, dtype=float))
    er = np.stack([np.cos(tx), np.sin(tx)], axis=1)
    et = np.stack([-np.sin(tx), np.cos(tx)], axis=1)
    dr = (phase * (k * sp.h1vp(n[None, :], k * rx[:, None]))) @ coef
    dt = (phase * hx * (1j * n[None, :])) @ coef / rx
    dus = np.einsum("ik,ik->i", nrm, er) * dr + np.einsum("ik,ik->i", nrm, et) * dt
    return us, dus


def unit_disk(n=64, bc=SOUND_SOFT, radius=1.0, center=(0.0, 0.0)):
    return Obstacle.from_curves([(builtin_curve("circle", radius=radius, center=center), bc, n)])
