"""Cylinder functions of order 0 and 1 and the 2-D Helmholtz fundamental solution.

Three evaluation regimes are used for real arguments ``t > 0``:

* ``t < 8``: ascending power series (with the logarithmic series for Y).
* ``8 <= t < 14``: Miller backward recurrence for J_n normalised by
  ``J_0 + 2 sum J_2k = 1``, with Neumann-type sums for Y_0 and Y_1.
* ``t >= 14``: Hankel asymptotic expansion truncated at its smallest term.

All routines are vectorised over ``t`` and accurate to roughly 1e-13 absolute
on ``(0, 1e3]``.
"""

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209

_SERIES_MAX = 8.0
_ASYMPTOTIC_MIN = 14.0
_SERIES_TERMS = 30
_RECURRENCE_START = 56
_ASYMPTOTIC_TERMS = 64


def _series(t):
    q = -0.25 * t * t
    a = np.ones_like(t)  # q^m / (m!)^2
    b = np.ones_like(t)  # q^m / (m! (m+1)!)
    j0 = np.ones_like(t)
    j1 = np.ones_like(t)
    s0 = np.zeros_like(t)
    s1 = np.ones_like(t)  # m = 0 term of (2 H_m + 1/(m+1)) b
    harmonic = 0.0
    for m in range(1, _SERIES_TERMS):
        a = a * q / (m * m)
        b = b * q / (m * (m + 1))
        harmonic += 1.0 / m
        j0 += a
        j1 += b
        s0 += harmonic * a
        s1 += (2.0 * harmonic + 1.0 / (m + 1)) * b
    half = 0.5 * t
    j1 = j1 * half
    log_half = np.log(half)
    y0 = (2.0 / np.pi) * ((log_half + EULER_GAMMA) * j0 - s0)
    # psi(m+1) + psi(m+2) = 2 H_m + 1/(m+1) - 2 gamma
    y1 = (-2.0 / (np.pi * t) + (2.0 / np.pi) * log_half * j1
          - (half / np.pi) * s1 + (2.0 * EULER_GAMMA / np.pi) * j1)
    return j0, j1, y0, y1


def _recurrence(t):
    n_top = _RECURRENCE_START
    jn = np.zeros((n_top + 2,) + t.shape)
    jn[n_top] = 1e-30
    inv = 2.0 / t
    for n in range(n_top, 0, -1):
        jn[n - 1] = n * inv * jn[n] - jn[n + 1]
    jn /= jn[0] + 2.0 * jn[2:n_top + 1:2].sum(axis=0)
    ks = np.arange(1, n_top // 2)
    signs = ((-1.0) ** ks / ks)[:, None]
    even = (signs * jn[2 * ks]).sum(axis=0)
    odd = (signs * (jn[2 * ks - 1] - jn[2 * ks + 1])).sum(axis=0)
    j0, j1 = jn[0], jn[1]
    log_term = np.log(0.5 * t) + EULER_GAMMA
    y0 = (2.0 / np.pi) * log_term * j0 - (4.0 / np.pi) * even
    y1 = -(2.0 / (np.pi * t)) * j0 + (2.0 / np.pi) * (log_term * j1 + odd)
    return j0, j1, y0, y1


def _asymptotic_coefficients(order, t_min):
    """Signed coefficients of P and Q in powers of 1/t, cut at the smallest term at t_min."""
    mu = 4.0 * order * order
    coeffs = []
    a = 1.0
    best = np.inf
    for k in range(1, _ASYMPTOTIC_TERMS):
        a = a * (mu - (2 * k - 1) ** 2) / (8.0 * k)
        size = abs(a) / t_min ** k
        if size >= best:
            break
        best = size
        sign = -1.0 if (k // 2) % 2 else 1.0
        coeffs.append(sign * a)
        if size < 1e-18:
            break
    p = [1.0] + coeffs[1::2]
    q = coeffs[0::2]
    return np.array(p), np.array(q)


_ASYMPTOTIC_BANDS = (14.0, 20.0, 30.0, 60.0, 150.0, np.inf)
_ASYMPTOTIC_TABLE = {
    (order, lo): _asymptotic_coefficients(order, lo)
    for order in (0, 1) for lo in _ASYMPTOTIC_BANDS[:-1]
}


def _horner(coeffs, w):
    acc = np.full_like(w, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * w + c
    return acc


def _asymptotic(t, order, band_min):
    p_coef, q_coef = _ASYMPTOTIC_TABLE[(order, band_min)]
    u = 1.0 / t
    w = u * u
    p = _horner(p_coef, w)
    q = u * _horner(q_coef, w)
    chi = t - (0.5 * order + 0.25) * np.pi
    amp = np.sqrt(2.0 / (np.pi * t))
    c, s = np.cos(chi), np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def bessel01(t):
    """Return ``(J0, J1, Y0, Y1)`` evaluated at ``t > 0`` (array-like).

    The Y values at ``t == 0`` are ``-inf``; callers that need a domain check
    should use :func:`bessel_y`.
    """
    t = np.asarray(t, dtype=float)
    shape = t.shape
    t = t.ravel()
    j0 = np.empty_like(t)
    j1 = np.empty_like(t)
    y0 = np.empty_like(t)
    y1 = np.empty_like(t)

    zero = t == 0.0
    small = (t < _SERIES_MAX) & ~zero
    mid = (t >= _SERIES_MAX) & (t < _ASYMPTOTIC_MIN)
    large = t >= _ASYMPTOTIC_MIN

    if small.any():
        j0[small], j1[small], y0[small], y1[small] = _series(t[small])
    if mid.any():
        j0[mid], j1[mid], y0[mid], y1[mid] = _recurrence(t[mid])
    # banding lets the asymptotic loop stop early for large arguments
    for lo, hi in zip(_ASYMPTOTIC_BANDS[:-1], _ASYMPTOTIC_BANDS[1:]):
        band = large & (t >= lo) & (t < hi)
        if band.any():
            tb = t[band]
            j0[band], y0[band] = _asymptotic(tb, 0, lo)
            j1[band], y1[band] = _asymptotic(tb, 1, lo)
    if zero.any():
        j0[zero], j1[zero] = 1.0, 0.0
        y0[zero], y1[zero] = -np.inf, -np.inf
    return tuple(a.reshape(shape) for a in (j0, j1, y0, y1))


def _check_order(order):
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")


def _as_float(values, like):
    return float(values) if np.ndim(like) == 0 else values


def bessel_j(order, t):
    """Bessel function of the first kind J_order(t), order 0 or 1, t >= 0."""
    _check_order(order)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("bessel_j requires finite t >= 0")
    j0, j1, _, _ = bessel01(t_arr)
    return _as_float(j0 if order == 0 else j1, t)


def bessel_y(order, t):
    """Bessel function of the second kind Y_order(t), order 0 or 1.

    Raises:
        ValueError: if any ``t <= 0`` (logarithmic / pole singularity).
    """
    _check_order(order)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("bessel_y is only defined for finite t > 0")
    _, _, y0, y1 = bessel01(t_arr)
    return _as_float(y0 if order == 0 else y1, t)


def hankel1(order, t):
    """Hankel function of the first kind H^(1)_order(t) = J + iY for t > 0."""
    _check_order(order)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("hankel1 is only defined for finite t > 0")
    j0, j1, y0, y1 = bessel01(t_arr)
    h = j0 + 1j * y0 if order == 0 else j1 + 1j * y1
    return complex(h) if np.ndim(t) == 0 else h


def _separation(x, z):
    d = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise ValueError("fundamental solution is singular at x == z")
    return d, r


def fundamental_solution(x, z, k):
    """Outgoing Helmholtz fundamental solution Phi(x, z) = (i/4) H0(k|x - z|).

    ``x`` and ``z`` are points (``(..., 2)`` arrays) that broadcast together.
    """
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    _, r = _separation(x, z)
    j0, _, y0, _ = bessel01(k * r)
    phi = 0.25j * (j0 + 1j * y0)
    return complex(phi) if np.ndim(phi) == 0 else phi


def fundamental_gradient(x, z, k):
    """Gradient of Phi(x, z) with respect to x, shape ``(..., 2)``.

    grad_x Phi = -(ik/4) H1(k|x - z|) (x - z)/|x - z|.
    """
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    d, r = _separation(x, z)
    _, j1, _, y1 = bessel01(k * r)
    scale = -0.25j * k * (j1 + 1j * y1) / r
    return scale[..., None] * d


def kernel_values(x, y, k, *, gradient=False):
    """Pairwise Phi(x_i, y_j) (and optionally grad_x) for point sets.

    Args:
        x: ``(m, 2)`` target points.
        y: ``(n, 2)`` source points; no pair may coincide.
        k: wavenumber.
        gradient: also return the ``(m, n, 2)`` gradient with respect to x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x[:, None, :] - y[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise ValueError("coincident target and source points")
    j0, j1, y0, y1 = bessel01(k * r)
    phi = 0.25j * (j0 + 1j * y0)
    if not gradient:
        return phi
    grad = (-0.25j * k * (j1 + 1j * y1) / r)[..., None] * d
    return phi, grad
