import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from coinvert.special import (bessel01, bessel_j, bessel_y, fundamental_gradient,
                              fundamental_solution, hankel1, kernel_values)

REGIME_SAMPLES = np.concatenate([np.geomspace(1e-3, 7.999, 300), np.linspace(8.0, 14.0, 300),
                                 np.geomspace(14.0, 1e3, 300)])


@pytest.mark.parametrize("order", [0, 1])
def test_j_and_y_match_reference_across_regimes(order):
    assert np.max(np.abs(bessel_j(order, REGIME_SAMPLES) - sp.jv(order, REGIME_SAMPLES))) < 1e-12
    assert np.max(np.abs(bessel_y(order, REGIME_SAMPLES) - sp.yv(order, REGIME_SAMPLES))) < 1e-12


def test_regime_boundaries_are_continuous():
    eps = 1e-12
    for edge in (8.0, 14.0, 20.0, 30.0, 60.0, 150.0):
        left = np.array(bessel01(np.array([edge - eps])))
        right = np.array(bessel01(np.array([edge])))
        assert np.max(np.abs(left - right)) < 1e-11


def test_wronskian():
    j0, j1, y0, y1 = bessel01(REGIME_SAMPLES)
    w = j1 * y0 - j0 * y1
    np.testing.assert_allclose(w, 2.0 / (np.pi * REGIME_SAMPLES), rtol=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_hankel_matches_reference(t):
    assert abs(hankel1(0, t) - sp.hankel1(0, t)) < 1e-12
    assert abs(hankel1(1, t) - sp.hankel1(1, t)) < 1e-12


def test_scalar_types_and_zero_argument():
    assert isinstance(bessel_j(0, 1.0), float)
    assert isinstance(hankel1(1, 2.0), complex)
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_y_and_h_reject_nonpositive(bad):
    with pytest.raises(ValueError):
        bessel_y(0, bad)
    with pytest.raises(ValueError):
        hankel1(1, bad)


def test_unsupported_order():
    with pytest.raises(ValueError):
        bessel_j(2, 1.0)


def test_fundamental_solution_values_and_symmetry():
    x, z, k = np.array([1.0, 2.0]), np.array([-0.5, 0.3]), 6.0
    r = np.hypot(*(x - z))
    assert abs(fundamental_solution(x, z, k) - 0.25j * sp.hankel1(0, k * r)) < 1e-13
    assert fundamental_solution(x, z, k) == fundamental_solution(z, x, k)
    with pytest.raises(ValueError):
        fundamental_solution(x, x, k)
    with pytest.raises(ValueError):
        fundamental_solution(x, z, 0.0)


def test_gradient_matches_finite_differences():
    x, z, k, h = np.array([1.3, -0.4]), np.array([0.2, 0.9]), 14.0, 1e-6
    grad = fundamental_gradient(x, z, k)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (fundamental_solution(x + e, z, k) - fundamental_solution(x - e, z, k)) / (2 * h)
        assert abs(fd - grad[i]) < 1e-7 * abs(grad[i]) + 1e-9


def test_kernel_values_shapes_and_consistency():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4, 2))
    y = rng.normal(size=(5, 2)) + 5.0
    phi, grad = kernel_values(x, y, 3.0, gradient=True)
    assert phi.shape == (4, 5) and grad.shape == (4, 5, 2)
    assert abs(phi[2, 3] - fundamental_solution(x[2], y[3], 3.0)) < 1e-15
    np.testing.assert_allclose(grad[1, 4], fundamental_gradient(x[1], y[4], 3.0), atol=1e-15)
    with pytest.raises(ValueError):
        kernel_values(x, x[:1], 3.0)


def test_reference_values():
    assert abs(bessel_j(0, 1.0) - 0.7651976865579666) < 1e-15
    assert abs(bessel_y(0, 1.0) - 0.08825696421567696) < 1e-15
    assert abs(bessel_y(1, 1.0) + 0.7812128213002887) < 1e-15
    assert abs(hankel1(0, 1.0) - (0.7651976866 + 0.0882569642j)) < 1e-10
    assert abs(hankel1(1, 1.0) - (0.4400505857 - 0.7812128213j)) < 1e-10
    phi = fundamental_solution(np.array([1.0, 0.0]), np.zeros(2), 1.0)
    assert abs(phi - (-0.0220642411 + 0.1912994216j)) < 1e-10
    grad = fundamental_gradient(np.array([1.0, 0.0]), np.zeros(2), 1.0)
    np.testing.assert_allclose(grad, [-0.25j * (0.4400505857 - 0.7812128213j), 0.0], atol=1e-10)


def test_y0_logarithmic_singularity():
    from coinvert.special import EULER_GAMMA
    t = np.geomspace(1e-8, 1e-4, 6)
    rest = bessel_y(0, t) - (2 / np.pi) * np.log(t / 2)
    np.testing.assert_allclose(rest, 2 / np.pi * EULER_GAMMA, atol=1e-6)


def test_derivative_recurrences():
    t, h = np.linspace(0.5, 60.0, 50), 1e-5
    np.testing.assert_allclose((bessel_j(0, t + h) - bessel_j(0, t - h)) / (2 * h), -bessel_j(1, t),
                               rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose((bessel_y(0, t + h) - bessel_y(0, t - h)) / (2 * h), -bessel_y(1, t),
                               rtol=1e-8, atol=1e-10)


def test_hankel_large_argument_behaviour():
    t = np.geomspace(20.0, 1e3, 40)
    for n in (0, 1):
        asym = np.sqrt(2 / (np.pi * t)) * np.exp(1j * (t - n * np.pi / 2 - np.pi / 4))
        assert np.all(np.abs(hankel1(n, t) / asym - 1) * t < 1.0)
    np.testing.assert_allclose(np.abs(hankel1(0, np.array([1e3]))) * np.sqrt(1e3), np.sqrt(2 / np.pi), rtol=1e-3)


def test_fundamental_solution_solves_helmholtz():
    k, h = 3.0, 1e-3
    x, z = np.array([2.0, 0.0]), np.zeros(2)
    f = lambda p: fundamental_solution(p, z, k)
    lap = (f(x + [h, 0]) + f(x - [h, 0]) + f(x + [0, h]) + f(x - [0, h]) - 4 * f(x)) / h ** 2
    assert abs(lap + k ** 2 * f(x)) <= 1e-5


def test_gradient_antisymmetry_and_far_decay():
    x, z, k = np.array([0.6, 0.8]), np.array([-0.3, 0.1]), 2.0
    h = 1e-6
    grad_z = np.array([(fundamental_solution(x, z + e, k) - fundamental_solution(x, z - e, k)) / (2 * h)
                       for e in (np.array([h, 0]), np.array([0, h]))])
    np.testing.assert_allclose(fundamental_gradient(x, z, k), -grad_z, rtol=1e-7)
    for r in (100.0, 400.0):
        y = np.array([r / k, 0.0])
        assert abs(abs(fundamental_solution(y, np.zeros(2), k)) / (0.25 * np.sqrt(2 / (np.pi * r))) - 1) < 0.01


def test_gradient_central_difference_example():
    x, z, k, h = np.array([0.6, 0.8]), np.zeros(2), 2.0, 1e-5
    n = x / np.linalg.norm(x)
    fd = (fundamental_solution(x + h * n, z, k) - fundamental_solution(x - h * n, z, k)) / (2 * h)
    exact = fundamental_gradient(x, z, k) @ n
    assert abs(fd - exact) <= 1e-8 * abs(exact)
