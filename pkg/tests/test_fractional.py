import math

import numpy as np
import pytest

from halfline4nls.fractional import (TimeSignal, cutoff_psi, default_lift, frac_derivative, frac_integral,
                                     frac_order, product_trapezoid_weights)


def power(p, n=257):
    return TimeSignal.from_function(lambda t: t**p, 1.0, n)


def exact_power(p, alpha, t):
    # I_alpha t^p = Gamma(p+1)/Gamma(p+1+alpha) t^(p+alpha)
    return math.gamma(p + 1) / math.gamma(p + 1 + alpha) * t ** (p + alpha)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 1.0, 1.25])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_integral_of_powers(alpha, p):
    # the cubic rule is exact for cubics once the stencil clears t = 0, where
    # the zero extension of t^p is only C^(p-1)
    f = power(p)
    err = np.abs(frac_integral(f, alpha).samples - exact_power(p, alpha, f.times))
    assert np.max(err[3:]) < 1e-10
    coarse = power(p, 129)
    err_c = np.abs(frac_integral(coarse, alpha).samples - exact_power(p, alpha, coarse.times))
    assert np.max(err) < 0.5 * np.max(err_c) or np.max(err) < 1e-14


def test_integral_order_four(smooth_signal):
    ref = None
    errs = []
    for n in (65, 129, 257):
        f = smooth_signal(n)
        a = frac_integral(frac_integral(f, 0.25), 0.5).samples
        b = frac_integral(f, 0.75).samples
        errs.append(np.max(np.abs(a - b)))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 3.0)


def test_trapezoid_weights_integrate_constants():
    # weights reproduce I_alpha 1 = t^alpha / Gamma(alpha+1) exactly
    alpha, n = 0.4, 50
    c, a0 = product_trapezoid_weights(alpha, n)
    m = np.arange(n)
    total = np.array([a0[k] + c[: k].sum() for k in m]) / math.gamma(alpha + 2)
    assert np.allclose(total[1:], m[1:] ** alpha / math.gamma(alpha + 1), rtol=1e-12)


@pytest.mark.parametrize("alpha", [-0.25, -0.5, -0.75, -1.25])
def test_derivative_of_powers(alpha):
    f = power(4, 513)
    out = frac_derivative(f, alpha).samples
    ref = exact_power(4, alpha, f.times)
    assert np.max(np.abs(out - ref)[4:-4]) < 1e-6 * np.max(np.abs(ref))


def test_derivative_inverts_integral(smooth_signal):
    f = smooth_signal(257)
    back = frac_derivative(frac_integral(f, 0.75), -0.75).samples
    assert np.max(np.abs(back - f.samples)) < 1e-6


def test_integer_derivative():
    f = power(3, 257)
    err = np.abs(frac_derivative(f, -1.0).samples - 3 * f.times**2)
    assert np.max(err[4:]) < 1e-8
    assert np.max(err) < 1e-4


def test_default_lift():
    assert default_lift(-0.25) == 1
    assert default_lift(-0.75) == 2
    assert default_lift(-1.0) == 2


def test_frac_order_dispatch(smooth_signal):
    f = smooth_signal(65)
    assert np.array_equal(frac_order(f, 0.5).samples, frac_integral(f, 0.5).samples)
    assert frac_order(f, 0.0) is f


def test_rejections(smooth_signal):
    f = smooth_signal(33)
    with pytest.raises(ValueError):
        frac_derivative(f, 0.5)
    with pytest.raises(ValueError):
        frac_integral(TimeSignal(f.samples, f.dt, causal=False), 0.5)
    with pytest.raises(ValueError):
        TimeSignal(np.array([1.0, np.nan]), 0.1)


def test_underresolved_warning():
    t = np.linspace(0, 1, 65)
    f = TimeSignal(np.cos(200 * t) * t, t[1])
    with pytest.warns(RuntimeWarning, match="scale of dt"):
        frac_derivative(f, -0.5)


def test_cutoff_psi():
    t = np.linspace(-3, 3, 601)
    psi = cutoff_psi(t)
    assert np.all(psi[(t >= 0) & (t <= 1)] == 1)
    assert np.all(psi[np.abs(t) >= 2] == 0)
    assert np.all((psi >= 0) & (psi <= 1))
    assert np.all(np.diff(psi[t >= 1]) <= 0)
