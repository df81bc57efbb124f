import math

import numpy as np
import pytest

from sforbits.model import DomainError
from sforbits.specfun import (arg_gamma_imag, g_fun, gamma_on_imaginary_axis,
                              q_fun, re_digamma_imag)


def re_digamma_series(y, n_terms=200_000):
    """Defining series Re psi(iy) = -gamma + sum_n (1/(n+1) - n/(n^2+y^2)),
    summed directly with an Euler-Maclaurin tail (integral + midpoint)."""
    n = np.arange(n_terms, dtype=float)
    terms = 1.0 / (n + 1.0) - n / (n * n + y * y)
    N = float(n_terms)
    tail = 0.5 * math.log(N * N + y * y) - math.log(N + 1.0)
    tail += 0.5 * (1.0 / (N + 1.0) - N / (N * N + y * y))
    return -np.euler_gamma + terms.sum() + tail


def test_reflection_identity():
    for y in (0.3, 1.0, 2.5, 7.0):
        gi = gamma_on_imaginary_axis(y)
        assert math.exp(2 * gi.log_abs_gamma) == pytest.approx(
            math.pi / (y * math.sinh(math.pi * y)), rel=1e-12)


def test_digamma_series_oracle():
    gi = gamma_on_imaginary_axis(1.0)
    assert gi.re_digamma == pytest.approx(re_digamma_series(1.0), abs=1e-9)
    assert gi.re_digamma == pytest.approx(0.0946503206224770, abs=1e-13)


def test_stirling_asymptotics():
    # Re psi(iy) -> ln y for large y
    assert re_digamma_imag(50.0) - math.log(50.0) == pytest.approx(0.0, abs=1e-4)


def test_small_argument_branch():
    # arg Gamma(iy) -> -pi/2 - gamma*y as y -> 0+
    y = 2e-6
    assert arg_gamma_imag(y) == pytest.approx(-math.pi / 2 - np.euler_gamma * y,
                                              abs=1e-10)


def test_continuity_of_arg_gamma():
    y = np.arange(0.001, 10.0, 0.001)
    vals = arg_gamma_imag(y)
    assert np.max(np.abs(np.diff(vals))) < 1e-2


def test_derivative_consistency():
    # Re psi(iy) = d/dy arg Gamma(iy)
    for y in np.linspace(0.1, 10.0, 23):
        h = 1e-6
        fd = (arg_gamma_imag(y + h) - arg_gamma_imag(y - h)) / (2 * h)
        assert fd == pytest.approx(re_digamma_imag(y), abs=1e-6)


def test_g_and_q_values():
    assert g_fun(1.0) == pytest.approx(3 * math.log(2) - 0.0946503206224770,
                                       abs=1e-12)
    # g matches the finite difference of the arg at z0 = 0.7
    h = 1e-6
    fd = (arg_gamma_imag(0.7 + h) - arg_gamma_imag(0.7 - h)) / (2 * h)
    assert g_fun(0.7) == pytest.approx(3 * math.log(2) - fd, abs=1e-6)
    # q definition collapses identically
    rho = 0.37
    assert q_fun(rho) / 2 - 3.5 * math.log(2) + re_digamma_imag(2 * rho) == \
        pytest.approx(0.0, abs=1e-14)


def test_domain_errors():
    with pytest.raises(DomainError):
        arg_gamma_imag(1e-7)
    with pytest.raises(DomainError):
        re_digamma_imag(150.0)
