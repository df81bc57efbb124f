"""Gamma and digamma values on the imaginary axis.

The crossing phases need arg Gamma(i y) on a single smooth branch (the one
with arg Gamma(i y) -> -pi/2 - gamma*y as y -> 0+, coming from
Gamma(iy) ~ 1/(iy)) together with Re psi(i y), its derivative in y.  Both are
evaluated through scipy's complex loggamma/digamma, which are analytic off
the cut on the negative real axis and hence continuous on the whole upper
imaginary axis -- no unwrapping is ever applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma as _psi
from scipy.special import loggamma as _loggamma

from .model import DomainError

LN2 = float(np.log(2.0))

Y_MIN = 1e-6
Y_MAX = 100.0


@dataclass(frozen=True)
class GammaImag:
    """arg Gamma(iy), ln|Gamma(iy)| and Re psi(iy) on the smooth branch."""

    arg_gamma: float
    log_abs_gamma: float
    re_digamma: float


def _check_range(y):
    y = np.asarray(y, dtype=float)
    if np.any((y <= Y_MIN) | (y >= Y_MAX)):
        raise DomainError(f"argument must lie in ({Y_MIN}, {Y_MAX})")
    return y


def arg_gamma_imag(y):
    """arg Gamma(iy), continuous in y (no mod-2*pi reduction)."""
    y = _check_range(y)
    return _loggamma(1j * y).imag


def log_abs_gamma_imag(y):
    """ln |Gamma(iy)|."""
    y = _check_range(y)
    return _loggamma(1j * y).real


def re_digamma_imag(y):
    """Re psi(iy) = d/dy arg Gamma(iy)."""
    y = _check_range(y)
    return _psi(1j * y).real


def gamma_on_imaginary_axis(y: float) -> GammaImag:
    """All three values at a single point y in (1e-6, 100)."""
    z = _loggamma(1j * float(_check_range(y)))
    return GammaImag(arg_gamma=float(z.imag), log_abs_gamma=float(z.real),
                     re_digamma=float(_psi(1j * float(y)).real))


def g_fun(z0_hat):
    """3 ln 2 - Re psi(i z0_hat): slope in z0_hat of the left crossing phase."""
    return 3.0 * LN2 - re_digamma_imag(z0_hat)


def q_fun(rho0_hat):
    """7 ln 2 - 2 Re psi(2 i rho0_hat): slope in rho0_hat of the inner phase
    offset (the factor 2 is the chain rule on the doubled argument)."""
    return 7.0 * LN2 - 2.0 * re_digamma_imag(2.0 * np.asarray(rho0_hat, dtype=float))
