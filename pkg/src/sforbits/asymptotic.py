"""Analytic factorization of the return map near the pitchfork passage.

The passage from the pre-bifurcation oscillation around x = 0 to the
post-bifurcation oscillation around x = +-kappa(u) factors as

    outer averaged map  ->  crossing map  ->  inner averaged map,

expressed in action-angle data: (z0, w0) on the outer side and
(rho0, phi0, eta) on the inner side, with eta in {+1, -1} selecting the
branch of the pitchfork.  The crossing map encodes the connection
asymptotics of the scaled (Painleve-II type) transition system; the averaged
maps shift the angle by large, explicitly computable phases while freezing
the action.
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .model import DomainError, ModelSpec, ScaleFrame, kappa, scaled_frequencies, vartheta
from .specfun import LN2, arg_gamma_imag

TWO_PI = 2.0 * math.pi

# action value at which 1 + p^2 can vanish (singular set of the crossing)
Z0_SINGULAR = LN2 / TWO_PI


class OutsideDomain(ValueError):
    """The outer data lies in the excluded neighborhood of the singular set."""


class QuadratureFail(RuntimeError):
    pass


@dataclass(frozen=True)
class OuterAA:
    """Outer action-angle pair: z0_hat >= 0, w0 mod 2*pi."""

    z0_hat: float
    w0: float

    def __post_init__(self):
        if self.z0_hat < 0:
            raise ValueError("action must be nonnegative")


@dataclass(frozen=True)
class InnerAA:
    """Inner action-angle pair plus branch sign eta."""

    rho0_hat: float
    phi0: float
    eta: int

    def __post_init__(self):
        if self.rho0_hat < 0:
            raise ValueError("action must be nonnegative")
        if self.eta not in (-1, 1):
            raise ValueError("eta must be +1 or -1")


@dataclass(frozen=True)
class ModelConstants:
    """Phase constants of the averaged maps.

    e1: inner frequency integral over half the branch;
    e2: inner logarithmic constant (exp of 3x the regularized kernel limit);
    e3: outer frequency integral;
    e4: outer logarithmic constant in the convention in which the outer
        angle shift carries ln(e4/eps); e4_raw is the same constant in the
        mu-scaling convention, with e4 = e4_raw^(3/2).
    """

    e1: float
    e2: float
    e3: float
    e4: float
    e4_raw: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("e1", "e2", "e3", "e4", "e4_raw"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"e1": self.e1, "e2": self.e2, "e3": self.e3,
                       "e4": self.e4, "e4_raw": self.e4_raw,
                       "provenance": self.provenance}, fh, indent=2)


# ---------------------------------------------------------------------------
# Blowup charts
# ---------------------------------------------------------------------------

def blowup_outer(x, y, u, frame: ScaleFrame):
    """(x, y, u) -> (x_hat, y_hat, u_hat): the scaling that turns the
    pitchfork passage into the Painleve-II transition system."""
    mu, d34 = frame.mu, frame.delta ** 0.75
    return x / (mu * d34), y / (mu ** 2 * d34), u / mu ** 2


def blowup_outer_inverse(x_hat, y_hat, u_hat, frame: ScaleFrame):
    mu, d34 = frame.mu, frame.delta ** 0.75
    return x_hat * mu * d34, y_hat * mu ** 2 * d34, u_hat * mu ** 2


def blowup_inner(x, y, u, frame: ScaleFrame, model: ModelSpec, sign: int):
    """Deviation from the branch sign*kappa(u), in blowup scaling.

    (x, y) = (sign*kappa, 0) + (sign*xi, sign*sigma) with
    xi = mu d^{3/4} xi_hat, sigma = mu^2 d^{3/4} sigma_hat.
    """
    ur = np.mod(u, TWO_PI)
    if np.any(ur <= 0) or np.any(ur >= model.tau):
        raise DomainError("inner chart requires u in (0, tau)")
    k = kappa(ur, model)
    mu, d34 = frame.mu, frame.delta ** 0.75
    xi = sign * x - k
    sigma = sign * y
    return xi / (mu * d34), sigma / (mu ** 2 * d34), u / mu ** 2


def blowup_inner_inverse(xi_hat, sigma_hat, u_hat, frame: ScaleFrame,
                         model: ModelSpec, sign: int):
    mu, d34 = frame.mu, frame.delta ** 0.75
    u = u_hat * mu ** 2
    k = kappa(np.mod(u, TWO_PI), model)
    x = sign * (k + xi_hat * mu * d34)
    y = sign * sigma_hat * mu ** 2 * d34
    return x, y, u


# ---------------------------------------------------------------------------
# Action-angle frames
# ---------------------------------------------------------------------------

def to_outer_action_angle(x_hat, y_hat, u_hat, frame: ScaleFrame,
                          model: ModelSpec) -> OuterAA:
    """Symplectic polar coordinates of the frequency-weighted fast pair on
    the pre-bifurcation side (f < 0)."""
    f_hat, _, _ = scaled_frequencies(u_hat, frame, model)
    if f_hat is None:
        raise DomainError("outer frame undefined here (f >= 0)")
    w = model.outer_weight(np.mod(frame.mu ** 2 * u_hat, TWO_PI))
    x0 = math.sqrt(f_hat / w) * x_hat
    y0 = math.sqrt(w / f_hat) * y_hat
    z0 = 0.5 * (x0 * x0 + y0 * y0)
    w0 = math.atan2(y0, x0) % TWO_PI if z0 > 0 else 0.0
    return OuterAA(z0_hat=float(z0), w0=float(w0))


def from_outer_action_angle(aa: OuterAA, u_hat, frame: ScaleFrame,
                            model: ModelSpec):
    f_hat, _, _ = scaled_frequencies(u_hat, frame, model)
    if f_hat is None:
        raise DomainError("outer frame undefined here (f >= 0)")
    w = model.outer_weight(np.mod(frame.mu ** 2 * u_hat, TWO_PI))
    r = math.sqrt(2.0 * aa.z0_hat)
    x0, y0 = r * math.cos(aa.w0), r * math.sin(aa.w0)
    return x0 * math.sqrt(w / f_hat), y0 * math.sqrt(f_hat / w)


def to_inner_action_angle(xi_hat, sigma_hat, u_hat, frame: ScaleFrame,
                          model: ModelSpec, eta: int = 1) -> InnerAA:
    """Inner analogue on the branch side (u in (0, tau))."""
    _, omega_hat, _ = scaled_frequencies(u_hat, frame, model)
    if omega_hat is None:
        raise DomainError("inner frame undefined here (u outside (0, tau))")
    w = model.inner_weight(np.mod(frame.mu ** 2 * u_hat, TWO_PI))
    xi0 = math.sqrt(omega_hat / w) * xi_hat
    sg0 = math.sqrt(w / omega_hat) * sigma_hat
    rho0 = 0.5 * (xi0 * xi0 + sg0 * sg0)
    phi0 = math.atan2(sg0, xi0) % TWO_PI if rho0 > 0 else 0.0
    return InnerAA(rho0_hat=float(rho0), phi0=float(phi0), eta=eta)


def from_inner_action_angle(aa: InnerAA, u_hat, frame: ScaleFrame,
                            model: ModelSpec):
    _, omega_hat, _ = scaled_frequencies(u_hat, frame, model)
    if omega_hat is None:
        raise DomainError("inner frame undefined here (u outside (0, tau))")
    w = model.inner_weight(np.mod(frame.mu ** 2 * u_hat, TWO_PI))
    r = math.sqrt(2.0 * aa.rho0_hat)
    xi0, sg0 = r * math.cos(aa.phi0), r * math.sin(aa.phi0)
    return xi0 * math.sqrt(w / omega_hat), sg0 * math.sqrt(omega_hat / w)


# ---------------------------------------------------------------------------
# Crossing map
# ---------------------------------------------------------------------------

def crossing_phase(z0_hat, w0, frame: ScaleFrame):
    """The pseudo-phase lambda of the outer datum at u_hat = -u_star_hat.

    The outer angle satisfies
        w0 = (2/3) d^{-3/2} u*^{3/2} + (3/2) z0 ln(u*/d) - pi/2 + l
    and lambda = 3 z0 ln2 - pi/4 - arg Gamma(i z0) - l, reduced to [0, 2*pi).
    """
    d, us = frame.delta, frame.u_star_hat
    ell = (w0 - (2.0 / 3.0) * d ** -1.5 * us ** 1.5
           - 1.5 * z0_hat * math.log(us / d) + math.pi / 2.0)
    lam = 3.0 * z0_hat * LN2 - math.pi / 4.0 - float(arg_gamma_imag(z0_hat)) - ell
    return lam % TWO_PI


def in_admissible_set(z0_hat, lam, c_inv=0.05):
    """True when lambda is at distance >= c_inv from {0, pi} (mod 2*pi) and
    z0_hat at distance >= c_inv from the singular action ln2/(2*pi)."""
    lam = lam % TWO_PI
    d0 = min(lam, TWO_PI - lam)
    dpi = abs(lam - math.pi)
    return (d0 >= c_inv) and (dpi >= c_inv) and (abs(z0_hat - Z0_SINGULAR) >= c_inv)


def connection_data(z0_hat, lam):
    """(p, rho0_hat, theta) of the connection formulas at pseudo-phase lam."""
    p = math.sqrt(math.expm1(TWO_PI * z0_hat)) * cmath.exp(1j * lam)
    im = abs(p.imag)
    if im == 0.0:
        raise OutsideDomain("pseudo-phase on the singular rays (sin lambda = 0)")
    rho0 = math.log((1.0 + abs(p) ** 2) / (2.0 * im)) / TWO_PI
    if rho0 < 2e-6:
        # only reachable in a vanishing neighborhood of the singular action
        raise OutsideDomain("inner action too close to zero")
    q_of_rho = -math.pi / 4.0 + 7.0 * rho0 * LN2 - float(arg_gamma_imag(2.0 * rho0))
    w = 1.0 + p * p
    if abs(w) < 1e-13:
        raise OutsideDomain("1 + p^2 = 0: inner phase undefined")
    theta = q_of_rho - cmath.phase(w)
    return p, rho0, theta


def crossing_map(aa: OuterAA, frame: ScaleFrame, c_inv: float = 0.05) -> InnerAA:
    """Extended crossing map (z0, w0) -> (rho0, phi0, eta).

    Defined on the admissible set only; proximity to the singular rays
    lambda in {0, pi} or to the singular action raises
    :class:`OutsideDomain`, which is a domain signal, not a failure.
    """
    lam = crossing_phase(aa.z0_hat, aa.w0, frame)
    if not in_admissible_set(aa.z0_hat, lam, c_inv):
        raise OutsideDomain(
            f"(z0={aa.z0_hat:.4g}, lambda={lam:.4g}) outside the admissible set")
    _, rho0, theta = connection_data(aa.z0_hat, lam)
    d, us = frame.delta, frame.u_star_hat
    phi0 = (-(2.0 * math.sqrt(2.0) / 3.0) * d ** -1.5 * us ** 1.5
            + 3.0 * rho0 * math.log(us / d) - theta)
    eta = 1 if lam > math.pi else -1
    return InnerAA(rho0_hat=rho0, phi0=phi0 % TWO_PI, eta=eta)


def rho0_closed_form(z0_hat, lam):
    """Equivalent closed form of the inner action:
    z0/2 + (1/4pi) ln(1 - e^{-2pi z0})^{-1} - (1/2pi) ln(2 |sin lambda|)."""
    s = abs(math.sin(lam))
    if s == 0.0:
        raise OutsideDomain("sin lambda = 0")
    return (0.5 * z0_hat
            - math.log(-math.expm1(-TWO_PI * z0_hat)) / (2.0 * TWO_PI)
            - math.log(2.0 * s) / TWO_PI)


# ---------------------------------------------------------------------------
# Averaged maps
# ---------------------------------------------------------------------------

def outer_map(aa: OuterAA, frame: ScaleFrame, consts: ModelConstants) -> OuterAA:
    """Averaged drift from the section u = -pi + tau/2 to u_hat = -u_star_hat:
    the action is frozen, the angle picks up the outer phase."""
    if frame.outer_budget > 0.5:
        warnings.warn(f"outer smallness delta^(3/2) ln(1/eps) = "
                      f"{frame.outer_budget:.3g} above 0.5", stacklevel=2)
    eps, d, us = frame.eps, frame.delta, frame.u_star_hat
    w0 = (aa.w0 - consts.e3 / eps
          - (math.log(consts.e4 / eps) - 1.5 * math.log(us / d)) * aa.z0_hat
          + (2.0 / 3.0) * d ** -1.5 * us ** 1.5)
    return OuterAA(z0_hat=aa.z0_hat, w0=w0 % TWO_PI)


def inner_map(aa: InnerAA, frame: ScaleFrame, consts: ModelConstants) -> InnerAA:
    """Averaged drift from u_hat = +u_star_hat to u = tau/2 on the branch."""
    if frame.inner_budget > 0.5:
        warnings.warn(f"inner smallness delta^(3/4) ln(1/eps) = "
                      f"{frame.inner_budget:.3g} above 0.5", stacklevel=2)
    eps, d, us = frame.eps, frame.delta, frame.u_star_hat
    phi0 = (aa.phi0 - math.sqrt(2.0) * consts.e1 / eps
            + (2.0 * math.log(consts.e2 / eps) - 3.0 * math.log(us / d)) * aa.rho0_hat
            + (2.0 * math.sqrt(2.0) / 3.0) * d ** -1.5 * us ** 1.5)
    return InnerAA(rho0_hat=aa.rho0_hat, phi0=phi0 % TWO_PI, eta=aa.eta)


# ---------------------------------------------------------------------------
# Model constants
# ---------------------------------------------------------------------------

def _regularized_limit(values, u_stars):
    """Extrapolate g(u*) = C + O(u*) to u* = 0: Lagrange interpolation of the
    ladder values evaluated at zero (Richardson through all recorded powers)."""
    u = np.asarray(u_stars, dtype=float)
    v = np.asarray(values, dtype=float)
    out = 0.0
    for i in range(len(u)):
        w = 1.0
        for j in range(len(u)):
            if j != i:
                w *= u[j] / (u[j] - u[i])
        out += w * v[i]
    return float(out)


def compute_constants(model: ModelSpec, quad_tol: float = 1e-10) -> ModelConstants:
    """Quadrature for e1, e3 and regularized limits for e2, e4.

    e1 = int_0^{tau/2} sqrt(vartheta),  e3 = int_0^{pi - tau/2} sqrt(-f(-u)),
    e2 = exp(3*C2), C2 = lim (1/2) int_{u*}^{tau/2} vartheta^{-1} + (1/2) ln u*,
    e4_raw = exp(C4), C4 = lim int_{u*}^{pi - tau/2} (-f(-u))^{-1} + ln u*,
    and e4 = e4_raw^{3/2} (the convention used by the outer angle shift).
    """
    tau = model.tau

    def sqrt_theta(u):
        return math.sqrt(vartheta(u, model))

    def sqrt_mf(u):
        return math.sqrt(-model.f(-u))

    e1, err1 = quad(sqrt_theta, 0.0, tau / 2.0, epsabs=quad_tol, epsrel=quad_tol,
                    limit=200)
    e3, err3 = quad(sqrt_mf, 0.0, math.pi - tau / 2.0, epsabs=quad_tol,
                    epsrel=quad_tol, limit=200)
    if err1 > 100 * quad_tol * max(1.0, e1) or err3 > 100 * quad_tol * max(1.0, e3):
        raise QuadratureFail("frequency integrals did not reach tolerance")

    ladders = [1e-2, 1e-3, 1e-4]
    c2_vals, c4_vals = [], []
    for us in ladders:
        i2, e2err = quad(lambda u: 1.0 / vartheta(u, model), us, tau / 2.0,
                         epsabs=quad_tol, epsrel=quad_tol, limit=200)
        i4, e4err = quad(lambda u: 1.0 / (-model.f(-u)), us, math.pi - tau / 2.0,
                         epsabs=quad_tol, epsrel=quad_tol, limit=200)
        if e2err > 100 * quad_tol * max(1.0, abs(i2)) or \
           e4err > 100 * quad_tol * max(1.0, abs(i4)):
            raise QuadratureFail("regularized kernel integrals did not converge")
        c2_vals.append(0.5 * i2 + 0.5 * math.log(us))
        c4_vals.append(i4 + math.log(us))
    c2 = _regularized_limit(c2_vals, ladders)
    c4 = _regularized_limit(c4_vals, ladders)
    e2 = math.exp(3.0 * c2)
    e4_raw = math.exp(c4)
    return ModelConstants(
        e1=e1, e2=e2, e3=e3, e4=e4_raw ** 1.5, e4_raw=e4_raw,
        provenance={"quad_tol": quad_tol,
                    "extrapolation_u_star": ladders,
                    "C2_table": c2_vals, "C4_table": c4_vals,
                    "C2": c2, "C4": c4,
                    "quad_errors": {"e1": err1, "e3": err3}})


def delta_schedule(eps: float, a: float = 0.15) -> float:
    """delta = eps^a, clamped so that eps^{2/3} delta^{-7/2} stays below 1
    (the crossing validity power must remain positive: a < 4/21)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    delta = eps ** a
    if eps ** (2.0 / 3.0) * delta ** -3.5 >= 1.0:
        delta = eps ** (4.0 / 21.0 * 0.95)
        warnings.warn(f"delta exponent {a} too steep; clamped", stacklevel=2)
    return delta
