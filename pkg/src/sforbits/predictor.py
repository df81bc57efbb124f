"""Fixed-point equations of the factored return map and their solvers.

A periodic orbit of the stroboscopic map corresponds, through the
outer/crossing/inner factorization, to a solution of one of two reduced
systems on the section data (z0, w0):

  case (i):  w0 in {0, pi/2} mod pi and the single phase condition
             F_i(z0) = 0 mod pi;
  case (ii): the pair F_ii1(z0) = 0 mod pi (solved for z0) and
             F_ii2(z0, lambda) = 0 mod pi (solved for the pseudo-phase).

Both residuals oscillate with slopes of order ln^2(1/eps), so roots are
isolated by bracketing sign changes of sin(F) on a fine grid (sin is smooth
across the 2*pi jumps of the principal-branch inner phase, which makes the
wrap-around bookkeeping unnecessary) and then bisected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np
from scipy.special import loggamma as _loggamma

from .asymptotic import Z0_SINGULAR, ModelConstants, OutsideDomain
from .model import ModelSpec
from .specfun import LN2, g_fun, q_fun

TWO_PI = 2.0 * math.pi
HIGH_PRECISION_CUTOFF = 30.0  # ln(1/eps) above which phases are reduced in mpmath


class SingularP(ValueError):
    """1 + p^2 vanishes; the trace formulas are undefined here."""


class Excluded(ValueError):
    """Requested action sits in the excluded neighborhood of the pole."""


class DegenerateFit(ValueError):
    pass


# ---------------------------------------------------------------------------
# Reduced large phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsScales:
    """Everything eps-dependent that the reduced equations consume.

    The raw phases e3/eps and sqrt(2) e1/eps are astronomically large for
    small eps; they are reduced mod 2*pi in arbitrary precision (treating the
    computed constants as exact) so the equations stay meaningful for any
    ln(1/eps).
    """

    log_inv_eps: float
    log_e2_inv_eps: float
    log_e4_inv_eps: float
    phase_outer: float  # (e3 / eps) mod 2*pi
    phase_inner: float  # (sqrt(2) e1 / eps) mod 2*pi

    @property
    def eps(self):
        return math.exp(-self.log_inv_eps)


def make_scales(consts: ModelConstants, eps: Optional[float] = None,
                log_inv_eps: Optional[float] = None) -> EpsScales:
    if (eps is None) == (log_inv_eps is None):
        raise ValueError("give exactly one of eps, log_inv_eps")
    L = math.log(1.0 / eps) if eps is not None else float(log_inv_eps)
    if L <= 0:
        raise ValueError("need eps < 1")
    if L <= HIGH_PRECISION_CUTOFF and eps is not None:
        po = math.fmod(consts.e3 / eps, TWO_PI)
        pi_ = math.fmod(math.sqrt(2.0) * consts.e1 / eps, TWO_PI)
    else:
        import mpmath as mp

        with mp.workdps(int(L * 0.4343) + 40):
            inv = mp.e ** mp.mpf(L)
            po = float(mp.fmod(mp.mpf(consts.e3) * inv, 2 * mp.pi))
            pi_ = float(mp.fmod(mp.sqrt(2) * mp.mpf(consts.e1) * inv, 2 * mp.pi))
    return EpsScales(log_inv_eps=L,
                     log_e2_inv_eps=L + math.log(consts.e2),
                     log_e4_inv_eps=L + math.log(consts.e4),
                     phase_outer=po, phase_inner=pi_)


# ---------------------------------------------------------------------------
# Reduced equations (vectorized in z0)
# ---------------------------------------------------------------------------

def _arg_gamma(z):
    return _loggamma(1j * np.asarray(z, dtype=float)).imag


def g_of_z0(z0, scales: EpsScales):
    """Left-phase offset G(z0) = 3 z0 ln2 - 3pi/4 - arg Gamma(i z0) + e3/eps,
    with the eps-phase already reduced mod 2*pi."""
    return (3.0 * z0 * LN2 - 0.75 * math.pi - _arg_gamma(z0)
            + scales.phase_outer)


def pseudo_phase(z0, w0, scales: EpsScales, side: str = "left"):
    """lambda on the given side of the passage:
    lambda_{l,r} = -+ w0 + ln(e4/eps) z0 + G(z0)."""
    s = -1.0 if side == "left" else 1.0
    return s * w0 + scales.log_e4_inv_eps * np.asarray(z0, dtype=float) + g_of_z0(z0, scales)


def abs_p_sq(z0):
    return np.expm1(TWO_PI * np.asarray(z0, dtype=float))


def rho0_of(z0, lam):
    """Inner action as a function of (z0, lambda):
    z0/2 + (1/4pi) ln(1-e^{-2pi z0})^{-1} - (1/2pi) ln(2 |sin lambda|)."""
    z0 = np.asarray(z0, dtype=float)
    s = np.abs(np.sin(lam))
    with np.errstate(divide="ignore"):
        return (0.5 * z0
                - np.log(-np.expm1(-TWO_PI * z0)) / (2.0 * TWO_PI)
                - np.log(2.0 * s) / TWO_PI)


def theta_of(z0, lam):
    """theta = Q(rho0) - arg(1 + p^2) with the principal-branch argument."""
    rho0 = rho0_of(z0, lam)
    P = abs_p_sq(z0)
    w = 1.0 + P * np.exp(2j * np.asarray(lam, dtype=float))
    Q = -0.25 * math.pi + 7.0 * rho0 * LN2 - _loggamma(2j * rho0).imag
    return Q - np.angle(w), rho0


def residual_case_i(z0, scales: EpsScales, branch_w0: float):
    """F_i(z0) for the branch w0 in {0, pi/2}: roots mod pi are the
    symmetric fixed points.  Returns (F, lambda_l, rho0)."""
    lam = pseudo_phase(z0, branch_w0, scales, side="left")
    theta, rho0 = theta_of(z0, lam)
    F = -scales.phase_inner + 2.0 * scales.log_e2_inv_eps * rho0 - theta
    return F, lam, rho0


def residual_case_ii(z0, lam, scales: EpsScales):
    """(F_ii1(z0), F_ii2(z0, lambda)); roots mod pi of the pair give the
    non-symmetric / reflection-symmetric family."""
    F1 = 2.0 * scales.log_e4_inv_eps * np.asarray(z0, dtype=float) + 2.0 * g_of_z0(z0, scales)
    rho0 = rho0_of(z0, lam)
    Q = -0.25 * math.pi + 7.0 * rho0 * LN2 - _loggamma(2j * rho0).imag
    F2 = -scales.phase_inner + 2.0 * scales.log_e2_inv_eps * rho0 - Q
    return F1, F2


# ---------------------------------------------------------------------------
# Trace of the reduced return map
# ---------------------------------------------------------------------------

def _abcd(z0, lam):
    P = float(abs_p_sq(z0))
    w = 1.0 + P * complex(math.cos(2 * lam), math.sin(2 * lam))
    den = abs(w) ** 2
    if den < 1e-26:
        raise SingularP("1 + p^2 vanishes at this (z0, lambda)")
    A = (P + 1.0) / (2.0 * P)
    B = -0.5 / math.pi / math.tan(lam)
    C = TWO_PI * (1.0 + P) * math.sin(2 * lam) / den
    D = 2.0 * P * (math.cos(2 * lam) + P) / den
    return A, B, C, D


def trace_jacobian(z0, lam, scales: EpsScales, case: str = "i"):
    """Trace of the linearized return map at a fixed point.

    ``case="i"`` covers lambda_r in {lambda_l, pi + lambda_l}; ``case="ii"``
    covers lambda_r in {-lambda_l, pi - lambda_l}.
    """
    A, B, C, D = _abcd(z0, lam)
    rho0 = float(rho0_of(z0, lam))
    g = float(g_fun(z0))
    q = float(q_fun(rho0))
    L2, L4 = scales.log_e2_inv_eps, scales.log_e4_inv_eps
    if case == "i":
        return 2.0 + 4.0 * B * ((2.0 * L2 - q) * (L4 + g) * B
                                + A * (2.0 * L2 - q) + D * (L4 + g) + C)
    if case == "ii":
        return 2.0 - 4.0 * (2.0 * L2 - g) * (L4 + q) * B * B
    raise ValueError(f"unknown case {case!r}")


def two_a_plus_d1(z0):
    """2A + D(., pi/2) in closed form:
    (3 E^2 - 6 E + 2) / ((E - 1)(E - 2)),  E = e^{2 pi z0}."""
    E = np.exp(TWO_PI * np.asarray(z0, dtype=float))
    return (3.0 * E * E - 6.0 * E + 2.0) / ((E - 1.0) * (E - 2.0))


def stability_window(z0, c_inv: float = 0.05, pole_margin: float = 0.05):
    """Interval of the zoomed phase offset (lambda = pi/2 + offset/ln(1/eps))
    on which the predicted trace stays in (-2, 2):

        [-2 pi (2A + D1) + c_inv, -c_inv]   for 2A + D1 > 0,
        [ c_inv, -2 pi (2A + D1) - c_inv]   for 2A + D1 < 0.

    Empty (None) when the margins close the window; the pole of 2A + D1 at
    the singular action is excluded.
    """
    if abs(z0 - Z0_SINGULAR) < pole_margin:
        raise Excluded("z0 within the excluded pole neighborhood")
    s = float(two_a_plus_d1(z0))
    if s > 0:
        lo, hi = -TWO_PI * s + c_inv, -c_inv
    else:
        lo, hi = c_inv, -TWO_PI * s - c_inv
    if lo >= hi:
        return None
    return (lo, hi)


def stable_offset_intervals(z0, scales: EpsScales, rho_margin: float = 0.0):
    """Exact zoomed-phase intervals around pi/2 (mod pi) on which the full
    case-(i) trace lies strictly inside (-2, 2).

    With lambda = pi/2 + t/L the trace is 2 + a B(t)^2 + b B(t) with
    a = 4 (2 L2 - q)(L4 + g) and b = 4 (A (2 L2 - q) + D1 (L4 + g)); the
    stable set in B is (-b/a, 0) minus the middle piece where the trace
    drops below -2.  Returned as a list of (lo, hi) offsets t.
    """
    A, _, _, _ = _abcd(z0, math.pi / 2.0)
    P = float(abs_p_sq(z0))
    D1 = 2.0 * P * (P - 1.0) / (1.0 - P) ** 2 if abs(1.0 - P) > 1e-14 else float("inf")
    rho0 = float(rho0_of(z0, math.pi / 2.0))
    g = float(g_fun(z0))
    q = float(q_fun(max(rho0, 1e-5)))
    L = scales.log_inv_eps
    L2, L4 = scales.log_e2_inv_eps, scales.log_e4_inv_eps
    a = 4.0 * (2.0 * L2 - q) * (L4 + g)
    b = 4.0 * (A * (2.0 * L2 - q) + D1 * (L4 + g))
    if a <= 0 or b <= 0:
        return []
    # trace - 2 = a B^2 + b B; B = tan(t / L) / (2 pi) to leading order
    b_lo = -b / a                       # trace = +2 again
    disc = b * b - 16.0 * a
    pieces_B = []
    if disc <= 0:
        pieces_B.append((b_lo, 0.0))
    else:
        r1 = (-b + math.sqrt(disc)) / (2.0 * a)   # closer to 0
        r2 = (-b - math.sqrt(disc)) / (2.0 * a)
        pieces_B.append((r1, 0.0))
        pieces_B.append((b_lo, r2))
    out = []
    for blo, bhi in pieces_B:
        tlo = math.atan(TWO_PI * blo) * L
        thi = math.atan(TWO_PI * bhi) * L
        if thi - tlo > 2 * rho_margin:
            out.append((tlo + rho_margin, thi - rho_margin))
    return out


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticSeed:
    """One predicted periodic orbit in section action-angle data."""

    case: str                 # "i" or "ii"
    z0_hat: float
    w0: float
    lambda_l: float
    rho0_hat: float
    predicted_trace: float
    predicted_stability: str  # stable / unstable / marginal
    period_mult: int
    symmetry: str             # T_tau / R_and_T_tau / R_only / none
    residual: float


@dataclass(frozen=True)
class Exclusions:
    """Margins carving out the singular sets (all in radians / action units)."""

    v_margin: float = 0.05        # distance of lambda from {0, pi} mod 2*pi
    pole_margin: float = 0.05     # distance of z0 from ln2/(2*pi)
    cot_margin: float = 0.0       # drop roots with |lambda - pi/2| mod pi below this


def _admissible_lambda(lam, margin):
    lam = np.mod(lam, TWO_PI)
    d0 = np.minimum(lam, TWO_PI - lam)
    dpi = np.abs(lam - math.pi)
    return (d0 >= margin) & (dpi >= margin)


def _bisect_sin(fun, lo, hi, flo, iters=60):
    """Vectorized bisection for sign changes of sin(F)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = np.array(flo, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = np.sin(fun(mid))
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
        if np.all(hi - lo < 1e-14):
            break
    return 0.5 * (lo + hi)


def _stability_label(trace, margin=1e-3):
    t = abs(trace)
    if t < 2.0 - margin:
        return "stable"
    if t > 2.0 + margin:
        return "unstable"
    return "marginal"


_SYglobal = {("i", 0): ("T_tau", 1), ("i", 1): ("R_and_T_tau", 2),
             ("ii", 0): ("none", 1), ("ii", 1): ("R_only", 2)}


def solve_fixed_points(case: str, scales: EpsScales, z0_window,
                       consts: ModelConstants,
                       exclusions: Exclusions = Exclusions(),
                       branches: Iterable[float] = (0.0, math.pi / 2.0),
                       grid_density: float = 6.0):
    """All admissible fixed-point seeds in the action window.

    Case (i): for each branch value of w0, roots of F_i = 0 mod pi in z0.
    Case (ii): roots of F_ii1 = 0 mod pi in z0, then for each, roots in the
    pseudo-phase of F_ii2 = 0 mod pi.  Each seed carries its predicted trace,
    stability and symmetry class; points violating the admissibility margins
    are discarded (they are exclusions, not failures).
    """
    lo, hi = float(z0_window[0]), float(z0_window[1])
    if not (0.0 < lo < hi):
        raise ValueError("z0 window must be positive and ordered")
    L = scales.log_inv_eps
    n = int(max(2000, grid_density * (hi - lo) * (L + 5.0) ** 2))
    n = min(n, 400_000)
    grid = np.linspace(lo, hi, n)
    seeds = []
    if case == "i":
        for w0b in branches:
            F, _, _ = residual_case_i(grid, scales, w0b)
            s = np.sin(F)
            idx = np.nonzero(s[:-1] * s[1:] <= 0)[0]
            if idx.size == 0:
                continue
            roots = _bisect_sin(
                lambda z: residual_case_i(z, scales, w0b)[0],
                grid[idx], grid[idx + 1], s[idx])
            for z0 in np.atleast_1d(roots):
                seed = _finish_seed_i(float(z0), w0b, scales, exclusions)
                if seed is not None:
                    seeds.append(seed)
    elif case == "ii":
        F1 = residual_case_ii(grid, math.pi / 2.0, scales)[0]
        s1 = np.sin(F1)
        idx = np.nonzero(s1[:-1] * s1[1:] <= 0)[0]
        if idx.size:
            z_roots = _bisect_sin(
                lambda z: residual_case_ii(z, math.pi / 2.0, scales)[0],
                grid[idx], grid[idx + 1], s1[idx])
            for z0 in np.atleast_1d(z_roots):
                seeds.extend(_solve_case_ii_lambda(float(z0), scales,
                                                   exclusions, L))
    else:
        raise ValueError(f"unknown case {case!r}")
    seeds.sort(key=lambda sd: (sd.z0_hat, sd.w0))
    return seeds


def _finish_seed_i(z0, w0b, scales, exclusions):
    F, lam, rho0 = residual_case_i(z0, scales, w0b)
    lam_m = float(np.mod(lam, TWO_PI))
    if not _admissible_lambda(lam_m, exclusions.v_margin):
        return None
    if abs(z0 - Z0_SINGULAR) < exclusions.pole_margin:
        return None
    if exclusions.cot_margin > 0:
        if abs(math.fmod(lam_m, math.pi) - math.pi / 2.0) < exclusions.cot_margin:
            return None
    try:
        tr = trace_jacobian(z0, lam_m, scales, case="i")
    except SingularP:
        return None
    branch = 0 if abs(math.sin(w0b)) < 0.5 else 1  # w0 = 0/pi vs pi/2/3pi/2
    sym, pm = _SYglobal[("i", branch)]
    w0 = w0b % TWO_PI
    return AnalyticSeed(case="i", z0_hat=z0, w0=w0, lambda_l=lam_m,
                        rho0_hat=float(rho0), predicted_trace=tr,
                        predicted_stability=_stability_label(tr),
                        period_mult=pm, symmetry=sym,
                        residual=abs(float(np.sin(F))))


def _solve_case_ii_lambda(z0, scales, exclusions, L):
    if abs(z0 - Z0_SINGULAR) < exclusions.pole_margin:
        return []
    out = []
    F1 = float(residual_case_ii(z0, math.pi / 2.0, scales)[0])
    parity = int(round(F1 / math.pi)) % 2
    sym, pm = _SYglobal[("ii", parity)]
    m = max(exclusions.v_margin, 1e-3)
    lam_grid = np.linspace(m, math.pi - m, int(max(400, 4 * (L + 5))))
    F2 = residual_case_ii(z0, lam_grid, scales)[1]
    s = np.sin(F2)
    idx = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    if idx.size == 0:
        return out
    lam_roots = _bisect_sin(lambda l: residual_case_ii(z0, l, scales)[1],
                            lam_grid[idx], lam_grid[idx + 1], s[idx])
    for lam in np.atleast_1d(lam_roots):
        lam = float(lam)
        if exclusions.cot_margin > 0 and \
           abs(lam - math.pi / 2.0) < exclusions.cot_margin:
            continue
        try:
            tr = trace_jacobian(z0, lam, scales, case="ii")
        except SingularP:
            continue
        w0 = float(np.mod(-lam + scales.log_e4_inv_eps * z0
                          + g_of_z0(z0, scales), TWO_PI))
        rho0 = float(rho0_of(z0, lam))
        res = abs(float(np.sin(residual_case_ii(z0, lam, scales)[1])))
        out.append(AnalyticSeed(case="ii", z0_hat=z0, w0=w0, lambda_l=lam,
                                rho0_hat=rho0, predicted_trace=tr,
                                predicted_stability=_stability_label(tr),
                                period_mult=pm, symmetry=sym, residual=res))
    return out


def seed_to_initial_condition(seed: AnalyticSeed, eps: float, model: ModelSpec):
    """Reconstruct the section point (x, y) at u = -pi + tau/2 from the
    outer action-angle data:
        x = eps^{1/2} (-f)^{-1/4} (1+M0)^{1/4} sqrt(2 z0) cos w0,
        y = eps^{1/2} (-f)^{+1/4} (1+M0)^{-1/4} sqrt(2 z0) sin w0.
    """
    u0 = -math.pi + model.tau / 2.0
    fu = float(model.f(u0))
    if fu >= 0:
        raise ValueError("section lies on the wrong side of the bifurcation")
    wgt = float(model.outer_weight(u0 % TWO_PI))
    r = math.sqrt(2.0 * seed.z0_hat)
    amp = math.sqrt(eps)
    x = amp * (-fu) ** -0.25 * wgt ** 0.25 * r * math.cos(seed.w0)
    y = amp * (-fu) ** 0.25 * wgt ** -0.25 * r * math.sin(seed.w0)
    return x, y


# ---------------------------------------------------------------------------
# Stable solutions: fast counting and the sweep
# ---------------------------------------------------------------------------

def _lambda_solve(target, scales, w0b, z_lo, z_hi, lam_lo, lam_hi):
    """Bisect lambda_l(z0) = target on [z_lo, z_hi] (lambda_l is monotone)."""
    for _ in range(80):
        mid = 0.5 * (z_lo + z_hi)
        lm = float(pseudo_phase(mid, w0b, scales, "left"))
        if lm < target:
            z_lo, lam_lo = mid, lm
        else:
            z_hi, lam_hi = mid, lm
        if z_hi - z_lo < 1e-15:
            break
    return 0.5 * (z_lo + z_hi)


def stable_roots_case_i(scales: EpsScales, z0_window=(0.12, 2.0),
                        branches=(0.0, math.pi / 2.0),
                        exclusions: Exclusions = Exclusions(),
                        window_mode: str = "trace",
                        lambda_center: str = "both"):
    """Case-(i) roots inside the stability windows around the marginal
    pseudo-phase.

    Scans only the action subintervals where the pseudo-phase sits near
    pi/2 (mod pi), which makes one count cheap enough to repeat thousands of
    times.  ``window_mode="trace"`` keeps roots with full-formula |trace| < 2;
    ``"interval"`` keeps roots inside the first-order window of
    :func:`stability_window`.  ``lambda_center="pi2"`` restricts the
    enumeration to windows at lambda = pi/2 mod 2*pi (the parametrization of
    the stability analysis); ``"both"`` also takes the 3*pi/2 family.
    """
    lo, hi = z0_window
    L = scales.log_inv_eps
    out = []
    for w0b in branches:
        lam_lo = float(pseudo_phase(lo, scales=scales, w0=w0b, side="left"))
        lam_hi = float(pseudo_phase(hi, scales=scales, w0=w0b, side="left"))
        # pi/2 mod pi targets crossed by the monotone pseudo-phase
        k0 = math.ceil((lam_lo - math.pi / 2.0) / math.pi)
        k1 = math.floor((lam_hi - math.pi / 2.0) / math.pi)
        if k1 < k0:
            continue
        # bracket each target with a marching refinement
        z_prev, lam_prev = lo, lam_lo
        for k in range(k0, k1 + 1):
            if lambda_center == "pi2" and k % 2 != 0:
                continue
            target = math.pi / 2.0 + k * math.pi
            z_a, lam_a = z_prev, lam_prev
            z_b, lam_b = hi, lam_hi
            zc = _lambda_solve(target, scales, w0b, z_a, z_b, lam_a, lam_b)
            z_prev = zc
            lam_prev = target
            if abs(zc - Z0_SINGULAR) < exclusions.pole_margin:
                continue
            try:
                if window_mode == "trace":
                    windows = stable_offset_intervals(zc, scales)
                else:
                    w = stability_window(zc)
                    windows = [w] if w is not None else []
            except Excluded:
                continue
            slope = scales.log_e4_inv_eps + float(g_fun(zc))  # d lambda / d z0
            for (t_lo, t_hi) in windows:
                # offsets live on the zoomed axis lambda = pi/2 + t / L;
                # pad the first-order window and let the exact trace decide
                pad = 0.1 * (t_hi - t_lo)
                za = zc + (t_lo - pad) / (L * slope)
                zb = zc + (t_hi + pad) / (L * slope)
                za = max(za, lo)
                zb = min(zb, hi)
                if zb <= za:
                    continue
                sub = np.linspace(za, zb, 220)
                F, lam_s, _ = residual_case_i(sub, scales, w0b)
                s = np.sin(F)
                idx = np.nonzero(s[:-1] * s[1:] <= 0)[0]
                if idx.size == 0:
                    continue
                roots = _bisect_sin(lambda z: residual_case_i(z, scales, w0b)[0],
                                    sub[idx], sub[idx + 1], s[idx])
                for z0 in np.atleast_1d(roots):
                    seed = _finish_seed_i(float(z0), w0b, scales, exclusions)
                    if seed is None:
                        continue
                    if window_mode == "trace":
                        if seed.predicted_stability == "stable":
                            out.append(seed)
                    else:
                        out.append(seed)
    # duplicated roots can appear at window seams
    out.sort(key=lambda sd: (sd.w0, sd.z0_hat))
    dedup = []
    for sd in out:
        if dedup and abs(sd.z0_hat - dedup[-1].z0_hat) < 1e-10 and \
           abs(sd.w0 - dedup[-1].w0) < 1e-9:
            continue
        dedup.append(sd)
    return dedup


def stable_census_sweep(consts: ModelConstants, n_values: int = 1000,
                        z0_window=(0.12, 2.0),
                        log_inv_eps_range=(40.0, 400.0),
                        seed: int = 0,
                        branches=(0.0,),
                        window_mode: str = "trace",
                        lambda_center: str = "pi2",
                        exclusions: Exclusions = Exclusions()):
    """Sample ln(1/eps) values and count stable case-(i) solutions for each.

    Returns (samples, counts, histogram dict).  The reciprocal log is drawn
    uniformly from 1/log_inv_eps_range[1] .. 1/log_inv_eps_range[0], matching
    a sweep over the inverse logarithm.  The default protocol enumerates the
    w0 = 0 family inside the stability windows at lambda = pi/2 (mod 2*pi)
    with the exact trace test; for very small eps the large phases are
    reduced in extended precision, so any ln(1/eps) is admissible.
    """
    if n_values < 100:
        raise ValueError("n_values must be at least 100")
    rng = np.random.default_rng(seed)
    inv = rng.uniform(1.0 / log_inv_eps_range[1], 1.0 / log_inv_eps_range[0],
                      size=n_values)
    samples = 1.0 / inv
    counts = np.empty(n_values, dtype=int)
    for i, L in enumerate(samples):
        scales = make_scales(consts, log_inv_eps=float(L))
        counts[i] = len(stable_roots_case_i(scales, z0_window, branches,
                                            exclusions, window_mode,
                                            lambda_center))
    hist = {}
    for c in counts:
        hist[int(c)] = hist.get(int(c), 0) + 1
    return samples, counts, hist


# ---------------------------------------------------------------------------
# Interval-cover analyses
# ---------------------------------------------------------------------------

def interval_cover_analysis(consts: ModelConstants, eps: float, mode: str,
                            z0_start: float = 0.3, n_steps: int = 20,
                            offset: float = -1.0, c1: float = 5.0,
                            n_eps: int = 81, big_z0_scale: float = 0.1,
                            z0_window=(0.12, 2.0), seed: int = 0):
    """Endpoint iteration behind the stable-orbit cover arguments.

    part2: track consecutive actions z0^n with pseudo-phase pinned at
           pi/2 + offset/L (mod pi), their residual images f_n, the gaps
           (f_{n+1} - f_n) mod pi, and the first-order gap prediction
           pi (2A + D1) mod pi.
    part3: sweep eps over [eps (1 - c1 eps), eps (1 + c1 eps)] and count
           stable solutions per eps value.
    part4: same endpoint iteration at the large actions
           z0 = ln(ln(1/eps) / big_z0_scale) / (2 pi), checking that
           consecutive mapped stability windows overlap.
    """
    scales = make_scales(consts, eps=eps) if eps < 1 else None
    if mode == "part3":
        eps_grid = np.linspace(eps - c1 * eps ** 2, eps + c1 * eps ** 2, n_eps)
        rows = []
        for e in eps_grid:
            sc = make_scales(consts, eps=float(e))
            n_st = len(stable_roots_case_i(sc, z0_window))
            rows.append({"eps": float(e), "n_stable": n_st})
        counts = [r["n_stable"] for r in rows]
        changes = sum(1 for a, b in zip(counts[:-1], counts[1:]) if a != b)
        return {"mode": mode, "rows": rows, "count_changes": changes,
                "drift_rate": float(((two_a_plus_d1(z0_start)) * consts.e3
                                     - consts.e1) / eps ** 2)}

    L = scales.log_inv_eps
    rows = []
    if mode == "part4":
        z0 = math.log(L / big_z0_scale) / TWO_PI
    else:
        z0 = z0_start
    f_prev = None
    z_prev = None
    for n in range(n_steps):
        target_lam = math.pi / 2.0 + offset / L
        # advance to the next strip: lambda increases by pi each step
        lam_here = float(pseudo_phase(z0, 0.0, scales, "left"))
        k = math.ceil((lam_here - target_lam) / math.pi + 1e-9)
        target = target_lam + k * math.pi
        z_hi = z0 + 2.5 * math.pi / (scales.log_e4_inv_eps + 1.0)
        z0 = _lambda_solve(target, scales, 0.0, z0, z_hi,
                           lam_here, float(pseudo_phase(z_hi, 0.0, scales, "left")))
        F, lam, _ = residual_case_i(z0, scales, 0.0)
        f_n = float(np.mod(F, math.pi))
        s = float(two_a_plus_d1(z0))
        row = {"n": n, "z0": z0, "f_n": f_n,
               "sep_predicted": math.fmod(math.pi * s, math.pi)}
        if f_prev is not None:
            row["gap"] = float(np.mod(f_n - f_prev, math.pi))
            row["dz0"] = z0 - z_prev
        if mode == "part4":
            # image of the first-order stability window under the residual;
            # the window endpoints' images drive the cover construction
            try:
                win = stability_window(z0)
            except Excluded:
                win = None
            img = 0.0
            if win is not None:
                slope = scales.log_e4_inv_eps + float(g_fun(z0))
                za = z0 + win[0] / (L * slope)
                zb = z0 + win[1] / (L * slope)
                Fw = residual_case_i(np.linspace(za, zb, 128), scales, 0.0)[0]
                img = float(np.max(Fw) - np.min(Fw))
            row["image_len"] = img
            if f_prev is not None:
                row["overlap"] = bool(min(row["gap"], math.pi - row["gap"]) < img)
        rows.append(row)
        f_prev, z_prev = f_n, z0
    report = {"mode": mode, "rows": rows, "log_inv_eps": L}
    if mode == "part2":
        gaps = [r["gap"] for r in rows if "gap" in r]
        d = 2.0
        m = max(1, int(L ** (1.0 / (2.0 + d))))
        report["upper_bound_solutions"] = L / m
        report["mean_gap"] = float(np.mean(gaps)) if gaps else float("nan")
        report["spacing_theory"] = math.pi / L
    return report


# ---------------------------------------------------------------------------
# Census fit
# ---------------------------------------------------------------------------

def fit_log_square(eps_values, counts):
    """Least-squares a, b in counts ~ a ln^2(1/eps) + b, with per-row
    relative errors."""
    eps_values = np.asarray(eps_values, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if eps_values.size < 2:
        raise DegenerateFit("need at least two rows")
    X = np.log(1.0 / eps_values) ** 2
    if np.ptp(X) < 1e-12:
        raise DegenerateFit("all eps equal")
    A = np.column_stack([X, np.ones_like(X)])
    (a, b), *_ = np.linalg.lstsq(A, counts, rcond=None)
    fit = a * X + b
    rel = np.abs(fit - counts) / np.where(counts != 0, np.abs(counts), 1.0)
    return float(a), float(b), rel
