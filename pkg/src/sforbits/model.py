"""Slow-fast Hamiltonian family with a pitchfork-unfolding slow phase.

The Hamiltonian is

    H(x, y, u, v) = v + (1/2) y^2 (1 + M(x^2, y^2, u))
                      - (1/2) f(u) x^2 + (1/2) x^4 (1 + V(x^2, u)),

with symplectic form dx^dy + eps^{-1} du^dv, so that u advances at the
constant rate eps.  The profile f vanishes at u = 0 and u = tau, is positive
in between and negative outside; the fast equilibrium x = 0 then undergoes a
symmetric pitchfork at u = 0 and u = tau, producing the branches
x = +-kappa(u) on (0, tau).  The shipped instance ("toy") is
f(u) = sin u, M = V = 0, tau = pi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * math.pi

# Step used for every finite-difference fallback on model functions.
FD_STEP = 1e-5


class NoRoot(RuntimeError):
    """The fast-equilibrium equation has no usable positive root."""


class DomainError(ValueError):
    """A scaled quantity was requested outside its validity region."""


@dataclass(frozen=True)
class ExtendedState:
    """Phase point (x, y, u, v); u is a plain float, reduced mod 2*pi
    only where an operation needs the fundamental interval."""

    x: float
    y: float
    u: float
    v: float = 0.0

    def as_array(self):
        return np.array([self.x, self.y, self.u, self.v], dtype=float)


def reduce_angle(u):
    """Reduce to [0, 2*pi)."""
    return np.mod(u, TWO_PI)


def _fd(g, t, h=FD_STEP):
    return (g(t + h) - g(t - h)) / (2.0 * h)


@dataclass(frozen=True)
class ModelSpec:
    """The model family: bifurcation profile f, kinetic correction M,
    potential correction V, and the second bifurcation phase tau.

    All callables are vectorized over numpy arrays.  M takes (x^2, y^2, u),
    V takes (x^2, u).  Partial derivatives that are not supplied are filled
    in by central finite differences with step ``FD_STEP``.
    """

    name: str
    tau: float
    f: Callable
    df: Callable
    M: Callable
    V: Callable
    dM_dx2: Callable
    dM_dy2: Callable
    dM_du: Callable
    dV_dx2: Callable
    d2V_dx2: Callable
    dV_du: Callable

    # -- Taylor coefficient functions ------------------------------------
    # u*m00(u) = M(0,0,u), m10 = dM/dx2(0,0,u), m01 = dM/dy2(0,0,u),
    # u*v0(u) = V(0,u); the *_branch versions are based at (kappa^2, 0, u).

    def m00(self, u):
        return _ratio_or_derivative(lambda t: self.M(0.0 * t, 0.0 * t, t), u)

    def m10(self, u):
        u = np.asarray(u, dtype=float)
        return self.dM_dx2(np.zeros_like(u), np.zeros_like(u), u)

    def m01(self, u):
        u = np.asarray(u, dtype=float)
        return self.dM_dy2(np.zeros_like(u), np.zeros_like(u), u)

    def v0(self, u):
        return _ratio_or_derivative(lambda t: self.V(0.0 * t, t), u)

    def m00_branch(self, u):
        def g(t):
            k2 = kappa(t, self) ** 2
            return self.M(k2, np.zeros_like(k2), t)

        return _ratio_or_derivative(g, u, one_sided=True)

    def m10_branch(self, u):
        k2 = kappa(u, self) ** 2
        return self.dM_dx2(k2, np.zeros_like(k2), np.asarray(u, dtype=float))

    def m01_branch(self, u):
        k2 = kappa(u, self) ** 2
        return self.dM_dy2(k2, np.zeros_like(k2), np.asarray(u, dtype=float))

    # -- weights used by the blown-up frames -----------------------------

    def outer_weight(self, u):
        """1 + M(0, 0, u), the kinetic weight on the x = 0 branch."""
        u = np.asarray(u, dtype=float)
        return 1.0 + self.M(np.zeros_like(u), np.zeros_like(u), u)

    def inner_weight(self, u):
        """1 + M(kappa(u)^2, 0, u), the kinetic weight on the pitchfork branch."""
        k2 = kappa(u, self) ** 2
        return 1.0 + self.M(k2, np.zeros_like(k2), np.asarray(u, dtype=float))


def _ratio_or_derivative(g, u, one_sided=False):
    """g(u)/u with the u -> 0 limit g'(0) filled in by finite differences."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    out = np.empty_like(u)
    small = np.abs(u) < 1e-6
    if np.any(~small):
        out[~small] = g(u[~small]) / u[~small]
    if np.any(small):
        if one_sided:
            # branch functions are only defined for u > 0
            out[small] = (g(np.full(np.sum(small), 2 * FD_STEP))
                          - g(np.full(np.sum(small), FD_STEP))) / FD_STEP
        else:
            h = FD_STEP
            out[small] = (g(u[small] + h) - g(u[small] - h)) / (2 * h)
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Built-in instance
# ---------------------------------------------------------------------------

def _zero3(a, b, u):
    return np.zeros(np.broadcast(a, b, u).shape) if np.ndim(u) else 0.0


def _zero2(a, u):
    return np.zeros(np.broadcast(a, u).shape) if np.ndim(u) else 0.0


def toy_model() -> ModelSpec:
    """f(u) = sin u, M = V = 0, tau = pi."""
    return ModelSpec(
        name="toy",
        tau=math.pi,
        f=np.sin,
        df=np.cos,
        M=_zero3,
        V=_zero2,
        dM_dx2=_zero3,
        dM_dy2=_zero3,
        dM_du=_zero3,
        dV_dx2=_zero2,
        d2V_dx2=_zero2,
        dV_du=_zero2,
    )


# ---------------------------------------------------------------------------
# Hamiltonian, vector field, Jacobian
# ---------------------------------------------------------------------------

def dH_dx2(x, y, u, model):
    """Partial of H with respect to x^2."""
    sx, sy = x * x, y * y
    return (-0.5 * model.f(u)
            + 0.5 * sy * model.dM_dx2(sx, sy, u)
            + sx * (1.0 + model.V(sx, u))
            + 0.5 * sx * sx * model.dV_dx2(sx, u))


def dH_dy2(x, y, u, model):
    """Partial of H with respect to y^2."""
    sx, sy = x * x, y * y
    return 0.5 * (1.0 + model.M(sx, sy, u)) + 0.5 * sy * model.dM_dy2(sx, sy, u)


def dH_du(x, y, u, model):
    sx, sy = x * x, y * y
    return (0.5 * sy * model.dM_du(sx, sy, u)
            - 0.5 * model.df(u) * sx
            + 0.5 * sx * sx * model.dV_du(sx, u))


def eval_hamiltonian(state: ExtendedState, model: ModelSpec):
    """v + (1/2) y^2 (1+M) - (1/2) f(u) x^2 + (1/2) x^4 (1+V)."""
    x, y, u, v = state.x, state.y, state.u, state.v
    sx, sy = x * x, y * y
    return (v + 0.5 * sy * (1.0 + model.M(sx, sy, u))
            - 0.5 * model.f(u) * sx
            + 0.5 * sx * sx * (1.0 + model.V(sx, u)))


def hamiltonian_xyuv(x, y, u, v, model):
    """Array version of :func:`eval_hamiltonian`."""
    sx, sy = x * x, y * y
    return (v + 0.5 * sy * (1.0 + model.M(sx, sy, u))
            - 0.5 * model.f(u) * sx
            + 0.5 * sx * sx * (1.0 + model.V(sx, u)))


def fast_rhs(x, y, u, model):
    """(dx/dt, dy/dt) = (2 y dH/dy^2, -2 x dH/dx^2)."""
    return 2.0 * y * dH_dy2(x, y, u, model), -2.0 * x * dH_dx2(x, y, u, model)


def fast_jacobian(x, y, u, model, fd=False):
    """Jacobian of the fast block, entries (j11, j12, j21, j22).

    Analytic by default; ``fd=True`` falls back to central differences
    (used as a cross-check path)."""
    if fd:
        h = FD_STEP
        fxp = fast_rhs(x + h, y, u, model)
        fxm = fast_rhs(x - h, y, u, model)
        fyp = fast_rhs(x, y + h, u, model)
        fym = fast_rhs(x, y - h, u, model)
        return ((fxp[0] - fxm[0]) / (2 * h), (fyp[0] - fym[0]) / (2 * h),
                (fxp[1] - fxm[1]) / (2 * h), (fyp[1] - fym[1]) / (2 * h))
    sx, sy = x * x, y * y
    D = dH_dy2(x, y, u, model)
    E = dH_dx2(x, y, u, model)
    # dD/dx2, dD/dy2, dE/dx2, dE/dy2
    dD_dx2 = 0.5 * model.dM_dx2(sx, sy, u) + 0.5 * sy * _d2M_dx2dy2(sx, sy, u, model)
    dD_dy2 = model.dM_dy2(sx, sy, u) + 0.5 * sy * _d2M_dy2(sx, sy, u, model)
    dE_dx2 = (0.5 * sy * _d2M_dx2(sx, sy, u, model)
              + (1.0 + model.V(sx, u))
              + 2.0 * sx * model.dV_dx2(sx, u)
              + 0.5 * sx * sx * model.d2V_dx2(sx, u))
    dE_dy2 = 0.5 * model.dM_dx2(sx, sy, u) + 0.5 * sy * _d2M_dx2dy2(sx, sy, u, model)
    j11 = 4.0 * x * y * dD_dx2
    j12 = 2.0 * D + 4.0 * sy * dD_dy2
    j21 = -2.0 * E - 4.0 * sx * dE_dx2
    j22 = -4.0 * x * y * dE_dy2
    return j11, j12, j21, j22


def _d2M_dx2(sx, sy, u, model, h=FD_STEP):
    return (model.dM_dx2(sx + h, sy, u) - model.dM_dx2(sx - h, sy, u)) / (2 * h)


def _d2M_dy2(sx, sy, u, model, h=FD_STEP):
    return (model.dM_dy2(sx, sy + h, u) - model.dM_dy2(sx, sy - h, u)) / (2 * h)


def _d2M_dx2dy2(sx, sy, u, model, h=FD_STEP):
    return (model.dM_dx2(sx, sy + h, u) - model.dM_dx2(sx, sy - h, u)) / (2 * h)


def vector_field(state: ExtendedState, model: ModelSpec, eps: float):
    """Time derivative of the extended state: the fast block plus
    (du/dt, dv/dt) = (eps, -eps dH/du)."""
    xd, yd = fast_rhs(state.x, state.y, state.u, model)
    vd = -eps * dH_du(state.x, state.y, state.u, model)
    return ExtendedState(xd, yd, eps, vd)


# ---------------------------------------------------------------------------
# Slow manifold
# ---------------------------------------------------------------------------

def _equilibrium_residual(s, u, model):
    """dH/dx^2 as a function of s = x^2, evaluated at y = 0."""
    return (-0.5 * model.f(u) + s * (1.0 + model.V(s, u))
            + 0.5 * s * s * model.dV_dx2(s, u))


def _equilibrium_residual_ds(s, u, model):
    return (1.0 + model.V(s, u) + 2.0 * s * model.dV_dx2(s, u)
            + 0.5 * s * s * model.d2V_dx2(s, u))


def kappa(u, model, tol=1e-12, max_iter=50):
    """Positive root x = kappa(u) of dH/dx^2(u, x^2, y=0) = 0 for u in (0, tau).

    Newton from the seed x^2 = f(u)/2 with a bisection fallback on
    [0.01 f/2, 9 f/2].  Raises :class:`NoRoot` when no positive root with
    residual below ``tol`` exists (an ellipticity violation at this u).
    """
    u_arr = reduce_angle(np.asarray(u, dtype=float))
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)
    if np.any((u_arr <= 0) | (u_arr >= model.tau)):
        raise DomainError("kappa requested outside (0, tau)")
    s = 0.5 * model.f(u_arr)
    seed = s.copy()
    converged = np.zeros(u_arr.shape, dtype=bool)
    for _ in range(max_iter):
        r = _equilibrium_residual(s, u_arr, model)
        converged = np.abs(r) < tol
        if np.all(converged):
            break
        dr = _equilibrium_residual_ds(s, u_arr, model)
        step = np.where(converged, 0.0, r / np.where(dr == 0.0, 1.0, dr))
        s = s - step
    if not np.all(converged) or np.any(s <= 0):
        bad = ~converged | (s <= 0)
        s_fix = _bisect_equilibrium(u_arr[bad], seed[bad], model, tol)
        if s_fix is None:
            raise NoRoot("no positive fast equilibrium; ellipticity fails here")
        s[bad] = s_fix
    out = np.sqrt(s)
    return float(out[0]) if scalar else out


def _bisect_equilibrium(u, seed, model, tol):
    lo, hi = 0.01 * seed, 9.0 * seed
    flo = _equilibrium_residual(lo, u, model)
    fhi = _equilibrium_residual(hi, u, model)
    if np.any(flo * fhi > 0):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _equilibrium_residual(mid, u, model)
        take_lo = flo * fm <= 0
        hi = np.where(take_lo, mid, hi)
        lo = np.where(take_lo, lo, mid)
        flo = np.where(take_lo, flo, fm)
        if np.all(np.abs(fm) < tol):
            break
    mid = 0.5 * (lo + hi)
    if np.any(np.abs(_equilibrium_residual(mid, u, model)) >= tol) or np.any(mid <= 0):
        return None
    return mid


def d2H_dx2sq(u, model, s=None):
    """Second partial of H in x^2 at y = 0; at s = kappa^2 unless given."""
    if s is None:
        s = kappa(u, model) ** 2
    return _equilibrium_residual_ds(s, reduce_angle(np.asarray(u, dtype=float)), model)


def vartheta(u, model):
    """2 kappa^2 d^2H/d(x^2)^2 / (1 + M at the branch); positive on (0, tau)."""
    k2 = kappa(u, model) ** 2
    return 2.0 * k2 * d2H_dx2sq(u, model, s=k2) / model.inner_weight(u)


def singular_orbit_x(u, model):
    """|x_s(u)|: kappa(u) on (0, tau) mod 2*pi, zero elsewhere."""
    ur = reduce_angle(np.asarray(u, dtype=float))
    scalar = ur.ndim == 0
    ur = np.atleast_1d(ur)
    out = np.zeros_like(ur)
    inside = (ur > 0) & (ur < model.tau)
    if np.any(inside):
        out[inside] = kappa(ur[inside], model)
    return float(out[0]) if scalar else out


def singular_distance(state, model):
    """|| |x| - |x_s(u)| || + |y|, the distance to the singular closed orbit."""
    xs = singular_orbit_x(state.u if isinstance(state, ExtendedState) else state[2], model)
    if isinstance(state, ExtendedState):
        return abs(abs(state.x) - xs) + abs(state.y)
    x, y = state[0], state[1]
    return np.abs(np.abs(x) - xs) + np.abs(y)


# ---------------------------------------------------------------------------
# Scaled frequencies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleFrame:
    """Asymptotic bookkeeping shared by the blowup charts and averaged maps.

    mu = eps^{1/3} delta^{-1/2}; the matching point u* = mu^2 * u_star_hat.
    Construction records the smallness budgets and warns when the crossing
    validity quantity eps^{2/3} delta^{-7/2} ln^3(1/delta) exceeds
    ``warn_threshold``.
    """

    eps: float
    delta: float
    u_star_hat: float = 1.0
    warn_threshold: float = 1.0
    mu: float = field(init=False)
    crossing_budget: float = field(init=False)
    inner_budget: float = field(init=False)
    outer_budget: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.eps:
            raise ValueError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        mu = self.eps ** (1.0 / 3.0) * self.delta ** (-0.5)
        ln_d = math.log(1.0 / self.delta)
        ln_e = math.log(1.0 / self.eps)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "crossing_budget",
                           self.eps ** (2.0 / 3.0) * self.delta ** (-3.5) * ln_d ** 3)
        object.__setattr__(self, "inner_budget", self.delta ** 0.75 * ln_e)
        object.__setattr__(self, "outer_budget", self.delta ** 1.5 * ln_e)
        if self.crossing_budget > self.warn_threshold:
            warnings.warn(
                f"crossing validity budget eps^(2/3) delta^(-7/2) ln^3(1/delta)"
                f" = {self.crossing_budget:.3g} exceeds {self.warn_threshold}",
                stacklevel=2)

    @property
    def u_star(self):
        return self.mu ** 2 * self.u_star_hat


def scaled_frequencies(u_hat, frame: ScaleFrame, model: ModelSpec):
    """(F_hat, Omega_hat, vartheta) at u = mu^2 u_hat.

    F_hat is defined where f(u) < 0 (pre-bifurcation side), Omega_hat where
    u in (0, tau); an undefined side is returned as None.  Raises
    :class:`DomainError` if neither side is defined.
    """
    u = frame.mu ** 2 * u_hat
    ur = reduce_angle(u)
    f_hat = None
    omega_hat = None
    theta = None
    fu = model.f(ur)
    if fu < 0:
        f2 = -(frame.mu ** -2) * fu * model.outer_weight(ur)
        if f2 > 0:
            f_hat = math.sqrt(f2)
    if 0 < ur < model.tau:
        theta = float(vartheta(ur, model))
        o2 = 2.0 * frame.mu ** -2 * theta
        if o2 <= 0:
            raise DomainError("nonpositive squared frequency on the branch")
        omega_hat = math.sqrt(o2)
    if f_hat is None and omega_hat is None:
        raise DomainError(f"no scaled frequency defined at u_hat={u_hat}")
    return f_hat, omega_hat, theta


# ---------------------------------------------------------------------------
# Symmetries
# ---------------------------------------------------------------------------

def symmetry_apply(which: str, obj, tau: Optional[float] = None):
    """Apply the reflection (x,y,u,v) -> (-x,-y,u,v) or the time reversal
    (x,y,u)(t) -> (x,-y,tau-u)(-t).

    Trajectories are dicts with keys t, x, y, u (optionally v); the time
    reversal re-indexes t -> -t (sample order is reversed so t stays
    increasing).
    """
    if which == "reflection":
        if isinstance(obj, ExtendedState):
            return ExtendedState(-obj.x, -obj.y, obj.u, obj.v)
        out = dict(obj)
        out["x"] = -np.asarray(obj["x"])
        out["y"] = -np.asarray(obj["y"])
        return out
    if which == "time_reversal":
        if tau is None:
            raise ValueError("time_reversal needs tau")
        if isinstance(obj, ExtendedState):
            return ExtendedState(obj.x, -obj.y, tau - obj.u, obj.v)
        out = dict(obj)
        out["t"] = -np.asarray(obj["t"])[::-1]
        out["x"] = np.asarray(obj["x"])[::-1]
        out["y"] = -np.asarray(obj["y"])[::-1]
        out["u"] = tau - np.asarray(obj["u"])[::-1]
        if "v" in obj:
            out["v"] = np.asarray(obj["v"])[::-1]
        return out
    raise ValueError(f"unknown symmetry {which!r}")


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    passed: dict
    worst: dict

    @property
    def all_passed(self):
        return all(self.passed.values())


def validate_assumptions(model: ModelSpec, grid_size: int = 64,
                         tol: float = 1e-6, box: float = 2.0) -> AssumptionReport:
    """Numerical check of the standing assumptions on (f, M, V, tau).

    A1: f(0) = f(tau) = 0 and f'(0) = 1.
    A2: sign pattern of f on (0, tau) and (tau, 2*pi).
    A3: symmetry of f, M, V about u = tau/2.
    A4: 1 + M > 0 on the working box x^2 + y^2 <= box^2.
    A5: positive branch kappa with d^2H/d(x^2)^2 > 0 on (0, tau).

    Failures are recorded, not raised.
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    passed, worst = {}, {}
    tau = model.tau

    r0 = max(abs(float(model.f(0.0))), abs(float(model.f(tau))),
             abs(float(model.df(0.0)) - 1.0))
    passed["A1"], worst["A1"] = r0 < tol, r0

    ui = np.linspace(0, tau, grid_size + 2)[1:-1]
    uo = np.linspace(tau, TWO_PI, grid_size + 2)[1:-1]
    m2 = min(np.min(model.f(ui)), np.min(-model.f(uo)))
    passed["A2"], worst["A2"] = m2 > 0, m2

    ug = np.linspace(0, TWO_PI, grid_size, endpoint=False)
    xg = np.linspace(0, box, 5)
    yg = np.linspace(0, box, 5)
    sym = np.max(np.abs(model.f(ug) - model.f(tau - ug)))
    for sx in xg ** 2:
        for sy in yg ** 2:
            sym = max(sym, np.max(np.abs(model.M(sx, sy, ug) - model.M(sx, sy, tau - ug))))
        sym = max(sym, np.max(np.abs(model.V(sx, ug) - model.V(sx, tau - ug))))
    passed["A3"], worst["A3"] = sym < tol, sym

    m4 = np.inf
    for sx in xg ** 2:
        for sy in yg ** 2:
            if sx + sy <= box ** 2:
                m4 = min(m4, np.min(1.0 + model.M(sx, sy, ug)))
    passed["A4"], worst["A4"] = m4 > 0, m4

    try:
        th = vartheta(ui, model)
        m5 = float(np.min(d2H_dx2sq(ui, model)))
        ok5 = m5 > 0 and np.all(th > 0)
    except (NoRoot, DomainError):
        ok5, m5 = False, float("nan")
    passed["A5"], worst["A5"] = ok5, m5

    return AssumptionReport(passed=passed, worst=worst)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

def from_config(path) -> ModelSpec:
    """Load a model from a TOML file.

    Either ``builtin = "toy"`` or sampled coefficient tables under
    ``[model]``: ``u`` plus ``f`` (periodic cubic spline) and optionally
    the Taylor coefficient tables ``m00``, ``m10``, ``m01``, ``v0`` on the
    same grid, from which M and V are reconstructed as
    M = u*m00 + x^2*m10 + y^2*m01 and V = u*v0.
    """
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    section = data.get("model", data)
    builtin = section.get("builtin")
    if builtin == "toy":
        return toy_model()
    if builtin is not None:
        raise ValueError(f"unknown builtin model {builtin!r}")
    return _spline_model(section)


def _spline_model(section) -> ModelSpec:
    from scipy.interpolate import CubicSpline

    u = np.asarray(section["u"], dtype=float)
    tau = float(section["tau"])

    def periodic(vals):
        return CubicSpline(u, np.asarray(vals, dtype=float), bc_type="periodic")

    fsp = periodic(section["f"])
    coeff = {}
    for key in ("m00", "m10", "m01", "v0"):
        if key in section:
            coeff[key] = periodic(section[key])
        else:
            coeff[key] = None

    def cf(key, t):
        sp = coeff[key]
        return sp(reduce_angle(t)) if sp is not None else np.zeros_like(np.asarray(t, dtype=float))

    def dcf(key, t):
        sp = coeff[key]
        return sp(reduce_angle(t), 1) if sp is not None else np.zeros_like(np.asarray(t, dtype=float))

    def M(sx, sy, t):
        tr = reduce_angle(t)
        return tr * cf("m00", tr) + sx * cf("m10", tr) + sy * cf("m01", tr)

    def V(sx, t):
        tr = reduce_angle(t)
        return tr * cf("v0", tr)

    return ModelSpec(
        name=str(section.get("name", "tabulated")),
        tau=tau,
        f=lambda t: fsp(reduce_angle(t)),
        df=lambda t: fsp(reduce_angle(t), 1),
        M=M,
        V=V,
        dM_dx2=lambda sx, sy, t: cf("m10", t) + 0.0 * sx,
        dM_dy2=lambda sx, sy, t: cf("m01", t) + 0.0 * sy,
        dM_du=lambda sx, sy, t: (cf("m00", t) + reduce_angle(t) * dcf("m00", t)
                                 + sx * dcf("m10", t) + sy * dcf("m01", t)),
        dV_dx2=lambda sx, t: 0.0 * sx,
        d2V_dx2=lambda sx, t: 0.0 * sx,
        dV_du=lambda sx, t: cf("v0", t) + reduce_angle(t) * dcf("v0", t),
    )
