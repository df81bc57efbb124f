"""Numerical return map, symmetric-orbit shooting, and the orbit census.

The stroboscopic return map advances the slow phase by a full circle from
the section u = -pi + tau/2.  Time-reversal symmetric periodic orbits start
on that section with y = 0 and close iff y vanishes again half a slow period
later (at u = tau/2); reflection-translated period-doubled orbits close iff
x vanishes there instead.  The census scans x in a window, brackets sign
changes of the half-period residual on a fine grid, refines each root, and
classifies stability through the monodromy of the full period.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegratorConfig, flow_batch, _flow_arrays
from .model import ExtendedState, ModelSpec, singular_orbit_x

TWO_PI = 2.0 * math.pi


class NoConvergence(RuntimeError):
    """Shooting failed to converge (recorded, usually not raised)."""


@dataclass(frozen=True)
class OrbitRecord:
    """A refined periodic orbit found from the symmetric section."""

    eps: float
    x0: float
    y0: float
    period_mult: int           # 1: slow period 2*pi/eps, 2: doubled
    residual: float            # fixed-point defect of the return map
    trace: float
    stability: str             # stable / unstable / marginal
    symmetry: str              # T_tau / R_and_T_tau / R_only / none
    max_singular_distance: float


@dataclass
class CensusRow:
    eps: float
    pos_count: int
    spos_count: int
    spos_small_count: int
    upos_small_count: int
    marginal_count: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.pos_count, self.spos_count, self.spos_small_count,
               self.upos_small_count) < 0:
            raise ValueError("counts must be nonnegative")
        if not (self.spos_small_count <= self.spos_count <= self.pos_count):
            raise ValueError("stable counts must nest inside the total")


def section_u0(model: ModelSpec) -> float:
    return -math.pi + model.tau / 2.0


def default_workers() -> int:
    env = os.environ.get("SFORBITS_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Return map
# ---------------------------------------------------------------------------

def return_map(x, y, model: ModelSpec, eps: float, cfg: IntegratorConfig,
               variational: bool = False):
    """Image of (x, y) under the time-(2*pi/eps) stroboscopic map from the
    symmetric section; optionally also its Jacobian."""
    u0 = section_u0(model)
    xe, ye, _, W = flow_batch(np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                              u0, model, eps, u0 + TWO_PI, cfg,
                              variational=variational)
    if variational:
        return xe, ye, W
    return xe, ye


def half_period_residuals(x0, model: ModelSpec, eps: float, cfg: IntegratorConfig,
                          derivatives: bool = False):
    """(y, x) at u = tau/2 for section starts (x0, 0): the period-1 and
    period-2 shooting residuals.  With ``derivatives`` also returns
    (dy/dx0, dx/dx0) from the tangent flow."""
    x0 = np.asarray(x0, dtype=float)
    xe, ye, _, W = flow_batch(x0, np.zeros_like(x0), section_u0(model), model,
                              eps, model.tau / 2.0, cfg, variational=derivatives)
    if derivatives:
        return ye, xe, W[..., 1, 0], W[..., 0, 0]
    return ye, xe


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------

def _residual_for(period_mult):
    if period_mult == 1:
        return 0            # y at tau/2
    if period_mult == 2:
        return 1            # x at tau/2
    raise ValueError("period_mult must be 1 or 2")


def refine_roots(lo, hi, r_lo, model, eps, cfg, period_mult=1,
                 n_bisect=2, n_newton=9):
    """Batched bracket refinement of the half-period shooting residual:
    a couple of bisection passes, then safeguarded Newton using the
    tangent-flow derivative.  Returns (roots, residuals)."""
    comp = _residual_for(period_mult)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    r_lo = np.array(r_lo, dtype=float)

    def rfun(x):
        return half_period_residuals(x, model, eps, cfg)[comp]

    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        rm = rfun(mid)
        left = r_lo * rm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        r_lo = np.where(left, r_lo, rm)

    x = 0.5 * (lo + hi)
    rx = None
    for _ in range(n_newton):
        out = half_period_residuals(x, model, eps, cfg, derivatives=True)
        rx, drx = out[comp], out[comp + 2]
        # shrink the bracket with the fresh sign information
        left = r_lo * rx <= 0
        hi = np.where(left, x, hi)
        lo = np.where(left, lo, x)
        r_lo = np.where(left, r_lo, rx)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = rx / drx
        x_new = x - step
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        if np.all(np.abs(x_new - x) < 1e-15 * np.maximum(1.0, np.abs(x))):
            x = x_new
            break
        x = x_new
    if rx is None:
        rx = rfun(x)
    return x, rx


def find_symmetric_orbit(x0: float, model: ModelSpec, eps: float,
                         cfg: IntegratorConfig, period_mult: int = 1,
                         max_iter: int = 30, tol: float = 1e-9):
    """Refine a single symmetric orbit by secant iteration from x0.

    Returns an :class:`OrbitRecord`, or a :class:`NoConvergence` instance
    (the failure is data for the census, not an exception).
    """
    comp = _residual_for(period_mult)

    def rfun(x):
        return float(half_period_residuals(x, model, eps, cfg)[comp])

    a = float(x0)
    fa = rfun(a)
    b = a + max(1e-7, 1e-6 * abs(a))
    fb = rfun(b)
    for _ in range(max_iter):
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        a, fa = b, fb
        b, fb = c, rfun(c)
        if abs(fb) < tol * 1e-3 or abs(b - a) < 1e-15 * max(1.0, abs(b)):
            break
    if not np.isfinite(fb):
        return NoConvergence(f"shooting residual not finite near x0={x0}")
    rec = classify_orbits(np.array([b]), model, eps, cfg, period_mult)[0]
    if rec.residual >= tol:
        return NoConvergence(
            f"residual {rec.residual:.2e} above {tol} after {max_iter} iterations")
    return rec


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify_orbits(x0s, model: ModelSpec, eps: float, cfg: IntegratorConfig,
                    period_mult: int = 1, stability_margin: float = 1e-3,
                    sample_stride: int = 25):
    """Monodromy, stability and singular-orbit distance for section roots.

    One batched full-period (or doubled) integration with the tangent flow;
    the singular distance is sampled every ``sample_stride`` steps.
    """
    x0s = np.asarray(x0s, dtype=float)
    if x0s.size == 0:
        return []
    u0 = section_u0(model)
    T = period_mult * TWO_PI / eps
    x = x0s.copy()
    y = np.zeros_like(x)
    W = np.zeros(x.shape + (2, 2))
    W[..., 0, 0] = 1.0
    W[..., 1, 1] = 1.0

    rows = []
    record = (sample_stride, rows)
    xe, ye, _, _, W = _flow_arrays(x, y, u0, np.zeros_like(x), model, eps, T,
                                   cfg, W=W, record=record)
    dmax = np.zeros_like(x0s)
    for (_, xs, ys, us, _) in rows:
        xs_branch = singular_orbit_x(us, model)
        dmax = np.maximum(dmax, np.abs(np.abs(xs) - xs_branch) + np.abs(ys))
    trace = W[..., 0, 0] + W[..., 1, 1]
    if period_mult == 1:
        defect = np.hypot(xe - x0s, ye)
        symmetry = "T_tau"
    else:
        defect = np.hypot(xe - x0s, ye)
        symmetry = "R_and_T_tau"
    out = []
    for i in range(x0s.size):
        t = float(trace[i])
        if abs(t) < 2.0 - stability_margin:
            stab = "stable"
        elif abs(t) > 2.0 + stability_margin:
            stab = "unstable"
        else:
            stab = "marginal"
        out.append(OrbitRecord(eps=eps, x0=float(x0s[i]), y0=0.0,
                               period_mult=period_mult,
                               residual=float(defect[i]), trace=t,
                               stability=stab, symmetry=symmetry,
                               max_singular_distance=float(dmax[i])))
    return out


# ---------------------------------------------------------------------------
# Census
# ---------------------------------------------------------------------------

def _grid_residuals_parallel(grid, model, eps, cfg, workers):
    if workers <= 1 or grid.size < 256:
        return half_period_residuals(grid, model, eps, cfg)
    chunks = np.array_split(grid, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda ch: half_period_residuals(ch, model, eps, cfg), chunks))
    ys = np.concatenate([p[0] for p in parts])
    xs = np.concatenate([p[1] for p in parts])
    return ys, xs


def scan_census(eps: float, x_window, model: ModelSpec, cfg: IntegratorConfig,
                n0: int = None, dedupe: float = 8e-6, workers: int = None,
                stability_margin: float = 1e-3):
    """Sweep the symmetric section for periodic orbits and build the census.

    Returns (CensusRow, period-1 records, period-2 records).  The counts
    aggregate only the time-reversal-symmetric single-period family; the
    doubled family is reported separately.

    ``dedupe`` is the protocol's resolution floor: roots closer than this are
    merged (keeping the smallest defect).  Near-homoclinic root ladders
    accumulate geometrically, so any finite scan truncates them at some
    separation; the floor makes that truncation explicit and reproducible
    (it is recorded in the metadata).

    Counting convention: the scan covers x > 0 only, so each geometric orbit
    enters once through its positive section representative (the reflected
    partner of a non-symmetric orbit crosses the section at x < 0).
    """
    lo, hi = float(x_window[0]), float(x_window[1])
    if not (0.0 < lo < hi <= 1.0):
        raise ValueError("x window must lie inside (0, 1]")
    if n0 is None:
        n0 = max(4000, int(10.0 / eps))
    workers = default_workers() if workers is None else workers
    grid = np.linspace(lo, hi, n0)
    ry, rx = _grid_residuals_parallel(grid, model, eps, cfg, workers)

    # near-tangent root pairs hide inside one cell without a sign change;
    # subdivide every discrete |R|-minimum cell pair before bracketing
    sub = 33
    mins = np.zeros(n0, dtype=bool)
    for r in (ry, rx):
        a = np.abs(r)
        # deep same-sign dips flag near-tangent root pairs
        interior = (a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]) & \
                   (a[1:-1] < 0.3 * np.maximum(a[:-2], a[2:]))
        mins[1:-1] |= interior
        # sign-change cells can hide odd root triples; refine them as well
        mins[:-1] |= r[:-1] * r[1:] <= 0
    cells = np.nonzero(mins)[0]
    fine_edges = []
    for i in cells:
        fine_edges.append(np.linspace(grid[max(i - 1, 0)],
                                      grid[min(i + 1, n0 - 1)], 2 * sub + 1))
    if fine_edges:
        fine = np.unique(np.concatenate(fine_edges))
        fy, fx = _grid_residuals_parallel(fine, model, eps, cfg, workers)
        grid_all = np.concatenate([grid, fine])
        order = np.argsort(grid_all, kind="stable")
        grid_all = grid_all[order]
        ry = np.concatenate([ry, fy])[order]
        rx = np.concatenate([rx, fx])[order]
        # collapse duplicated abscissae from overlapping windows
        keep = np.ones(grid_all.size, dtype=bool)
        keep[1:] = np.diff(grid_all) > 0
        grid_all, ry, rx = grid_all[keep], ry[keep], rx[keep]
    else:
        grid_all = grid

    records = {}
    for comp, r in ((1, ry), (2, rx)):
        ok = np.isfinite(r)
        sign_change = (r[:-1] * r[1:] <= 0) & ok[:-1] & ok[1:] & (r[:-1] != 0)
        idx = np.nonzero(sign_change)[0]
        if idx.size:
            roots, res = refine_roots(grid_all[idx], grid_all[idx + 1], r[idx],
                                      model, eps, cfg, period_mult=comp)
            order = np.argsort(roots)
            roots, res = roots[order], np.abs(res[order])
            # merge sub-resolution groups, keeping the smallest defect
            merged = []
            i = 0
            while i < roots.size:
                j = i
                while j + 1 < roots.size and roots[j + 1] - roots[j] <= dedupe:
                    j += 1
                merged.append(roots[i + np.argmin(res[i:j + 1])])
                i = j + 1
            roots = np.array(merged)
        else:
            roots = np.empty(0)
        records[comp] = classify_orbits(roots, model, eps, cfg, period_mult=comp,
                                        stability_margin=stability_margin)

    p1 = records[1]
    small = 2.0 * math.sqrt(eps)
    pos = len(p1)
    spos = sum(1 for r in p1 if r.stability == "stable")
    spos_small = sum(1 for r in p1 if r.stability == "stable" and r.x0 <= small)
    upos_small = sum(1 for r in p1 if r.stability == "unstable" and r.x0 <= small)
    marginal = sum(1 for r in p1 if r.stability == "marginal")
    row = CensusRow(
        eps=eps, pos_count=pos, spos_count=spos, spos_small_count=spos_small,
        upos_small_count=upos_small, marginal_count=marginal,
        metadata={
            "x_window": [lo, hi], "n0": n0, "h": cfg.h,
            "newton_tol": cfg.newton_tol, "dedupe": dedupe,
            "stability_margin": stability_margin,
            "small_threshold": small, "workers": workers,
            "integration_passes": {"grid": n0,
                                   "refine": "brackets x (12 bisect + <=60 secant)",
                                   "classify": len(p1) + len(records[2])},
        })
    return row, p1, records[2]


# ---------------------------------------------------------------------------
# Seed continuation (prediction-to-orbit bridge)
# ---------------------------------------------------------------------------

def continue_seeds(points, period_mult, model: ModelSpec, eps: float,
                   cfg: IntegratorConfig, max_iter: int = 20, tol: float = 1e-9,
                   damping: float = 1.0):
    """Newton on the return map from analytic seed points.

    ``points``: array (n, 2) of section states.  Period-1 seeds solve
    P(z) = z; period-2 seeds solve P(z) = -z (the reflection-translated
    closure).  Returns a list of dicts with convergence statistics and, on
    success, the refined orbit's trace and stability.
    """
    pts = np.asarray(points, dtype=float).copy()
    n = pts.shape[0]
    sign = 1.0 if period_mult == 1 else -1.0
    active = np.ones(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    for it in range(max_iter):
        if not np.any(active):
            break
        xa, ya = pts[active, 0], pts[active, 1]
        xe, ye, W = return_map(xa, ya, model, eps, cfg, variational=True)
        Fx = xe - sign * xa
        Fy = ye - sign * ya
        J = W.copy()
        J[..., 0, 0] -= sign
        J[..., 1, 1] -= sign
        F = np.stack([Fx, Fy], axis=-1)
        try:
            step = np.linalg.solve(J, F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(F)
        pts[active] -= damping * step
        iters[active] += 1
        done = np.hypot(Fx, Fy) < tol
        idx = np.nonzero(active)[0]
        active[idx[done]] = False
    xe, ye, W = return_map(pts[:, 0], pts[:, 1], model, eps, cfg,
                           variational=True)
    res = np.hypot(xe - sign * pts[:, 0], ye - sign * pts[:, 1])
    if period_mult == 1:
        tr = W[..., 0, 0] + W[..., 1, 1]
    else:
        _, _, W2 = return_map(xe, ye, model, eps, cfg, variational=True)
        M = W2 @ W
        tr = M[..., 0, 0] + M[..., 1, 1]
    results = []
    for i in range(n):
        t = float(tr[i])
        results.append({
            "x": float(pts[i, 0]), "y": float(pts[i, 1]),
            "residual": float(res[i]),
            "converged": bool(res[i] < tol), "iterations": int(iters[i]),
            "trace": t,
            "stability": ("stable" if abs(t) < 2 - 1e-3 else
                          "unstable" if abs(t) > 2 + 1e-3 else "marginal"),
        })
    return results
