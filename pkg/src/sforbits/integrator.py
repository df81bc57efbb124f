"""Two-stage Gauss-Legendre (order 4) time integration of the extended system.

The slow phase advances exactly (du/dt = eps), so stage values of u are known
in closed form and only the fast (x, y) block needs an implicit solve.  The
stage equations are solved by simplified Newton with one Jacobian per step.
Everything is vectorized over an arbitrary batch of trajectories that share
the step size and the initial slow phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (ExtendedState, dH_du, fast_jacobian, fast_rhs,
                    hamiltonian_xyuv)

SQRT3 = math.sqrt(3.0)
GL2_A = np.array([[0.25, 0.25 - SQRT3 / 6.0],
                  [0.25 + SQRT3 / 6.0, 0.25]])
GL2_B = np.array([0.5, 0.5])
GL2_C = np.array([0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0])


class NewtonDiverged(RuntimeError):
    """Stage equations failed to reach the residual tolerance."""


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 0.005
    newton_tol: float = 1e-12
    max_newton: int = 50
    jacobian_mode: str = "analytic"  # or "fd"
    jacobian_refresh: int = 10       # simplified-Newton refresh interval

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.newton_tol < 1e-14:
            raise ValueError("newton_tol below 1e-14 is not resolvable")


def default_step(model, cap=0.005, points_per_period=1000):
    """min(cap, 2*pi / (points_per_period * max frequency)) for the model."""
    from .model import vartheta

    u = np.linspace(1e-3, model.tau - 1e-3, 257)
    omega_max = float(np.sqrt(np.max(vartheta(u, model))))
    return min(cap, 2.0 * math.pi / (points_per_period * max(omega_max, 1e-12)))


# ---------------------------------------------------------------------------
# Generic batched GL2 core for a planar field z' = F(z, s)
# ---------------------------------------------------------------------------

def _inv2(m11, m12, m21, m22):
    det = m11 * m22 - m12 * m21
    return m22 / det, -m12 / det, -m21 / det, m11 / det


def _mul2(a11, a12, a21, a22, b11, b12, b21, b22):
    return (a11 * b11 + a12 * b21, a11 * b12 + a12 * b22,
            a21 * b11 + a22 * b21, a21 * b12 + a22 * b22)


def _apply2(m11, m12, m21, m22, vx, vy):
    return m11 * vx + m12 * vy, m21 * vx + m22 * vy


class _StageSolver:
    """Closed-form inverse of the frozen-Jacobian stage matrix.

    With a single Jacobian J for both stages every block of
    I - h (A (x) J) is a polynomial in J, so the blocks commute and the
    4x4 inverse reduces to one 2x2 inverse:
        S = I - h tr(A) J + h^2 det(A) J^2,
        dK1 = S^{-1} (B22 r1 - B12 r2),  dK2 = S^{-1} (B11 r2 - B21 r1).
    """

    TRA = float(GL2_A[0, 0] + GL2_A[1, 1])
    DETA = float(GL2_A[0, 0] * GL2_A[1, 1] - GL2_A[0, 1] * GL2_A[1, 0])

    def __init__(self, h, J):
        j11, j12, j21, j22 = J
        self.h = h
        self.J = J
        js11 = j11 * j11 + j12 * j21
        js12 = j12 * (j11 + j22)
        js21 = j21 * (j11 + j22)
        js22 = j22 * j22 + j12 * j21
        c1, c2 = h * self.TRA, h * h * self.DETA
        self.Sinv = _inv2(1.0 - c1 * j11 + c2 * js11, -c1 * j12 + c2 * js12,
                          -c1 * j21 + c2 * js21, 1.0 - c1 * j22 + c2 * js22)

    def apply(self, r1x, r1y, r2x, r2y):
        h, (j11, j12, j21, j22) = self.h, self.J
        a11, a12 = GL2_A[0]
        a21, a22 = GL2_A[1]
        # w1 = B22 r1 - B12 r2, w2 = B11 r2 - B21 r1 (B_ij = d_ij I - h a_ij J)
        Jr1x, Jr1y = _apply2(j11, j12, j21, j22, r1x, r1y)
        Jr2x, Jr2y = _apply2(j11, j12, j21, j22, r2x, r2y)
        w1x = r1x - h * a22 * Jr1x + h * a12 * Jr2x
        w1y = r1y - h * a22 * Jr1y + h * a12 * Jr2y
        w2x = r2x - h * a11 * Jr2x + h * a21 * Jr1x
        w2y = r2y - h * a11 * Jr2y + h * a21 * Jr1y
        d1x, d1y = _apply2(*self.Sinv, w1x, w1y)
        d2x, d2y = _apply2(*self.Sinv, w2x, w2y)
        return d1x, d1y, d2x, d2y


def _gl2_stage_solve(zx, zy, s0, h, rhs, jac, cfg, warm=None):
    """Solve the two-stage collocation equations for z' = F(z, s).

    Returns stage slopes (k1x, k1y, k2x, k2y) and stage states.  ``rhs`` and
    ``jac`` take (x, y, s) with s the independent variable at the stage.
    """
    a11, a12 = GL2_A[0]
    a21, a22 = GL2_A[1]
    s1 = s0 + GL2_C[0] * h
    s2 = s0 + GL2_C[1] * h

    solver = _StageSolver(h, jac(zx, zy, s0 + 0.5 * h))

    if warm is None:
        k1x, k1y = rhs(zx, zy, s1)
        k2x, k2y = rhs(zx, zy, s2)
    else:
        k1x, k1y, k2x, k2y = warm

    # residual floor scales with the slope magnitude
    tol = cfg.newton_tol * max(
        1.0,
        float(max(np.max(np.abs(k1x), initial=0.0), np.max(np.abs(k1y), initial=0.0),
                  np.max(np.abs(k2x), initial=0.0), np.max(np.abs(k2y), initial=0.0))))
    res = np.inf
    for it in range(cfg.max_newton):
        X1 = zx + h * (a11 * k1x + a12 * k2x)
        Y1 = zy + h * (a11 * k1y + a12 * k2y)
        X2 = zx + h * (a21 * k1x + a22 * k2x)
        Y2 = zy + h * (a21 * k1y + a22 * k2y)
        f1x, f1y = rhs(X1, Y1, s1)
        f2x, f2y = rhs(X2, Y2, s2)
        r1x = k1x - f1x
        r1y = k1y - f1y
        r2x = k2x - f2x
        r2y = k2y - f2y
        res = max(np.max(np.abs(r1x), initial=0.0), np.max(np.abs(r1y), initial=0.0),
                  np.max(np.abs(r2x), initial=0.0), np.max(np.abs(r2y), initial=0.0))
        if res < tol:
            return (k1x, k1y, k2x, k2y), (X1, Y1, X2, Y2, s1, s2)
        d1x, d1y, d2x, d2y = solver.apply(r1x, r1y, r2x, r2y)
        k1x = k1x - d1x
        k1y = k1y - d1y
        k2x = k2x - d2x
        k2y = k2y - d2y
        if (it + 1) % cfg.jacobian_refresh == 0:
            # refresh the frozen Jacobian at the current first-stage state
            solver = _StageSolver(h, jac(X1, Y1, s0 + 0.5 * h))
    raise NewtonDiverged(
        f"stage residual {res:.3e} above {tol:.1e} after "
        f"{cfg.max_newton} iterations; reduce the step size")


def _as_mat(J, shape):
    m = np.empty(shape + (2, 2))
    m[..., 0, 0] = J[0]
    m[..., 0, 1] = J[1]
    m[..., 1, 0] = J[2]
    m[..., 1, 1] = J[3]
    return m


def _inv2m(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    out[..., 1, 1] = m[..., 0, 0]
    return out / det[..., None, None]


def _variational_stages(W, h, jac, stages):
    """Stage solve for the linear variational flow dW/ds = J(s) W.

    The two stage Jacobians differ, so the 4x4 system is eliminated by a
    2x2 block Schur complement (every block is 2x2)."""
    X1, Y1, X2, Y2, s1, s2 = stages
    a11, a12 = GL2_A[0]
    a21, a22 = GL2_A[1]
    shape = W.shape[:-2]
    eye = np.eye(2)
    J1 = _as_mat(jac(X1, Y1, s1), shape)
    J2 = _as_mat(jac(X2, Y2, s2), shape)
    B11 = eye - h * a11 * J1
    B12 = -h * a12 * J1
    B21 = -h * a21 * J2
    B22 = eye - h * a22 * J2
    C1 = J1 @ W
    C2 = J2 @ W
    B11inv = _inv2m(B11)
    T = B21 @ B11inv
    S2 = B22 - T @ B12
    L2 = _inv2m(S2) @ (C2 - T @ C1)
    L1 = B11inv @ (C1 - B12 @ L2)
    return W + h * (GL2_B[0] * L1 + GL2_B[1] * L2)


def gl2_generic_step(zx, zy, s0, h, rhs, jac, cfg, W=None, warm=None):
    """One GL2 step of a planar system; optionally propagates a tangent W."""
    (k1x, k1y, k2x, k2y), stages = _gl2_stage_solve(zx, zy, s0, h, rhs, jac, cfg, warm)
    zx_n = zx + h * (GL2_B[0] * k1x + GL2_B[1] * k2x)
    zy_n = zy + h * (GL2_B[0] * k1y + GL2_B[1] * k2y)
    W_n = _variational_stages(W, h, jac, stages) if W is not None else None
    return zx_n, zy_n, W_n, (k1x, k1y, k2x, k2y), stages


# ---------------------------------------------------------------------------
# Extended-system drivers
# ---------------------------------------------------------------------------

class _FastField:
    """Fast block of the extended system on the time axis, u = u0 + eps*t."""

    def __init__(self, model, eps, u0, fd=False):
        self.model = model
        self.eps = eps
        self.u0 = u0
        self.fd = fd

    def rhs(self, x, y, t):
        return fast_rhs(x, y, self.u0 + self.eps * t, self.model)

    def jac(self, x, y, t):
        return fast_jacobian(x, y, self.u0 + self.eps * t, self.model, fd=self.fd)


def gl2_step(state: ExtendedState, model, eps, cfg: IntegratorConfig) -> ExtendedState:
    """One step of the extended system from an :class:`ExtendedState`."""
    field = _FastField(model, eps, state.u, fd=(cfg.jacobian_mode == "fd"))
    x, y, _, (k1x, k1y, k2x, k2y), stages = gl2_generic_step(
        np.asarray(state.x, dtype=float), np.asarray(state.y, dtype=float),
        0.0, cfg.h, field.rhs, field.jac, cfg)
    X1, Y1, X2, Y2, t1, t2 = stages
    v = state.v + cfg.h * eps * -(
        GL2_B[0] * dH_du(X1, Y1, state.u + eps * t1, model)
        + GL2_B[1] * dH_du(X2, Y2, state.u + eps * t2, model))
    return ExtendedState(float(x), float(y), state.u + eps * cfg.h, float(v))


def _flow_arrays(x, y, u0, v, model, eps, T, cfg, W=None, record=None):
    """Flow the batch for time T (u advances by eps*T exactly).

    ``record``: optional (stride, list) pair collecting sampled rows.
    Returns (x, y, u_final, v, W).
    """
    field = _FastField(model, eps, u0, fd=(cfg.jacobian_mode == "fd"))
    n_full, h_last = divmod(T, cfg.h)
    n_full = int(n_full)
    if h_last < 1e-12 * max(T, 1.0) and n_full > 0:
        n_full, h_last = n_full, 0.0
    t = 0.0
    warm = None
    for i in range(n_full):
        if record is not None and i % record[0] == 0:
            record[1].append((t, np.array(x, copy=True), np.array(y, copy=True),
                              u0 + eps * t, np.array(v, copy=True)))
        x, y, W, warm, stages = gl2_generic_step(x, y, t, cfg.h, field.rhs,
                                                 field.jac, cfg, W=W, warm=warm)
        X1, Y1, X2, Y2, t1, t2 = stages
        v = v + cfg.h * eps * -(GL2_B[0] * dH_du(X1, Y1, u0 + eps * t1, model)
                                + GL2_B[1] * dH_du(X2, Y2, u0 + eps * t2, model))
        t += cfg.h
    if h_last > 0:
        if record is not None:
            record[1].append((t, np.array(x, copy=True), np.array(y, copy=True),
                              u0 + eps * t, np.array(v, copy=True)))
        x, y, W, _, stages = gl2_generic_step(x, y, t, h_last, field.rhs,
                                              field.jac, cfg, W=W)
        X1, Y1, X2, Y2, t1, t2 = stages
        v = v + h_last * eps * -(GL2_B[0] * dH_du(X1, Y1, u0 + eps * t1, model)
                                 + GL2_B[1] * dH_du(X2, Y2, u0 + eps * t2, model))
        t += h_last
    if record is not None:
        record[1].append((t, np.array(x, copy=True), np.array(y, copy=True),
                          u0 + eps * t, np.array(v, copy=True)))
    return x, y, u0 + eps * T, v, W


def flow_to_section(state: ExtendedState, model, eps, u_target, cfg) -> ExtendedState:
    """Integrate until u reaches ``u_target`` (u is linear in t, so the
    section is hit by one exactly-sized final substep)."""
    T = (u_target - state.u) / eps
    if T <= 0:
        raise ValueError("u_target must lie ahead of the current slow phase")
    x, y, u, v, _ = _flow_arrays(np.asarray(state.x, dtype=float),
                                 np.asarray(state.y, dtype=float),
                                 state.u, np.asarray(state.v, dtype=float),
                                 model, eps, T, cfg)
    return ExtendedState(float(x), float(y), float(u), float(v))


def flow_batch(x0, y0, u0, model, eps, u_target, cfg, variational=False):
    """Batched section-to-section flow; returns (x, y, v, W)."""
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    v = np.zeros_like(x)
    W = None
    if variational:
        W = np.zeros(x.shape + (2, 2))
        W[..., 0, 0] = 1.0
        W[..., 1, 1] = 1.0
    T = (u_target - u0) / eps
    x, y, _, v, W = _flow_arrays(x, y, u0, v, model, eps, T, cfg, W=W)
    return x, y, v, W


def monodromy(initial: ExtendedState, model, eps, period, cfg,
              mode: str = "variational"):
    """Jacobian of the (x, y) time-``period`` flow map at ``initial``.

    ``mode="variational"`` integrates the tangent flow with the same GL2
    scheme (determinant preserved to the Newton tolerance);
    ``mode="fd"`` uses central finite differences with displacement 1e-7.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    if mode == "variational":
        x = np.asarray(initial.x, dtype=float)
        y = np.asarray(initial.y, dtype=float)
        W = np.eye(2).reshape((2, 2))
        _, _, _, _, W = _flow_arrays(x, y, initial.u, np.asarray(0.0), model,
                                     eps, period, cfg, W=W)
        return W
    if mode == "fd":
        d = 1e-7
        cols = []
        for dx, dy in ((d, 0.0), (0.0, d)):
            xp = np.array([initial.x + dx, initial.x - dx])
            yp = np.array([initial.y + dy, initial.y - dy])
            x1, y1, _, _, _ = _flow_arrays(xp, yp, initial.u, np.zeros(2),
                                           model, eps, period, cfg)
            cols.append([(x1[0] - x1[1]) / (2 * d), (y1[0] - y1[1]) / (2 * d)])
        return np.array(cols).T
    raise ValueError(f"unknown monodromy mode {mode!r}")


# ---------------------------------------------------------------------------
# Trajectory recording and export
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Sampled trajectory with strictly increasing t."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    H: np.ndarray
    stride: int = 1

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def to_csv(self, path):
        header = "t,x,y,u,v,H"
        data = np.column_stack([self.t, self.x, self.y, self.u, self.v, self.H])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def integrate_trajectory(state: ExtendedState, model, eps, T, cfg,
                         stride: int = 1) -> Trajectory:
    """Flow for time T, sampling every ``stride`` steps (plus the endpoint)."""
    rows = []
    _flow_arrays(np.asarray(state.x, dtype=float), np.asarray(state.y, dtype=float),
                 state.u, np.asarray(state.v, dtype=float), model, eps, T, cfg,
                 record=(stride, rows))
    t = np.array([r[0] for r in rows])
    x = np.array([float(r[1]) for r in rows])
    y = np.array([float(r[2]) for r in rows])
    u = np.array([r[3] for r in rows])
    v = np.array([float(r[4]) for r in rows])
    H = hamiltonian_xyuv(x, y, u, v, model)
    return Trajectory(t=t, x=x, y=y, u=u, v=v, H=H, stride=stride)
