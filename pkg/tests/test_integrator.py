import math

import numpy as np
import pytest

from sforbits.integrator import (GL2_A, GL2_B, GL2_C, IntegratorConfig, NewtonDiverged,
                                 flow_to_section, gl2_generic_step, gl2_step,
                                 integrate_trajectory, monodromy)
from sforbits.model import ExtendedState, eval_hamiltonian, toy_model

MODEL = toy_model()
CFG = IntegratorConfig()
SECTION = -math.pi / 2


def test_tableau_order_conditions():
    b, c, A = GL2_B, GL2_C, GL2_A
    assert b.sum() == pytest.approx(1.0, abs=1e-15)
    assert (b @ c) == pytest.approx(0.5, abs=1e-15)
    assert (b @ c ** 2) == pytest.approx(1 / 3, abs=1e-15)
    assert (b @ (A @ c)) == pytest.approx(1 / 6, abs=1e-15)
    assert (b @ c ** 3) == pytest.approx(1 / 4, abs=1e-15)
    assert (b @ (c * (A @ c))) == pytest.approx(1 / 8, abs=1e-15)
    assert (b @ (A @ c ** 2)) == pytest.approx(1 / 12, abs=1e-15)
    assert (b @ (A @ (A @ c))) == pytest.approx(1 / 24, abs=1e-15)


def _harmonic():
    rhs = lambda x, y, s: (y, -x)
    jac = lambda x, y, s: (np.zeros_like(x), np.ones_like(x),
                           -np.ones_like(x), np.zeros_like(x))
    return rhs, jac


def test_quadratic_invariant_on_harmonic_field():
    rhs, jac = _harmonic()
    x, y = np.asarray(1.0), np.asarray(0.0)
    t = 0.0
    for _ in range(10_000):
        x, y, _, _, _ = gl2_generic_step(x, y, t, 0.1, rhs, jac, CFG)
        t += 0.1
    assert abs(float(x) ** 2 + float(y) ** 2 - 1.0) < 1e-13


def test_harmonic_rotation_over_full_period():
    rhs, jac = _harmonic()
    x, y = np.asarray(1.0), np.asarray(0.0)
    n = 2000
    h = 2 * math.pi / n
    W = np.eye(2)
    t = 0.0
    for _ in range(n):
        x, y, W, _, _ = gl2_generic_step(x, y, t, h, rhs, jac, CFG, W=W)
        t += h
    assert abs(float(x) - 1.0) < 1e-10 and abs(float(y)) < 1e-10
    assert np.allclose(W, np.eye(2), atol=1e-10)


def test_small_step_limit_returns_input():
    st = ExtendedState(0.3, 0.1, 0.2, 0.0)
    cfg = IntegratorConfig(h=1e-12)
    out = gl2_step(st, MODEL, 0.08, cfg)
    assert out.x == pytest.approx(st.x, abs=1e-11)
    assert out.y == pytest.approx(st.y, abs=1e-11)


def test_energy_drift_over_slow_period():
    st = ExtendedState(0.3, 0.0, SECTION, 0.0)
    H0 = eval_hamiltonian(st, MODEL)
    end = flow_to_section(st, MODEL, 0.08, SECTION + 2 * math.pi, CFG)
    assert abs(eval_hamiltonian(end, MODEL) - H0) < 1e-8
    # section hit is exact in u
    assert end.u == pytest.approx(SECTION + 2 * math.pi, abs=1e-12)


def test_invariant_line_is_preserved():
    end = flow_to_section(ExtendedState(0, 0, SECTION, 0), MODEL, 0.08,
                          SECTION + math.pi, CFG)
    assert end.x == 0.0 and end.y == 0.0


def test_fourth_order_self_convergence():
    eps = 0.08
    st = ExtendedState(0.3, 0.0, SECTION, 0.0)
    target = SECTION + 1.0
    ends = []
    hs = [0.02, 0.01, 0.005]
    for h in hs:
        e = flow_to_section(st, MODEL, eps, target, IntegratorConfig(h=h))
        ends.append(np.array([e.x, e.y]))
    ref = flow_to_section(st, MODEL, eps, target, IntegratorConfig(h=0.00125))
    ref = np.array([ref.x, ref.y])
    errs = [np.linalg.norm(e - ref) for e in ends]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)


def test_newton_divergence_signal():
    # strongly nonlinear field with a step far beyond the stability range:
    # the frozen-Jacobian iteration cannot contract
    rhs = lambda x, y, s: (y, -1e6 * x ** 3)
    jac = lambda x, y, s: (np.zeros_like(x), np.ones_like(x),
                           -3e6 * x ** 2, np.zeros_like(x))
    with pytest.raises(NewtonDiverged):
        gl2_generic_step(np.asarray(1.0), np.asarray(0.0), 0.0, 1.0, rhs, jac,
                         IntegratorConfig(h=1.0, max_newton=8))


def test_monodromy_det_and_modes():
    st = ExtendedState(0.35, 0.0, SECTION, 0.0)
    period = 2 * math.pi / 0.08
    Wv = monodromy(st, MODEL, 0.08, period, CFG, mode="variational")
    assert abs(np.linalg.det(Wv) - 1.0) < 1e-6
    Wf = monodromy(st, MODEL, 0.08, period, CFG, mode="fd")
    assert np.allclose(Wv, Wf, rtol=2e-4, atol=2e-4)


def test_trivial_orbit_multiplier_scaling():
    # ln(largest multiplier) of the x = y = 0 orbit grows like 1/eps
    logs = []
    for eps in (0.08, 0.04):
        W = monodromy(ExtendedState(0, 0, SECTION, 0), MODEL, eps,
                      2 * math.pi / eps, CFG)
        assert abs(np.trace(W)) > 2.0
        logs.append(math.log(max(abs(np.linalg.eigvals(W)))))
    assert logs[1] / logs[0] == pytest.approx(2.0, abs=0.4)


def test_time_reversal_consistency():
    # integrating forward then reversing equals reversing then integrating
    eps = 0.08
    tau = MODEL.tau
    st = ExtendedState(0.3, 0.1, 0.4, 0.0)
    fwd = flow_to_section(st, MODEL, eps, st.u + 2 * math.pi, CFG)
    # reversed trajectory: (x,-y) at tau-u flows to the reversed start
    st_r = ExtendedState(fwd.x, -fwd.y, tau - fwd.u, 0.0)
    back = flow_to_section(st_r, MODEL, eps, st_r.u + 2 * math.pi, CFG)
    assert back.x == pytest.approx(st.x, abs=1e-8)
    assert back.y == pytest.approx(-st.y, abs=1e-8)


def test_trajectory_export(tmp_path):
    st = ExtendedState(0.2, 0.0, SECTION, 0.0)
    traj = integrate_trajectory(st, MODEL, 0.08, 5.0, CFG, stride=10)
    assert np.all(np.diff(traj.t) > 0)
    assert np.max(np.abs(traj.H - traj.H[0])) < 1e-10
    p = tmp_path / "traj.csv"
    traj.to_csv(p)
    header = p.read_text().splitlines()[0]
    assert header == "t,x,y,u,v,H"
