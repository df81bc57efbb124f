import math

import numpy as np
import pytest

from sforbits.asymptotic import OuterAA, crossing_map
from sforbits.integrator import IntegratorConfig
from sforbits.model import ScaleFrame, toy_model
from sforbits.painleve import (_frame_for, integrate_full_blowup,
                               integrate_truncated, jacobian_growth_check,
                               truncated_inner_measure, truncated_outer_state,
                               verify_connection, w0_for_pseudo_phase)

MODEL = toy_model()


def test_origin_is_invariant():
    x, y = integrate_truncated((0.0, 0.0), 0.05)
    assert x == 0.0 and y == 0.0


def test_growth_envelope():
    # |x(u)| <= c d^{-3/4} u^{1/2} on the branch side
    delta = 0.05
    w0 = w0_for_pseudo_phase(0.5, 2.0, delta, 1.0)
    x0, y0 = truncated_outer_state(OuterAA(0.5, w0), 1.0)
    for u_end in (0.3, 0.6, 1.0):
        x, y = integrate_truncated((x0, y0), delta, u_from=-1.0, u_to=u_end)
        bound = 3.0 * delta ** -0.75 * u_end ** 0.5
        assert abs(x) <= bound


def test_action_recovered_on_reversed_leg():
    # forward then backward through the pre-crossing regime is the identity
    delta = 0.05
    x0, y0 = truncated_outer_state(OuterAA(0.5, 1.0), 1.0)
    xm, ym = integrate_truncated((x0, y0), delta, u_from=-1.0, u_to=-0.5)
    xb, yb = integrate_truncated((xm, ym), delta, u_from=-0.5, u_to=-1.0)
    assert xb == pytest.approx(x0, abs=1e-9)
    assert yb == pytest.approx(y0, abs=1e-9)


def test_reflection_equivariance_of_flow():
    delta = 0.05
    x0, y0 = truncated_outer_state(OuterAA(0.4, 0.7), 1.0)
    a = integrate_truncated((x0, y0), delta)
    b = integrate_truncated((-x0, -y0), delta)
    assert b[0] == pytest.approx(-a[0], abs=1e-10)
    assert b[1] == pytest.approx(-a[1], abs=1e-10)


def test_branch_selection_both_sides():
    delta = 0.05
    for lam, eta in ((2.0, -1), (2.0 + math.pi, 1)):
        w0 = w0_for_pseudo_phase(0.5, lam, delta, 1.0)
        aa = OuterAA(0.5, w0)
        pred = crossing_map(aa, _frame_for(delta, 1.0))
        assert pred.eta == eta
        x0, y0 = truncated_outer_state(aa, 1.0)
        x1, y1 = integrate_truncated((x0, y0), delta)
        meas = truncated_inner_measure(x1, y1, delta, 1.0)
        assert meas.eta == eta


def test_reflection_pairs_have_identical_errors():
    delta = 0.05
    w0 = w0_for_pseudo_phase(0.5, 2.2, delta, 1.0)
    e1, _ = verify_connection(0.5, w0, [delta])
    e2, _ = verify_connection(0.5, (w0 + math.pi) % (2 * math.pi), [delta])
    assert e1[0].measured.eta == -e2[0].measured.eta
    assert e1[0].action_error == pytest.approx(e2[0].action_error, abs=1e-9)


def test_full_blowup_converges_to_truncation():
    # mu -> 0 at fixed delta: the unreduced flow approaches the truncated one
    delta = 0.06
    w0 = w0_for_pseudo_phase(0.4, 2.0, delta, 1.0)
    x0, y0 = truncated_outer_state(OuterAA(0.4, w0), 1.0)
    ref = integrate_truncated((x0, y0), delta)
    gaps = []
    for eps in (1e-6, 1e-8):
        frame = ScaleFrame(eps=eps, delta=delta, warn_threshold=np.inf)
        full = integrate_full_blowup((x0, y0), frame, MODEL)
        gaps.append(math.hypot(full[0] - ref[0], full[1] - ref[1]))
    assert gaps[1] < 0.05 * gaps[0]  # ~ mu^2 = eps^{2/3}/delta scaling
    # scaled gap stays within the budgeted size
    frame = ScaleFrame(eps=1e-6, delta=delta, warn_threshold=np.inf)
    budget = frame.mu ** 2 * delta ** -2.5 * math.log(1 / delta) ** 3
    assert gaps[0] < 100 * budget


def test_action_error_slope_and_branches():
    exps, slope = verify_connection(0.5, 0.0, [0.1, 0.05, 0.02],
                                    pin_lambda=2.0)
    assert all(e.branch_ok for e in exps)
    assert slope >= 0.6
    errs = [e.action_error for e in exps]
    assert errs[0] > errs[-1]


@pytest.mark.xfail(reason="the closed-form inner phase reproduces the flow "
                          "only up to a parameter-dependent constant; the "
                          "absolute angle error does not contract (see the "
                          "module notes)", strict=False)
def test_phase_error_contracts():
    exps, _ = verify_connection(0.5, 0.0, [0.1, 0.05, 0.02], pin_lambda=2.0)
    errs = [e.phase_error for e in exps]
    assert all(b <= a for a, b in zip(errs[1:], errs[2:]))
    assert errs[-1] < 0.2


def test_jacobian_growth():
    rows = jacobian_growth_check(0.5, 0.0, [0.1, 0.05, 0.02], pin_lambda=2.0)
    ratios = [r["jac_ratio"] for r in rows]
    # bounded against ln^2(1/delta): non-increasing tail
    assert ratios[2] <= ratios[1] * 1.05
    for r in rows:
        assert abs(r["det"] - 1.0) < 1e-6
        assert r["interior_norm"] <= 40.0 * r["interior_allow"]


def test_jacobian_fd_cross_check():
    rows_v = jacobian_growth_check(0.5, 0.0, [0.05], pin_lambda=2.0)
    rows_f = jacobian_growth_check(0.5, 0.0, [0.05], pin_lambda=2.0, mode="fd")
    assert rows_v[0]["jac_norm"] == pytest.approx(rows_f[0]["jac_norm"],
                                                  rel=1e-3)


def test_experiment_validation():
    from sforbits.asymptotic import InnerAA
    from sforbits.painleve import CrossingExperiment

    with pytest.raises(ValueError):
        CrossingExperiment(delta=0.5, u_star_hat=1.0,
                           initial=OuterAA(0.5, 0.0),
                           predicted=InnerAA(0.1, 0.0, 1),
                           measured=InnerAA(0.1, 0.0, 1),
                           action_error=0.0, phase_error=0.0,
                           phase_incr_error=0.0, branch_ok=True)
