import math

import numpy as np
import pytest

from sforbits.asymptotic import (InnerAA, ModelConstants, OuterAA, OutsideDomain,
                                 blowup_inner, blowup_inner_inverse, blowup_outer,
                                 blowup_outer_inverse, compute_constants,
                                 connection_data, crossing_map, crossing_phase,
                                 delta_schedule, from_inner_action_angle,
                                 from_outer_action_angle, inner_map, outer_map,
                                 rho0_closed_form, to_inner_action_angle,
                                 to_outer_action_angle)
from sforbits.model import ScaleFrame, toy_model

MODEL = toy_model()
FRAME = ScaleFrame(eps=1e-6, delta=0.05, warn_threshold=np.inf)
E1 = 1.1981402347355924  # int_0^{pi/2} sqrt(sin u) du (frozen quadrature oracle)


@pytest.fixture(scope="module")
def consts():
    return compute_constants(MODEL)


def test_blowup_outer_roundtrip_and_units():
    x, y, u = 0.01, -0.002, -0.03
    xh, yh, uh = blowup_outer(x, y, u, FRAME)
    back = blowup_outer_inverse(xh, yh, uh, FRAME)
    assert np.allclose(back, (x, y, u), rtol=1e-15)
    # unit conversion: x = eps^{1/3} delta^{1/4} maps to x_hat = 1
    fr = ScaleFrame(eps=1e-3, delta=0.1, warn_threshold=np.inf)
    xh, _, _ = blowup_outer(1e-1 * 0.1 ** 0.25, 0.0, 0.0, fr)
    assert xh == pytest.approx(1.0, rel=1e-14)
    # u = mu^2 u_hat exactly
    assert blowup_outer(0, 0, fr.mu ** 2 * 2.5, fr)[2] == pytest.approx(2.5)


def test_blowup_inner_roundtrip_and_reflection():
    u = 0.4
    for sign in (1, -1):
        xi, sg, uh = blowup_inner(0.31, 0.007, u, FRAME, MODEL, sign)
        back = blowup_inner_inverse(xi, sg, uh, FRAME, MODEL, sign)
        assert np.allclose(back, (0.31, 0.007, u), rtol=1e-12, atol=1e-15)
    # a state on the branch maps to the origin of the chart
    from sforbits.model import kappa
    xi, sg, _ = blowup_inner(kappa(u, MODEL), 0.0, u, FRAME, MODEL, 1)
    assert abs(xi) < 1e-12 and sg == 0.0
    # flipping the sign conjugates by the reflection
    xi1, sg1, _ = blowup_inner(0.31, 0.007, u, FRAME, MODEL, 1)
    xi2, sg2, _ = blowup_inner(-0.31, -0.007, u, FRAME, MODEL, -1)
    assert xi1 == pytest.approx(xi2) and sg1 == pytest.approx(sg2)


def test_action_angle_roundtrips():
    aa = OuterAA(z0_hat=0.8, w0=2.1)
    xh, yh = from_outer_action_angle(aa, -2.0, FRAME, MODEL)
    back = to_outer_action_angle(xh, yh, -2.0, FRAME, MODEL)
    assert back.z0_hat == pytest.approx(aa.z0_hat, rel=1e-14)
    assert back.w0 == pytest.approx(aa.w0, rel=1e-14)

    ia = InnerAA(rho0_hat=0.4, phi0=5.0, eta=-1)
    xi, sg = from_inner_action_angle(ia, 2.0, FRAME, MODEL)
    back = to_inner_action_angle(xi, sg, 2.0, FRAME, MODEL, eta=-1)
    assert back.rho0_hat == pytest.approx(ia.rho0_hat, rel=1e-14)
    assert back.phi0 == pytest.approx(ia.phi0, rel=1e-14)

    # zero amplitude: action 0, angle reported as 0
    z = to_outer_action_angle(0.0, 0.0, -2.0, FRAME, MODEL)
    assert z.z0_hat == 0.0 and z.w0 == 0.0


def test_unit_frequency_collapses_weight():
    # at F_hat = 1 the weighted pair equals the raw pair, so z0 = (x^2+y^2)/2;
    # pick u with -f(u) = mu^2
    fr = FRAME
    u = -math.asin(fr.mu ** 2)
    u_hat = u / fr.mu ** 2
    aa = to_outer_action_angle(0.3, 0.4, u_hat, fr, MODEL)
    assert aa.z0_hat == pytest.approx(0.5 * (0.3 ** 2 + 0.4 ** 2), rel=1e-10)


def test_crossing_map_values_and_domain(consts):
    # the distinguished singular pair is rejected
    from sforbits.asymptotic import Z0_SINGULAR
    frame = FRAME
    lam_target = math.pi / 2
    probe = crossing_phase(Z0_SINGULAR, 0.0, frame)
    w0 = (probe - lam_target) % (2 * math.pi)
    with pytest.raises(OutsideDomain):
        crossing_map(OuterAA(z0_hat=Z0_SINGULAR, w0=w0), frame)

    # frozen oracle: rho0(z0=0.5, lambda=pi/2) from the closed form
    _, rho0, _ = connection_data(0.5, math.pi / 2)
    expected = math.log((1 + (math.e ** math.pi - 1))
                        / (2 * math.sqrt(math.e ** math.pi - 1))) / (2 * math.pi)
    assert rho0 == pytest.approx(expected, abs=1e-12)
    assert rho0 == pytest.approx(0.14319756994797223, abs=1e-12)


def test_crossing_reflection_symmetry():
    frame = FRAME
    aa = OuterAA(z0_hat=0.62, w0=1.234)
    out1 = crossing_map(aa, frame)
    out2 = crossing_map(OuterAA(z0_hat=0.62, w0=(1.234 + math.pi) % (2 * math.pi)),
                        frame)
    assert out1.rho0_hat == pytest.approx(out2.rho0_hat, rel=1e-12)
    assert out1.phi0 == pytest.approx(out2.phi0, rel=1e-12)
    assert out1.eta == -out2.eta


def test_rho0_closed_forms_agree():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        z0 = rng.uniform(0.05, 3.0)
        lam = rng.uniform(0.05, math.pi - 0.05)
        if rng.uniform() < 0.5:
            lam += math.pi
        _, r1, _ = connection_data(z0, lam)
        worst = max(worst, abs(r1 - rho0_closed_form(z0, lam)))
    assert worst < 1e-12


def test_rho0_reflection_in_lambda():
    for z0 in (0.3, 1.1):
        a = rho0_closed_form(z0, 1.0)
        b = rho0_closed_form(z0, math.pi - 1.0)
        assert a == pytest.approx(b, rel=1e-14)


def test_averaged_maps_freeze_actions(consts):
    frame = FRAME
    aa = OuterAA(z0_hat=0.9, w0=0.3)
    out = outer_map(aa, frame, consts)
    assert out.z0_hat == aa.z0_hat
    ia = InnerAA(rho0_hat=0.4, phi0=0.1, eta=1)
    out2 = inner_map(ia, frame, consts)
    assert out2.rho0_hat == ia.rho0_hat and out2.eta == ia.eta


def test_averaged_map_shifts(consts):
    frame = FRAME
    d, us, eps = frame.delta, frame.u_star_hat, frame.eps
    # zero action: only the action-independent phase shift remains
    w_shift = (outer_map(OuterAA(0.0, 0.0), frame, consts).w0) % (2 * math.pi)
    expect = (-consts.e3 / eps + (2 / 3) * d ** -1.5 * us ** 1.5) % (2 * math.pi)
    assert w_shift == pytest.approx(expect, abs=1e-6)
    p_shift = inner_map(InnerAA(0.0, 0.0, 1), frame, consts).phi0
    expect_i = (-math.sqrt(2) * consts.e1 / eps
                + (2 * math.sqrt(2) / 3) * d ** -1.5 * us ** 1.5) % (2 * math.pi)
    assert p_shift == pytest.approx(expect_i, abs=1e-6)


def test_constants_against_oracles(consts):
    assert consts.e1 == pytest.approx(E1, abs=1e-9)
    assert consts.e3 == pytest.approx(E1, abs=1e-9)          # toy symmetry
    # closed-form regularized kernels: C2 = ln(2)/2, C4 = ln 2
    assert consts.e2 == pytest.approx(2.0 ** 1.5, rel=1e-7)
    assert consts.e4_raw == pytest.approx(2.0, rel=1e-7)
    assert consts.e4 == pytest.approx(2.0 ** 1.5, rel=1e-7)
    assert consts.provenance["C2"] == pytest.approx(math.log(2) / 2, abs=1e-7)


def test_constants_export(tmp_path, consts):
    p = tmp_path / "c.json"
    consts.to_json(p)
    import json
    data = json.loads(p.read_text())
    assert data["e1"] == pytest.approx(consts.e1)
    assert "extrapolation_u_star" in data["provenance"]


def test_delta_schedule():
    assert delta_schedule(1e-6) == pytest.approx(1e-6 ** 0.15, rel=1e-14)
    # validity power stays positive for the default exponent
    eps = 1e-6
    d = delta_schedule(eps)
    assert eps ** (2 / 3) * d ** -3.5 < 1.0
    assert delta_schedule(1e-3) < delta_schedule(1e-2)
    with pytest.warns(UserWarning):
        delta_schedule(1e-6, a=0.3)
