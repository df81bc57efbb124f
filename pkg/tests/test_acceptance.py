"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  The slower experiments
also deposit their CSV products under out/acceptance/ so the figure
renderers (Python and the frontend package) can be pointed at real data.
The extended eps = 0.02 census runs only with SFORBITS_EXTENDED=1.
"""

import csv
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from sforbits.asymptotic import compute_constants
from sforbits.integrator import IntegratorConfig, flow_to_section, monodromy
from sforbits.model import ExtendedState, eval_hamiltonian, toy_model
from sforbits.orbits import continue_seeds, scan_census, section_u0

MODEL = toy_model()
CFG = IntegratorConfig()
OUT = Path(__file__).resolve().parent.parent / "out" / "acceptance"
OUT.mkdir(parents=True, exist_ok=True)

_census_cache = {}


def _report(name, ok, detail):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _write_csv(name, header, rows):
    with open(OUT / name, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


@pytest.fixture(scope="module")
def consts():
    return compute_constants(MODEL)


def _census(eps):
    if eps not in _census_cache:
        t0 = time.time()
        row, p1, p2 = scan_census(eps, (0.000125, 0.5), MODEL, CFG)
        _census_cache[eps] = (row, p1, p2, time.time() - t0)
    return _census_cache[eps]


def _dump_census_products():
    rows = []
    orbit_rows = []
    for eps in sorted(_census_cache):
        row, p1, p2, _ = _census_cache[eps]
        rows.append((eps, row.pos_count, row.spos_count, row.spos_small_count,
                     row.upos_small_count, row.marginal_count, len(p2)))
        for r in p1 + p2:
            orbit_rows.append((r.eps, r.x0, r.period_mult, r.residual, r.trace,
                               r.stability, r.symmetry,
                               r.max_singular_distance))
    _write_csv("census.csv",
               ["eps", "pos", "spos", "spos_small", "upos_small", "marginal",
                "n_period2"], rows)
    _write_csv("orbits.csv",
               ["eps", "x0", "period_mult", "residual", "trace", "stability",
                "symmetry", "max_singular_distance"], orbit_rows)


def test_census_table_eps008():
    row, p1, p2, wall = _census(0.08)
    ok = (abs(row.pos_count - 33) <= 2 and abs(row.spos_count - 0) <= 2
          and abs(row.upos_small_count - 33) <= 2 and wall < 600)
    _report("table-1 eps=0.08",
            ok, f"POS={row.pos_count} (33+-2), SPOS={row.spos_count} (0), "
                f"UPOS_small={row.upos_small_count} (33+-2), wall={wall:.0f}s")


def test_census_table_eps004():
    row, p1, p2, wall = _census(0.04)
    ok = (abs(row.pos_count - 69) <= 3 and abs(row.spos_count - 2) <= 1
          and abs(row.spos_small_count - 1) <= 1
          and abs(row.upos_small_count - 46) <= 3)
    _report("table-1 eps=0.04",
            ok, f"POS={row.pos_count} (69+-3), SPOS={row.spos_count} (2+-1), "
                f"SPOS_small={row.spos_small_count} (1+-1), "
                f"UPOS_small={row.upos_small_count} (46+-3), wall={wall:.0f}s")


@pytest.mark.skipif(not os.environ.get("SFORBITS_EXTENDED"),
                    reason="extended eps=0.02 run (set SFORBITS_EXTENDED=1)")
def test_census_table_eps002_extended():
    row, p1, p2, wall = _census(0.02)
    ok = (abs(row.pos_count - 154) <= 5 and abs(row.upos_small_count - 64) <= 3)
    _report("table-1 eps=0.02 (extended)",
            ok, f"POS={row.pos_count} (154+-5), "
                f"UPOS_small={row.upos_small_count} (64+-3), wall={wall:.0f}s")


def test_log_square_fit_quality():
    from sforbits.predictor import fit_log_square

    for eps in (0.08, 0.04):
        _census(eps)
    _dump_census_products()
    eps_list = sorted(_census_cache)
    upos = [_census_cache[e][0].upos_small_count for e in eps_list]
    # the two mandatory rows pin the fit exactly; the extended run adds a
    # genuine residual; the published six-row column is the reference check
    a, b, rel = fit_log_square(eps_list, upos)
    ok = float(np.max(rel)) <= 0.12
    ref_a, ref_b, ref_rel = fit_log_square(
        [0.08, 0.04, 0.02, 0.01, 0.005, 0.0025], [33, 46, 64, 72, 84, 108])
    ok = ok and abs(ref_a - 2.39) < 0.02 and float(np.max(ref_rel)) <= 0.11
    _report("table-2 fit",
            ok, f"computed rows a={a:.2f} b={b:.1f} max rel "
                f"{float(np.max(rel)):.1%}; reference column a={ref_a:.2f} "
                f"b={ref_b:.1f} max rel {float(np.max(ref_rel)):.1%}")


def test_stable_census_sweep(consts):
    from sforbits.predictor import stable_census_sweep

    t0 = time.time()
    samples, counts, hist = stable_census_sweep(consts, n_values=1000, seed=0)
    wall = time.time() - t0
    frac0 = float(np.mean(counts == 0))
    frac1 = 1.0 - frac0
    _write_csv("sweep.csv", ["sample", "log_inv_eps", "n_stable"],
               [(i, s, c) for i, (s, c) in enumerate(zip(samples, counts))])
    _write_csv("sweep_histogram.csv", ["n_stable", "count"],
               sorted(hist.items()))
    ok = abs(frac0 - 0.368) <= 0.05 and abs(frac1 - 0.632) <= 0.05 and wall < 300
    _report("stable sweep",
            ok, f"no-stable {frac0:.3f} (0.368+-0.05), some-stable "
                f"{frac1:.3f} (0.632+-0.05), max count {counts.max()}, "
                f"wall={wall:.0f}s")


def test_painleve_connection_order():
    from sforbits.painleve import jacobian_growth_check, verify_connection

    t0 = time.time()
    deltas = [0.1, 0.05, 0.02, 0.01]
    exps, slope = verify_connection(0.5, 0.0, deltas, pin_lambda=2.0)
    jac = jacobian_growth_check(0.5, 0.0, deltas, pin_lambda=2.0)
    wall = time.time() - t0
    ratios = [j["jac_ratio"] for j in jac]
    tail_ok = all(b <= a * 1.05 for a, b in zip(ratios[1:], ratios[2:]))
    rows = [(e.delta, e.action_error, e.phase_error, e.phase_incr_error,
             e.branch_ok, j["jac_norm"], j["jac_ratio"], j["det"],
             j["interior_norm"], j["interior_allow"])
            for e, j in zip(exps, jac)]
    _write_csv("painleve.csv",
               ["delta", "action_error", "phase_error", "phase_incr_error",
                "branch_ok", "jac_norm", "jac_ratio", "jac_det",
                "interior_norm", "interior_allow"], rows)
    with open(OUT / "painleve.meta.json", "w") as fh:
        json.dump({"extras": {"action_error_slope": slope}}, fh)
    ok = (slope >= 0.6 and tail_ok and all(e.branch_ok for e in exps)
          and wall < 600)
    _report("painleve crossing",
            ok, f"action slope {slope:.2f} (>=0.6, theory 0.75), jac ratios "
                f"{[round(r, 3) for r in ratios]}, wall={wall:.0f}s")


def test_trivial_orbit_multipliers():
    logs = {}
    for eps in (0.08, 0.04):
        W = monodromy(ExtendedState(0, 0, section_u0(MODEL), 0), MODEL, eps,
                      2 * math.pi / eps, CFG)
        logs[eps] = math.log(max(abs(np.linalg.eigvals(W))))
    ratio = logs[0.04] / logs[0.08]
    ok = abs(ratio - 2.0) <= 0.4
    _report("trivial-orbit multipliers",
            ok, f"ln(mult): {logs[0.08]:.2f} -> {logs[0.04]:.2f}, "
                f"ratio {ratio:.2f} (2+-0.4)")


def test_property_suite(consts):
    from sforbits.asymptotic import connection_data, rho0_closed_form
    from sforbits.predictor import _abcd, two_a_plus_d1
    from sforbits.specfun import log_abs_gamma_imag

    details = []
    ok = True

    # GL2 order-4 self convergence
    st = ExtendedState(0.3, 0.0, section_u0(MODEL), 0.0)
    hs = [0.02, 0.01, 0.005]
    ends = [flow_to_section(st, MODEL, 0.08, st.u + 1.0, IntegratorConfig(h=h))
            for h in hs]
    ref = flow_to_section(st, MODEL, 0.08, st.u + 1.0,
                          IntegratorConfig(h=0.00125))
    errs = [math.hypot(e.x - ref.x, e.y - ref.y) for e in ends]
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    ok &= abs(slope - 4.0) <= 0.2
    details.append(f"GL2 slope {slope:.2f}")

    # energy drift over a slow period
    end = flow_to_section(st, MODEL, 0.08, st.u + 2 * math.pi, CFG)
    drift = abs(eval_hamiltonian(end, MODEL) - eval_hamiltonian(st, MODEL))
    ok &= drift < 1e-8
    details.append(f"dH {drift:.1e}")

    # monodromy determinant
    W = monodromy(ExtendedState(0.35, 0, section_u0(MODEL), 0), MODEL, 0.08,
                  2 * math.pi / 0.08, CFG)
    ok &= abs(np.linalg.det(W) - 1) < 1e-6
    details.append(f"det-1 {abs(np.linalg.det(W)-1):.1e}")

    # reflection/time-reversal equivariance of the flow
    fwd = flow_to_section(ExtendedState(0.3, 0.1, 0.4, 0.0), MODEL, 0.08,
                          0.4 + 2 * math.pi, CFG)
    back = flow_to_section(ExtendedState(fwd.x, -fwd.y, MODEL.tau - fwd.u, 0),
                           MODEL, 0.08, MODEL.tau - fwd.u + 2 * math.pi, CFG)
    sym_err = math.hypot(back.x - 0.3, back.y + 0.1)
    refl = flow_to_section(ExtendedState(-0.3, -0.1, 0.4, 0.0), MODEL, 0.08,
                           0.4 + 2 * math.pi, CFG)
    refl_err = math.hypot(refl.x + fwd.x, refl.y + fwd.y)
    ok &= sym_err < 1e-8 and refl_err < 1e-8
    details.append(f"T/R equivariance {max(sym_err, refl_err):.1e}")

    # the two closed forms of the inner action
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        z0 = rng.uniform(0.05, 3.0)
        lam = rng.uniform(0.05, math.pi - 0.05) + (math.pi if rng.uniform() < 0.5 else 0.0)
        _, r1, _ = connection_data(z0, lam)
        worst = max(worst, abs(r1 - rho0_closed_form(z0, lam)))
    ok &= worst < 1e-12
    details.append(f"rho0 forms {worst:.1e}")

    # closed form of 2A + D1
    grid = np.linspace(0.2, 3.0, 101)
    worst_ad = max(abs(2 * _abcd(float(z), math.pi / 2)[0]
                       + _abcd(float(z), math.pi / 2)[3]
                       - float(two_a_plus_d1(float(z)))) for z in grid)
    ok &= worst_ad < 1e-10
    details.append(f"2A+D1 {worst_ad:.1e}")

    # reflection identity for |Gamma(iy)|
    worst_g = max(abs(math.exp(2 * float(log_abs_gamma_imag(y)))
                      - math.pi / (y * math.sinh(math.pi * y)))
                  for y in (0.3, 1.0, 2.0, 5.0))
    ok &= worst_g < 1e-12
    details.append(f"reflection {worst_g:.1e}")

    _report("property suite", ok, "; ".join(details))


def test_prediction_continuation(consts):
    from sforbits.predictor import (Exclusions, make_scales,
                                    seed_to_initial_condition,
                                    solve_fixed_points)

    eps = 0.04
    scales = make_scales(consts, eps=eps)
    seeds = [s for s in solve_fixed_points("i", scales, (0.3, 2.0), consts,
                                           Exclusions())
             if abs(1.0 / math.tan(s.lambda_l)) >= 0.3]
    rng = np.random.default_rng(1)
    if len(seeds) > 20:
        take = sorted(rng.choice(len(seeds), size=20, replace=False))
        seeds = [seeds[i] for i in take]
    n_total = len(seeds)
    n_ok = 0
    rows = []
    for pm in (1, 2):
        group = [s for s in seeds if s.period_mult == pm]
        if not group:
            continue
        pts = np.array([seed_to_initial_condition(s, eps, MODEL)
                        for s in group])
        res = continue_seeds(pts, pm, MODEL, eps, CFG, max_iter=20)
        for s, r in zip(group, res):
            good = r["converged"] and r["stability"] == "unstable"
            n_ok += good
            rows.append((s.z0_hat, s.w0, pm, r["x"], r["y"], r["residual"],
                         r["converged"], r["iterations"], r["trace"]))
    _write_csv("continue.csv",
               ["z0_hat", "w0", "period_mult", "x", "y", "residual",
                "converged", "iterations", "trace"], rows)
    frac = n_ok / max(n_total, 1)
    ok = n_total >= 20 and frac >= 0.5
    _report("seed continuation",
            ok, f"{n_ok}/{n_total} seeds converged to unstable orbits "
                f"({frac:.0%}, need >=50% of 20)")


def test_stable_count_changes_across_eps(consts):
    from sforbits.predictor import interval_cover_analysis

    rep = interval_cover_analysis(consts, 0.02, "part3", c1=5.0, n_eps=41)
    counts = [r["n_stable"] for r in rep["rows"]]
    changes = rep["count_changes"]
    _write_csv("part3.csv", ["eps", "n_stable"],
               [(r["eps"], r["n_stable"]) for r in rep["rows"]])
    ok = changes >= 1
    _report("part-3 mechanism",
            ok, f"stable-count changes {changes} times over "
                f"[{rep['rows'][0]['eps']:.4f}, {rep['rows'][-1]['eps']:.4f}]"
                f", counts {sorted(set(counts))}")


def test_export_figure_inputs(consts):
    """Produce the remaining sample CSVs the figure renderers consume."""
    from sforbits.integrator import integrate_trajectory
    from sforbits.model import singular_orbit_x
    from sforbits.predictor import interval_cover_analysis

    traj = integrate_trajectory(ExtendedState(0.25, 0.0, section_u0(MODEL), 0),
                                MODEL, 0.08, 2 * math.pi / 0.08, CFG, stride=40)
    _write_csv("trajectory.csv", ["t", "x", "y", "u", "v", "H"],
               zip(traj.t, traj.x, traj.y, traj.u, traj.v, traj.H))
    us = np.linspace(0, 2 * math.pi, 360, endpoint=False)
    _write_csv("slowmanifold.csv", ["u", "x_branch"],
               zip(us, singular_orbit_x(us, MODEL)))
    rep = interval_cover_analysis(consts, 1e-8, "part4", n_steps=10,
                                  big_z0_scale=0.05)
    cols = ["n", "z0", "f_n", "sep_predicted", "gap", "dz0", "image_len",
            "overlap"]
    _write_csv("cover.csv", cols,
               [[r.get(c, "") for c in cols] for r in rep["rows"]])
    _report("figure inputs exported", True, f"{OUT}")
