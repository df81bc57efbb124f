"""Command-line front end: reproducible experiment runner.

Every subcommand writes CSV products plus a JSON metadata sidecar
(<name>.meta.json) echoing the full configuration, package version and
runtime.  CSV bodies are deterministic for a fixed configuration and seed;
timestamps live only in the sidecars.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import ModelConstants, compute_constants, delta_schedule
from .integrator import IntegratorConfig
from .model import ExtendedState, ModelSpec, from_config, toy_model, validate_assumptions

TWO_PI = 2.0 * math.pi


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_sidecar(path, command, config, columns, t0, extras=None):
    meta = {
        "command": command,
        "config": config,
        "version": __version__,
        # every quantity is in model units: time t with dx^dy + du^dv/eps
        # normalized as in the Hamiltonian, angles in radians
        "schema": {"columns": columns, "units": "model units / radians"},
        "runtime_seconds": time.time() - t0,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extras:
        meta["extras"] = extras
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, default=str)


def load_model(args) -> ModelSpec:
    if getattr(args, "config", None):
        return from_config(args.config)
    name = getattr(args, "model", "toy")
    if name == "toy":
        return toy_model()
    raise ValueError(f"unknown model {name!r}; use --config for tabulated models")


def integrator_config(args) -> IntegratorConfig:
    return IntegratorConfig(h=args.h, newton_tol=args.newton_tol)


def _out(args, name):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args):
    t0 = time.time()
    model = load_model(args)
    rep = validate_assumptions(model, grid_size=args.grid_size)
    rows = [(k, rep.passed[k], rep.worst[k]) for k in sorted(rep.passed)]
    path = _out(args, "validate.csv")
    write_csv(path, ["assumption", "passed", "worst_value"], rows)
    write_sidecar(path.with_suffix(".meta.json"), "validate", vars(args),
                  ["assumption", "passed", "worst_value"], t0,
                  extras={"all_passed": rep.all_passed})
    print(f"assumptions: {'all pass' if rep.all_passed else 'FAILURES'} -> {path}")
    return 0 if rep.all_passed else 2


def cmd_integrate(args):
    from .integrator import integrate_trajectory
    from .model import singular_orbit_x

    t0 = time.time()
    model = load_model(args)
    cfg = integrator_config(args)
    u0 = -math.pi + model.tau / 2.0 if args.u0 is None else args.u0
    state = ExtendedState(args.x0, args.y0, u0, 0.0)
    T = args.periods * TWO_PI / args.eps
    traj = integrate_trajectory(state, model, args.eps, T, cfg, stride=args.stride)
    path = _out(args, "trajectory.csv")
    traj.to_csv(path)
    us = np.linspace(0.0, TWO_PI, 720, endpoint=False)
    write_csv(_out(args, "slowmanifold.csv"), ["u", "x_branch"],
              zip(us, singular_orbit_x(us, model)))
    write_sidecar(path.with_suffix(".meta.json"), "integrate", vars(args),
                  ["t", "x", "y", "u", "v", "H"], t0,
                  extras={"dH": float(np.max(np.abs(traj.H - traj.H[0])))})
    print(f"trajectory with {traj.t.size} samples -> {path}")
    return 0


CENSUS_COLUMNS = ["eps", "pos", "spos", "spos_small", "upos_small", "marginal",
                  "n_period2"]
ORBIT_COLUMNS = ["eps", "x0", "period_mult", "residual", "trace", "stability",
                 "symmetry", "max_singular_distance"]


def cmd_census(args):
    from .orbits import scan_census

    t0 = time.time()
    model = load_model(args)
    cfg = integrator_config(args)
    rows, orbit_rows, meta = [], [], {}
    for eps in args.eps:
        row, p1, p2 = scan_census(eps, tuple(args.window), model, cfg,
                                  n0=args.n0, workers=args.workers)
        rows.append((eps, row.pos_count, row.spos_count, row.spos_small_count,
                     row.upos_small_count, row.marginal_count, len(p2)))
        for r in p1 + p2:
            orbit_rows.append((r.eps, r.x0, r.period_mult, r.residual, r.trace,
                               r.stability, r.symmetry, r.max_singular_distance))
        meta[str(eps)] = row.metadata
    path = _out(args, "census.csv")
    write_csv(path, CENSUS_COLUMNS, rows)
    write_csv(_out(args, "orbits.csv"), ORBIT_COLUMNS, orbit_rows)
    write_sidecar(path.with_suffix(".meta.json"), "census", vars(args),
                  CENSUS_COLUMNS, t0, extras=meta)
    for r in rows:
        print(f"eps={r[0]}: POS={r[1]} SPOS={r[2]} SPOS_small={r[3]} "
              f"UPOS_small={r[4]}")
    return 0


def cmd_fit(args):
    from .predictor import fit_log_square

    t0 = time.time()
    eps, upos = [], []
    with open(args.census) as fh:
        header = fh.readline().strip().split(",")
        ie, iu = header.index("eps"), header.index("upos_small")
        for line in fh:
            parts = line.strip().split(",")
            eps.append(float(parts[ie]))
            upos.append(float(parts[iu]))
    a, b, rel = fit_log_square(eps, upos)
    path = _out(args, "fit.csv")
    write_csv(path, ["eps", "upos_small", "fitted", "rel_error"],
              [(e, u, a * math.log(1 / e) ** 2 + b, r)
               for e, u, r in zip(eps, upos, rel)])
    write_sidecar(path.with_suffix(".meta.json"), "fit", vars(args),
                  ["eps", "upos_small", "fitted", "rel_error"], t0,
                  extras={"a": a, "b": b})
    print(f"fit: counts ~ {a:.3f} ln^2(1/eps) + {b:.2f}; "
          f"max rel error {float(np.max(rel)):.1%}")
    return 0


SEED_COLUMNS = ["case", "z0_hat", "w0", "lambda_l", "rho0_hat", "trace",
                "stability", "period_mult", "symmetry", "residual"]


def _seed_rows(seeds):
    return [(s.case, s.z0_hat, s.w0, s.lambda_l, s.rho0_hat, s.predicted_trace,
             s.predicted_stability, s.period_mult, s.symmetry, s.residual)
            for s in seeds]


def cmd_predict(args):
    from .predictor import Exclusions, make_scales, solve_fixed_points

    t0 = time.time()
    model = load_model(args)
    consts = compute_constants(model)
    scales = make_scales(consts, eps=args.eps)
    excl = Exclusions(v_margin=args.v_margin, pole_margin=args.pole_margin,
                      cot_margin=args.cot_margin)
    seeds = []
    for case in args.cases:
        seeds.extend(solve_fixed_points(case, scales, tuple(args.z0_window),
                                        consts, excl))
    path = _out(args, "seeds.csv")
    write_csv(path, SEED_COLUMNS, _seed_rows(seeds))
    write_sidecar(path.with_suffix(".meta.json"), "predict", vars(args),
                  SEED_COLUMNS, t0,
                  extras={"n_seeds": len(seeds),
                          "n_unstable": sum(1 for s in seeds
                                            if s.predicted_stability == "unstable")})
    print(f"{len(seeds)} seeds -> {path}")
    return 0


def cmd_continue(args):
    from .orbits import continue_seeds
    from .predictor import Exclusions, make_scales, seed_to_initial_condition, \
        solve_fixed_points

    t0 = time.time()
    model = load_model(args)
    cfg = integrator_config(args)
    consts = compute_constants(model)
    scales = make_scales(consts, eps=args.eps)
    excl = Exclusions(cot_margin=args.cot_margin)
    seeds = [s for s in solve_fixed_points("i", scales, tuple(args.z0_window),
                                           consts, excl)
             if abs(1.0 / math.tan(s.lambda_l)) >= args.min_cot]
    rng = np.random.default_rng(args.seed)
    if len(seeds) > args.n_seeds:
        take = rng.choice(len(seeds), size=args.n_seeds, replace=False)
        seeds = [seeds[i] for i in sorted(take)]
    rows = []
    for pm in (1, 2):
        group = [s for s in seeds if s.period_mult == pm]
        if not group:
            continue
        pts = [seed_to_initial_condition(s, args.eps, model) for s in group]
        res = continue_seeds(np.array(pts), pm, model, args.eps, cfg,
                             max_iter=args.max_iter)
        for s, r in zip(group, res):
            rows.append((s.case, s.z0_hat, s.w0, s.lambda_l, pm, r["x"], r["y"],
                         r["residual"], r["converged"], r["iterations"],
                         r["trace"], r["stability"]))
    cols = ["case", "z0_hat", "w0", "lambda_l", "period_mult", "x", "y",
            "residual", "converged", "iterations", "trace", "stability"]
    path = _out(args, "continue.csv")
    write_csv(path, cols, rows)
    n_conv = sum(1 for r in rows if r[8])
    n_unst = sum(1 for r in rows if r[8] and r[11] == "unstable")
    write_sidecar(path.with_suffix(".meta.json"), "continue", vars(args), cols,
                  t0, extras={"n_seeds": len(rows), "n_converged": n_conv,
                              "n_converged_unstable": n_unst})
    print(f"{n_conv}/{len(rows)} seeds converged ({n_unst} unstable) -> {path}")
    return 0


def cmd_sweep(args):
    from .predictor import stable_census_sweep

    t0 = time.time()
    model = load_model(args)
    consts = compute_constants(model)
    samples, counts, hist = stable_census_sweep(
        consts, n_values=args.n, z0_window=tuple(args.z0_window),
        log_inv_eps_range=tuple(args.lrange), seed=args.seed)
    path = _out(args, "sweep.csv")
    write_csv(path, ["sample", "log_inv_eps", "n_stable"],
              [(i, s, c) for i, (s, c) in enumerate(zip(samples, counts))])
    write_csv(_out(args, "sweep_histogram.csv"), ["n_stable", "count"],
              sorted(hist.items()))
    frac0 = float(np.mean(counts == 0))
    write_sidecar(path.with_suffix(".meta.json"), "sweep", vars(args),
                  ["sample", "log_inv_eps", "n_stable"], t0,
                  extras={"no_stable_fraction": frac0,
                          "some_stable_fraction": 1.0 - frac0,
                          "histogram": {str(k): v for k, v in sorted(hist.items())}})
    print(f"no-stable fraction {frac0:.3f}, some-stable {1 - frac0:.3f} -> {path}")
    return 0


PAINLEVE_COLUMNS = ["delta", "action_error", "phase_error",
                    "phase_incr_error", "branch_ok", "jac_norm", "jac_ratio",
                    "jac_det", "interior_norm", "interior_allow"]


def cmd_verify_painleve(args):
    from .painleve import jacobian_growth_check, verify_connection

    t0 = time.time()
    exps, slope = verify_connection(args.z0, args.w0, args.deltas,
                                    u_star_hat=args.u_star,
                                    pin_lambda=args.pin_lambda)
    jac = jacobian_growth_check(args.z0, args.w0, args.deltas,
                                u_star_hat=args.u_star,
                                pin_lambda=args.pin_lambda)
    rows = [(e.delta, e.action_error, e.phase_error, e.phase_incr_error,
             e.branch_ok, j["jac_norm"], j["jac_ratio"], j["det"],
             j["interior_norm"], j["interior_allow"])
            for e, j in zip(exps, jac)]
    path = _out(args, "painleve.csv")
    write_csv(path, PAINLEVE_COLUMNS, rows)
    ratios = [j["jac_ratio"] for j in jac]
    write_sidecar(path.with_suffix(".meta.json"), "verify-painleve", vars(args),
                  PAINLEVE_COLUMNS, t0,
                  extras={"action_error_slope": slope,
                          "jac_ratio_tail_nonincreasing":
                              all(b <= a * 1.05 for a, b in zip(ratios, ratios[1:]))})
    print(f"action-error slope {slope:.3f} over deltas {args.deltas} -> {path}")
    return 0


def cmd_cover(args):
    from .predictor import interval_cover_analysis

    t0 = time.time()
    model = load_model(args)
    consts = compute_constants(model)
    rep = interval_cover_analysis(consts, args.eps, args.mode,
                                  z0_start=args.z0_start, n_steps=args.n_steps,
                                  c1=args.c1, n_eps=args.n_eps,
                                  big_z0_scale=args.big_z0_scale)
    rows = rep["rows"]
    cols = sorted({k for r in rows for k in r})
    path = _out(args, "cover.csv")
    write_csv(path, cols, [[r.get(c, "") for c in cols] for r in rows])
    extras = {k: v for k, v in rep.items() if k != "rows"}
    write_sidecar(path.with_suffix(".meta.json"), "cover", vars(args), cols,
                  t0, extras=extras)
    print(f"cover mode {args.mode}: {len(rows)} rows -> {path}")
    return 0


def cmd_constants(args):
    t0 = time.time()
    model = load_model(args)
    c = compute_constants(model)
    path = _out(args, "constants.csv")
    write_csv(path, ["name", "value"],
              [("e1", c.e1), ("e2", c.e2), ("e3", c.e3), ("e4", c.e4),
               ("e4_raw", c.e4_raw)])
    c.to_json(_out(args, "constants.json"))
    write_sidecar(path.with_suffix(".meta.json"), "constants", vars(args),
                  ["name", "value"], t0, extras=c.provenance)
    print(f"e1={c.e1:.6f} e2={c.e2:.6f} e3={c.e3:.6f} "
          f"e4={c.e4:.6f} (raw {c.e4_raw:.6f}) -> {path}")
    return 0


def cmd_figures(args):
    from .figures import FigureJob, render

    t0 = time.time()
    job = FigureJob(kind=args.kind, inputs=list(args.inputs), output=args.output)
    render(job)
    print(f"{args.kind} -> {args.output}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p, eps=False):
    p.add_argument("--model", default="toy", help="builtin model name")
    p.add_argument("--config", default=None, help="TOML model/run config")
    p.add_argument("--out", default="out", help="output directory")
    if eps:
        p.add_argument("--eps", type=float, required=True)


def _add_integrator(p):
    p.add_argument("--h", type=float, default=0.005, help="GL2 step size")
    p.add_argument("--newton-tol", type=float, default=1e-12, dest="newton_tol")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="sforbits",
        description="Periodic orbits near a bifurcating slow manifold: "
                    "census, asymptotic predictions, crossing verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model assumptions")
    _add_common(p)
    p.add_argument("--grid-size", type=int, default=64, dest="grid_size")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("integrate", help="export a trajectory as CSV")
    _add_common(p, eps=True)
    _add_integrator(p)
    p.add_argument("--x0", type=float, default=0.2)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--u0", type=float, default=None)
    p.add_argument("--periods", type=float, default=1.0)
    p.add_argument("--stride", type=int, default=20)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("census", help="scan for symmetric periodic orbits")
    _add_common(p)
    _add_integrator(p)
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--window", type=float, nargs=2, default=[0.000125, 0.5])
    p.add_argument("--n0", type=int, default=None, help="base grid size")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("fit", help="fit a ln^2(1/eps) law to census counts")
    p.add_argument("--census", required=True, help="census.csv path")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="solve the reduced fixed-point equations")
    _add_common(p, eps=True)
    p.add_argument("--cases", nargs="+", default=["i", "ii"], choices=["i", "ii"])
    p.add_argument("--z0-window", type=float, nargs=2, default=[0.12, 2.0],
                   dest="z0_window")
    p.add_argument("--v-margin", type=float, default=0.05, dest="v_margin")
    p.add_argument("--pole-margin", type=float, default=0.05, dest="pole_margin")
    p.add_argument("--cot-margin", type=float, default=0.0, dest="cot_margin")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("continue", help="Newton-refine analytic seeds into orbits")
    _add_common(p, eps=True)
    _add_integrator(p)
    p.add_argument("--z0-window", type=float, nargs=2, default=[0.3, 2.0],
                   dest="z0_window")
    p.add_argument("--n-seeds", type=int, default=20, dest="n_seeds")
    p.add_argument("--min-cot", type=float, default=0.3, dest="min_cot")
    p.add_argument("--cot-margin", type=float, default=0.0, dest="cot_margin")
    p.add_argument("--max-iter", type=int, default=20, dest="max_iter")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("sweep", help="stable-solution census over ln(1/eps)")
    _add_common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--z0-window", type=float, nargs=2, default=[0.12, 2.0],
                   dest="z0_window")
    p.add_argument("--lrange", type=float, nargs=2, default=[40.0, 400.0])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-painleve", help="empirical crossing asymptotics")
    p.add_argument("--out", default="out")
    p.add_argument("--z0", type=float, default=0.5)
    p.add_argument("--w0", type=float, default=0.0)
    p.add_argument("--pin-lambda", type=float, default=2.0, dest="pin_lambda")
    p.add_argument("--u-star", type=float, default=1.0, dest="u_star")
    p.add_argument("--deltas", type=float, nargs="+",
                   default=[0.1, 0.05, 0.02, 0.01])
    p.set_defaults(func=cmd_verify_painleve)

    p = sub.add_parser("cover", help="interval-cover analyses")
    _add_common(p, eps=True)
    p.add_argument("--mode", choices=["part2", "part3", "part4"], required=True)
    p.add_argument("--z0-start", type=float, default=0.3, dest="z0_start")
    p.add_argument("--n-steps", type=int, default=20, dest="n_steps")
    p.add_argument("--c1", type=float, default=5.0)
    p.add_argument("--n-eps", type=int, default=41, dest="n_eps")
    p.add_argument("--big-z0-scale", type=float, default=0.1,
                   dest="big_z0_scale")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("constants", help="report the model phase constants")
    _add_common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("figures", help="render a figure from CSV products")
    p.add_argument("--kind", required=True,
                   choices=["slow-manifold", "census-bars", "stable-histogram",
                            "interval-cover", "painleve-error"])
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_figures)

    return ap


_RUN_KEYS = {"eps", "out", "h", "newton_tol", "window", "z0_window",
             "u_star_hat", "v_margin", "pole_margin", "seed", "n0",
             "workers", "n", "lrange"}


def _run_defaults_from_config(argv):
    """The [run] table of a --config file fills parser defaults; flags that
    are given explicitly still win."""
    if argv is None:
        argv = sys.argv[1:]
    if "--config" not in argv:
        return {}
    path = argv[argv.index("--config") + 1]
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    run = data.get("run", {})
    return {k: v for k, v in run.items() if k in _RUN_KEYS}


def main(argv=None):
    parser = build_parser()
    try:
        defaults = _run_defaults_from_config(argv)
        if defaults:
            for action in parser._actions:
                if isinstance(action, argparse._SubParsersAction):
                    for sp in action.choices.values():
                        dests = {a.dest for a in sp._actions}
                        sp.set_defaults(**{k: v for k, v in defaults.items()
                                           if k in dests})
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # machine-readable failure
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, indent=None)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
