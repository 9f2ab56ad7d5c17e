"""Command-line entry point: `hjlab <subcommand> [--config path] [overrides]`.

Exit codes: 0 = all checks in the run passed, 1 = a check failed,
2 = configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import constructions, effective, harness, pde
from .burago import burago_nd, verify_decomposition
from .curves import Curve
from .errors import ConfigurationError, HJLabError
from .metric import MetricQuery, compute_metric
from .models import LagrangianModel, legendre_transform

def _model_flags(parser):
    parser.add_argument("--config", help="JSON run-config file")
    parser.add_argument("--family", help="model family override")
    parser.add_argument("--amplitude", type=float, help="potential amplitude")
    parser.add_argument("--potential", help="separable-quadratic potential shape")
    parser.add_argument("--m0", type=float, help="power-coercive exponent")
    parser.add_argument("--offset", type=float, help="power-coercive offset")
    parser.add_argument("--dimension", type=int, help="spatial dimension")
    parser.add_argument("--seed", type=int, help="seed for randomized multistarts")
    parser.add_argument("--output", help="report output path")


def _config_from(args, experiment=None) -> harness.RunConfig:
    if args.config:
        cfg = harness.RunConfig.from_file(args.config)
        raw = cfg.to_dict()
    else:
        raw = harness.RunConfig().to_dict()
    # flags override the config file
    params = dict(raw["model_params"])
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    if args.potential is not None:
        params["potential"] = args.potential
    if args.m0 is not None:
        params["m0"] = args.m0
    if args.offset is not None:
        params["offset"] = args.offset
    model = {
        "family": args.family or raw["model_family"],
        "params": params,
        "dimension": args.dimension or raw["dimension"],
    }
    out = {
        "model": model,
        "experiment": experiment or raw["experiment"],
        "epsilons": raw["epsilons"],
        "ts": raw["ts"],
        "ys": raw["ys"],
        "halving_ts": raw["halving_ts"],
        "burago_paths": raw["burago_paths"],
        "resolutions": raw["resolutions"],
        "seed": args.seed if args.seed is not None else raw["seed"],
        "output": args.output or raw["output"],
    }
    return harness.RunConfig.from_dict(out)


def _emit(payload, path):
    text = json.dumps(harness._jsonable(payload), sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _curve_rows(curve: Curve):
    return [[float(s)] + [float(v) for v in node]
            for s, node in zip(curve.knots, curve.nodes)]


def cmd_legendre(args) -> int:
    cfg = _config_from(args)
    lag = LagrangianModel(harness.build_model(cfg),
                          mode="numeric" if args.numeric else None)
    value = legendre_transform(lag, [args.x], args.t, [args.v])
    _emit({"x": args.x, "t": args.t, "v": args.v, "value": value}, args.output)
    return 0


def cmd_metric(args) -> int:
    cfg = _config_from(args)
    lag = harness.build_lagrangian(cfg)
    q = MetricQuery(args.t0, args.t1,
                    np.array([args.from_x]), np.array([args.to_x]),
                    segments=args.segments, multistarts=args.multistarts)
    result = compute_metric(lag, q, seed=cfg.seed)
    _emit({
        "value": result.value,
        "residual": result.first_order_residual,
        "curve": _curve_rows(result.minimizer),
    }, args.output)
    return 0


def cmd_burago(args) -> int:
    rows = []
    with open(args.path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                continue  # header line
    data = np.array(rows)
    path = Curve(data[:, 0], data[:, 1:])
    if path.dim == 1:
        from .burago import burago_1d
        dec = burago_1d(path, tol=args.tol or 1e-8)
    else:
        dec = burago_nd(path, tol=args.tol or 1e-6)
    passed, residual = verify_decomposition(path, dec, args.tol or
                                            (1e-8 if path.dim == 1 else 1e-6))
    _emit({
        "intervals": [list(iv) for iv in dec.intervals],
        "k": dec.k,
        "residual": dec.residual,
        "duration_sum": dec.duration_sum,
        "certificate": {"passed": passed, "residual": residual},
    }, args.output)
    return 0 if passed else 1


def cmd_double(args) -> int:
    cfg = _config_from(args)
    lag = harness.build_lagrangian(cfg)
    result = constructions.check_subadditivity(
        lag, args.t, np.array([args.y]), seed=cfg.seed,
        multistarts=cfg.resolutions.multistarts)
    payload = {"t": args.t, "y": args.y, "defect": result["defect"],
               "m_t": result["m_t"], "m_2t": result["m_2t"]}
    if "doubling_report" in result:
        rep = result["doubling_report"]
        mu, _ = constructions.build_doubling_path(
            lag,
            compute_metric(lag, MetricQuery(0.0, args.t, np.zeros(1),
                                            np.array([args.y]),
                                            multistarts=cfg.resolutions.multistarts),
                           seed=cfg.seed).minimizer,
            np.array([args.y]))
        payload.update({
            "segment_costs": list(rep.K),
            "constructive_defect": result["constructive_defect"],
            "curve": _curve_rows(mu),
        })
    _emit(payload, args.output)
    return 0


def cmd_halve(args) -> int:
    cfg = _config_from(args)
    lag = harness.build_lagrangian(cfg)
    result = constructions.check_superadditivity(
        lag, args.t, np.array([args.y]), seed=cfg.seed,
        multistarts=cfg.resolutions.multistarts)
    payload = {"t": args.t, "y": args.y, "defect": result["defect"],
               "m_t": result["m_t"], "m_2t": result["m_2t"]}
    if "schedules" in result:
        sched = result["schedules"][0]
        payload.update({
            "halving_bounds": list(result["halving_bounds"]),
            "constructive_defect": result["constructive_defect"],
            "schedule": {"c": list(sched.c), "d": list(sched.d),
                         "w": [list(wi) for wi in sched.w],
                         "connector_budget": sched.connector_budget,
                         "j": sched.j},
        })
    _emit(payload, args.output)
    return 0


def cmd_effective(args) -> int:
    cfg = _config_from(args)
    tab, htab = harness.run_effective_tables(cfg)
    lbar_path = args.lbar_out or "lbar.csv"
    hbar_path = args.hbar_out or "hbar.csv"
    with open(lbar_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "value", "residual"])
        for q, v, r in zip(tab.q_grid, tab.values, tab.extrapolation_residuals):
            writer.writerow([q, v, r])
    with open(hbar_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "value"])
        for p, v in zip(htab.p_grid, htab.values):
            writer.writerow([p, v])
    return 0


def load_effective_table(path) -> effective.EffectiveLagrangianTable:
    """Reload an Lbar table emitted by the `effective` subcommand."""
    qs, vs, rs = [], [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            try:
                q, v, r = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                continue
            qs.append(q), vs.append(v), rs.append(r)
    return effective.EffectiveLagrangianTable(
        q_grid=np.array(qs), values=np.array(vs), levels=0,
        extrapolation_residuals=np.array(rs))


def cmd_solve(args) -> int:
    cfg = _config_from(args)
    g = harness.default_initial_datum
    if args.route == "scheme":
        model = harness.build_model(cfg)
        sol = pde.solve_scheme(model, g, args.epsilon, args.horizon,
                               args.grid_dx)
        out = args.output or "solution.csv"
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "t", "u"])
            for step in range(sol.values.shape[0]):
                t_n = step * sol.dt
                for x, u in zip(sol.xs, sol.values[step]):
                    writer.writerow([x, t_n, u])
        return 0
    lag = harness.build_lagrangian(cfg)
    xs = np.arange(cfg.resolutions.x_points) / cfg.resolutions.x_points
    if args.lbar_table:
        tab = load_effective_table(args.lbar_table)
    else:
        tab = None
    values = []
    for x in xs:
        u = pde.solve_control(lag, g, args.epsilon, x, args.horizon,
                              seed=cfg.seed,
                              multistarts=cfg.resolutions.multistarts)
        row = {"x": float(x), "u": u}
        if tab is not None:
            row["u_effective"] = effective.hopf_lax_effective(tab, g, float(x),
                                                              args.horizon)
        values.append(row)
    _emit({"epsilon": args.epsilon, "horizon": args.horizon, "values": values},
          args.output)
    return 0


def cmd_rate(args) -> int:
    cfg = _config_from(args, experiment="rate")
    report = harness.run_rate_experiment(
        cfg, progress=lambda msg: print(msg, file=sys.stderr))
    harness.emit_report(report, args.format, args.output or "rate.json")
    ok = 0.75 <= report.exponent <= 1.25
    print(f"fitted exponent {report.exponent:.3f} "
          f"({'PASS' if ok else 'FAIL'})")
    return 0 if ok else 1


def cmd_paper_check(args) -> int:
    cfg = _config_from(args, experiment="paper-check")
    report = harness.run_paper_check(cfg)
    harness.emit_report(report, "json", args.output or "paper_check.json")
    for name, section in report["sections"].items():
        status = section.get("passed", section.get("all_passed", "n/a"))
        print(f"{name}: {'PASS' if status is True else status}")
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjlab",
        description="Numerical laboratory for periodic space-time "
                    "homogenization of convex Hamilton-Jacobi equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("legendre", help="evaluate the Lagrangian at a point")
    _model_flags(p)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--numeric", action="store_true",
                   help="force numeric conjugation")
    p.set_defaults(func=cmd_legendre)

    p = sub.add_parser("metric", help="compute the travel-cost metric")
    _model_flags(p)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--from", dest="from_x", type=float, required=True)
    p.add_argument("--to", dest="to_x", type=float, required=True)
    p.add_argument("--segments", type=int)
    p.add_argument("--multistarts", type=int, default=5)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("burago", help="decompose a path read from CSV")
    _model_flags(p)
    p.add_argument("path", help="CSV file with rows s, xi_1, ..., xi_d")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_burago)

    p = sub.add_parser("double", help="doubling construction and defect")
    _model_flags(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.set_defaults(func=cmd_double)

    p = sub.add_parser("halve", help="halving construction and defect")
    _model_flags(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.set_defaults(func=cmd_halve)

    p = sub.add_parser("effective", help="emit effective Lagrangian/Hamiltonian tables")
    _model_flags(p)
    p.add_argument("--lbar-out")
    p.add_argument("--hbar-out")
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("solve", help="solve the oscillatory problem")
    _model_flags(p)
    p.add_argument("--route", choices=("control", "scheme"), default="control")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--grid-dx", type=float, default=1.0 / 256)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--lbar-table", help="Lbar CSV for effective comparison")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rate", help="run the convergence-rate experiment")
    _model_flags(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("paper-check", help="run the full verification preset")
    _model_flags(p)
    p.set_defaults(func=cmd_paper_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HJLabError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
