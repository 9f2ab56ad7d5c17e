"""Experiment orchestration: run configs, sweeps, rate fitting, reports.

Every experiment is a pure function of its RunConfig (all randomness flows
from the config seed), so reports are byte-identical across runs with the
same config.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import constructions, effective, pde
from .burago import burago_1d, burago_nd, verify_decomposition
from .curves import Curve
from .errors import ConfigurationError, HJLabError
from .metric import MetricQuery, check_metric_periodicity, compute_metric
from .models import GrowthBounds, HamiltonianModel, LagrangianModel, verify_model

EXPERIMENTS = ("rate", "subadd", "superadd", "burago-suite", "effective-tables",
               "paper-check")


@dataclass(frozen=True)
class Resolutions:
    segments_per_unit: int = 16
    multistarts: int = 3
    levels: int = 5
    q_min: float = -2.0
    q_max: float = 2.0
    q_points: int = 33
    x_points: int = 64
    metric_gtol: float = 1e-7
    y_radius: float = 2.0
    y_coarse: int = 33


@dataclass(frozen=True)
class RunConfig:
    model_family: str = "separable-quadratic"
    model_params: dict = field(default_factory=lambda: {"amplitude": 1.0})
    dimension: int = 1
    experiment: str = "rate"
    epsilons: tuple = (0.5, 0.25, 0.125, 0.0625)
    ts: tuple = (8.0, 16.0, 32.0)
    ys: tuple = (1.0, 2.0)
    halving_ts: tuple = (200.0, 400.0, 800.0)
    burago_paths: int = 100
    resolutions: Resolutions = field(default_factory=Resolutions)
    output: str = None
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        for eps in self.epsilons:
            if not (0 < eps < 1):
                raise ConfigurationError("epsilon values must lie in (0, 1)")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        model = raw.pop("model", {})
        res = raw.pop("resolutions", {})
        q_grid = res.pop("q_grid", {})
        known_res = {f.name for f in dataclasses.fields(Resolutions)}
        res_kwargs = {k: v for k, v in res.items() if k in known_res}
        if q_grid:
            res_kwargs.update(
                q_min=q_grid.get("min", -2.0),
                q_max=q_grid.get("max", 2.0),
                q_points=q_grid.get("points", 33),
            )
        kwargs = {
            "model_family": model.get("family", "separable-quadratic"),
            "model_params": model.get("params", {"amplitude": 1.0}),
            "dimension": model.get("dimension", 1),
            "resolutions": Resolutions(**res_kwargs),
        }
        known = {f.name for f in dataclasses.fields(cls)}
        for key, value in raw.items():
            if key not in known:
                raise ConfigurationError(f"unknown config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["resolutions"] = dataclasses.asdict(self.resolutions)
        return out


def build_model(cfg: RunConfig) -> HamiltonianModel:
    params = dict(cfg.model_params)
    if cfg.model_family == "separable-quadratic":
        return HamiltonianModel.separable_quadratic(
            amplitude=params.get("amplitude", 1.0),
            dimension=cfg.dimension,
            potential=params.get("potential", "sinsin"),
        )
    if cfg.model_family == "power-coercive":
        return HamiltonianModel.power_coercive(
            m0=params.get("m0", 4.0),
            offset=params.get("offset", 0.0),
            dimension=cfg.dimension,
        )
    if cfg.model_family == "custom-table":
        path = params.get("csv")
        if path is None:
            raise ConfigurationError("custom-table models need a 'csv' parameter")
        growth = GrowthBounds(
            params.get("alpha0", 0.5), params.get("beta0", 0.5),
            params.get("K0", 1.0), params.get("m0", 2.0),
        )
        return HamiltonianModel.custom_table_from_csv(path, growth)
    raise ConfigurationError(f"unknown model family {cfg.model_family!r}")


def build_lagrangian(cfg: RunConfig) -> LagrangianModel:
    return LagrangianModel(build_model(cfg))


def default_initial_datum(x):
    """The fixed test datum: bounded, Lipschitz, 1-periodic."""
    return float(np.sin(2 * np.pi * np.asarray(x, dtype=float)))


def fit_rate(pairs):
    """Ordinary least squares on (log eps, log error).

    Nonpositive errors are excluded (with a note in the result); fewer than
    two usable pairs is an error. Returns (exponent, intercept, residual,
    notes).
    """
    notes = []
    usable = []
    for eps, err in pairs:
        if err > 0:
            usable.append((eps, err))
        else:
            notes.append(f"excluded nonpositive error at eps={eps:g}")
    if len(usable) < 2:
        raise ConfigurationError("need at least two positive (eps, error) pairs")
    log_e = np.log([p[0] for p in usable])
    log_err = np.log([p[1] for p in usable])
    A = np.vstack([log_e, np.ones_like(log_e)]).T
    coef, _, _, _ = np.linalg.lstsq(A, log_err, rcond=None)
    exponent, intercept = float(coef[0]), float(coef[1])
    fitted = A @ coef
    residual = float(np.sqrt(np.mean((log_err - fitted) ** 2)))
    return exponent, intercept, residual, notes


@dataclass(frozen=True)
class RateReport:
    errors: tuple          # per-eps ErrorReport
    exponent: float
    intercept: float
    fit_residual: float
    c_emp: float
    c_emp_stability: float  # relative variation of error/eps over the two finest eps
    notes: tuple
    config: dict


def run_rate_experiment(cfg: RunConfig, progress=None) -> RateReport:
    """Headline experiment: sup-error of the control-route u^eps against the
    effective solution at t = 1, over an eps sweep, with a log-log fit."""
    if cfg.experiment not in ("rate", "paper-check"):
        raise ConfigurationError("config experiment must be 'rate'")
    if len(cfg.epsilons) < 3:
        raise ConfigurationError("rate experiment needs at least 3 epsilon values")
    lag = build_lagrangian(cfg)
    res = cfg.resolutions
    g = default_initial_datum

    q_grid = np.linspace(res.q_min, res.q_max, res.q_points)
    tab = effective.effective_lagrangian(
        lag, q_grid=q_grid, levels=res.levels, seed=cfg.seed,
        multistarts=res.multistarts,
    )
    xs = np.arange(res.x_points) / res.x_points
    u_eff = np.array([effective.hopf_lax_effective(tab, g, xv, 1.0) for xv in xs])

    reports = []
    for eps in sorted(cfg.epsilons, reverse=True):
        # metric values recur across nearby x (they depend only on the start
        # phase and the displacement in eps-units), so share a cache per eps
        mcache = {}
        u_eps = np.array([
            pde.solve_control(lag, g, eps, xv, 1.0, radius=res.y_radius,
                              coarse=res.y_coarse, seed=cfg.seed,
                              gtol=res.metric_gtol, cache=mcache,
                              multistarts=res.multistarts)
            for xv in xs
        ])
        rep = pde.sup_error(u_eps, u_eff, xs, epsilon=eps, route="control",
                            resolution={"x_points": res.x_points,
                                        "levels": res.levels,
                                        "q_points": res.q_points})
        reports.append(rep)
        if progress:
            progress(f"eps={eps:g}: sup error {rep.sup_error:.3e}")
    pairs = [(r.epsilon, r.sup_error) for r in reports]
    exponent, intercept, residual, notes = fit_rate(pairs)
    ratios = [r.sup_error / r.epsilon for r in reports if r.sup_error > 0]
    c_emp = max(ratios) if ratios else float("nan")
    fine = sorted(reports, key=lambda r: r.epsilon)[:2]
    fine_ratios = [r.sup_error / r.epsilon for r in fine]
    if len(fine_ratios) == 2 and max(fine_ratios) > 0:
        stability = abs(fine_ratios[0] - fine_ratios[1]) / max(fine_ratios)
    else:
        stability = float("nan")
    return RateReport(
        errors=tuple(reports), exponent=exponent, intercept=intercept,
        fit_residual=residual, c_emp=c_emp, c_emp_stability=stability,
        notes=tuple(notes), config=cfg.to_dict(),
    )


def run_defect_sweep(cfg: RunConfig, kind: str) -> dict:
    """Sub- or super-additivity defects over the configured (t, y) grid."""
    lag = build_lagrangian(cfg)
    res = cfg.resolutions
    check = (constructions.check_subadditivity if kind == "subadd"
             else constructions.check_superadditivity)
    extra = {"constructive": False} if kind == "superadd" else {}
    rows = []
    for t in cfg.ts:
        for y in cfg.ys:
            result = check(lag, float(t), np.atleast_1d(y), seed=cfg.seed,
                           multistarts=res.multistarts, **extra)
            row = {"t": float(t), "y": float(np.atleast_1d(y)[0]),
                   "defect": result["defect"]}
            if "constructive_defect" in result:
                row["constructive_defect"] = result["constructive_defect"]
            rows.append(row)
    max_defect = max(r["defect"] for r in rows)
    return {"kind": kind, "rows": rows, "max_defect": max_defect}


def run_burago_suite(cfg: RunConfig) -> dict:
    """Random 1D paths through burago_1d plus lifted optimizer curves
    through burago_nd, all re-verified by the independent checker."""
    rng = np.random.default_rng(cfg.seed)
    lag = build_lagrangian(cfg)
    n_paths = cfg.burago_paths
    failures_1d = 0
    worst_residual_1d = 0.0
    for _ in range(n_paths):
        n_knots = int(rng.integers(3, 20))
        knots = np.sort(rng.uniform(0.0, 10.0, n_knots))
        knots = np.unique(knots)
        if knots.size < 2:
            continue
        nodes = rng.normal(0.0, 1.0, (knots.size, 1))
        path = Curve(knots, nodes)
        dec = burago_1d(path)
        ok, residual = verify_decomposition(path, dec, 1e-8)
        worst_residual_1d = max(worst_residual_1d, residual)
        if not ok or dec.k != 1:
            failures_1d += 1

    n_lifts = max(4, n_paths // 10)
    failures_nd = 0
    worst_residual_nd = 0.0
    for i in range(n_lifts):
        t = float(rng.uniform(2.0, 4.0))
        y = float(rng.uniform(-1.5, 1.5))
        result = compute_metric(
            lag, MetricQuery(0.0, t, np.zeros(1), np.array([y]), multistarts=1),
            seed=cfg.seed + i,
        )
        lift = constructions.space_time_lift(result.minimizer)
        try:
            dec = burago_nd(lift, seed=cfg.seed)
        except HJLabError:
            failures_nd += 1
            continue
        ok, residual = verify_decomposition(lift, dec, 1e-6)
        worst_residual_nd = max(worst_residual_nd, residual)
        duration_defect = abs(dec.duration_sum - lift.duration / 2.0)
        if not ok or duration_defect > 1e-9:
            failures_nd += 1
    return {
        "paths_1d": n_paths, "failures_1d": failures_1d,
        "worst_residual_1d": worst_residual_1d,
        "lifts": n_lifts, "failures_nd": failures_nd,
        "worst_residual_nd": worst_residual_nd,
        "passed": failures_1d == 0 and failures_nd == 0,
    }


def run_effective_tables(cfg: RunConfig):
    lag = build_lagrangian(cfg)
    res = cfg.resolutions
    q_grid = np.linspace(res.q_min, res.q_max, res.q_points)
    tab = effective.effective_lagrangian(lag, q_grid=q_grid, levels=res.levels,
                                         seed=cfg.seed,
                                         multistarts=res.multistarts)
    p_grid = np.linspace(res.q_min / 2, res.q_max / 2, max(9, res.q_points // 2))
    htab = effective.effective_hamiltonian(tab, p_grid)
    return tab, htab


def run_paper_check(cfg: RunConfig, progress=None) -> dict:
    """The full verification preset, in the spec'd order, one combined report."""
    model = build_model(cfg)
    lag = LagrangianModel(model)
    res = cfg.resolutions
    sections = {}

    report = verify_model(model, samples=1000, tol=1e-9, seed=cfg.seed)
    sections["model_verification"] = report

    t0 = float(cfg.ts[0]) if cfg.ts else 2.0
    defect = check_metric_periodicity(lag, min(t0, 4.0), [0.3], [0.7], [1],
                                      seed=cfg.seed, multistarts=res.multistarts)
    sections["metric_periodicity"] = {
        "defect": defect, "passed": defect <= 1e-4,
    }

    sections["subadditivity"] = run_defect_sweep(cfg, "subadd")
    sections["superadditivity"] = run_defect_sweep(cfg, "superadd")
    sections["burago"] = run_burago_suite(cfg)
    rate = run_rate_experiment(cfg, progress=progress)
    sections["rate"] = {
        "exponent": rate.exponent,
        "intercept": rate.intercept,
        "fit_residual": rate.fit_residual,
        "c_emp": rate.c_emp,
        "c_emp_stability": rate.c_emp_stability,
        "errors": [dataclasses.asdict(r) for r in rate.errors],
        "passed": 0.75 <= rate.exponent <= 1.25,
    }
    passed = (
        report["all_passed"]
        and sections["metric_periodicity"]["passed"]
        and sections["burago"]["passed"]
        and sections["rate"]["passed"]
    )
    return {
        "sections": sections,
        "passed": passed,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "tolerances": {
            "model_verification": 1e-9,
            "metric_periodicity": 1e-4,
            "burago_1d": 1e-8,
            "burago_nd": 1e-6,
            "rate_exponent_window": [0.75, 1.25],
        },
    }


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def emit_report(report, fmt: str, path) -> None:
    """Write a report as schema-stable JSON or CSV.

    JSON output is sorted and fully resolved (config echo included by the
    producing experiment), so fixed inputs give byte-identical files.
    """
    data = _jsonable(report)
    try:
        if fmt == "json":
            with open(path, "w") as fh:
                json.dump(data, fh, sort_keys=True, indent=2)
                fh.write("\n")
        elif fmt == "csv":
            _emit_csv(data, path)
        else:
            raise ConfigurationError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise ConfigurationError(f"cannot write report to {path}: {exc}") from exc


def _emit_csv(data, path):
    import csv as _csv

    rows = None
    if isinstance(data, dict):
        if "errors" in data and isinstance(data["errors"], list):
            rows = data["errors"]
        elif "rows" in data:
            rows = data["rows"]
    if rows is None and isinstance(data, list):
        rows = data
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        if not rows:
            writer.writerow(["key", "value"])
            if isinstance(data, dict):
                for key in sorted(data):
                    if not isinstance(data[key], (dict, list)):
                        writer.writerow([key, data[key]])
            return
        header = sorted(rows[0].keys()) if isinstance(rows[0], dict) else None
        if header:
            writer.writerow(header)
            for row in rows:
                writer.writerow([row.get(h, "") for h in header])
        else:
            for row in rows:
                writer.writerow(row if isinstance(row, (list, tuple)) else [row])
