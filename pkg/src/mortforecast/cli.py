"""Command-line front end: ingest -> fit -> forecast -> evaluate.

Artifacts (CSV, JSON, SVG) land under --output with stable names, and a
given config + data + seed always produces byte-identical files. Exit
status 0 means success, 1 a computation failure, 2 a usage or I/O
problem.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .evaluate import (
    MODELS,
    BacktestReport,
    ErrorReport,
    error_metrics,
    normality_test,
    run_backtest,
    standardize_residuals,
    t_test_zero_mean,
)
from .fdm import ForecastSurface, bootstrap_intervals, fit_fdm, forecast_fdm
from .ingest import (
    GENDERS,
    HmdParseError,
    MortalitySurface,
    build_surface,
    parse_hmd_rates,
)
from .leecarter import LcModel, fit_lc, fit_lcs, forecast_lc
from .lifetable import e0_path, rates_to_lifetable
from .smoothing import SmoothConfig
from .svgchart import render_line_chart
from .tsforecast import TsSpec

__all__ = ["main", "RunConfig", "DATA_ENV", "render_line_chart"]

DATA_ENV = "MORTFORECAST_DATA"
SCHEMA_VERSION = 1
_DATA_BASENAMES = ("Mx_1x1.txt", "ITA.Mx_1x1.txt")
_NORMALITY_CAP = 5000


class UsageError(Exception):
    """Bad flags, windows, or input files; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    data_path: Optional[str]
    gender: str
    ages: tuple
    years: Optional[tuple]
    train: Optional[tuple]
    test: Optional[tuple]
    horizon: int
    models: tuple
    K: int
    smooth: SmoothConfig
    ts_spec: TsSpec
    level: float
    bootstrap: int
    seed: int
    output: str
    formats: frozenset
    table_year: Optional[int] = None


def _parse_window(text: str, flag: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"{flag} expects A:B (inclusive), got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"{flag} expects integer bounds, got {text!r}") from None
    if a > b:
        raise UsageError(f"{flag}: lower bound {a} exceeds upper bound {b}")
    return (a, b)


def _parse_models(text: str) -> tuple:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    if not names:
        raise UsageError("--models needs at least one of lc,lcs,fdm")
    for name in names:
        if name not in MODELS:
            raise UsageError(f"unknown model {name!r}; choose from {','.join(MODELS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortforecast",
        description="Fit, forecast, and backtest stochastic mortality models "
                    "on age-by-year death rate surfaces.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="rates file (Mx_1x1 layout) or a directory "
                        f"containing one; falls back to ${DATA_ENV}")
    common.add_argument("--gender", choices=GENDERS, default="total")
    common.add_argument("--ages", default="0:100", help="age window A:B inclusive")
    common.add_argument("--years", default=None, help="year window A:B inclusive "
                        "(default: everything in the file)")
    common.add_argument("--models", default=None, help="comma list from lc,lcs,fdm")
    common.add_argument("--model", default=None, help="single model (same as --models)")
    common.add_argument("-K", "--components", type=int, default=4,
                        help="number of basis functions for fdm")
    common.add_argument("--ts", default="rwd", help="time-series spec: rwd or "
                        "ar:p,d[,drift]")
    common.add_argument("--level", type=float, default=95.0,
                        help="two-sided interval level in percent")
    common.add_argument("--num-basis", type=int, default=None,
                        help="spline basis size per curve")
    common.add_argument("--lam", default="auto",
                        help="smoothing penalty weight, or 'auto' for GCV")
    common.add_argument("--monotone-from", default="65",
                        help="age from which smoothed curves are forced "
                        "nondecreasing, or 'none'")
    common.add_argument("--bootstrap", type=int, default=0,
                        help="bootstrap replicates for fdm intervals (0 = analytic)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=".", help="artifact directory")
    common.add_argument("--formats", default="csv,json,svg",
                        help="comma subset of csv,json,svg")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common],
                   help="fit models and write parameters + diagnostics")
    p_forecast = sub.add_parser("forecast", parents=[common],
                                help="fit then project forward")
    p_forecast.add_argument("--horizon", type=int, default=20)
    p_backtest = sub.add_parser("backtest", parents=[common],
                                help="train/test split evaluation")
    p_backtest.add_argument("--train", required=True, help="train years A:B")
    p_backtest.add_argument("--test", required=True, help="test years A:B")
    p_lifetable = sub.add_parser("lifetable", parents=[common],
                                 help="period life table for one year")
    p_lifetable.add_argument("--year", type=int, required=True)
    sub.add_parser("compare", parents=[common],
                   help="in-sample error tables for several models")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.model and args.models:
        raise UsageError("give either --model or --models, not both")
    models_text = args.models or args.model
    if models_text is None:
        models_text = {"fit": "lc", "compare": "lc,fdm"}.get(args.command, "lc,lcs,fdm")
    models = _parse_models(models_text)

    if not 50.0 < args.level < 99.9:
        raise UsageError(f"--level must be in (50, 99.9), got {args.level}")

    formats = frozenset(t.strip() for t in args.formats.split(",") if t.strip())
    bad = formats - {"csv", "json", "svg"}
    if bad or not formats:
        raise UsageError(f"--formats must be a subset of csv,json,svg, got {args.formats!r}")

    if args.monotone_from.strip().lower() == "none":
        monotone_from = None
    else:
        try:
            monotone_from = int(args.monotone_from)
        except ValueError:
            raise UsageError(f"--monotone-from expects an age or 'none', "
                             f"got {args.monotone_from!r}") from None
    lam: "float | str"
    if args.lam.strip().lower() == "auto":
        lam = "auto"
    else:
        try:
            lam = float(args.lam)
        except ValueError:
            raise UsageError(f"--lam expects a number or 'auto', got {args.lam!r}") from None
        if lam < 0:
            raise UsageError("--lam must be nonnegative")
    smooth = SmoothConfig(num_basis=args.num_basis, lam=lam,
                          monotone_from=monotone_from)

    try:
        ts_spec = TsSpec.parse(args.ts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    train = _parse_window(args.train, "--train") if getattr(args, "train", None) else None
    test = _parse_window(args.test, "--test") if getattr(args, "test", None) else None
    if train and test and test[0] <= train[1]:
        raise UsageError(
            f"--test {test[0]}:{test[1]} overlaps or precedes --train "
            f"{train[0]}:{train[1]}"
        )
    if args.bootstrap and args.bootstrap < 100:
        raise UsageError("--bootstrap needs at least 100 replicates (or 0)")

    return RunConfig(
        command=args.command,
        data_path=args.data,
        gender=args.gender,
        ages=_parse_window(args.ages, "--ages"),
        years=_parse_window(args.years, "--years") if args.years else None,
        train=train,
        test=test,
        horizon=getattr(args, "horizon", 20),
        models=models,
        K=args.components,
        smooth=smooth,
        ts_spec=ts_spec,
        level=args.level,
        bootstrap=args.bootstrap,
        seed=args.seed,
        output=args.output,
        formats=formats,
        table_year=getattr(args, "year", None),
    )


# ---------------------------------------------------------------------------
# data loading


def _resolve_data_path(config: RunConfig) -> str:
    candidate = config.data_path or os.environ.get(DATA_ENV)
    if candidate is None:
        raise UsageError(
            f"no data source: pass --data or set ${DATA_ENV} to a rates "
            "file or directory"
        )
    if os.path.isdir(candidate):
        for base in _DATA_BASENAMES:
            path = os.path.join(candidate, base)
            if os.path.isfile(path):
                return path
        raise UsageError(
            f"no rates file found in {candidate!r} (looked for "
            f"{' or '.join(_DATA_BASENAMES)})"
        )
    if not os.path.isfile(candidate):
        raise UsageError(f"data file not found: {candidate}")
    return candidate


def load_surface(config: RunConfig) -> MortalitySurface:
    path = _resolve_data_path(config)
    try:
        with open(path, encoding="utf-8") as fh:
            records = parse_hmd_rates(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except HmdParseError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if config.years is not None:
        year_min, year_max = config.years
    else:
        year_min = min(r.year for r in records)
        year_max = max(r.year for r in records)
    try:
        return build_surface(records, config.gender, config.ages[0], config.ages[1],
                             year_min, year_max)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# artifact helpers


def _ensure_output(config: RunConfig) -> str:
    os.makedirs(config.output, exist_ok=True)
    return config.output


def _out(config: RunConfig, name: str) -> str:
    return os.path.join(config.output, name)


def _write_json(config: RunConfig, obj: dict) -> None:
    if "json" not in config.formats:
        return
    obj = dict(obj)
    obj["schema_version"] = SCHEMA_VERSION
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    with open(_out(config, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_csv(config: RunConfig, name: str, header: str, rows) -> None:
    if "csv" not in config.formats:
        return
    with open(_out(config, name), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_svg(config: RunConfig, name: str, series, xlabel: str, ylabel: str,
               title: Optional[str] = None) -> None:
    if "svg" not in config.formats:
        return
    render_line_chart(series, xlabel, ylabel, path=_out(config, name), title=title)


def _diagnostics(residuals: np.ndarray) -> dict:
    std = standardize_residuals(residuals)
    t_stat, t_p = t_test_zero_mean(std)
    out = {
        "t_test": {"statistic": t_stat, "p_value": t_p},
        "n_residuals": int(std.size),
    }
    sample = std
    subsampled = False
    if std.size > _NORMALITY_CAP:
        # the normality approximation is calibrated up to n=5000; test a
        # deterministic evenly spaced subsample and say so
        idx = np.linspace(0, std.size - 1, _NORMALITY_CAP).astype(int)
        sample = std[idx]
        subsampled = True
    if sample.size >= 3 and float(np.ptp(sample)) > 0:
        w, p = normality_test(sample)
        out["normality"] = {"statistic": w, "p_value": p, "subsampled": subsampled}
    return out


def _fit_model(name: str, surface: MortalitySurface, config: RunConfig):
    if name == "lc":
        return fit_lc(surface)
    if name == "lcs":
        return fit_lcs(surface, config.smooth)
    return fit_fdm(surface, config.smooth, config.K)


def _model_forecast(name: str, model, config: RunConfig, horizon: int) -> ForecastSurface:
    if name == "fdm":
        if config.bootstrap:
            return bootstrap_intervals(model, config.ts_spec, horizon, config.level,
                                       B=config.bootstrap, seed=config.seed)
        return forecast_fdm(model, config.ts_spec, horizon, config.level)
    return forecast_lc(model, config.ts_spec, horizon, config.level)


# ---------------------------------------------------------------------------
# commands


def cmd_fit(config: RunConfig) -> int:
    surface = load_surface(config)
    _ensure_output(config)
    summary: dict = {
        "command": "fit",
        "gender": config.gender,
        "ages": list(config.ages),
        "years": [int(surface.years[0]), int(surface.years[-1])],
        "models": {},
    }
    for name in config.models:
        model = _fit_model(name, surface, config)
        if isinstance(model, LcModel):
            entry = {
                "explained_variance": model.explained_variance,
                "explained_variance_rss": model.explained_variance_rss,
            }
            entry.update(_diagnostics(model.residuals))
            _write_csv(config, f"{name}_alpha.csv", "age,value",
                       zip(model.ages, model.alpha))
            _write_csv(config, f"{name}_beta.csv", "age,value",
                       zip(model.ages, model.beta))
            _write_csv(config, f"{name}_kappa.csv", "year,value",
                       zip(model.years, model.kappa))
            _write_svg(config, f"fig3_{name}_alpha.svg",
                       [("alpha", model.ages, model.alpha)], "age", "log rate",
                       title=f"{name}: level by age")
            _write_svg(config, f"fig3_{name}_beta.svg",
                       [("beta", model.ages, model.beta)], "age", "sensitivity",
                       title=f"{name}: age response to the period index")
            _write_svg(config, f"fig3_{name}_kappa.svg",
                       [("kappa", model.years, model.kappa)], "year", "index",
                       title=f"{name}: period index")
        else:
            entry = {
                "explained_shares": [float(s) for s in model.explained_shares],
                "K": model.K,
            }
            entry.update(_diagnostics(model.model_errors))
            _write_csv(config, "fdm_mu.csv", "age,value",
                       zip(model.ages, model.mu))
            k_cols = ",".join(f"phi{k + 1}" for k in range(model.K))
            _write_csv(config, "fdm_phi.csv", f"age,{k_cols}",
                       (tuple([a, *model.phi[i]]) for i, a in enumerate(model.ages)))
            b_cols = ",".join(f"beta{k + 1}" for k in range(model.K))
            _write_csv(config, "fdm_beta.csv", f"year,{b_cols}",
                       (tuple([y, *model.beta_series[j]])
                        for j, y in enumerate(model.years)))
            _write_csv(config, "fdm_variances.csv", "age,model_error,observational",
                       zip(model.ages, model.v, model.sigma2))
            _write_svg(config, "fig4_fdm_mu.svg",
                       [("mu", model.ages, model.mu)], "age", "log rate",
                       title="fdm: mean curve")
            _write_svg(config, "fig4_fdm_phi.svg",
                       [(f"phi{k + 1}", model.ages, model.phi[:, k])
                        for k in range(model.K)],
                       "age", "basis value", title="fdm: age basis functions")
            _write_svg(config, "fig4_fdm_beta.svg",
                       [(f"beta{k + 1}", model.years, model.beta_series[:, k])
                        for k in range(model.K)],
                       "year", "coefficient", title="fdm: coefficient series")
        summary["models"][name] = entry
    _write_json(config, summary)
    return 0


def cmd_forecast(config: RunConfig) -> int:
    if config.horizon < 1:
        raise UsageError("--horizon must be at least 1")
    surface = load_surface(config)
    _ensure_output(config)
    summary: dict = {
        "command": "forecast",
        "gender": config.gender,
        "horizon": config.horizon,
        "level": config.level,
        "models": {},
    }
    for name in config.models:
        model = _fit_model(name, surface, config)
        forecast = _model_forecast(name, model, config, config.horizon)
        rows = []
        for j, year in enumerate(forecast.years):
            for i, age in enumerate(forecast.ages):
                rows.append((age, int(year), forecast.point[i, j],
                             forecast.variance[i, j], forecast.lower[i, j],
                             forecast.upper[i, j]))
        _write_csv(config, f"forecast_{name}.csv",
                   "age,year,point,variance,lower,upper", rows)
        first, last = 0, len(forecast.years) - 1
        _write_svg(config, f"fig_forecast_{name}.svg",
                   [(f"year {int(surface.years[-1])} observed", surface.ages,
                     surface.log_rates[:, -1]),
                    (f"year {int(forecast.years[first])}", forecast.ages,
                     forecast.point[:, first]),
                    (f"year {int(forecast.years[last])}", forecast.ages,
                     forecast.point[:, last])],
                   "age", "log death rate", title=f"{name}: projected rates")
        entry: dict = {"years": [int(y) for y in forecast.years]}
        if int(forecast.ages[0]) == 0:
            path = e0_path(forecast)
            entry["e0"] = {
                "point": [float(v) for v in path.point],
                "lower": [float(v) for v in path.lower],
                "upper": [float(v) for v in path.upper],
            }
            _write_csv(config, f"e0_{name}.csv", "year,point,lower,upper",
                       zip([int(y) for y in path.years], path.point, path.lower,
                           path.upper))
            _write_svg(config, f"fig_e0_{name}.svg",
                       [("point", path.years, path.point),
                        ("lower", path.years, path.lower),
                        ("upper", path.years, path.upper)],
                       "year", "life expectancy at birth",
                       title=f"{name}: projected e0")
        if name == "fdm" and config.bootstrap:
            entry["bootstrap"] = {"B": config.bootstrap, "seed": config.seed}
        summary["models"][name] = entry
    _write_json(config, summary)
    return 0


_ERROR_FIG = {"lc": "fig9", "lcs": "fig10", "fdm": "fig11"}


def cmd_backtest(config: RunConfig) -> int:
    assert config.train and config.test
    surface = load_surface(config)
    lo, hi = int(surface.years[0]), int(surface.years[-1])
    for flag, window in (("--train", config.train), ("--test", config.test)):
        if window[0] < lo or window[1] > hi:
            raise UsageError(f"{flag} {window[0]}:{window[1]} outside data years "
                             f"{lo}:{hi}")
    _ensure_output(config)
    report = run_backtest(surface, config.models, config.train, config.test,
                          config.ts_spec, config.level, config.smooth, config.K)
    if config.bootstrap and "fdm" in config.models:
        report = _with_bootstrap_fdm(report, surface, config)

    summary: dict = {
        "command": "backtest",
        "gender": config.gender,
        "train": list(report.train_years),
        "test": list(report.test_years),
        "level": config.level,
        "models": {},
        "e0_interval_note": "e0 bounds are pointwise envelopes of the mortality "
                            "interval, not joint intervals",
    }

    mean_series = []
    sd_series = []
    for name in config.models:
        entry = report.models[name]
        summary["models"][name] = {
            "e0_error_mean": entry.e0_error_mean,
            "e0_error_variance": entry.e0_error_variance,
        }
        rows = []
        for j, year in enumerate(entry.forecast.years):
            for i, age in enumerate(entry.forecast.ages):
                rows.append((age, int(year), entry.errors[i, j]))
        _write_csv(config, f"errors_{name}.csv", "age,year,error", rows)
        fig = _ERROR_FIG[name]
        mid = len(report.years) // 2
        _write_svg(config, f"{fig}_errors_{name}.svg",
                   [(f"year {int(report.years[0])}", report.ages, entry.errors[:, 0]),
                    (f"year {int(report.years[mid])}", report.ages, entry.errors[:, mid]),
                    (f"year {int(report.years[-1])}", report.ages, entry.errors[:, -1])],
                   "age", "log-rate error", title=f"{name}: forecast errors")
        mean_series.append((name, report.ages, entry.mean_error_by_age))
        sd_series.append((name, report.ages, entry.sd_error_by_age))

    _write_csv(config, "fig12_mean_error_by_age.csv",
               "age," + ",".join(config.models),
               (tuple([a, *(report.models[m].mean_error_by_age[i]
                            for m in config.models)])
                for i, a in enumerate(report.ages)))
    _write_svg(config, "fig12.svg", mean_series, "age", "mean error",
               title="mean forecast error by age")
    _write_csv(config, "fig13_sd_error_by_age.csv",
               "age," + ",".join(config.models),
               (tuple([a, *(report.models[m].sd_error_by_age[i]
                            for m in config.models)])
                for i, a in enumerate(report.ages)))
    _write_svg(config, "fig13.svg", sd_series, "age", "error sd",
               title="standard deviation of forecast error by age")

    first = report.models[config.models[0]]
    fan_rows = []
    fan_series = [("observed", report.years, first.e0_observed)]
    for name in config.models:
        entry = report.models[name]
        fan_series.append((f"{name} point", report.years, entry.e0_forecast))
        fan_series.append((f"{name} lower", report.years, entry.e0_interval.lower))
        fan_series.append((f"{name} upper", report.years, entry.e0_interval.upper))
    for j, year in enumerate(report.years):
        row = [int(year), first.e0_observed[j]]
        for name in config.models:
            entry = report.models[name]
            row.extend([entry.e0_forecast[j], entry.e0_interval.lower[j],
                        entry.e0_interval.upper[j]])
        fan_rows.append(tuple(row))
    fan_cols = ",".join(f"{m}_point,{m}_lower,{m}_upper" for m in config.models)
    _write_csv(config, "fig14_e0_fan.csv", f"year,observed,{fan_cols}", fan_rows)
    _write_svg(config, "fig14.svg", fan_series, "year",
               "life expectancy at birth", title="e0: observed vs projected")
    _write_json(config, summary)
    return 0


def _with_bootstrap_fdm(report: BacktestReport, surface: MortalitySurface,
                        config: RunConfig) -> BacktestReport:
    """Swap the fdm entry's intervals for bootstrap ones; the point
    forecast and error statistics are unchanged by construction."""
    from .ingest import slice_window

    train_surface = slice_window(surface, *report.train_years)
    model = fit_fdm(train_surface, config.smooth, config.K)
    horizon = report.test_years[1] - report.train_years[1]
    boot = bootstrap_intervals(model, config.ts_spec, horizon, config.level,
                               B=config.bootstrap, seed=config.seed)
    lo = int(boot.years[0])
    j0 = report.test_years[0] - lo
    j1 = report.test_years[1] - lo + 1
    sliced = ForecastSurface(ages=boot.ages, years=boot.years[j0:j1],
                             point=boot.point[:, j0:j1],
                             variance=boot.variance[:, j0:j1],
                             lower=boot.lower[:, j0:j1],
                             upper=boot.upper[:, j0:j1], level=boot.level)
    old = report.models["fdm"]
    models = dict(report.models)
    models["fdm"] = dataclasses.replace(old, forecast=sliced,
                                        e0_interval=e0_path(sliced))
    return dataclasses.replace(report, models=models)


def cmd_lifetable(config: RunConfig) -> int:
    surface = load_surface(config)
    _ensure_output(config)
    try:
        mx = surface.year_column(config.table_year)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = rates_to_lifetable(mx, ages=surface.ages)
    rows = list(zip(table.ages, table.qx, table.lx, table.Lx))
    if "csv" in config.formats:
        with open(_out(config, "lifetable.csv"), "w", encoding="utf-8") as fh:
            fh.write("age,qx,lx,Lx\n")
            for age, qx, lx, Lx in rows:
                fh.write(f"{int(age)},{float(qx)!r},{float(lx)!r},{float(Lx)!r}\n")
            fh.write(f"e0,{float(table.e0)!r},,\n")
    _write_svg(config, "fig_survival.svg",
               [("lx", table.ages, table.lx)], "age", "survivors",
               title=f"survival curve, {config.gender} {config.table_year}")
    _write_json(config, {
        "command": "lifetable",
        "gender": config.gender,
        "year": config.table_year,
        "e0": table.e0,
    })
    return 0


def cmd_compare(config: RunConfig) -> int:
    surface = load_surface(config)
    _ensure_output(config)
    summary: dict = {
        "command": "compare",
        "gender": config.gender,
        "years": [int(surface.years[0]), int(surface.years[-1])],
        "models": {},
        "metrics_note": "errors on the log-rate scale; the across-years row "
                        "averages per-year metrics under the same convention "
                        "as the across-ages row",
    }
    reports: dict[str, ErrorReport] = {}
    for name in config.models:
        model = _fit_model(name, surface, config)
        if isinstance(model, LcModel):
            fitted = model.fitted_log_rates()
            residuals = model.residuals
            extra = {"explained_variance": model.explained_variance}
        else:
            fitted = model.mu[:, None] + model.phi @ model.beta_series.T
            residuals = surface.log_rates - fitted
            extra = {"explained_shares": [float(s) for s in model.explained_shares]}
        rep = error_metrics(surface, fitted)
        reports[name] = rep
        entry = {
            "avg_across_ages": dict(zip(("me", "mse", "mpe", "mape"),
                                        rep.avg_across_ages)),
            "avg_across_years": dict(zip(("me", "mse", "mpe", "mape"),
                                         rep.avg_across_years)),
            "excluded_cells": rep.excluded_cells,
        }
        entry.update(extra)
        entry.update(_diagnostics(residuals))
        summary["models"][name] = entry
        _write_csv(config, f"metrics_{name}_by_age.csv", "age,me,mse,mpe,mape",
                   zip(rep.by_age.index, rep.by_age.me, rep.by_age.mse,
                       rep.by_age.mpe, rep.by_age.mape))
        _write_csv(config, f"metrics_{name}_by_year.csv", "year,me,mse,mpe,mape",
                   zip(rep.by_year.index, rep.by_year.me, rep.by_year.mse,
                       rep.by_year.mpe, rep.by_year.mape))

    def _table_rows(names):
        rows = []
        for name in names:
            if name not in reports:
                continue
            rep = reports[name]
            rows.append((name, "across_ages", *rep.avg_across_ages))
            rows.append((name, "across_years", *rep.avg_across_years))
        return rows

    lc_rows = _table_rows(["lc", "lcs"])
    if lc_rows:
        _write_csv(config, "table1.csv", "model,aggregation,me,mse,mpe,mape", lc_rows)
    fdm_rows = _table_rows(["fdm"])
    if fdm_rows:
        _write_csv(config, "table2.csv", "model,aggregation,me,mse,mpe,mape", fdm_rows)
    _write_json(config, summary)
    return 0


_DISPATCH = {
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "backtest": cmd_backtest,
    "lifetable": cmd_lifetable,
    "compare": cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return _DISPATCH[config.command](config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report, don't crash
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
