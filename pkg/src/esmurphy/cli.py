"""Command-line interface.

Subcommands: evaluate (rolling forecasts from market data), murphy (diagram
and difference artifacts for two forecast files), test (dominance test, both
directions, JSON), simulate (size/power study of the test), price (put-pricing
identity report).  Every command writes a ``manifest.json`` last, listing the
command, configuration, input checksums, seed, and produced artifacts; seeded
commands are byte-reproducible.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dominance import DominanceTestConfig, VarianceEstimator, dominance_test
from .models import (
    MODELS,
    FitConvergenceError,
    RollingConfig,
    evaluation_summary,
    load_market_csv,
    rolling_evaluation,
)
from .murphy import EvaluationSeries, emit_curve_data, murphy_curve, murphy_diff
from .options import OptionScenario, lognormal_var_es, verify_pricing_equivalence
from .scores import ScoreFamily, build_threshold_grid
from .simulation import DgpConfig, size_power_study, study_rows_to_csv

USAGE_ERROR, DATA_ERROR, NUMERICAL_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _Workspace:
    """Collects artifacts in an output directory and writes the manifest last."""

    def __init__(self, out_dir: Path, command: str, config: dict, inputs, seed):
        self.out_dir = out_dir
        self.command = command
        self.config = config
        self.inputs = [Path(p) for p in inputs]
        self.seed = seed
        self.artifacts: list[str] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, payload: bytes) -> Path:
        path = self.out_dir / name
        path.write_bytes(payload)
        self.artifacts.append(name)
        return path

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config": self.config,
            "inputs": [
                {"path": str(p), "sha256": _sha256(p)} for p in self.inputs
            ],
            "seed": self.seed,
            "artifacts": self.artifacts,
            "version": __version__,
        }
        payload = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
        (self.out_dir / "manifest.json").write_bytes(payload)


def _write_forecast_csv(series: EvaluationSeries) -> bytes:
    lines = ["date,var,es,realization"]
    for i in range(len(series)):
        lines.append(
            f"{series.times[i]},{float(series.var_a[i])!r},{float(series.es_a[i])!r},"
            f"{float(series.realizations[i])!r}"
        )
    return ("\n".join(lines) + "\n").encode()


def _read_forecast_csv(path: Path):
    dates, var, es, real = [], [], [], []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"date", "var", "es", "realization"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for row in reader:
            try:
                dates.append(np.datetime64(row["date"], "D"))
                var.append(float(row["var"]))
                es.append(float(row["es"]))
                real.append(float(row["realization"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path} line {reader.line_num}: {exc}") from exc
    if not dates:
        raise ValueError(f"{path}: no forecast rows")
    return (
        np.asarray(dates, dtype="datetime64[D]"),
        np.asarray(var),
        np.asarray(es),
        np.asarray(real),
    )


def _paired_series(path_a: Path, path_b: Path) -> EvaluationSeries:
    dates_a, var_a, es_a, y_a = _read_forecast_csv(path_a)
    dates_b, var_b, es_b, y_b = _read_forecast_csv(path_b)
    if dates_a.shape != dates_b.shape or np.any(dates_a != dates_b):
        limit = min(dates_a.size, dates_b.size)
        for i in range(limit):
            if dates_a[i] != dates_b[i]:
                raise ValueError(
                    f"date mismatch at row {i + 1}: {dates_a[i]} vs {dates_b[i]}"
                )
        raise ValueError(
            f"forecast files differ in length: {dates_a.size} vs {dates_b.size} rows"
        )
    if not np.allclose(y_a, y_b, rtol=0.0, atol=1e-12):
        first = int(np.argmax(~np.isclose(y_a, y_b, rtol=0.0, atol=1e-12)))
        raise ValueError(
            f"realizations disagree at {dates_a[first]}: {y_a[first]} vs {y_b[first]}"
        )
    return EvaluationSeries(
        times=dates_a, var_a=var_a, es_a=es_a, realizations=y_a, var_b=var_b, es_b=es_b
    )


def _cmd_evaluate(args) -> int:
    models = [m.strip().lower() for m in args.models.split(",") if m.strip()]
    for model in models:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    data = load_market_csv(args.input)
    if "heavy" in models:
        if data.rk is None:
            raise ValueError("model 'heavy' requires an 'rk' column in the input")
        before = len(data)
        data = data.without_missing_rk()
        if len(data) != before:
            print(f"dropped {before - len(data)} day(s) with missing rk", file=sys.stderr)
    config = RollingConfig(window=args.window, alpha=args.alpha, nu=args.nu)
    ws = _Workspace(
        Path(args.out),
        "evaluate",
        {
            "input": str(args.input),
            "models": models,
            "window": args.window,
            "alpha": args.alpha,
            "nu": args.nu,
        },
        [args.input],
        None,
    )
    summary_lines = ["model,n,avg_var,avg_es,violation_rate"]
    for model in models:
        series = rolling_evaluation(data, model, config)
        ws.write(f"forecasts_{model}.csv", _write_forecast_csv(series))
        info = evaluation_summary(series, args.alpha)
        summary_lines.append(
            f"{model},{info['n']},{info['avg_var']!r},{info['avg_es']!r},"
            f"{info['violation_rate']!r}"
        )
        print(
            f"{model}: n={info['n']} avg_var={info['avg_var']:.4f} "
            f"avg_es={info['avg_es']:.4f} violation_rate={info['violation_rate']:.4f}"
        )
    ws.write("summary.csv", ("\n".join(summary_lines) + "\n").encode())
    ws.finish()
    return 0


def _cmd_murphy(args) -> int:
    series = _paired_series(Path(args.a), Path(args.b))
    grid = build_threshold_grid(
        series.pooled_forecast_values(), series.realizations, args.grid, ScoreFamily.ES
    )
    estimator = VarianceEstimator(kind=args.variance, lag=args.lag)
    curve_a = murphy_curve(series, "a", grid, args.alpha)
    curve_b = murphy_curve(series, "b", grid, args.alpha)
    diff = murphy_diff(series, grid, args.alpha, estimator)
    ws = _Workspace(
        Path(args.out),
        "murphy",
        {
            "a": str(args.a),
            "b": str(args.b),
            "alpha": args.alpha,
            "grid": args.grid,
            "variance": args.variance,
            "lag": args.lag,
        },
        [args.a, args.b],
        None,
    )
    ws.write("curve_a.csv", emit_curve_data([curve_a], "csv"))
    ws.write("curve_b.csv", emit_curve_data([curve_b], "csv"))
    ws.write("murphy.svg", emit_curve_data([curve_a, curve_b], "svg", labels=["A", "B"]))
    ws.write("diff.csv", emit_curve_data([diff], "csv"))
    ws.write("diff.svg", emit_curve_data([diff], "svg", labels=["A - B"]))
    ws.finish()
    verdict = "yes" if diff.a_dominates_on_grid else "no"
    print(f"A dominates B on the grid: {verdict}")
    return 0


def _cmd_test(args) -> int:
    series = _paired_series(Path(args.a), Path(args.b))
    config = DominanceTestConfig(
        alpha=args.alpha,
        grid_size=args.grid,
        permutations=args.permutations,
        block_length=args.block,
        variance=VarianceEstimator(kind=args.variance, lag=args.lag),
        score_set=args.scores,
        seed=args.seed,
    )
    result_ab, result_ba = dominance_test(series, config)
    document = {
        "config": config.to_dict(),
        "a_dominates_b": result_ab.to_dict(),
        "b_dominates_a": result_ba.to_dict(),
    }
    payload = (json.dumps(document, indent=2, sort_keys=True) + "\n").encode()
    ws = _Workspace(Path(args.out), "test", config.to_dict(), [args.a, args.b], args.seed)
    ws.write("dominance.json", payload)
    ws.finish()
    print(f"minimal WY p (A dominates B): {result_ab.minimal_wy_p!r}")
    print(f"minimal WY p (B dominates A): {result_ba.minimal_wy_p!r}")
    return 0


def _cmd_simulate(args) -> int:
    rk_values = None
    inputs = []
    if args.rk_file:
        rk_values = np.loadtxt(args.rk_file, dtype=float)
        inputs.append(args.rk_file)
    dgp = DgpConfig(
        horizon=args.horizon,
        seed=args.seed,
        rk_source="file" if args.rk_file else "synthetic",
        nu=args.nu,
        rk_values=rk_values,
    )
    test = DominanceTestConfig(
        alpha=args.alpha,
        grid_size=args.grid,
        permutations=args.permutations,
        block_length=args.block,
        variance=VarianceEstimator(kind=args.variance, lag=args.lag),
        score_set=args.scores,
        seed=args.seed,
    )
    levels = tuple(float(x) for x in args.levels.split(","))
    rows = size_power_study(
        dgp,
        zeta1=args.zeta1,
        zeta2=args.zeta2,
        replications=args.replications,
        test=test,
        nominal_levels=levels,
        n_jobs=args.jobs,
    )
    config = {
        "zeta1": args.zeta1,
        "zeta2": args.zeta2,
        "horizon": args.horizon,
        "replications": args.replications,
        "levels": list(levels),
        "test": test.to_dict(),
        "jobs": args.jobs,
        "rk_file": str(args.rk_file) if args.rk_file else None,
    }
    ws = _Workspace(Path(args.out), "simulate", config, inputs, args.seed)
    ws.write("study.csv", study_rows_to_csv(rows))
    ws.finish()
    for row in rows:
        print(
            f"zeta1={row.zeta1} zeta2={row.zeta2} T={row.horizon} "
            f"level={row.nominal_level}: rejection_rate={row.rejection_rate:.4f} "
            f"(se={row.se:.4f})"
        )
    return 0


def _cmd_price(args) -> int:
    scenario = OptionScenario(
        spot0=args.spot,
        annual_vol=args.vol,
        maturity_years=args.maturity,
        alpha=args.alpha,
    )
    forecast = lognormal_var_es(scenario)
    check = verify_pricing_equivalence(scenario)
    document = {
        "inputs": {
            "spot0": args.spot,
            "annual_vol": args.vol,
            "maturity_years": args.maturity,
            "alpha": args.alpha,
        },
        "var": forecast.var,
        "es": forecast.es,
        "p_es": check.p_es,
        "p_bs": check.p_bs,
        "abs_diff": check.abs_diff,
    }
    payload = (json.dumps(document, indent=2, sort_keys=True) + "\n").encode()
    if args.out:
        ws = _Workspace(Path(args.out), "price", document["inputs"], [], None)
        ws.write("price.json", payload)
        ws.finish()
    sys.stdout.write(payload.decode())
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="esmurphy", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    evaluate = sub.add_parser("evaluate", help="rolling out-of-sample (VaR, ES) forecasts")
    evaluate.add_argument("--input", required=True, help="CSV with date,close[,rk]")
    evaluate.add_argument("--models", default="heavy,garch,hs", help="comma-separated subset of heavy,garch,hs")
    evaluate.add_argument("--window", type=int, default=1500, help="rolling window length")
    evaluate.add_argument("--alpha", type=float, default=0.025, help="tail level")
    evaluate.add_argument("--nu", type=int, default=6, help="t degrees of freedom")
    evaluate.add_argument("--out", required=True, help="output directory")
    evaluate.set_defaults(func=_cmd_evaluate)

    murphy = sub.add_parser("murphy", help="Murphy diagram and difference artifacts")
    murphy.add_argument("--a", required=True, help="forecast CSV of method A")
    murphy.add_argument("--b", required=True, help="forecast CSV of method B")
    murphy.add_argument("--alpha", type=float, default=0.025)
    murphy.add_argument("--grid", type=int, default=50, help="number of thresholds")
    murphy.add_argument("--variance", choices=["iid", "nw"], default="iid")
    murphy.add_argument("--lag", type=int, default=3, help="Newey-West truncation lag")
    murphy.add_argument("--out", required=True)
    murphy.set_defaults(func=_cmd_murphy)

    test = sub.add_parser("test", help="dominance test in both directions")
    test.add_argument("--a", required=True)
    test.add_argument("--b", required=True)
    test.add_argument("--alpha", type=float, default=0.025)
    test.add_argument("--grid", type=int, default=50)
    test.add_argument("--permutations", type=int, default=500)
    test.add_argument("--block", type=int, default=1, help="sign-flip block length")
    test.add_argument("--variance", choices=["iid", "nw"], default="iid")
    test.add_argument("--lag", type=int, default=3)
    test.add_argument("--scores", choices=["s2", "both"], default="s2", help="elementary-score families in the test")
    test.add_argument("--seed", type=int, default=0)
    test.add_argument("--out", required=True)
    test.set_defaults(func=_cmd_test)

    simulate = sub.add_parser("simulate", help="size/power study of the dominance test")
    simulate.add_argument("--zeta1", type=float, required=True, help="error variance of forecaster 1")
    simulate.add_argument("--zeta2", type=float, required=True, help="error variance of forecaster 2")
    simulate.add_argument("--horizon", type=int, default=500, help="periods per replication")
    simulate.add_argument("--replications", type=int, default=200)
    simulate.add_argument("--levels", default="0.05,0.1", help="comma-separated nominal levels")
    simulate.add_argument("--alpha", type=float, default=0.025)
    simulate.add_argument("--grid", type=int, default=50)
    simulate.add_argument("--permutations", type=int, default=500)
    simulate.add_argument("--block", type=int, default=1)
    simulate.add_argument("--variance", choices=["iid", "nw"], default="iid")
    simulate.add_argument("--lag", type=int, default=3)
    simulate.add_argument("--scores", choices=["s2", "both"], default="s2")
    simulate.add_argument("--nu", type=int, default=6)
    simulate.add_argument("--rk-file", default=None, help="text file with one realized-kernel value per line")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--jobs", type=int, default=1, help="parallel replications")
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=_cmd_simulate)

    price = sub.add_parser("price", help="put-pricing identity report")
    price.add_argument("--spot", type=float, required=True)
    price.add_argument("--vol", type=float, required=True, help="annual volatility")
    price.add_argument("--maturity", type=float, required=True, help="years to maturity")
    price.add_argument("--alpha", type=float, default=0.025)
    price.add_argument("--out", default=None, help="optional output directory")
    price.set_defaults(func=_cmd_price)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FitConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
