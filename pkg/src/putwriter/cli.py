"""Command-line entry points: synth, backtest, grid, report.

All outputs are deterministic functions of the inputs: no timestamps,
stable key ordering, full-precision floats. Failures exit nonzero after
printing a single-line JSON error record to stderr.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .backtester import (BacktestResult, CostModel, GridRunRecord, SimSettings,
                         StrategyConfig, benchmark_daily_sharpe_of, run_backtest,
                         run_grid)
from .market_data import (MarketDataset, SynthSpec, load_dataset, save_dataset,
                          synthesize_market)
from .metrics import MetricsReport, compute_report
from .report import (emit_heatmap, grid_table, load_results_table, pivot_table,
                     significance_stars)

PROG = "putwriter"

# flat JSON schema for one strategy configuration
_SIM_KEYS = ("n_paths", "f_max", "drift_override")
_COST_KEYS = ("commission_per_contract", "spread_cross_fraction")
_CONFIG_KEYS = ("sizing", "target_dte", "otm_pct", "estimator_kind",
                "estimator_memory", "vix_source", "vix_memory",
                "start_capital", "seed", "vix_timing") + _SIM_KEYS + _COST_KEYS

# grid axes expand as a cross product in this fixed order
AXIS_ORDER = ("sizing", "target_dte", "otm_pct", "estimator_kind",
              "estimator_memory", "vix_source", "vix_memory", "seed")


class CliError(Exception):
    pass


def config_to_dict(config: StrategyConfig) -> Dict[str, object]:
    """Flatten a config to its JSON schema."""
    out: Dict[str, object] = {
        "sizing": config.sizing,
        "target_dte": config.target_dte,
        "otm_pct": config.otm_pct,
        "estimator_kind": config.estimator_kind,
        "estimator_memory": config.estimator_memory,
        "vix_source": config.vix_source,
        "vix_memory": config.vix_memory,
        "start_capital": config.start_capital,
        "seed": config.seed,
        "vix_timing": config.vix_timing,
        "n_paths": config.sim.n_paths,
        "f_max": config.sim.f_max,
        "drift_override": config.sim.drift_override,
        "commission_per_contract": config.costs.commission_per_contract,
        "spread_cross_fraction": config.costs.spread_cross_fraction,
    }
    return out


def config_from_dict(raw: Dict[str, object]) -> StrategyConfig:
    """Build a config from the flat JSON schema, rejecting unknown keys."""
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise CliError(f"unknown config keys: {unknown}")
    if "sizing" not in raw:
        raise CliError("config requires 'sizing'")
    for key in ("target_dte", "otm_pct"):
        if key not in raw:
            raise CliError(f"config requires {key!r}")
    sim = SimSettings(**{k: raw[k] for k in _SIM_KEYS if k in raw})
    costs = CostModel(**{k: raw[k] for k in _COST_KEYS if k in raw})
    plain = {k: raw[k] for k in raw if k not in _SIM_KEYS + _COST_KEYS}
    try:
        return StrategyConfig(sim=sim, costs=costs, **plain)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad config: {exc}") from exc


def expand_grid(grid_spec: Dict[str, object]) -> List[StrategyConfig]:
    """Cross-product a {'base': {...}, 'axes': {...}} grid description.

    Axes expand in a fixed canonical order so the run sequence does not
    depend on JSON key order.
    """
    if not isinstance(grid_spec, dict) or "axes" not in grid_spec:
        raise CliError("grid config must be an object with an 'axes' member")
    base = dict(grid_spec.get("base", {}))
    axes = grid_spec["axes"]
    unknown = sorted(set(axes) - set(AXIS_ORDER))
    if unknown:
        raise CliError(f"unknown grid axes: {unknown} (allowed: {AXIS_ORDER})")
    ordered = [(name, list(axes[name])) for name in AXIS_ORDER if name in axes]
    for name, values in ordered:
        if not values:
            raise CliError(f"grid axis {name!r} is empty")
    configs = []
    for combo in itertools.product(*(values for _, values in ordered)):
        raw = dict(base)
        raw.update({name: value for (name, _), value in zip(ordered, combo)})
        configs.append(config_from_dict(raw))
    return configs


# ---------------------------------------------------------------------------
# Serialization helpers


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _dump_json(payload: Dict[str, object], path: Path) -> None:
    path.write_text(json.dumps(_json_safe(payload), sort_keys=True, indent=2)
                    + "\n")


def run_record_payload(index: int, record: GridRunRecord) -> Dict[str, object]:
    """JSON document for one grid run."""
    payload: Dict[str, object] = {
        "index": index,
        "label": record.config.label(),
        "config": config_to_dict(record.config),
        "benchmark_daily_sharpe": record.benchmark_daily_sharpe,
        "error": record.error,
    }
    if record.report is not None:
        payload["metrics"] = asdict(record.report)
        payload["stars"] = significance_stars(record.report.psr)
    if record.result is not None:
        payload["final_equity"] = float(record.result.equity[-1])
        payload["n_positions"] = record.result.n_positions
        payload["n_trades"] = len(record.result.trades)
        payload["diagnostics"] = record.result.diagnostics
    return payload


def write_equity_csv(result: BacktestResult, path: Path) -> None:
    times = np.datetime_as_string(result.equity_times, unit="m")
    with open(path, "w") as fh:
        fh.write("time,equity\n")
        for t, v in zip(times, result.equity):
            fh.write(f"{t},{float(v)!r}\n")


def write_trades_csv(result: BacktestResult, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("time,action,expiry,strike,qty,fill,commission,"
                 "realized_pnl,flag\n")
        for t in result.trades:
            fh.write(f"{t.time.isoformat()},{t.action},{t.contract.expiry},"
                     f"{t.contract.strike!r},{t.qty},{t.fill!r},"
                     f"{t.commission!r},{t.realized_pnl!r},{t.flag or ''}\n")


def _load_json(path: str) -> Dict[str, object]:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise CliError(f"missing file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from exc


def _load_data(path: str) -> MarketDataset:
    try:
        return load_dataset(path)
    except FileNotFoundError as exc:
        raise CliError(f"missing dataset: {path}") from exc
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad dataset {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        start_date=args.start, n_days=args.days,
        minutes_per_day=args.minutes, s0=args.s0, sigma=args.sigma,
        drift=args.drift, implied_sigma=args.implied_sigma, rate=args.rate,
        div_yield=args.div_yield, spread_fraction=args.spread,
        expiry_every=args.expiry_every, max_quote_dte=args.max_quote_dte)
    data = synthesize_market(spec, seed=args.seed)
    manifest = save_dataset(data, args.out)
    print(manifest)
    return 0


def _single_report(data: MarketDataset,
                   result: BacktestResult) -> tuple[MetricsReport, Optional[float]]:
    bench_sr = benchmark_daily_sharpe_of(data)
    return compute_report(result.equity, benchmark_daily_sharpe=bench_sr), bench_sr


def cmd_backtest(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    config = config_from_dict(_load_json(args.config))
    result = run_backtest(config, data)
    report, bench_sr = _single_report(data, result)
    record = GridRunRecord(config, result, report, bench_sr)

    out = Path(args.out)
    runs, reports = out / "runs", out / "reports"
    runs.mkdir(parents=True, exist_ok=True)
    reports.mkdir(parents=True, exist_ok=True)
    label = args.label or config.label()
    _dump_json(run_record_payload(0, record), runs / f"{label}.json")
    write_equity_csv(result, reports / f"{label}_equity.csv")
    write_trades_csv(result, reports / f"{label}_trades.csv")
    _dump_json({"command": "backtest", "data": str(args.data), "label": label,
                "files": [f"runs/{label}.json", f"reports/{label}_equity.csv",
                          f"reports/{label}_trades.csv"]},
               out / "manifest.json")
    print(f"{label}: final_equity={float(result.equity[-1])!r} "
          f"n_positions={result.n_positions} "
          f"ir={report.information_ratio:.4f}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    data = _load_data(args.data)
    configs = expand_grid(_load_json(args.config))
    records = run_grid(configs, data, jobs=args.jobs)

    out = Path(args.out)
    runs = out / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    files = []
    for i, record in enumerate(records):
        name = f"{i:04d}_{record.config.label()}.json"
        _dump_json(run_record_payload(i, record), runs / name)
        files.append(f"runs/{name}")
    table = grid_table(records)
    table.to_csv(out / "results.csv", index=False)
    files.append("results.csv")
    _dump_json({"command": "grid", "data": str(args.data),
                "n_runs": len(records), "jobs": args.jobs, "files": files},
               out / "manifest.json")
    failures = [(r.config.label(), r.error) for r in records if r.error]
    print(f"{len(records)} runs -> {out / 'results.csv'} "
          f"({len(failures)} failed)")
    if failures:
        print(json.dumps({"error": "grid runs failed",
                          "failed": [{"label": l, "error": e}
                                     for l, e in failures]}),
              file=sys.stderr)
        return 3
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    metric = {"ir": "ir", "arc": "arc_pct", "arc_pct": "arc_pct"}.get(args.pivot)
    if metric is None:
        raise CliError(f"unknown pivot metric {args.pivot!r}")
    try:
        table = load_results_table(args.results)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if args.sizing:
        table = table[table["sizing"] == args.sizing]
        if len(table) == 0:
            raise CliError(f"no rows with sizing={args.sizing!r}")
    row_axis = None if args.row_axis == "auto" else args.row_axis
    try:
        pivot = pivot_table(table, metric=metric, row_axis=row_axis)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    name = args.name or f"pivot_{metric}"
    csv_path, svg_path = emit_heatmap(pivot, Path(args.out) / "reports", name,
                                      title=name)
    print(f"{csv_path}\n{svg_path}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Deterministic short-put backtesting: synthetic data, "
                    "single runs, parameter grids, and heatmap reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--start", default="2022-01-03")
    p.add_argument("--days", type=int, default=504)
    p.add_argument("--minutes", type=int, default=390)
    p.add_argument("--s0", type=float, default=4000.0)
    p.add_argument("--sigma", type=float, default=0.2,
                   help="realized volatility of the index path")
    p.add_argument("--drift", type=float, default=0.05)
    p.add_argument("--implied-sigma", type=float, default=None,
                   help="volatility used to quote options (default: sigma)")
    p.add_argument("--rate", type=float, default=0.02)
    p.add_argument("--div-yield", type=float, default=0.015)
    p.add_argument("--spread", type=float, default=0.01,
                   help="bid-ask spread as a fraction of mid")
    p.add_argument("--expiry-every", type=int, default=1,
                   help="trading days between listed expiries")
    p.add_argument("--max-quote-dte", type=int, default=8)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("backtest", help="run one configuration")
    p.add_argument("--data", required=True, help="dataset manifest or directory")
    p.add_argument("--config", required=True, help="strategy config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--label", default=None)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("grid", help="run a parameter sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True,
                   help="JSON with 'base' and 'axes' members")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", help="pivot grid results into heatmaps")
    p.add_argument("--results", required=True, help="consolidated results CSV")
    p.add_argument("--pivot", default="ir", help="ir or arc")
    p.add_argument("--out", required=True)
    p.add_argument("--row-axis", choices=("auto", "estimator", "vix"),
                   default="auto")
    p.add_argument("--sizing", default=None,
                   help="restrict to one sizing family before pivoting")
    p.add_argument("--name", default=None, help="output file base name")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        if code != 0:
            print(json.dumps({"error": "bad arguments", "argv": list(argv or sys.argv[1:])}),
                  file=sys.stderr)
        return code
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc), "command": args.command}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        print(json.dumps({"error": f"{type(exc).__name__}: {exc}",
                          "command": args.command}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
