"""Command-line front end: run one scenario or sweep an horizon grid.

Exit codes: 0 on success, 2 for configuration problems, 3 when a live LLM
endpoint is required but unreachable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

from .engine import (
    STRATEGIES,
    ConfigurationError,
    MetricsReport,
    SimulationConfig,
    SimulationReport,
    run_simulation,
)
from .llm_agent import ChatCompletionClient, LlmError
from .scenario import PRESETS, ScenarioError, load_scenario_file, preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENDPOINT = 3

METRICS_COLUMNS = [
    "run",
    "seed",
    "ue_id",
    "strategy",
    "episodes",
    "gross_utility",
    "net_utility",
    "channels_won",
    "bids_placed",
    "bid_precision",
    "fees_paid",
    "payments_paid",
    "fallbacks",
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetmarket",
        description="Repeated sealed-bid spectrum auctions in a two-tier cellular network.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log defaulted keys and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        source = p.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="scenario file path")
        source.add_argument("--preset", choices=PRESETS, help="built-in scenario")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--episodes", type=int, help="override rounds per run")
        p.add_argument("--jobs", type=int, help="parallel worker processes for runs")
        p.add_argument(
            "--offline",
            action="store_true",
            help="replace the LLM strategy with the deterministic stand-in; no network",
        )
        p.add_argument("--out", default="out", help="output directory (default: out)")

    run_p = sub.add_parser("run", help="execute one scenario")
    add_common(run_p)
    run_p.add_argument("--runs", type=int, help="override number of runs")
    run_p.add_argument(
        "--format",
        choices=("csv", "json", "both"),
        default="both",
        help="which metrics artifacts to write (rounds.jsonl is always written)",
    )

    sweep_p = sub.add_parser("sweep", help="run a horizon-by-seed grid")
    add_common(sweep_p)
    sweep_p.add_argument(
        "--horizons",
        default="5,10,20,40,80",
        help="comma-separated episode horizons (default: 5,10,20,40,80)",
    )
    sweep_p.add_argument(
        "--seeds", type=int, default=20, help="number of consecutive seeds (default: 20)"
    )
    return parser


def _load_config(args: argparse.Namespace) -> SimulationConfig:
    if args.preset:
        config = preset(args.preset)
    else:
        config = load_scenario_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "runs", None) is not None:
        overrides["runs"] = args.runs
    overrides["offline"] = bool(args.offline)
    return dataclasses.replace(config, **overrides)


def _uses_llm(config: SimulationConfig) -> bool:
    return config.population.strategy_counts.get("llm", 0) > 0


def _check_endpoint(config: SimulationConfig) -> str | None:
    """Return an error message when a required live endpoint is unreachable."""
    if config.offline or not _uses_llm(config):
        return None
    if not config.endpoint.base_url:
        return "no LLM endpoint configured; set [llm] base_url or pass --offline"
    client = ChatCompletionClient(config.endpoint)
    try:
        client.complete("Reply with the single word: ready")
    except LlmError as exc:
        return f"LLM endpoint unreachable ({exc}); pass --offline to use the stand-in"
    return None


def _fmt(value: object) -> str:
    if value is None:
        return ""
    return str(value)


def write_metrics_csv(path: str, report: SimulationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for m in report.metrics.per_ue:
            writer.writerow(
                [
                    m.run_index,
                    m.seed,
                    m.ue_id,
                    m.strategy,
                    m.episodes,
                    _fmt(m.gross_utility),
                    _fmt(m.net_utility),
                    m.channels_won,
                    m.bids_placed,
                    _fmt(m.bid_precision),
                    _fmt(m.fees_paid),
                    _fmt(m.payments_paid),
                    m.fallbacks,
                ]
            )


def _summary_payload(config: SimulationConfig, report: SimulationReport) -> dict:
    per_strategy = {
        name: dataclasses.asdict(summary)
        for name, summary in report.metrics.per_strategy.items()
    }
    return {
        "episodes": config.episodes,
        "runs": config.runs,
        "seed": config.seed,
        "offline": config.offline,
        "num_ues": config.population.num_ues,
        "strategy_counts": {
            s: config.population.strategy_counts.get(s, 0) for s in STRATEGIES
        },
        "per_strategy": per_strategy,
    }


def write_summary_json(path: str, config: SimulationConfig, report: SimulationReport) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_summary_payload(config, report), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_rounds_jsonl(path: str, report: SimulationReport) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for result in report.results:
            for log in result.rounds:
                record = {
                    "run": result.run_index,
                    "seed": result.seed,
                    "round": log.round_index,
                    "ues": [dataclasses.asdict(r) for r in log.ues],
                    "stations": [
                        {
                            "station_id": s.station_id,
                            "clearing_price": s.clearing_price,
                            "allocations": {str(k): v for k, v in s.allocations.items()},
                            "per_unit_payments": {
                                str(k): v for k, v in s.per_unit_payments.items()
                            },
                            "seller_utility_terms": {
                                str(k): v for k, v in s.seller_utility_terms.items()
                            },
                            "fees_collected": s.fees_collected,
                            "revenue": s.revenue,
                        }
                        for s in log.stations
                    ],
                }
                handle.write(json.dumps(record, sort_keys=True))
                handle.write("\n")


def _print_strategy_table(metrics: MetricsReport) -> None:
    for name in STRATEGIES:
        summary = metrics.per_strategy.get(name)
        if summary is None:
            continue
        precision = "n/a" if summary.avg_bid_precision is None else f"{summary.avg_bid_precision:.3f}"
        print(
            f"{name:>9}: gross={summary.avg_gross_utility:.3f}"
            f" net={summary.avg_net_utility:.3f}"
            f" channels={summary.avg_channels_won:.2f}"
            f" bids={summary.avg_bids_placed:.2f}"
            f" precision={precision}"
        )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ScenarioError, ConfigurationError) as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    endpoint_problem = _check_endpoint(config)
    if endpoint_problem is not None:
        print(endpoint_problem, file=sys.stderr)
        return EXIT_ENDPOINT

    try:
        report = run_simulation(config)
    except ConfigurationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    write_rounds_jsonl(os.path.join(args.out, "rounds.jsonl"), report)
    if args.format in ("csv", "both"):
        write_metrics_csv(os.path.join(args.out, "metrics.csv"), report)
    if args.format in ("json", "both"):
        write_summary_json(os.path.join(args.out, "summary.json"), config, report)
    _print_strategy_table(report.metrics)
    print(f"wrote {args.out}/")
    return EXIT_OK


def _sweep_columns() -> list[str]:
    columns = ["episodes", "seed"]
    for name in STRATEGIES:
        columns.extend(
            [
                f"{name}_gross_utility",
                f"{name}_net_utility",
                f"{name}_channels_won",
                f"{name}_bid_precision",
            ]
        )
    return columns


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        horizons = [int(part) for part in args.horizons.split(",") if part.strip()]
    except (ScenarioError, ConfigurationError) as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not horizons or any(h < 1 for h in horizons):
        print("config error: horizons must be positive integers", file=sys.stderr)
        return EXIT_CONFIG
    if args.seeds < 1:
        print("config error: seeds must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    endpoint_problem = _check_endpoint(config)
    if endpoint_problem is not None:
        print(endpoint_problem, file=sys.stderr)
        return EXIT_ENDPOINT

    rows = []
    base_seed = config.seed
    for horizon in horizons:
        for offset in range(args.seeds):
            cell = dataclasses.replace(
                config, episodes=horizon, seed=base_seed + offset, runs=1
            )
            try:
                report = run_simulation(cell)
            except ConfigurationError as exc:
                for problem in exc.problems:
                    print(f"config error: {problem}", file=sys.stderr)
                return EXIT_CONFIG
            row: dict[str, object] = {"episodes": horizon, "seed": cell.seed}
            for name in STRATEGIES:
                summary = report.metrics.per_strategy.get(name)
                row[f"{name}_gross_utility"] = None if summary is None else summary.avg_gross_utility
                row[f"{name}_net_utility"] = None if summary is None else summary.avg_net_utility
                row[f"{name}_channels_won"] = None if summary is None else summary.avg_channels_won
                row[f"{name}_bid_precision"] = None if summary is None else summary.avg_bid_precision
            rows.append(row)

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        columns = _sweep_columns()
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "run":
        return cmd_run(args)
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
