"""Sweep the episode horizon and tabulate how each strategy's averages move.

Runs the selected preset across a horizon grid and a block of seeds, then
writes one CSV row per (horizon, strategy) with seed-averaged metrics and
standard errors.  The CSV is plotting-ready; nothing here renders figures.

Usage:
    python3 scripts/horizon_sweep.py --preset scenario1 --out results/sweep
    python3 scripts/horizon_sweep.py --preset myopic --horizons 5,10,20,40,80
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import statistics
from pathlib import Path

from hetmarket.engine import MYOPIC, PopulationConfig, SimulationConfig, run_simulation
from hetmarket.scenario import PRESETS, preset

FIELDS = ("gross_utility", "net_utility", "channels_won", "bid_precision")


def baseline_config() -> SimulationConfig:
    return SimulationConfig(
        population=PopulationConfig(num_ues=40, strategy_counts={MYOPIC: 40})
    )


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--preset", default="myopic", choices=("myopic",) + PRESETS,
        help="population to sweep; 'myopic' is a 40-agent homogeneous baseline",
    )
    parser.add_argument("--horizons", default="5,10,20,40,80",
                        help="comma-separated episode counts")
    parser.add_argument("--seeds", type=int, default=20, help="seeds per horizon")
    parser.add_argument("--out", default="results/horizon_sweep",
                        help="output directory")
    return parser.parse_args()


def strategy_rows(config: SimulationConfig) -> dict[str, dict[str, float]]:
    """Per-strategy seed-level means for one simulation run."""
    per_ue = run_simulation(config).metrics.per_ue
    rows: dict[str, dict[str, float]] = {}
    for strategy in sorted({m.strategy for m in per_ue}):
        group = [m for m in per_ue if m.strategy == strategy]
        values: dict[str, float] = {}
        for field in FIELDS:
            samples = [getattr(m, field) for m in group]
            samples = [s for s in samples if s is not None]
            values[field] = statistics.mean(samples) if samples else math.nan
        rows[strategy] = values
    return rows


def main() -> None:
    args = parse_args()
    horizons = [int(tok) for tok in args.horizons.split(",") if tok.strip()]
    base = baseline_config() if args.preset == "myopic" else preset(args.preset)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{args.preset}_horizon_sweep.csv"

    header = ["episodes", "strategy", "seeds"]
    for field in FIELDS:
        header += [f"{field}_mean", f"{field}_stderr"]

    with out_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for episodes in horizons:
            samples: dict[str, dict[str, list[float]]] = {}
            for seed in range(args.seeds):
                config = dataclasses.replace(base, episodes=episodes, seed=seed)
                for strategy, values in strategy_rows(config).items():
                    bucket = samples.setdefault(
                        strategy, {field: [] for field in FIELDS}
                    )
                    for field in FIELDS:
                        if not math.isnan(values[field]):
                            bucket[field].append(values[field])
            for strategy in sorted(samples):
                row: list[object] = [episodes, strategy, args.seeds]
                for field in FIELDS:
                    points = samples[strategy][field]
                    if not points:
                        row += ["", ""]
                        continue
                    mean = statistics.mean(points)
                    stderr = (
                        statistics.stdev(points) / math.sqrt(len(points))
                        if len(points) > 1 else 0.0
                    )
                    row += [f"{mean:.6f}", f"{stderr:.6f}"]
                writer.writerow(row)
            print(f"episodes={episodes}: {', '.join(sorted(samples))}")

    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
