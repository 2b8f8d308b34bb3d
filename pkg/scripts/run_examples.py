"""Multi-seed runs of a bundled example with per-run and summary statistics.

    python scripts/run_examples.py --example 1 --seeds 0:20 --out results/ex1.csv
"""
import argparse
import csv
import statistics
import sys
import time
from pathlib import Path

from sbomm.cli import load_run_config
from sbomm.engine import run
from sbomm.models import truth_oracle
from sbomm.validate import solution_agreement

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
COLUMNS = ["seed", "iterations", "stopped_by", "class1_fraction", "class2_fraction",
           "inconsistent_fraction", "class1_agreement", "evaluations", "seconds"]


def parse_seeds(text):
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b)))
    return [int(s) for s in text.split(",")]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--example", type=int, choices=[1, 2], default=1)
    p.add_argument("--config", default=None, help="run config JSON (overrides --example)")
    p.add_argument("--seeds", default="0:20", help="start:stop or comma list")
    p.add_argument("--resolution", type=int, default=512, help="grid oracle resolution")
    p.add_argument("--out", default=None, help="per-run CSV")
    args = p.parse_args(argv)

    config = args.config or CONFIGS / f"example{args.example}.json"
    rows, rasters = [], None
    for seed in parse_seeds(args.seeds):
        cfg = load_run_config(config, seed)
        if rasters is None:
            rasters = [truth_oracle(s, cfg.classifier.delta, args.resolution) for s in cfg.specs]
        t0 = time.perf_counter()
        sol = run(cfg)
        secs = time.perf_counter() - t0
        agree = solution_agreement(sol, rasters=rasters).get("consistent:1", {}).get("agreement", float("nan"))
        row = [seed, sol.iterations_used, sol.stopped_by, sol.fraction("consistent:1"),
               sol.fraction("consistent:2"), sol.fraction("inconsistent"), agree,
               sol.trace[-1]["model_evaluations_total"], round(secs, 2)]
        rows.append(row)
        print(" ".join(f"{c}={v:.4f}" if isinstance(v, float) else f"{c}={v}" for c, v in zip(COLUMNS, row)))

    iters = [r[1] for r in rows]
    print(f"iterations: median {statistics.median(iters)}, max {max(iters)}; "
          f"volume stops {sum(r[2] == 'volume' for r in rows)}/{len(rows)}; "
          f"class-1 fraction mean {statistics.mean(r[3] for r in rows):.4f}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
