"""Outcome-probability sweeps over v and r for the two three-model scenarios.

Writes one CSV per panel: scenario 1 and 2, each varying v at r=0.01 and r at v=0.01.
"""
import argparse
import csv
import sys
from pathlib import Path

from sbomm.analysis import benchmark_scenario, sweep

PANELS = {
    "a": (1, "v"),
    "b": (1, "r"),
    "c": (2, "v"),
    "d": (2, "r"),
}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/sweeps")
    p.add_argument("--fixed", type=float, default=0.01)
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for panel, (which, axis) in PANELS.items():
        rows = sweep(benchmark_scenario(which), axis, args.fixed)
        path = out / f"panel_{panel}_scenario{which}_{axis}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "p_correct", "p_incorrect", "p_inconsistent"])
            w.writerows(rows)
        peak = max(rows, key=lambda r: r[1])
        print(f"{path.name}: max p_correct {peak[1]:.4f} at {axis}={peak[0]:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
