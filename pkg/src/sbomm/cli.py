"""Command-line front end: run, sweep, cases, oracle, validate.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis
from .consistency import ConsistencyParams
from .engine import ConfigError, RunConfig, SolutionSet, run
from .models import MODELS, TruthRaster, get_model, truth_oracle
from .space import Box
from .validate import agreement_report

log = logging.getLogger("sbomm")


class UsageError(Exception):
    """Invalid user input; reported with exit code 2."""


# --- serialization -------------------------------------------------------

def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    s = f"{x:.17g}"
    if not any(ch in s for ch in ".e"):
        s += ".0"
    return s


def _emit(obj, depth: int, inline_from: int) -> str:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    inline = depth >= inline_from
    pad = "" if inline else "\n" + "  " * (depth + 1)
    end = "" if inline else "\n" + "  " * depth
    sep = ", " if inline else ","
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, depth + 1, inline_from)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}" if items else "{}"
    if isinstance(obj, (list, tuple)):
        items = [f"{pad}{_emit(v, depth + 1, inline_from)}" for v in obj]
        return "[" + sep.join(items) + end + "]" if items else "[]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """JSON with 17-significant-digit floats; nested containers below depth 2 on one line."""
    return _emit(obj, 0, 2) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def solution_to_dict(sol: SolutionSet) -> dict:
    regions = []
    for rec in sol.records:
        regions.append({
            "id": rec.id,
            "box": rec.box.to_dict(),
            "verdict": str(rec.verdict),
            "scores": [float(s) for s in rec.scores] if rec.scores is not None else [],
            "per_model": [{"label": s.label, "p": s.p} for s in rec.states],
            "decided_at": rec.decided_at,
        })
    return {
        "config": sol.config.to_dict(),
        "iterations": sol.iterations_used,
        "stopped_by": sol.stopped_by,
        "regions": regions,
        "volume_by_verdict": dict(sol.volume_by_verdict),
    }


TRACE_COLUMNS = ["iteration", "leaves", "frozen_class1_volume_fraction",
                 "frozen_class2_volume_fraction", "model_evaluations_total"]


def trace_csv(sol: SolutionSet) -> str:
    return _csv_text(TRACE_COLUMNS, ([row[c] for c in TRACE_COLUMNS] for row in sol.trace))


# --- helpers ---------------------------------------------------------------

def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def load_run_config(path, seed: int | None = None) -> RunConfig:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    if seed is not None:
        data = dict(data, master_seed=seed)
    try:
        return RunConfig.from_dict(data)
    except ConfigError as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_scenario(path) -> analysis.Scenario:
    try:
        return analysis.Scenario.from_dict(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: invalid scenario: {exc}") from None


def parse_grid(spec: str | None, N: int) -> np.ndarray:
    """'start:stop:count' (inclusive linspace), a comma list, or None for the default grid."""
    if spec is None:
        grid = analysis.default_grid(N)
    else:
        try:
            if ":" in spec:
                a, b, n = spec.split(":")
                grid = np.linspace(float(a), float(b), int(n))
            else:
                grid = np.array([float(x) for x in spec.split(",")])
        except ValueError:
            raise UsageError(f"malformed grid {spec!r}") from None
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > N):
        raise UsageError(f"grid values must lie in (0, {N}]")
    return grid


# --- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_run_config(args.config, args.seed)
    sol = run(cfg, threads=args.threads)
    out = Path(args.out)
    write_atomic(out / "solution.json", dumps_canonical(solution_to_dict(sol)))
    write_atomic(out / "trace.csv", trace_csv(sol))
    print(f"{sol.iterations_used} iterations ({sol.stopped_by}); class-1 fraction "
          f"{sol.fraction('consistent:1'):.4f}; wrote {out / 'solution.json'}")
    return 0


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    grid = parse_grid(args.grid, scenario.N)
    if not 0 < args.fixed <= scenario.N:
        raise UsageError(f"fixed value must lie in (0, {scenario.N}]")
    rows = analysis.sweep(scenario, args.axis, args.fixed, grid)
    text = _csv_text(["param", "p_correct", "p_incorrect", "p_inconsistent"], rows)
    _write_or_print(args.out, text)
    return 0


def cmd_cases(args) -> int:
    scenario = load_scenario(args.scenario)
    try:
        params = ConsistencyParams(args.v, args.r)
        params.check(scenario.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = ([f"Y{n + 1}" for n in range(scenario.N)] + ["probability"]
              + [f"C{k + 1}" for k in range(scenario.K)] + ["verdict"])
    rows = [list(r["case"]) + [r["probability"]] + r["scores"] + [r["verdict"]]
            for r in analysis.case_table(scenario, params)]
    _write_or_print(args.out, _csv_text(header, rows))
    return 0


def cmd_oracle(args) -> int:
    if args.resolution < 64:
        raise UsageError("resolution must be at least 64")
    try:
        model = get_model(args.model)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if not 0 < args.delta < 1:
        raise UsageError("delta must lie in (0, 1)")
    raster = truth_oracle(model, args.delta, args.resolution)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.", suffix=".tmp")
    os.close(fd)
    try:
        raster.to_csv(tmp)
        os.replace(tmp, out)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    print(f"{model.name}: threshold {raster.threshold:.6g}, member fraction {raster.member_fraction:.4f}")
    return 0


def cmd_validate(args) -> int:
    sol = _load_json(args.solution)
    try:
        cfg = RunConfig.from_dict(sol["config"])
        regions = [(Box.from_dict(r["box"]), r["verdict"]) for r in sol["regions"]]
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.solution}: malformed solution: {exc}") from None
    if len(args.oracle) != len(cfg.models):
        raise UsageError(f"expected {len(cfg.models)} oracle files (one per model, in config order)")
    rasters = []
    for name, path in zip(cfg.models, args.oracle):
        try:
            raster = TruthRaster.from_csv(path, name)
        except (OSError, ValueError) as exc:
            raise UsageError(f"{path}: {exc}") from None
        if not (np.allclose(raster.domain.lower, cfg.domain.lower)
                and np.allclose(raster.domain.upper, cfg.domain.upper)):
            raise UsageError(f"{path}: raster domain {raster.domain} does not match run domain {cfg.domain}")
        rasters.append(raster)
    try:
        params = ConsistencyParams(args.v if args.v is not None else cfg.consistency.v,
                                   args.r if args.r is not None else cfg.consistency.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = agreement_report(regions, rasters, params)
    for verdict, entry in report.items():
        print(f"{verdict:>14}  volume {entry['volume']:.6g}  agreement {entry['agreement']:.4f}")
    if args.out:
        write_atomic(args.out, dumps_canonical(report))
    return 0


def _write_or_print(path, text: str) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbomm", description="Set-based optimization with multiple models.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the partition/consistency loop")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override master_seed")
    r.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="outcome probabilities along a v or r grid")
    s.add_argument("--scenario", required=True)
    s.add_argument("--axis", choices=["v", "r"], required=True)
    s.add_argument("--fixed", type=float, required=True, help="value of the other parameter")
    s.add_argument("--grid", default=None, help="start:stop:count or comma list (default 300 points on (0, N])")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("cases", help="dump the case/score/verdict table of a scenario")
    c.add_argument("--scenario", required=True)
    c.add_argument("--v", type=float, required=True)
    c.add_argument("--r", type=float, required=True)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_cases)

    o = sub.add_parser("oracle", help="grid truth raster for one model")
    o.add_argument("--model", required=True, choices=sorted(MODELS))
    o.add_argument("--delta", type=float, default=0.2)
    o.add_argument("--resolution", type=int, default=512)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="ideal-classifier agreement of a solution")
    v.add_argument("--solution", required=True)
    v.add_argument("--oracle", action="append", required=True, help="raster CSV, one per model in config order")
    v.add_argument("--v", type=float, default=None)
    v.add_argument("--r", type=float, default=None)
    v.add_argument("--out", default=None, help="optional JSON report path")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    level = os.environ.get("SBOMM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
