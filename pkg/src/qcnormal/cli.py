"""Command line front end: qcnormal <task> [options].

Exit status is 0 iff every pass/fail flag of the run holds.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, ManifestMismatch, QCNormalError
from .export import json_text
from .maps import MoebiusPower, Perturbed, PowerSeries, dumps_map, moebius_map, power_map
from .report import (
    ENV_OUT,
    ExperimentConfig,
    GridParams,
    MotionParams,
    default_output_root,
    load_config,
    run,
    verify_bundle,
)
from .validation import check_map

PRESETS = {
    "moebius": lambda: moebius_map(0.5, 1.0),
    "quadratic": lambda: PowerSeries((0.5, 1.0), radius=1.0),
    "repelling": lambda: PowerSeries((2.0, 1.0), radius=1.0),
    "q2": lambda: power_map(2),
    "q3": lambda: power_map(3),
    "moebius-power": lambda: MoebiusPower(2, 1.0),
    "perturbed": lambda: Perturbed(PowerSeries((0.5,), radius=2.0), 0.1, 1.0),
}

# per-task default grids: (r_min, r_max, rings)
GRID_DEFAULTS = {
    "classify": (1e-3, 0.1, 12),
    "koenig": (1e-3, 0.1, 12),
    "boettcher": (1e-3, 0.1, 12),
    "omega": (1e-4, 1.0, 41),
    "motion": (1e-3, 0.1, 12),
}
DEFAULT_MAP = {
    "classify": "moebius",
    "koenig": "moebius",
    "boettcher": "moebius-power",
    "omega": "perturbed",
    "motion": "moebius",
}


def _load_map(text: str):
    if text in PRESETS:
        return PRESETS[text]()
    return check_map(text)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", metavar="DIR", help=f"output directory (default: ${ENV_OUT} or ./qcnormal-out, plus the task name)")
    p.add_argument("--svg", action="store_true", help="also write SVG plots")
    p.add_argument("--depth", metavar="N", type=int, help="iteration cap per node")
    p.add_argument("--tol", metavar="X", type=float, help="convergence tolerance")
    p.add_argument("--threads", type=int, default=1, help="tasks run on this many threads")


def _add_map(p: argparse.ArgumentParser, task: str):
    p.add_argument(
        "--map",
        default=DEFAULT_MAP[task],
        help=f"preset name ({', '.join(PRESETS)}), inline JSON or a JSON file (default: {DEFAULT_MAP[task]})",
    )
    r_min, r_max, rings = GRID_DEFAULTS[task]
    p.add_argument("--r-min", type=float, default=r_min)
    p.add_argument("--r-max", type=float, default=r_max)
    p.add_argument("--rings", type=int, default=rings)
    p.add_argument("--angles", type=int, default=64)
    if task == "motion":
        p.add_argument("--radius", type=float, help="radius r of the moved circle pair")
        p.add_argument("--delta", type=float, help="control radius delta (Koenigs motions)")
        p.add_argument("--samples", type=int, default=64, help="points per circle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcnormal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for task in ("classify", "koenig", "boettcher", "omega", "motion"):
        p = sub.add_parser(task, help=f"run the {task} task")
        _add_map(p, task)
        _add_common(p)
    p = sub.add_parser("run", help="run an experiment config (JSON)")
    p.add_argument("config")
    _add_common(p)
    p = sub.add_parser("verify", help="re-check a run directory")
    p.add_argument("dir")
    p = sub.add_parser("show-map", help="print the JSON form of a preset")
    p.add_argument("name", choices=sorted(PRESETS))
    return parser


def _budget_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    budget = cfg.budget
    if args.depth is not None:
        budget = replace(budget, max_iterations=args.depth)
    if args.tol is not None:
        budget = replace(budget, tolerance=args.tol)
    return replace(
        cfg,
        budget=budget,
        emit_svg=cfg.emit_svg or args.svg,
        output_dir=Path(args.out) if args.out else cfg.output_dir,
        threads=max(cfg.threads, args.threads),
    )


def _config_from_args(args) -> ExperimentConfig:
    task = args.command
    motion = MotionParams()
    if task == "motion":
        motion = MotionParams(r=args.radius, delta=args.delta, samples=args.samples)
    cfg = ExperimentConfig(
        map=_load_map(args.map),
        task=task,
        grid=GridParams(args.r_min, args.r_max, args.rings, args.angles),
        output_dir=default_output_root() / task,
        motion=motion,
    )
    return _budget_overrides(cfg, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "show-map":
            sys.stdout.write(dumps_map(PRESETS[args.name]()) + "\n")
            return 0
        if args.command == "verify":
            res = verify_bundle(args.dir)
            for p in res.problems:
                print(f"FAIL {p}")
            print("OK" if res.ok else "FAILED")
            return 0 if res.ok else 1
        if args.command == "run":
            cfg = _budget_overrides(load_config(args.config), args)
        else:
            cfg = _config_from_args(args)
        manifest = run(cfg)
    except (ConfigError, ManifestMismatch, QCNormalError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = {name: {"flags": t["flags"], "error": t["error"], "summary": t["summary"]} for name, t in manifest.tasks.items()}
    sys.stdout.write(json_text({"output_dir": str(cfg.output_dir), "passed": manifest.passed, "tasks": out}))
    return 0 if manifest.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
