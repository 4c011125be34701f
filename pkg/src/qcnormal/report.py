"""Experiment configs, the task pipeline, run manifests and bundle verification.

A run computes every requested task (optionally on a thread pool), collects
the artifacts in memory and writes them from a single thread in a fixed
order, then writes ``manifest.json`` last. Artifacts never contain timings,
so identical configs give byte-identical CSV and JSON payloads.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .boettcher import boettcher_coordinate, boettcher_uniqueness, normalize_leading
from .dilatation import beltrami_field, dilatation_K, omega_curve, ModulusCurve
from .errors import BranchFailure, ConfigError, ManifestMismatch, QCNormalError
from .export import json_text, read_csv
from .grids import PolarGrid
from .koenigs import (
    ATTRACTING,
    REPELLING,
    SUPERATTRACTING,
    classify_fixed_point,
    koenigs_coordinate,
    uniqueness_check,
)
from .maps import EvalBudget, MapSpec, map_from_dict
from .motion import (
    build_motion_boettcher,
    build_motion_koenig,
    check_motion_axioms,
    extend_motion_radial,
)
from . import svg

TASKS = ("classify", "koenig", "boettcher", "omega", "motion", "verify", "all")
ENV_OUT = "QCNORMAL_OUT"
DEFAULT_OUT = "qcnormal-out"
MANIFEST = "manifest.json"

KOENIG_UNIQUENESS_TOL = 1e-8
BOETTCHER_UNIQUENESS_TOL = 1e-7
EXTENSION_C = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)


def default_output_root() -> Path:
    return Path(os.environ.get(ENV_OUT, DEFAULT_OUT))


@dataclass(frozen=True)
class GridParams:
    r_min: float = 1e-3
    r_max: float = 0.1
    rings: int = 12
    angles: int = 64

    def build(self) -> PolarGrid:
        return PolarGrid.logspace(self.r_min, self.r_max, self.rings, self.angles)

    def refined(self) -> PolarGrid:
        """Grid sharing every node of ``build()`` with twice the density."""
        return PolarGrid.logspace(self.r_min, self.r_max, 2 * self.rings - 1, 2 * self.angles)


@dataclass(frozen=True)
class MotionParams:
    r: float | None = None
    delta: float | None = None
    samples: int = 64


@dataclass(frozen=True)
class ExperimentConfig:
    map: MapSpec
    task: str = "all"
    grid: GridParams = GridParams()
    budget: EvalBudget = EvalBudget()
    output_dir: Path = field(default_factory=default_output_root)
    emit_svg: bool = False
    motion: MotionParams = MotionParams()
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        self.validate()

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        g = self.grid
        if not 0 < g.r_min < g.r_max:
            raise ConfigError("grid needs 0 < r_min < r_max")
        if g.r_max > self.map.radius:
            raise ConfigError(f"grid radius {g.r_max} exceeds the map's validity radius {self.map.radius}")
        if g.rings < 2 or g.angles < 8:
            raise ConfigError("grid needs at least 2 rings and 8 angles per ring")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def to_dict(self) -> dict:
        return {
            "map": self.map.to_dict(),
            "task": self.task,
            "grid": vars(self.grid).copy(),
            "budget": self.budget.to_dict(),
            "output_dir": str(self.output_dir),
            "emit_svg": self.emit_svg,
            "motion": vars(self.motion).copy(),
            "threads": self.threads,
        }

    @property
    def config_hash(self) -> str:
        """sha256 of the experiment itself (output location and threads excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        try:
            m = d["map"]
            m = m if isinstance(m, MapSpec) else map_from_dict(m)
            out = d.get("output_dir")
            if out is None:
                out = default_output_root()
            elif base_dir is not None and not Path(out).is_absolute():
                out = base_dir / out
            return cls(
                map=m,
                task=d.get("task", "all"),
                grid=GridParams(**d.get("grid", {})),
                budget=EvalBudget(**d.get("budget", {})),
                output_dir=Path(out),
                emit_svg=bool(d.get("emit_svg", False)),
                motion=MotionParams(**(d.get("motion") or {})),
                threads=int(d.get("threads", 1)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(d, base_dir=path.parent)


@dataclass
class TaskResult:
    name: str
    summary: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.flags.values())


# -- tasks -------------------------------------------------------------------

def _task_classify(cfg: ExperimentConfig, res: TaskResult):
    rep = classify_fixed_point(cfg.map, cfg.budget)
    res.summary.update(rep.summary())
    res.flags["conclusive"] = not rep.inconclusive
    res.files["classify.json"] = json_text(rep.summary())


def _coordinate_flags(res, cg, tol):
    res.flags["converged"] = cg.all_converged
    res.flags["residual_ok"] = bool(cg.max_residual <= 10 * tol)


def _task_koenig(cfg: ExperimentConfig, res: TaskResult):
    grid = cfg.grid.build()
    cg = koenigs_coordinate(cfg.map, grid, cfg.budget)
    tight = replace(cfg.budget, tolerance=cfg.budget.tolerance / 10)
    cg2 = koenigs_coordinate(cfg.map, cfg.grid.refined(), tight)
    ratio, dev = uniqueness_check(cg, cg2)
    res.summary.update(cg.summary())
    res.summary.update({"uniqueness_ratio": ratio, "uniqueness_dev": dev})
    _coordinate_flags(res, cg, cfg.budget.tolerance)
    res.flags["uniqueness_ok"] = bool(dev < KOENIG_UNIQUENESS_TOL)
    res.files["koenig.csv"] = cg.to_csv()
    if cfg.emit_svg:
        res.files["koenig_residual.svg"] = svg.polar_heatmap(grid, cg.residual, "Koenigs residual |psi(f z) - lambda psi(z)|")


def _task_boettcher(cfg: ExperimentConfig, res: TaskResult):
    grid = cfg.grid.build()
    br = boettcher_coordinate(cfg.map, grid, cfg.budget)
    tight = replace(cfg.budget, tolerance=cfg.budget.tolerance / 10)
    br2 = boettcher_coordinate(cfg.map, cfg.grid.refined(), tight)
    root, dev = boettcher_uniqueness(br.psi, br2.psi, br.n)
    res.summary.update(br.summary())
    res.summary.update({"uniqueness_root_index": root, "uniqueness_dev": dev})
    _coordinate_flags(res, br.psi, cfg.budget.tolerance)
    res.flags["uniqueness_ok"] = bool(dev < BOETTCHER_UNIQUENESS_TOL)
    res.flags["factors_near_one"] = bool(br.max_factor_distance < 0.5)
    res.files["boettcher.csv"] = br.psi.to_csv()
    if cfg.emit_svg:
        res.files["boettcher_residual.svg"] = svg.polar_heatmap(grid, br.residual, "Boettcher residual |psi(g z) - psi(z)^n|")


def _task_omega(cfg: ExperimentConfig, res: TaskResult):
    grid = cfg.grid.build()
    fld = beltrami_field(cfg.map, grid)
    curve = omega_curve(fld)
    sup = fld.sup()
    res.summary.update(curve.summary())
    res.summary.update(
        {
            "sup_abs_mu": sup,
            "K": dilatation_K(sup) if sup < 1 else math.inf,
            "n_invalid": fld.n_invalid,
            "fd_step": fld.fd_step,
        }
    )
    res.flags["quasiconformal"] = bool(sup < 1)
    res.files["beltrami.csv"] = fld.to_csv()
    res.files["omega.csv"] = curve.to_csv()
    if cfg.emit_svg:
        res.files["omega.svg"] = svg.omega_plot(curve)
        res.files["mu_heatmap.svg"] = svg.polar_heatmap(grid, fld.abs_mu, "|mu| on the polar grid")


def _motion_setup(cfg: ExperimentConfig):
    rep = classify_fixed_point(cfg.map, cfg.budget)
    mp = cfg.motion
    if rep.fp_class == ATTRACTING:
        delta = mp.delta if mp.delta is not None else cfg.grid.r_max
        r = mp.r if mp.r is not None else delta / 2
        return build_motion_koenig(cfg.map, r, delta, mp.samples), {"delta": delta}
    if rep.fp_class == SUPERATTRACTING:
        b, gt = normalize_leading(cfg.map)
        n = rep.local_degree
        r = mp.r if mp.r is not None else min(0.01, 0.5 ** (n / (n - 1)))
        return build_motion_boettcher(gt, r, mp.samples, budget=cfg.budget), {"b": b, "n": n}
    raise ConfigError(f"motion task needs an attracting or superattracting point, got {rep.fp_class}")


def _task_motion(cfg: ExperimentConfig, res: TaskResult):
    ms, extra = _motion_setup(cfg)
    axioms = check_motion_axioms(ms)
    res.summary.update({"kind": ms.kind, "r": ms.r, **extra})
    res.summary["axioms"] = axioms.summary()
    res.flags["axioms"] = axioms.passed
    rows, skipped = [], []
    ext_csv = []
    for a in EXTENSION_C:
        try:
            ext = extend_motion_radial(ms, c_values=[a])
        except BranchFailure:
            skipped.append(a)
            continue
        rows.extend(ext.dilatation_table())
        ext_csv.append(ext)
    res.summary["extension"] = rows
    res.summary["extension_skipped_abs_c"] = skipped
    res.flags["measured_k_below_1"] = bool(rows) and all(r["measured_k"] < 1 for r in rows)
    res.files["motion.csv"] = ms.to_csv()
    res.files["motion_axioms.json"] = json_text(axioms.summary())
    if ext_csv:
        body = [e.to_csv().split("\n", 1) for e in ext_csv]
        res.files["extension.csv"] = body[0][0] + "\n" + "".join(b[1] for b in body)
    if cfg.emit_svg and rows:
        res.files["dilatation.svg"] = svg.dilatation_plot(
            [r["abs_c"] for r in rows], [r["measured_K"] for r in rows], [r["bound_K"] for r in rows]
        )


def _task_verify(cfg: ExperimentConfig, res: TaskResult):
    vr = verify_bundle(cfg.output_dir)
    res.summary["problems"] = vr.problems
    res.flags["bundle_ok"] = vr.ok


_TASK_FUNCS = {
    "classify": _task_classify,
    "koenig": _task_koenig,
    "boettcher": _task_boettcher,
    "omega": _task_omega,
    "motion": _task_motion,
}


def expand_tasks(cfg: ExperimentConfig) -> list:
    if cfg.task != "all":
        return [cfg.task]
    cls = classify_fixed_point(cfg.map, cfg.budget).fp_class
    tasks = ["classify"]
    if cls in (ATTRACTING, REPELLING) and cfg.map.analytic:
        tasks.append("koenig")
    if cls == SUPERATTRACTING and cfg.map.analytic:
        tasks.append("boettcher")
    tasks.append("omega")
    if cls in (ATTRACTING, SUPERATTRACTING) and cfg.map.analytic:
        tasks.append("motion")
    return tasks


def _run_task(name: str, cfg: ExperimentConfig) -> TaskResult:
    res = TaskResult(name)
    t0 = time.perf_counter()
    try:
        _TASK_FUNCS[name](cfg, res)
    except (QCNormalError, ValueError, ArithmeticError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        res.files = {}
    res.wall_time = time.perf_counter() - t0
    return res


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    config: dict
    config_hash: str
    version: str
    tasks: dict
    files: dict
    wall_time: float

    @property
    def passed(self) -> bool:
        return all(t["error"] is None and all(t["flags"].values()) for t in self.tasks.values())

    def to_dict(self) -> dict:
        return {
            "tool": "qcnormal",
            "version": self.version,
            "config": self.config,
            "config_hash": self.config_hash,
            "tasks": self.tasks,
            "files": self.files,
            "wall_time": self.wall_time,
            "passed": self.passed,
        }


def _writable(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")


def run(cfg: ExperimentConfig) -> RunManifest:
    """Execute the configured tasks and write artifacts plus ``manifest.json``."""
    t0 = time.perf_counter()
    out = cfg.output_dir
    _writable(out)
    if cfg.task == "verify":
        res = TaskResult("verify")
        _task_verify(cfg, res)
        return RunManifest(cfg.to_dict(), cfg.config_hash, __version__, {"verify": _task_entry(res)}, {}, time.perf_counter() - t0)
    names = expand_tasks(cfg)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda n: _run_task(n, cfg), names))
    else:
        results = [_run_task(n, cfg) for n in names]
    files = {}
    # single writer, fixed order
    for res in results:
        for fname in sorted(res.files):
            if fname in files:
                raise ConfigError(f"two tasks produced {fname}")
            path = out / fname
            path.write_text(res.files[fname])
            files[fname] = sha256_file(path)
    manifest = RunManifest(
        cfg.to_dict(),
        cfg.config_hash,
        __version__,
        {res.name: _task_entry(res) for res in results},
        files,
        time.perf_counter() - t0,
    )
    (out / MANIFEST).write_text(json_text(manifest.to_dict()))
    return manifest


def _task_entry(res: TaskResult) -> dict:
    return {
        "summary": res.summary,
        "flags": res.flags,
        "error": res.error,
        "wall_time": res.wall_time,
        "files": sorted(res.files),
    }


# -- verification ------------------------------------------------------------

@dataclass
class VerifyResult:
    ok: bool
    problems: list

    def __bool__(self):
        return self.ok


def _recheck(task: str, entry: dict, cfg: dict, out: Path) -> list:
    """Re-assert recorded numbers from the stored artifacts."""
    problems = []
    tol = cfg["budget"]["tolerance"]
    csv_name = {"koenig": "koenig.csv", "boettcher": "boettcher.csv"}.get(task)
    if csv_name and (out / csv_name).exists():
        resid = read_csv(out / csv_name)["residual"]
        resid = resid[np.isfinite(resid)]
        worst = float(resid.max()) if resid.size else math.nan
        if not worst <= 10 * tol:
            problems.append(f"{csv_name}: stored residual {worst:.3e} exceeds 10 x tolerance {tol:.1e}")
        recorded = entry["summary"].get("max_residual")
        if recorded is not None and worst != recorded:
            problems.append(f"{csv_name}: residual column disagrees with the manifest summary")
    if task == "omega" and (out / "omega.csv").exists():
        cols = read_csv(out / "omega.csv")
        curve = ModulusCurve.from_samples(cols["t"], cols["omega"])
        recorded = entry["summary"].get("integral_value")
        recomputed = curve.integral_value
        same = (recorded == "inf" and math.isinf(recomputed)) or (
            isinstance(recorded, float) and abs(recorded - recomputed) <= 1e-9 * max(1.0, abs(recomputed))
        )
        if not same:
            problems.append(f"omega.csv: integral recomputes to {recomputed!r}, manifest has {recorded!r}")
    if task == "motion" and (out / "motion_axioms.json").exists():
        ax = json.loads((out / "motion_axioms.json").read_text())
        if not ax.get("passed"):
            problems.append("motion_axioms.json: axioms report failed")
    return problems


def verify_bundle(directory) -> VerifyResult:
    """Check checksums, recorded flags and recomputable residuals of a run directory."""
    out = Path(directory)
    mpath = out / MANIFEST
    if not mpath.exists():
        raise FileNotFoundError(f"no {MANIFEST} in {out}")
    try:
        man = json.loads(mpath.read_text())
        files, tasks, cfg = man["files"], man["tasks"], man["config"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ManifestMismatch(f"{mpath}: malformed manifest ({exc})") from exc
    problems = []
    damaged = set()
    for fname in sorted(files):
        path = out / fname
        if not path.exists():
            problems.append(f"{fname}: missing")
            damaged.add(fname)
        elif sha256_file(path) != files[fname]:
            problems.append(f"{fname}: checksum mismatch")
            damaged.add(fname)
    for name in sorted(tasks):
        entry = tasks[name]
        if entry.get("error"):
            problems.append(f"task {name}: error {entry['error']}")
        for flag, value in sorted(entry.get("flags", {}).items()):
            if value is not True:
                problems.append(f"task {name}: flag {flag} failed")
        if damaged.intersection(entry.get("files", [])):
            continue
        try:
            problems.extend(_recheck(name, entry, cfg, out))
        except (ValueError, KeyError, QCNormalError) as exc:
            problems.append(f"task {name}: stored artifacts unreadable ({exc})")
    return VerifyResult(not problems, problems)


__all__ = [
    "TASKS",
    "ENV_OUT",
    "GridParams",
    "MotionParams",
    "ExperimentConfig",
    "load_config",
    "TaskResult",
    "RunManifest",
    "run",
    "verify_bundle",
    "VerifyResult",
    "default_output_root",
    "expand_tasks",
]
