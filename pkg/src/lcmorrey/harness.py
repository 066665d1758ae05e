"""Scenario configuration, orchestration and report/plot emission."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import fld
from .generators import generate_field, power_decay_profile, self_similar_inputs
from .kernels import heat_gradient_table, oseen_table
from .mild import (
    Schedule,
    SolverConfig,
    contraction_exponent_fit,
    picard_solve,
    smoothing_estimate_check,
    uniqueness_experiment,
)
from .morrey import BallSampling, MorreyParams, check_decay_condition, morrey_norm
from .selftest import operator_checks
from .spectral import Field, GridSpec
from .stationary import (
    WeakSolutionTriplet,
    bootstrap_derivatives,
    integral_identity_check,
    mhd_residual,
    nse_mode,
    pressure_from_UV,
    regularity_report,
    residual_very_weak,
)

SCHEMA = "rr-1"
SCENARIOS = (
    "operators_selftest",
    "morrey_sweep",
    "decay_check",
    "mild_solve",
    "contraction_fit",
    "uniqueness",
    "stationary_verify",
    "bootstrap",
    "nse",
    "mhd",
)

DEFAULT_FIELDS = {
    "operators_selftest": {},
    "morrey_sweep": {"f": "power_decay(p=4)"},
    "decay_check": {"U": "power_decay(p=4, rank=1)", "gradV": "zero(rank=2)"},
    "mild_solve": {"u0": "random_solenoidal(kmax=3, amp=0.001)", "V0": "zero(rank=2)", "director": "constant(rank=1)"},
    "contraction_fit": {"director": "constant(rank=1)"},
    "uniqueness": {"u0": "random_solenoidal(kmax=3, amp=0.001)", "V0": "zero(rank=2)", "director": "constant(rank=1)"},
    "stationary_verify": {"U": "zero(rank=1)", "V": "harmonic_map(k=1)"},
    "bootstrap": {"U": "zero(rank=1)", "V": "harmonic_map(k=1)"},
    "nse": {"U": "zero(rank=1)"},
    "mhd": {"U": "beltrami(k=1, amp=0.1)", "B": "beltrami(k=1, amp=0.1)"},
}


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``fields`` maps roles (``u0``, ``U``, ...) to generator specs such as
    ``"mode(k=2)"`` or to FLD1 files written as ``"file:path/to/x.fld"``.
    """

    scenario: str
    grid: GridSpec = field(default_factory=lambda: GridSpec(2, 128, 2 * np.pi))
    p: float = 4.0
    solver: SolverConfig | None = None
    fields: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        merged = dict(DEFAULT_FIELDS[self.scenario])
        merged.update(self.fields)
        self.fields = merged
        if self.solver is None and self.scenario in ("mild_solve", "uniqueness"):
            self.solver = SolverConfig(p=self.p)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        grid = d.pop("grid", None)
        if isinstance(grid, dict):
            d["grid"] = GridSpec(
                dim=int(grid.get("dim", 2)),
                points=int(grid.get("points", 128)),
                length=float(grid.get("length", 2 * np.pi)),
                dealias=bool(grid.get("dealias", False)),
            )
        solver = d.pop("solver", None)
        if isinstance(solver, dict):
            solver = dict(solver)
            solver.setdefault("p", float(d.get("p", 4.0)))
            d["solver"] = SolverConfig(**solver)
        unknown = set(d) - {"scenario", "grid", "p", "solver", "fields", "output_dir", "seed", "options"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "p" in d:
            d["p"] = float(d["p"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "grid": {
                "dim": self.grid.dim,
                "points": self.grid.points,
                "length": self.grid.length,
                "dealias": self.grid.dealias,
            },
            "p": self.p,
            "solver": None if self.solver is None else asdict(self.solver),
            "fields": dict(self.fields),
            "output_dir": str(self.output_dir),
            "seed": int(self.seed),
            "options": dict(self.options),
        }

    def with_overrides(self, out=None, seed=None, grid=None, p=None) -> "ScenarioConfig":
        cfg = self
        if out is not None:
            cfg = replace(cfg, output_dir=str(out))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if grid is not None:
            n, L = grid
            cfg = replace(cfg, grid=GridSpec(cfg.grid.dim, int(n), float(L), cfg.grid.dealias))
        if p is not None:
            solver = None if cfg.solver is None else replace(cfg.solver, p=float(p))
            cfg = replace(cfg, p=float(p), solver=solver)
        return cfg


def load_field(source: str, grid: GridSpec, seed: int) -> Field:
    if source.startswith("file:"):
        f = fld.load(source[5:])
        if f.grid.points != grid.points or f.grid.dim != grid.dim or f.grid.length != grid.length:
            raise ValueError(f"{source[5:]}: grid {f.grid} does not match the scenario grid")
        return Field(grid, f.values)
    return generate_field(source, grid, seed)


# --- emitters ----------------------------------------------------------------


def emit_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def emit_plot(path, x, series: dict, xlabel: str, ylabel: str, loglog: bool = True, title: str = "") -> Path:
    """Static SVG line plot; metadata and ids are pinned so output bytes are reproducible."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": "lcmorrey", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for label, y in series.items():
            ax.plot(x, y, marker="o", ms=3, label=label)
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


# --- scenarios ---------------------------------------------------------------


class _Run:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.stages: dict = {}
        self.timings: dict = {}
        self.artifacts: list = []

    def stage(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            res = fn(*args, **kwargs)
        except Exception as exc:  # surfaced with the stage name
            raise StageError(name, exc) from exc
        self.timings[name] = time.perf_counter() - t0
        return res

    def field(self, role: str) -> Field:
        return self.stage(f"load:{role}", load_field, self.cfg.fields[role], self.cfg.grid, self.cfg.seed)

    def artifact(self, path: Path) -> None:
        self.artifacts.append(str(path.relative_to(self.out)))

    def opt(self, key, default):
        return self.cfg.options.get(key, default)


def _sc_operators_selftest(run: _Run) -> bool:
    checks = run.stage("checks", operator_checks, run.cfg.grid, run.cfg.seed)
    g = run.cfg.grid
    scale = (g.length / (2 * np.pi)) ** 2
    # below sqrt(t) ~ h the discrete kernel is a grid artefact, not a heat kernel
    times = np.geomspace(max(1e-3 * scale, g.h**2), 0.5 * scale, 10)
    hk = run.stage("heat_kernel", heat_gradient_table, g, times)
    ot = run.stage("oseen", oseen_table, g, np.geomspace((2 * g.h) ** 2, (g.length / 8) ** 2, 8))
    run.stages["checks"] = [c.to_dict() for c in checks]
    run.stages["heat_kernel"] = {"slope": hk.slope, "constant": hk.constant, "pass": abs(hk.slope + 0.5) <= 0.05}
    run.stages["oseen"] = {"spread": ot.spread, "pass": ot.spread <= 20}
    return all(c.passed for c in checks) and run.stages["heat_kernel"]["pass"] and run.stages["oseen"]["pass"]


def _sc_morrey_sweep(run: _Run) -> bool:
    g = run.cfg.grid
    sampling = BallSampling.default(g, levels=int(run.opt("levels", 6)), per_octave=int(run.opt("per_octave", 1)))
    params = MorreyParams(float(run.opt("r", 2.0)), run.cfg.p, g.dim)
    rows = []
    for role in sorted(run.cfg.fields):
        f = run.field(role)
        est = run.stage(f"morrey:{role}", morrey_norm, f, params, sampling)
        run.stages[role] = est.to_dict()
        rows.extend((role, R, v) for R, v in est.profile)
    run.out.mkdir(parents=True, exist_ok=True)
    run.artifact(emit_csv(run.out / "profile.csv", ["field", "R", "value"], rows))
    series = {role: [v for r, R, v in rows if r == role] for role in sorted(run.cfg.fields)}
    radii = [R for r, R, v in rows if r == sorted(run.cfg.fields)[0]]
    run.artifact(emit_plot(run.out / "profile.svg", radii, series, "R", "Morrey profile"))
    return True


def _sc_decay_check(run: _Run) -> bool:
    U, G = run.field("U"), run.field("gradV")
    rep = run.stage("decay", check_decay_condition, U, G, run.cfg.p)
    run.stages["decay"] = rep.to_dict()
    return rep.passed


def _sc_mild_solve(run: _Run) -> bool:
    u0, V0, d = run.field("u0"), run.field("V0"), run.field("director")
    res = run.stage("picard", picard_solve, u0, V0, d, run.cfg.solver)
    run.stages["picard"] = res.to_dict()
    traj_dir = run.out / "trajectory"
    traj_dir.mkdir(parents=True, exist_ok=True)
    for m, (u, V) in enumerate(zip(res.traj.u.fields, res.traj.V.fields)):
        run.artifact(fld.save(u, traj_dir / f"u_{m:04d}.fld"))
        run.artifact(fld.save(V, traj_dir / f"V_{m:04d}.fld"))
    manifest = {
        "times": [float(t) for t in res.traj.times],
        "p": run.cfg.solver.p,
        "T": res.T_used,
        "grading": run.cfg.solver.grading,
        "et_norm_per_iterate": [float(v) for v in res.et_norms],
    }
    (traj_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    run.artifact(traj_dir / "manifest.json")
    return res.converged and res.contraction_factor <= run.cfg.solver.contraction_target


def _sc_contraction_fit(run: _Run) -> bool:
    g = run.cfg.grid
    p = run.cfg.p
    d = run.field("director")
    u, V = self_similar_inputs(g, p)
    lo, hi = float(run.opt("sqrtT_min_h", 6.0)) * g.h, g.length / float(run.opt("sqrtT_max_div", 10.0))
    T_list = np.geomspace(lo**2, hi**2, int(run.opt("count", 6)))
    fit = run.stage("fit", contraction_exponent_fit, u, V, d, p, T_list, int(run.opt("steps", 12)))
    run.stages["fit"] = fit.to_dict()
    run.out.mkdir(parents=True, exist_ok=True)
    rows = list(zip(fit.T_list, fit.norm_B12, fit.norm_B34))
    run.artifact(emit_csv(run.out / "contraction_fit.csv", ["T", "norm_B12", "norm_B34"], rows))
    run.artifact(
        emit_plot(run.out / "contraction_fit.svg", fit.T_list, {"B1+B2": fit.norm_B12, "B4-B3": fit.norm_B34}, "T", "E_T norm")
    )
    tol = float(run.opt("slope_tol", 0.05))
    return abs(fit.slope_B12 - fit.predicted) <= tol and abs(fit.slope_B34 - fit.predicted) <= tol


def _sc_uniqueness(run: _Run) -> bool:
    u0, V0, d = run.field("u0"), run.field("V0"), run.field("director")
    M = run.cfg.solver.steps
    a = Schedule(int(run.opt("steps_a", M)), float(run.opt("grading_a", run.cfg.solver.grading)))
    b = Schedule(int(run.opt("steps_b", 2 * M)), float(run.opt("grading_b", run.cfg.solver.grading)))
    rep = run.stage("uniqueness", uniqueness_experiment, u0, V0, d, run.cfg.solver, a, b)
    run.stages["uniqueness"] = rep.to_dict()
    return rep.passed


def _triplet(run: _Run, director_role: str = "V") -> WeakSolutionTriplet:
    U = run.field("U")
    V = run.field(director_role)
    P = run.field("P") if "P" in run.cfg.fields else None
    return run.stage("triplet", WeakSolutionTriplet, U, V, P)


def _sc_stationary_verify(run: _Run) -> bool:
    tr = _triplet(run)
    res = run.stage("residual", residual_very_weak, tr)
    ident = run.stage("identity", integral_identity_check, tr, run.cfg.p)
    P = run.stage("pressure", pressure_from_UV, tr.U, tr.V)
    run.stages["residual"] = res.to_dict()
    run.stages["identity"] = ident.to_dict()
    run.stages["pressure"] = {"sup_norm": P.sup_norm()}
    tol = float(run.opt("identity_tol", 1e-8))
    return res.passed and ident.U_mismatch <= tol and ident.V_mismatch <= tol


def _sc_bootstrap(run: _Run) -> bool:
    tr = _triplet(run)
    K = int(run.opt("K", 3))
    sig = tuple(float(s) for s in run.opt("sigmas", [1.0]))
    rep = run.stage("bootstrap", bootstrap_derivatives, tr, run.cfg.p, K, sig, seed=run.cfg.seed)
    run.stages["bootstrap"] = rep.to_dict()
    run.stages["max_identity_mismatch"] = rep.max_identity_mismatch
    return rep.max_identity_mismatch <= float(run.opt("mismatch_tol", 1e-6))


def _sc_nse(run: _Run) -> bool:
    U = run.field("U")
    P = run.field("P") if "P" in run.cfg.fields else None
    rep = run.stage("regularity", nse_mode, U, P, run.cfg.p, K=int(run.opt("K", 3)), seed=run.cfg.seed)
    run.stages["regularity"] = rep.to_dict()
    return rep.verdict == "regular"


def _sc_mhd(run: _Run) -> bool:
    U, B = run.field("U"), run.field("B")
    P = run.field("P") if "P" in run.cfg.fields else None
    rep = run.stage("mhd", mhd_residual, U, B, P, run.cfg.p)
    run.stages["mhd"] = rep.to_dict()
    return rep.passed and rep.decay.passed


_SCENARIO_FUNCS = {name: globals()[f"_sc_{name}"] for name in SCENARIOS}


def run(cfg: ScenarioConfig) -> dict:
    """Execute one scenario; returns the rr-1 report and writes report.json."""
    r = _Run(cfg)
    t0 = time.perf_counter()
    error = None
    passed = False
    try:
        passed = bool(_SCENARIO_FUNCS[cfg.scenario](r))
    except StageError as exc:
        error = {"stage": exc.stage, "message": str(exc.cause), "type": type(exc.cause).__name__}
    r.timings["total"] = time.perf_counter() - t0
    report = {
        "schema": SCHEMA,
        "scenario": cfg.to_dict(),
        "stages": _jsonable(r.stages),
        "gate": {"passed": passed and error is None},
        "error": error,
        "artifacts": sorted(r.artifacts),
        "timings": r.timings,
    }
    r.out.mkdir(parents=True, exist_ok=True)
    (r.out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def exit_code(report: dict) -> int:
    if report.get("error"):
        return 2
    return 0 if report["gate"]["passed"] else 1


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj
