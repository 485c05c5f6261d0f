"""Suite configuration, execution and report emission.

A suite is a JSON document::

    {
      "schema_version": 1,
      "tolerance": {"c_tol": 10.0, "c_comm": 15.0, "c_sub": 100.0},
      "jobs": 1,
      "output": {"dir": ".", "formats": ["json", "csv", "npz"]},
      "scenarios": [
        {"id": "annulus-robin", "domain": "annulus2d",
         "geometry": {"a": 1.0, "b": 2.0}, "alpha1": 1.0, "alpha2": 2.0,
         "source": {"kind": "bandlimited", "seed": 7},
         "grid": {"nr": 64, "m": 128}}
      ]
    }

Omitted keys take the defaults of the dataclasses below; unknown keys are
rejected.  Reports are written as ``reports.json`` (deterministic),
``metadata.json`` (timestamp and versions), ``reports.csv`` and
``plot_data.npz``.
"""
from __future__ import annotations

import csv
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .harness import (ComparisonReport, ToleranceModel, fit_order, refinement_sweep,
                      run_comparison)
from .solver import DOMAIN_KINDS, RobinProblem
from .sources import Geometry, SourceSpec, build_grid, generate_source

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ScenarioSpec",
    "SuiteConfig",
    "load_config",
    "parse_config",
    "default_suite",
    "run_suite",
    "emit_report",
    "calibrate",
    "generate_source",
    "EXIT_OK",
    "EXIT_VIOLATION",
    "EXIT_ERROR",
]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2
FORMATS = ("json", "csv", "npz")

ALPHA_SETS = {
    "annulus2d": [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 2.0)],
    "shell3d_axisym": [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 2.0)],
    "disk2d": [(0.0, 0.0), (0.0, 1.0)],
    "ball3d_axisym": [(0.0, 0.0), (0.0, 1.0)],
    "cylinder_rect": [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 2.0)],
}


class ConfigError(ValueError):
    """Invalid suite configuration (parse or semantic)."""


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    domain: str
    alpha1: float = 0.0
    alpha2: float = 0.0
    geometry: Geometry = None
    source: SourceSpec = field(default_factory=SourceSpec)
    nr: int = 64
    m: int = 128
    refinement_levels: tuple = ()
    structural: bool = True

    def grid(self):
        return build_grid(self.domain, self.geometry, self.nr, self.m)

    def problem(self) -> RobinProblem:
        f = generate_source(self.source, self.grid(), self.domain, self.alpha1, self.alpha2)
        return RobinProblem(self.domain, f, self.alpha1, self.alpha2)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "domain": self.domain, "alpha1": self.alpha1, "alpha2": self.alpha2,
            "geometry": self.geometry.to_dict(), "source": self.source.to_dict(),
            "grid": {"nr": self.nr, "m": self.m},
            "refinement_levels": list(self.refinement_levels), "structural": self.structural,
        }


@dataclass(frozen=True)
class SuiteConfig:
    scenarios: tuple
    tolerance: ToleranceModel = ToleranceModel()
    out_dir: str = "."
    formats: tuple = FORMATS
    jobs: int = 1

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tolerance": asdict(self.tolerance),
            "jobs": self.jobs,
            "output": {"dir": self.out_dir, "formats": list(self.formats)},
            "scenarios": [s.to_dict() for s in self.scenarios],
        }


# --------------------------------------------------------------------------
# parsing

def _check_keys(d, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _dataclass_from(cls, d, where: str):
    names = [f.name for f in fields(cls)]
    _check_keys(d, names, where)
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


_SCENARIO_KEYS = ("id", "domain", "alpha1", "alpha2", "geometry", "source", "grid",
                  "refinement_levels", "structural")


def _parse_scenario(d, index: int) -> ScenarioSpec:
    where = f"scenario #{index}"
    if isinstance(d, dict) and "id" in d:
        where = f"scenario {d['id']!r}"
    _check_keys(d, _SCENARIO_KEYS, where)
    sid = str(d.get("id", f"scenario-{index}"))
    domain = d.get("domain")
    if domain not in DOMAIN_KINDS:
        raise ConfigError(f"{where}: domain must be one of {sorted(DOMAIN_KINDS)}, got {domain!r}")
    alpha1 = float(d.get("alpha1", 0.0))
    alpha2 = float(d.get("alpha2", 0.0))
    if alpha1 < 0 or alpha2 < 0:
        raise ConfigError(f"{where}: alpha must be nonnegative")
    geom = Geometry.default(domain)
    if "geometry" in d:
        _check_keys(d["geometry"], [f.name for f in fields(Geometry)], f"{where} geometry")
        geom = replace(geom, **{k: float(v) for k, v in d["geometry"].items()})
    source = _dataclass_from(SourceSpec, d.get("source", {}), f"{where} source")
    grid = d.get("grid", {})
    _check_keys(grid, ("nr", "m"), f"{where} grid")
    levels = tuple(int(n) for n in d.get("refinement_levels", ()))
    spec = ScenarioSpec(sid, domain, alpha1, alpha2, geom, source,
                        int(grid.get("nr", 64)), int(grid.get("m", 128)), levels,
                        bool(d.get("structural", True)))
    try:
        spec.problem()   # builds the grid and source, checks Neumann compatibility
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return spec


def parse_config(data: dict) -> SuiteConfig:
    _check_keys(data, ("schema_version", "tolerance", "jobs", "output", "scenarios"), "config")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config: unsupported schema_version {version!r}")
    tol = _dataclass_from(ToleranceModel, data.get("tolerance", {}), "tolerance")
    output = data.get("output", {})
    _check_keys(output, ("dir", "formats"), "output")
    formats = tuple(output.get("formats", FORMATS))
    bad = sorted(set(formats) - set(FORMATS))
    if bad:
        raise ConfigError(f"output: unknown format(s) {', '.join(bad)}")
    raw = data.get("scenarios")
    if not raw:
        raise ConfigError("config: at least one scenario is required")
    scenarios = tuple(_parse_scenario(s, i) for i, s in enumerate(raw))
    ids = [s.id for s in scenarios]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise ConfigError(f"config: duplicate scenario id(s) {', '.join(dup)}")
    jobs = int(data.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("config: jobs must be at least 1")
    return SuiteConfig(scenarios, tol, str(output.get("dir", ".")), formats, jobs)


def load_config(path) -> SuiteConfig:
    """Read and validate a JSON suite file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def default_suite(seed: int = 0, nr: int = 64, m: int = 128) -> SuiteConfig:
    """Every domain and alpha set with band-limited, nonnegative and symmetric data."""
    scenarios = []
    for domain, sets in ALPHA_SETS.items():
        for a1, a2 in sets:
            for kind in ("bandlimited", "nonneg_bandlimited", "symmetric"):
                sid = f"{domain}-a{a1:g}-{a2:g}-{kind}-s{seed}"
                scenarios.append(ScenarioSpec(sid, domain, a1, a2, Geometry.default(domain),
                                              SourceSpec(kind, seed), nr, m))
    return SuiteConfig(tuple(scenarios))


# --------------------------------------------------------------------------
# execution

def _run_one(args):
    spec, tol = args
    try:
        rep = run_comparison(spec.problem(), tol_model=tol, scenario_id=spec.id,
                             seed=spec.source.seed, structural=spec.structural)
    except Exception as exc:  # recorded per scenario; the suite continues
        return spec.id, None, f"{type(exc).__name__}: {exc}", None
    sweep = None
    if spec.refinement_levels:
        try:
            sweep = refinement_sweep(spec.domain, spec.alpha1, spec.alpha2, [spec.source.seed],
                                     levels=spec.refinement_levels,
                                     angular_factor=max(1, spec.m // spec.nr),
                                     geometry=spec.geometry, source_kind=spec.source.kind,
                                     max_mode=spec.source.max_mode, tol_model=tol)
        except Exception as exc:
            return spec.id, rep, f"refinement: {type(exc).__name__}: {exc}", None
    return spec.id, rep, None, sweep


def run_suite(config: SuiteConfig, out_dir: str = None, jobs: int = None, echo=print):
    """Run every scenario and write the artifacts.

    Returns ``(exit_code, reports, summary)``.  Exit code 2 means an
    operational problem (missing or unwritable output directory, or a
    scenario that raised); otherwise 1 if any report failed, else 0.
    """
    out_dir = config.out_dir if out_dir is None else out_dir
    jobs = config.jobs if jobs is None else jobs
    if not os.path.isdir(out_dir):
        echo(f"error: output directory {out_dir!r} does not exist")
        return EXIT_ERROR, [], None
    tasks = [(s, config.tolerance) for s in config.scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    reports, errors, sweeps = [], {}, {}
    for sid, rep, err, sweep in results:
        if rep is not None:
            reports.append(rep)
        if err is not None:
            errors[sid] = err
        if sweep is not None:
            sweeps[sid] = sweep
    failed = [r.scenario_id for r in reports if not r.verdict]
    failed += [sid for sid, sw in sweeps.items() if not sw["passed"]]
    summary = {
        "scenarios": len(config.scenarios),
        "passed": sum(r.verdict for r in reports),
        "failed": sorted(set(failed)),
        "errors": errors,
        "violations": {r.scenario_id: r.failures for r in reports if not r.verdict},
        "refinement": sweeps,
    }
    code = EXIT_ERROR if errors else (EXIT_VIOLATION if failed else EXIT_OK)
    summary["exit_code"] = code
    try:
        if reports:
            emit_report(reports, out_dir, config.formats, summary=summary,
                        config=config.to_dict())
    except OSError as exc:
        echo(f"error: cannot write reports: {exc}")
        return EXIT_ERROR, reports, summary
    for r in reports:
        status = "PASS" if r.verdict else "FAIL " + ",".join(r.failures)
        echo(f"{r.scenario_id}: max_violation={r.max_violation:.3e} tol={r.tol:.3e} {status}")
    for sid, err in errors.items():
        echo(f"{sid}: ERROR {err}")
    echo(f"{summary['passed']}/{summary['scenarios']} passed; exit {code}")
    return code, reports, summary


def calibrate(kind: str, levels: int = 4, seeds=range(5), alphas=None, echo=print) -> dict:
    """Refinement sweep from 16 nodes up, doubling ``levels - 1`` times.

    For every alpha set and level the constant each defect needs relative to
    ``(dr^2 + dtheta^2) ||f|| length^2`` is recorded; the returned
    ``c_tol``, ``c_comm`` and ``c_sub`` are the maxima over the sweep.
    """
    if kind not in DOMAIN_KINDS:
        raise ValueError(f"unknown domain kind {kind!r}")
    if levels < 2:
        raise ValueError("calibration needs at least two levels")
    ns = [16 * 2 ** i for i in range(levels)]
    tol = ToleranceModel(1.0, 1.0, 1.0)
    alphas = ALPHA_SETS[kind] if alphas is None else alphas
    out = {"domain": kind, "levels": ns, "sweeps": [], "c_tol": 0.0, "c_comm": 0.0, "c_sub": 0.0}
    for a1, a2 in alphas:
        sweep = refinement_sweep(kind, a1, a2, list(seeds), levels=ns, tol_model=tol)
        comm, sub = [], []
        for n in ns:
            spec = ScenarioSpec("calibrate", kind, a1, a2, Geometry.default(kind),
                                SourceSpec("bandlimited", 0), n, 2 * n)
            rep = run_comparison(spec.problem(), tol_model=tol)
            comm.append(rep.commutativity_defect / rep.tolerances["commutativity"])
            sub.append(max(rep.subharmonicity_defect or 0.0, 0.0) / rep.tolerances["subharmonicity"])
        hs = [r["h"] for r in sweep["levels"]]
        comm_order = fit_order(hs, np.maximum(np.asarray(comm) * np.square(hs), 1e-300))
        sweep.update(c_comm=max(comm), c_sub=max(sub), commutativity_order=comm_order)
        out["sweeps"].append(sweep)
        out["c_tol"] = max(out["c_tol"], sweep["fitted_c_tol"])
        out["c_comm"] = max(out["c_comm"], max(comm))
        out["c_sub"] = max(out["c_sub"], max(sub))
        order = "rounding-limited" if sweep["rounding_limited"] else f"order {sweep['order']}"
        echo(f"{kind} alpha=({a1:g},{a2:g}): fitted C_tol={sweep['fitted_c_tol']:.3e} ({order}); "
             f"commutativity C={max(comm):.3g} (order {comm_order:.2f}); "
             f"subharmonicity C={max(sub):.3g}")
    echo(f"{kind}: C_tol={out['c_tol']:.3e} C_comm={out['c_comm']:.3g} C_sub={out['c_sub']:.3g}")
    return out


# --------------------------------------------------------------------------
# output

CSV_FIELDS = ("scenario_id", "seed", "domain", "alpha1", "alpha2", "grid", "max_violation",
              "tol", "verdict", "convex_worst", "lp_worst", "mean_equality_defect",
              "flux_constancy_defect", "k1", "v_symmetrization_defect",
              "subharmonicity_defect", "commutativity_defect", "interior_residual",
              "boundary_residual", "failures")


def _csv_row(r: ComparisonReport) -> dict:
    g = r.grid
    grid = f"{g['nx']}x{g['my']}" if "nx" in g else f"{g['nr']}x{g['m']}"
    return {
        "scenario_id": r.scenario_id, "seed": r.seed, "domain": r.domain,
        "alpha1": r.alpha1, "alpha2": r.alpha2, "grid": grid,
        "max_violation": repr(r.max_violation), "tol": repr(r.tol), "verdict": int(r.verdict),
        "convex_worst": repr(r.convex_means["worst"]),
        "lp_worst": "" if r.lp is None else repr(r.lp["worst"]),
        **{k: ("" if getattr(r, k) is None else repr(getattr(r, k)))
           for k in ("mean_equality_defect", "flux_constancy_defect", "k1",
                     "v_symmetrization_defect", "subharmonicity_defect",
                     "commutativity_defect", "interior_residual", "boundary_residual")},
        "failures": ";".join(r.failures),
    }


def emit_report(reports, out_dir: str, formats=FORMATS, summary: dict = None,
                config: dict = None) -> list:
    """Write ``reports`` to ``out_dir``; returns the paths written.

    ``reports.json`` depends only on the reports, summary and config, so two
    runs with the same seeds produce identical bytes.  The timestamp goes to
    ``metadata.json``.
    """
    if not reports:
        raise ValueError("emit_report needs at least one report")
    paths = []
    if "json" in formats:
        doc = {"schema_version": SCHEMA_VERSION, "config": config, "summary": summary,
               "reports": [r.to_dict() for r in reports]}
        path = os.path.join(out_dir, "reports.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        paths.append(path)
        meta = {"schema_version": SCHEMA_VERSION,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "python": platform.python_version(), "numpy": np.__version__}
        path = os.path.join(out_dir, "metadata.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "reports.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            w.writeheader()
            for r in reports:
                w.writerow(_csv_row(r))
        paths.append(path)
    if "npz" in formats:
        arrays = {}
        for r in reports:
            if r.plot_data is None:
                continue
            for key, val in r.plot_data.items():
                if isinstance(val, np.ndarray):
                    arrays[f"{r.scenario_id}/{key}"] = val
        path = os.path.join(out_dir, "plot_data.npz")
        np.savez_compressed(path, **arrays)
        paths.append(path)
    return paths


def read_reports(path) -> list:
    """Load the reports of a ``reports.json`` file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [ComparisonReport.from_dict(d) for d in doc["reports"]]
