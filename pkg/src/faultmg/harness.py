"""Scenario configuration, experiment execution and CSV emission.

Configs are JSON with a fixed schema; every field has a default except
the grid.  Scenario runs write a one-row cycle-advantage table, the
per-cycle residual traces and a manifest that captures the fully resolved
configuration plus output checksums, so re-running a manifest reproduces
the outputs byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__ as _pkg_version
from .errors import ConfigError
from .hierarchy import GridHierarchy, PartitionSpec, build_hierarchy, region_masks
from .problems import BUILTIN_PROBLEMS, get_problem
from .resilience import (FaultEvent, RecoveryConfig, RecoveryReport,
                         run_fault_free, run_faulty_job)
from .solvers import CycleSpec, KrylovSpec, SolveTrace, StoppingRule

TABLE_COLUMNS = ["strategy", "local_solver", "scenario", "k_F", "n_I", "n_F",
                 "eta_super", "accounting", "k_free", "k_cycles", "k_faulty",
                 "kappa", "logical_time", "converged", "error"]

TRACE_COLUMNS = ["cycle", "rel_residual", "res_healthy", "res_faulty",
                 "res_interface", "logical_time"]

AXIS_ORDER = ("strategy", "local_solver", "scenario", "k_F", "n_I", "n_F",
              "eta_super")

SCENARIO_POSITIONS = ("corner", "edge", "center")


# -- config parsing -------------------------------------------------------


def _expect_mapping(v, path):
    if not isinstance(v, dict):
        raise ConfigError(f"{path}: expected an object, got {type(v).__name__}")
    return v


def _expect_int(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {v}")
    return v


def _expect_number(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {v}")
    return v


def _expect_choice(v, choices, path):
    if v not in choices:
        raise ConfigError(f"{path}: expected one of {sorted(choices)}, got {v!r}")
    return v


def _no_extras(d, known, path):
    extra = set(d) - set(known)
    if extra:
        raise ConfigError(f"{path}{sorted(extra)[0]}: unknown field")


def _parse_eta(v, path):
    if isinstance(v, str):
        try:
            eta = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{path}: not a valid rational, got {v!r}") from None
    elif isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number or 'p/q' string, got {v!r}")
    else:
        eta = Fraction(v).limit_denominator(10 ** 6)
    if eta < 1:
        raise ConfigError(f"{path}: must be >= 1, got {v!r}")
    return eta


def scenario_subdomain(spec: PartitionSpec, name: str) -> int:
    """Faulty-subdomain id for a named position on the partition.

    corner touches the outer boundary with three faces, edge with two
    (it sits along a domain edge), center floats in the interior.
    """
    px, py, pz = spec.subdomain_counts
    if name == "corner":
        return spec.subdomain_id(0, 0, 0)
    if name == "edge":
        if pz < 3:
            raise ConfigError("faults: position 'edge' needs >= 3 subdomains "
                              "along the z axis")
        return spec.subdomain_id(0, 0, pz // 2)
    if name == "center":
        if min(px, py, pz) < 3:
            raise ConfigError("faults: position 'center' needs >= 3 subdomains "
                              "along every axis")
        return spec.subdomain_id(px // 2, py // 2, pz // 2)
    raise ConfigError(f"faults: unknown position {name!r}")


def _parse_subdomain(entry, spec: PartitionSpec, path):
    if isinstance(entry, str):
        return scenario_subdomain(spec, entry)
    if isinstance(entry, list):
        if len(entry) != 3:
            raise ConfigError(f"{path}: coordinate triple must have 3 entries")
        try:
            return spec.subdomain_id(*(int(v) for v in entry))
        except Exception:
            raise ConfigError(f"{path}: coordinate {entry!r} out of range") from None
    sid = _expect_int(entry, path, lo=0)
    if sid >= spec.n_subdomains:
        raise ConfigError(f"{path}: subdomain id {sid} out of range "
                          f"(partition has {spec.n_subdomains})")
    return sid


@dataclass
class ScenarioConfig:
    grid: PartitionSpec
    problem: str = "harmonic_poly"
    cycle: CycleSpec = field(default_factory=CycleSpec)
    stop: StoppingRule = field(default_factory=StoppingRule)
    faults: list = field(default_factory=list)
    recovery: RecoveryConfig = field(default_factory=RecoveryConfig)
    accounting: str = "global"
    initial_guess: str = "zero"
    seed: int = 0
    output_dir: str = "out"
    scenario_label: str = ""
    trace_regions: bool = True

    def resolved(self) -> dict:
        """Fully resolved configuration, suitable for the manifest."""
        rec = self.recovery
        return {
            "grid": {"subdomain_counts": list(self.grid.subdomain_counts),
                     "base_cells_per_subdomain": self.grid.base_cells_per_subdomain,
                     "levels": self.grid.levels},
            "problem": self.problem,
            "solver": {"cycle": self.cycle.kind,
                       "pre_smooth": self.cycle.pre_smooth,
                       "post_smooth": self.cycle.post_smooth,
                       "coarse": {"preconditioner": self.cycle.coarse.preconditioner,
                                  "rel_tol": self.cycle.coarse.rel_tol,
                                  "max_iter": self.cycle.coarse.max_iter},
                       "stop": {"rel_residual_tol": self.stop.rel_residual_tol,
                                "max_cycles": self.stop.max_cycles}},
            "faults": [{"after_cycle": e.after_cycle,
                        "subdomains": sorted(e.subdomains)} for e in self.faults],
            "recovery": {"strategy": rec.strategy,
                         "local_solver": rec.local_solver,
                         "n_I": rec.n_I,
                         "eta_super": str(rec.eta_super),
                         "n_F": rec.n_F,
                         "n_F_resolved": rec.resolved_n_F
                         if rec.strategy != "none" else 0},
            "accounting": self.accounting,
            "initial_guess": self.initial_guess,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "scenario_label": self.scenario_label,
            "trace_regions": self.trace_regions,
        }


def parse_scenario(data, path="") -> ScenarioConfig:
    data = _expect_mapping(data, path or "config")
    if "config" in data and "grid" not in data:
        # a manifest: re-run its resolved configuration
        data = _expect_mapping(data["config"], f"{path}config")
    _no_extras(data, {"grid", "problem", "solver", "faults", "recovery",
                      "accounting", "initial_guess", "seed", "output_dir",
                      "scenario_label", "trace_regions"}, path)
    if "grid" not in data:
        raise ConfigError(f"{path}grid: required")
    g = _expect_mapping(data["grid"], f"{path}grid")
    _no_extras(g, {"subdomain_counts", "base_cells_per_subdomain", "levels"},
               f"{path}grid.")
    counts = g.get("subdomain_counts", [1, 1, 1])
    if not isinstance(counts, list) or len(counts) != 3:
        raise ConfigError(f"{path}grid.subdomain_counts: expected [Px, Py, Pz]")
    spec = PartitionSpec(
        tuple(_expect_int(c, f"{path}grid.subdomain_counts", lo=1) for c in counts),
        _expect_int(g.get("base_cells_per_subdomain", 2),
                    f"{path}grid.base_cells_per_subdomain", lo=2),
        _expect_int(g.get("levels", 1), f"{path}grid.levels", lo=0))

    problem = data.get("problem", "harmonic_poly")
    if problem not in BUILTIN_PROBLEMS:
        raise ConfigError(f"{path}problem: unknown problem {problem!r}; choose "
                          f"from {sorted(BUILTIN_PROBLEMS)}")

    s = _expect_mapping(data.get("solver", {}), f"{path}solver")
    _no_extras(s, {"cycle", "pre_smooth", "post_smooth", "coarse", "stop"},
               f"{path}solver.")
    co = _expect_mapping(s.get("coarse", {}), f"{path}solver.coarse")
    _no_extras(co, {"preconditioner", "rel_tol", "max_iter"}, f"{path}solver.coarse.")
    krylov = KrylovSpec(
        _expect_choice(co.get("preconditioner", "jacobi"), ("jacobi", "none"),
                       f"{path}solver.coarse.preconditioner"),
        _expect_number(co.get("rel_tol", 1e-10), f"{path}solver.coarse.rel_tol", lo=0),
        _expect_int(co.get("max_iter", 2000), f"{path}solver.coarse.max_iter", lo=1))
    cycle = CycleSpec(
        _expect_choice(s.get("cycle", "V"), ("V", "W", "F"), f"{path}solver.cycle"),
        _expect_int(s.get("pre_smooth", 3), f"{path}solver.pre_smooth", lo=0),
        _expect_int(s.get("post_smooth", 3), f"{path}solver.post_smooth", lo=0),
        krylov)
    st = _expect_mapping(s.get("stop", {}), f"{path}solver.stop")
    _no_extras(st, {"rel_residual_tol", "max_cycles"}, f"{path}solver.stop.")
    stop = StoppingRule(
        _expect_number(st.get("rel_residual_tol", 1e-13),
                       f"{path}solver.stop.rel_residual_tol", lo=0),
        _expect_int(st.get("max_cycles", 60), f"{path}solver.stop.max_cycles", lo=1))

    faults = []
    for i, ev in enumerate(data.get("faults", [])):
        ev = _expect_mapping(ev, f"{path}faults[{i}]")
        _no_extras(ev, {"after_cycle", "subdomains"}, f"{path}faults[{i}].")
        after = _expect_int(ev.get("after_cycle", 0), f"{path}faults[{i}].after_cycle",
                            lo=1)
        subs = ev.get("subdomains")
        if not isinstance(subs, list) or not subs:
            raise ConfigError(f"{path}faults[{i}].subdomains: expected a nonempty list")
        sids = {_parse_subdomain(e, spec, f"{path}faults[{i}].subdomains[{j}]")
                for j, e in enumerate(subs)}
        faults.append(FaultEvent(after, frozenset(sids)))

    r = _expect_mapping(data.get("recovery", {}), f"{path}recovery")
    _no_extras(r, {"strategy", "local_solver", "n_I", "eta_super", "n_F",
                   "n_F_resolved"}, f"{path}recovery.")
    strategy = _expect_choice(r.get("strategy", "none"),
                              ("none", "LR", "DD", "DN"), f"{path}recovery.strategy")
    n_F = r.get("n_F")
    if n_F is not None:
        n_F = _expect_int(n_F, f"{path}recovery.n_F", lo=0)
    try:
        recovery = RecoveryConfig(
            strategy,
            _expect_choice(r.get("local_solver", "Vcycle"),
                           ("Vcycle", "Wcycle", "Fcycle", "PCG", "Smooth"),
                           f"{path}recovery.local_solver"),
            _expect_int(r.get("n_I", 0), f"{path}recovery.n_I", lo=0),
            _parse_eta(r.get("eta_super", 1), f"{path}recovery.eta_super"),
            n_F)
    except ValueError as exc:
        raise ConfigError(f"{path}recovery: {exc}") from None

    return ScenarioConfig(
        grid=spec, problem=problem, cycle=cycle, stop=stop, faults=faults,
        recovery=recovery,
        accounting=_expect_choice(data.get("accounting", "global"),
                                  ("global", "table1"), f"{path}accounting"),
        initial_guess=_expect_choice(data.get("initial_guess", "zero"),
                                     ("zero", "random"), f"{path}initial_guess"),
        seed=_expect_int(data.get("seed", 0), f"{path}seed"),
        output_dir=str(data.get("output_dir", "out")),
        scenario_label=str(data.get("scenario_label", "")),
        trace_regions=bool(data.get("trace_regions", True)))


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(data)


@dataclass
class SweepSpec:
    base: ScenarioConfig
    axes: dict


def parse_sweep(data) -> SweepSpec:
    data = _expect_mapping(data, "sweep")
    _no_extras(data, {"base", "axes"}, "")
    if "base" not in data:
        raise ConfigError("base: required")
    base = parse_scenario(data["base"], "base.")
    axes_in = _expect_mapping(data.get("axes", {}), "axes")
    _no_extras(axes_in, AXIS_ORDER, "axes.")
    axes = {}
    for key in AXIS_ORDER:
        if key not in axes_in:
            continue
        vals = axes_in[key]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"axes.{key}: expected a nonempty list")
        if key == "strategy":
            vals = [_expect_choice(v, ("none", "LR", "DD", "DN"), f"axes.{key}")
                    for v in vals]
        elif key == "local_solver":
            vals = [_expect_choice(v, ("Vcycle", "Wcycle", "Fcycle", "PCG", "Smooth"),
                                   f"axes.{key}") for v in vals]
        elif key == "scenario":
            vals = [_expect_choice(v, SCENARIO_POSITIONS, f"axes.{key}")
                    for v in vals]
        elif key == "eta_super":
            vals = [_parse_eta(v, f"axes.{key}") for v in vals]
        else:
            lo = 1 if key == "k_F" else 0
            vals = [_expect_int(v, f"axes.{key}", lo=lo) for v in vals]
        axes[key] = vals
    if not axes:
        raise ConfigError("axes: at least one axis is required")
    return SweepSpec(base, axes)


def load_sweep(path) -> SweepSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_sweep(data)


# -- CSV / manifest emission ----------------------------------------------


def _fmt(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def emit_table(rows, path) -> None:
    """Cycle-advantage table; fixed column order, empty cells for n/a."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in TABLE_COLUMNS])


def emit_trace(trace: SolveTrace, path) -> None:
    """Per-cycle residual trace; cycle 0 is the initial residual."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        w.writerow([0, repr(1.0), "", "", "", repr(0.0)])
        for i in range(len(trace.rel_residual)):
            w.writerow([i + 1, repr(trace.rel_residual[i]),
                        repr(trace.res_healthy[i]), repr(trace.res_faulty[i]),
                        repr(trace.res_interface[i]),
                        repr(trace.logical_time[i])])


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class OutputBundle:
    directory: str
    kappa_table: str
    traces: list
    manifest: str
    rows: list


def _write_manifest(directory, resolved_config, outputs, extra=None):
    manifest = {
        "package": "faultmg",
        "version": _pkg_version,
        "config": resolved_config,
        "outputs": {os.path.relpath(p, directory): _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# -- experiment execution --------------------------------------------------


def _row_from_report(cfg: ScenarioConfig, rep: RecoveryReport, error="") -> dict:
    rec = cfg.recovery
    k_F = cfg.faults[0].after_cycle if cfg.faults else None
    return {
        "strategy": rec.strategy, "local_solver": rec.local_solver,
        "scenario": cfg.scenario_label, "k_F": k_F,
        "n_I": rec.n_I, "n_F": rec.resolved_n_F if rec.strategy != "none" else 0,
        "eta_super": rec.eta_super, "accounting": cfg.accounting,
        "k_free": rep.k_free, "k_cycles": rep.k_cycles,
        "k_faulty": Fraction(rep.k_faulty), "kappa": rep.kappa,
        "logical_time": Fraction(rep.logical_time_total),
        "converged": rep.converged, "error": error,
    }


def run_scenario(cfg: ScenarioConfig, output_dir=None,
                 k_free=None, baseline_trace=None) -> OutputBundle:
    """Fault-free baseline plus the configured job; writes table and traces."""
    directory = output_dir or cfg.output_dir
    traces_dir = os.path.join(directory, "traces")
    os.makedirs(traces_dir, exist_ok=True)

    h = build_hierarchy(cfg.grid)
    problem = get_problem(cfg.problem)
    union = frozenset().union(*(e.subdomains for e in cfg.faults)) \
        if cfg.faults else frozenset()
    trace_mask = region_masks(h, union) if (union and cfg.trace_regions) else None

    if k_free is None:
        baseline_trace = run_fault_free(h, problem, cfg.cycle, cfg.stop,
                                        mask=trace_mask,
                                        initial=cfg.initial_guess, seed=cfg.seed)
        k_free = baseline_trace.iterations
    paths = []
    if baseline_trace is not None:
        p = os.path.join(traces_dir, "baseline.csv")
        emit_trace(baseline_trace, p)
        paths.append(p)

    if cfg.faults:
        rep = run_faulty_job(h, problem, cfg.faults, cfg.recovery, cfg.stop,
                             cfg.cycle, cfg.accounting, k_free=k_free,
                             baseline_trace=baseline_trace,
                             initial=cfg.initial_guess, seed=cfg.seed)
        row = _row_from_report(cfg, rep)
        p = os.path.join(traces_dir, "faulty.csv")
        emit_trace(rep.trace, p)
        paths.append(p)
        report_path = os.path.join(directory, "report.json")
        with open(report_path, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(report_path)
    else:
        row = _row_from_report(cfg, RecoveryReport(
            k_free=k_free, k_cycles=k_free, k_faulty=Fraction(k_free),
            kappa=Fraction(0), accounting=cfg.accounting,
            logical_time_total=Fraction(k_free),
            converged=baseline_trace.converged if baseline_trace else True,
            events_fired=[], trace=baseline_trace))

    table = os.path.join(directory, "kappa_table.csv")
    emit_table([row], table)
    manifest = _write_manifest(directory, cfg.resolved(), [table] + paths)
    return OutputBundle(directory, table, paths, manifest, [row])


def _combo_label(combo):
    parts = []
    for key in AXIS_ORDER:
        if key in combo:
            val = combo[key]
            parts.append(f"{key}-{val}")
    return "_".join(parts).replace("/", "over")


def apply_combo(base: ScenarioConfig, combo: dict) -> ScenarioConfig:
    """Derive one sweep run's scenario from the base config and axis values."""
    rec = base.recovery
    strategy = combo.get("strategy", rec.strategy)
    n_I = combo.get("n_I", rec.n_I)
    n_F = combo.get("n_F", rec.n_F)
    if strategy == "none":
        n_I, n_F = 0, None
    recovery = RecoveryConfig(
        strategy, combo.get("local_solver", rec.local_solver), n_I,
        combo.get("eta_super", rec.eta_super), n_F)

    faults = list(base.faults)
    if "scenario" in combo or "k_F" in combo:
        k_F = combo.get("k_F", faults[0].after_cycle if faults else 5)
        if "scenario" in combo:
            sid = scenario_subdomain(base.grid, combo["scenario"])
        elif faults:
            sid = sorted(faults[0].subdomains)[0]
        else:
            raise ConfigError("axes.k_F: base config has no fault to reschedule")
        faults = [FaultEvent(k_F, frozenset({sid}))]

    return ScenarioConfig(
        grid=base.grid, problem=base.problem, cycle=base.cycle, stop=base.stop,
        faults=faults, recovery=recovery, accounting=base.accounting,
        initial_guess=base.initial_guess, seed=base.seed,
        output_dir=base.output_dir,
        scenario_label=combo.get("scenario", base.scenario_label),
        trace_regions=base.trace_regions)


def _sweep_combos(spec: SweepSpec):
    keys = [k for k in AXIS_ORDER if k in spec.axes]
    combos = [{}]
    for key in keys:
        combos = [dict(c, **{key: v}) for c in combos for v in spec.axes[key]]
    return combos


def _sweep_task(args):
    base_resolved, combo_str, k_free = args
    combo = json.loads(combo_str)
    if "eta_super" in combo:
        combo["eta_super"] = Fraction(combo["eta_super"])
    label = _combo_label(combo)
    empty = RecoveryReport(
        k_free=k_free or 0, k_cycles=0, k_faulty=Fraction(0),
        kappa=Fraction(0), accounting="", logical_time_total=Fraction(0),
        converged=False, events_fired=[], trace=SolveTrace())
    base = parse_scenario(base_resolved)
    try:
        cfg = apply_combo(base, combo)
        h = build_hierarchy(cfg.grid)
        problem = get_problem(cfg.problem)
        rep = run_faulty_job(h, problem, cfg.faults, cfg.recovery, cfg.stop,
                             cfg.cycle, cfg.accounting, k_free=k_free,
                             initial=cfg.initial_guess, seed=cfg.seed)
        return label, _row_from_report(cfg, rep), _trace_csv_bytes(rep.trace)
    except Exception as exc:   # per-run failures become error rows
        row = {c: None for c in TABLE_COLUMNS}
        row.update({k: combo.get(k, "") for k in AXIS_ORDER})
        row.update({"k_free": k_free, "converged": False,
                    "error": f"{type(exc).__name__}: {exc}"})
        return label, row, None


def _trace_csv_bytes(trace: SolveTrace) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(TRACE_COLUMNS)
    w.writerow([0, repr(1.0), "", "", "", repr(0.0)])
    for i in range(len(trace.rel_residual)):
        w.writerow([i + 1, repr(trace.rel_residual[i]),
                    repr(trace.res_healthy[i]), repr(trace.res_faulty[i]),
                    repr(trace.res_interface[i]),
                    repr(trace.logical_time[i])])
    return buf.getvalue().encode()


def run_sweep(spec: SweepSpec, output_dir=None, jobs: int = 1) -> OutputBundle:
    """Cross-product of the axes over the base scenario.

    The fault-free baseline is computed once and shared by every row;
    independent rows may execute in parallel but are emitted in axis
    order, so the output bytes do not depend on the job count.
    """
    base = spec.base
    directory = output_dir or base.output_dir
    traces_dir = os.path.join(directory, "traces")
    os.makedirs(traces_dir, exist_ok=True)

    h = build_hierarchy(base.grid)
    problem = get_problem(base.problem)
    baseline = run_fault_free(h, problem, base.cycle, base.stop,
                              initial=base.initial_guess, seed=base.seed)
    k_free = baseline.iterations
    baseline_path = os.path.join(traces_dir, "baseline.csv")
    emit_trace(baseline, baseline_path)

    combos = _sweep_combos(spec)
    base_resolved = base.resolved()
    tasks = [(base_resolved,
              json.dumps({k: (str(v) if isinstance(v, Fraction) else v)
                          for k, v in combo.items()}, sort_keys=True),
              k_free)
             for combo in combos]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    trace_paths = [baseline_path]
    for label, row, trace_bytes in results:
        rows.append(row)
        if trace_bytes is not None:
            p = os.path.join(traces_dir, f"{label}.csv")
            with open(p, "wb") as fh:
                fh.write(trace_bytes)
            trace_paths.append(p)

    table = os.path.join(directory, "kappa_table.csv")
    emit_table(rows, table)
    sweep_resolved = {"base": base_resolved,
                      "axes": {k: [str(v) if isinstance(v, Fraction) else v
                                   for v in vals]
                               for k, vals in spec.axes.items()}}
    manifest = _write_manifest(directory, sweep_resolved,
                               [table] + trace_paths, extra={"k_free": k_free})
    return OutputBundle(directory, table, trace_paths, manifest, rows)


def run_baseline(cfg: ScenarioConfig, output_dir=None) -> tuple[OutputBundle, int]:
    """Fault-free solve only; returns the bundle and the iteration count."""
    directory = output_dir or cfg.output_dir
    traces_dir = os.path.join(directory, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    h = build_hierarchy(cfg.grid)
    problem = get_problem(cfg.problem)
    union = frozenset().union(*(e.subdomains for e in cfg.faults)) \
        if cfg.faults else frozenset()
    mask = region_masks(h, union) if (union and cfg.trace_regions) else None
    trace = run_fault_free(h, problem, cfg.cycle, cfg.stop, mask=mask,
                           initial=cfg.initial_guess, seed=cfg.seed)
    p = os.path.join(traces_dir, "baseline.csv")
    emit_trace(trace, p)
    manifest = _write_manifest(directory, cfg.resolved(), [p],
                               extra={"k_free": trace.iterations,
                                      "converged": trace.converged})
    bundle = OutputBundle(directory, "", [p], manifest, [])
    return bundle, trace.iterations if trace.converged else -1
