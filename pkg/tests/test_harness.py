"""Config loading/validation, scenario and sweep execution, CSV contracts."""

import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

import faultmg as fm
from faultmg.harness import (AXIS_ORDER, TABLE_COLUMNS, TRACE_COLUMNS,
                             apply_combo, emit_table, emit_trace, load_config,
                             load_sweep, parse_scenario, parse_sweep,
                             run_scenario, run_sweep, scenario_subdomain)
from faultmg.solvers import SolveTrace

MINIMAL = {"grid": {"subdomain_counts": [2, 2, 2],
                    "base_cells_per_subdomain": 2, "levels": 1}}


def small_scenario(tmp_path, **overrides):
    data = {
        "grid": {"subdomain_counts": [3, 3, 3],
                 "base_cells_per_subdomain": 2, "levels": 1},
        "problem": "harmonic_poly",
        "faults": [{"after_cycle": 3, "subdomains": ["center"]}],
        "recovery": {"strategy": "LR", "local_solver": "Vcycle", "n_F": 2},
        "accounting": "table1",
        "output_dir": str(tmp_path / "out"),
    }
    data.update(overrides)
    return parse_scenario(data)


def test_minimal_config_resolves_defaults():
    cfg = parse_scenario(MINIMAL)
    assert cfg.cycle.kind == "V"
    assert cfg.cycle.pre_smooth == 3 and cfg.cycle.post_smooth == 3
    assert cfg.stop.rel_residual_tol == 1e-13
    assert cfg.recovery.strategy == "none"
    assert cfg.accounting == "global"
    assert cfg.faults == []


def test_unknown_strategy_error_names_field():
    data = dict(MINIMAL, recovery={"strategy": "XX"})
    with pytest.raises(fm.ConfigError, match="recovery.strategy"):
        parse_scenario(data)


def test_fault_id_out_of_range_error():
    data = dict(MINIMAL, faults=[{"after_cycle": 2, "subdomains": [99]}])
    with pytest.raises(fm.ConfigError, match=r"faults\[0\].subdomains\[0\]"):
        parse_scenario(data)


def test_unknown_field_rejected():
    with pytest.raises(fm.ConfigError, match="gridd"):
        parse_scenario({"gridd": {}})


def test_eta_fraction_string_round_trip():
    data = dict(MINIMAL, recovery={"strategy": "DD", "n_I": 1,
                                   "eta_super": "3/2"})
    cfg = parse_scenario(data)
    assert cfg.recovery.eta_super == Fraction(3, 2)
    assert cfg.recovery.resolved_n_F == 2
    again = parse_scenario(cfg.resolved())
    assert again.recovery.eta_super == Fraction(3, 2)


def test_scenario_positions():
    spec = fm.PartitionSpec((3, 3, 3), 2, 1)
    assert scenario_subdomain(spec, "corner") == 0
    assert scenario_subdomain(spec, "edge") == spec.subdomain_id(0, 0, 1)
    assert scenario_subdomain(spec, "center") == 13
    with pytest.raises(fm.ConfigError):
        scenario_subdomain(fm.PartitionSpec((2, 2, 2), 2, 1), "center")


def test_manifest_reruns_identically(tmp_path):
    cfg = small_scenario(tmp_path)
    bundle = run_scenario(cfg)
    first = open(bundle.kappa_table, "rb").read()
    with open(bundle.manifest) as fh:
        manifest = json.load(fh)
    cfg2 = parse_scenario(manifest)
    out2 = tmp_path / "rerun"
    bundle2 = run_scenario(cfg2, output_dir=str(out2))
    assert open(bundle2.kappa_table, "rb").read() == first


def test_emit_table_empty_and_column_order(tmp_path):
    path = tmp_path / "empty.csv"
    emit_table([], path)
    lines = path.read_text().splitlines()
    assert lines == [",".join(TABLE_COLUMNS)]


def test_emit_trace_round_trip(tmp_path):
    trace = SolveTrace(r0_norm=2.0,
                       rel_residual=[0.5, 0.0625],
                       res_healthy=[0.25, 0.03125],
                       res_faulty=[0.1, 0.2],
                       res_interface=[0.0, 1e-17],
                       logical_time=[1.0, 4.5])
    path = tmp_path / "trace.csv"
    emit_trace(trace, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == TRACE_COLUMNS
    assert [float(r["rel_residual"]) for r in rows[1:]] == trace.rel_residual
    assert [float(r["res_faulty"]) for r in rows[1:]] == trace.res_faulty
    assert [float(r["logical_time"]) for r in rows[1:]] == trace.logical_time


def test_run_scenario_fault_free_row(tmp_path):
    cfg = small_scenario(tmp_path, faults=[],
                         recovery={"strategy": "none"})
    bundle = run_scenario(cfg)
    row = bundle.rows[0]
    assert row["kappa"] == 0
    assert row["k_faulty"] == row["k_free"]
    assert row["converged"]


def test_run_scenario_kappa_identity_in_csv(tmp_path):
    cfg = small_scenario(tmp_path)
    bundle = run_scenario(cfg)
    with open(bundle.kappa_table) as fh:
        row = next(csv.DictReader(fh))
    kappa = Fraction(row["kappa"])
    assert kappa == (Fraction(row["k_faulty"]) - Fraction(row["k_free"])) \
        / Fraction(row["k_F"])


def test_sweep_single_point_equals_scenario(tmp_path):
    cfg = small_scenario(tmp_path)
    bundle = run_scenario(cfg, output_dir=str(tmp_path / "single"))
    spec = parse_sweep({"base": cfg.resolved(),
                        "axes": {"n_F": [2]}})
    sweep_bundle = run_sweep(spec, output_dir=str(tmp_path / "sweep"))
    a = bundle.rows[0]
    b = sweep_bundle.rows[0]
    for key in ("strategy", "k_F", "n_F", "k_free", "k_cycles", "k_faulty",
                "kappa"):
        assert a[key] == b[key], key


def test_sweep_baseline_shared_and_error_rows(tmp_path):
    base = small_scenario(tmp_path)
    spec = parse_sweep({
        "base": base.resolved(),
        "axes": {"strategy": ["LR", "DD"], "n_I": [1], "k_F": [3, 99]},
    })
    bundle = run_sweep(spec, output_dir=str(tmp_path / "sw"))
    assert len(bundle.rows) == 4
    k_frees = {r["k_free"] for r in bundle.rows if not r["error"]}
    assert len(k_frees) == 1
    # k_F=99 fires after convergence: fault never happens, still a valid row
    for row in bundle.rows:
        assert not row["error"]


def test_sweep_error_row_continues(tmp_path):
    base = small_scenario(tmp_path, grid={"subdomain_counts": [2, 2, 2],
                                          "base_cells_per_subdomain": 2,
                                          "levels": 1},
                          faults=[{"after_cycle": 3, "subdomains": [0]}])
    spec = parse_sweep({
        "base": base.resolved(),
        "axes": {"scenario": ["corner", "center"]},
    })
    bundle = run_sweep(spec, output_dir=str(tmp_path / "err"))
    errors = [r for r in bundle.rows if r["error"]]
    good = [r for r in bundle.rows if not r["error"]]
    assert len(errors) == 1 and "center" in errors[0]["error"]
    assert len(good) == 1


def test_sweep_jobs_bitwise_identical(tmp_path):
    base = small_scenario(tmp_path)
    sweep_data = {"base": base.resolved(),
                  "axes": {"strategy": ["LR", "DD", "DN"], "n_I": [1, 2]}}
    outs = []
    for jobs, name in ((1, "sj1"), (2, "sj2")):
        spec = parse_sweep(sweep_data)
        bundle = run_sweep(spec, output_dir=str(tmp_path / name), jobs=jobs)
        outs.append({
            "table": open(bundle.kappa_table, "rb").read(),
            "traces": {p.split("/")[-1]: open(p, "rb").read()
                       for p in bundle.traces},
        })
    assert outs[0] == outs[1]

    # every emitted kappa satisfies the identity against its own k columns
    with open(tmp_path / "sj1" / "kappa_table.csv") as fh:
        for row in csv.DictReader(fh):
            kappa = Fraction(row["kappa"])
            assert kappa == (Fraction(row["k_faulty"]) - Fraction(row["k_free"])) \
                / Fraction(row["k_F"])


def test_apply_combo_derives_n_F():
    base = parse_scenario(dict(
        MINIMAL,
        faults=[{"after_cycle": 2, "subdomains": [0]}],
        recovery={"strategy": "DD", "n_I": 1, "eta_super": 2}))
    combo = apply_combo(base, {"n_I": 3})
    assert combo.recovery.resolved_n_F == 6
    combo = apply_combo(base, {"strategy": "none"})
    assert combo.recovery.n_I == 0


def test_cli_run_and_exit_codes(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "grid": {"subdomain_counts": [2, 2, 2],
                 "base_cells_per_subdomain": 2, "levels": 1},
        "faults": [{"after_cycle": 2, "subdomains": [0]}],
        "recovery": {"strategy": "LR", "local_solver": "Vcycle", "n_F": 2},
        "output_dir": str(tmp_path / "cliout"),
    }))
    r = subprocess.run([sys.executable, "-m", "faultmg.cli", "run",
                        str(cfg_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "cliout" / "kappa_table.csv").exists()

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"subdomain_counts": [2, 2]}}))
    r = subprocess.run([sys.executable, "-m", "faultmg.cli", "validate",
                        str(bad)], capture_output=True, text=True)
    assert r.returncode == 2
    assert "subdomain_counts" in r.stderr

    slow = tmp_path / "slow.json"
    slow.write_text(json.dumps({
        "grid": {"subdomain_counts": [2, 2, 2],
                 "base_cells_per_subdomain": 2, "levels": 1},
        "solver": {"stop": {"max_cycles": 2}},
        "output_dir": str(tmp_path / "slowout"),
    }))
    r = subprocess.run([sys.executable, "-m", "faultmg.cli", "run",
                        str(slow)], capture_output=True, text=True)
    assert r.returncode == 3


def test_cli_baseline_verb(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "grid": {"subdomain_counts": [2, 2, 2],
                 "base_cells_per_subdomain": 2, "levels": 1},
        "output_dir": str(tmp_path / "bout"),
    }))
    r = subprocess.run([sys.executable, "-m", "faultmg.cli", "baseline",
                        str(cfg_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert "k_free" in r.stdout
    assert (tmp_path / "bout" / "traces" / "baseline.csv").exists()
