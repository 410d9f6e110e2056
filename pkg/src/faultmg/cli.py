"""Command-line entry points: run, sweep, baseline, validate.

Exit codes: 0 on success, 2 on configuration errors, 3 when a solve did
not reach its stopping tolerance within the cycle budget.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, FaultMGError
from .harness import (load_config, load_sweep, parse_scenario, run_baseline,
                      run_scenario, run_sweep)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def _add_common(p):
    p.add_argument("config", help="path to a JSON config (or manifest)")
    p.add_argument("--output-dir", default=None,
                   help="override the config's output directory")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes for independent runs "
                        "(only sweeps have more than one)")
    p.add_argument("--accounting", choices=("global", "table1"), default=None,
                   help="cycle-advantage accounting mode override")
    p.add_argument("--trace-regions", action="store_true", default=None,
                   help="force per-region residual columns in traces")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="faultmg",
        description="Fault-tolerant multigrid laboratory: scenario and sweep "
                    "runner with cycle-advantage tables and residual traces.")
    sub = ap.add_subparsers(dest="verb", required=True)

    _add_common(sub.add_parser("run",
                               help="run one scenario (baseline + faulty job)"))
    _add_common(sub.add_parser("sweep", help="run a cross-product sweep"))
    _add_common(sub.add_parser("baseline",
                               help="run the fault-free baseline only"))
    val_p = sub.add_parser("validate", help="validate a config and echo it")
    val_p.add_argument("config")
    return ap


def _apply_overrides(cfg, args):
    if args.accounting is not None:
        cfg.accounting = args.accounting
    if args.trace_regions:
        cfg.trace_regions = True
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            cfg = load_config(args.config)
            json.dump(cfg.resolved(), sys.stdout, indent=2, sort_keys=True)
            print()
            return EXIT_OK

        if args.verb == "run":
            cfg = _apply_overrides(load_config(args.config), args)
            bundle = run_scenario(cfg, output_dir=args.output_dir)
            print(f"wrote {bundle.kappa_table}")
            if not all(r["converged"] for r in bundle.rows):
                print("solver did not converge within max_cycles", file=sys.stderr)
                return EXIT_NONCONVERGED
            return EXIT_OK

        if args.verb == "baseline":
            cfg = _apply_overrides(load_config(args.config), args)
            bundle, k_free = run_baseline(cfg, output_dir=args.output_dir)
            if k_free < 0:
                print("baseline did not converge within max_cycles",
                      file=sys.stderr)
                return EXIT_NONCONVERGED
            print(f"k_free = {k_free}; wrote {bundle.manifest}")
            return EXIT_OK

        # sweep
        with open(args.config) as fh:
            data = json.load(fh)
        spec = load_sweep(args.config) if "axes" in data else None
        if spec is None:
            raise ConfigError("axes: required for sweep configs")
        spec.base = _apply_overrides(spec.base, args)
        bundle = run_sweep(spec, output_dir=args.output_dir, jobs=args.jobs)
        print(f"wrote {bundle.kappa_table} ({len(bundle.rows)} rows)")
        bad = [r for r in bundle.rows if r["error"]]
        if bad:
            print(f"{len(bad)} run(s) failed; see error column", file=sys.stderr)
        if not all(r["converged"] for r in bundle.rows if not r["error"]):
            print("some runs did not converge within max_cycles", file=sys.stderr)
            return EXIT_NONCONVERGED
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FaultMGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
