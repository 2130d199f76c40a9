"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .params import SimConfig, ConfigError, load_config, config_hash
from .evolve import SolverError


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CASCADE_SIM_THREADS")
    return int(env) if env else 0


def _add_common(p):
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (0 = auto; env CASCADE_SIM_THREADS)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cascade-sim",
        description="Polaron master-equation simulator for a cavity-enhanced "
                    "biexciton-exciton single-photon source")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single configuration")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--dump-trajectory", action="store_true")
    p_run.add_argument("--dump-grids", action="store_true")
    p_run.add_argument("--observables", default=None,
                       help="comma-separated observable series to export")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("--sweep", required=True)
    p_sweep.add_argument("--dump-trajectory", action="store_true")
    p_sweep.add_argument("--dump-grids", action="store_true")
    _add_common(p_sweep)

    p_an = sub.add_parser("analytic", help="closed-form rates and visibility limit")
    p_an.add_argument("--config", default=None)
    p_an.add_argument("--out", default=None, help="CSV path (default: stdout)")

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "analytic":
            return _cmd_analytic(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


def _cmd_run(args) -> int:
    from .runner import run_point, records_to_json
    config = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    record = run_point(config, dump_dir=str(out),
                       dump_trajectory=args.dump_trajectory,
                       dump_grids=args.dump_grids)
    records_to_json([record], str(out / "run.json"), include_spectrum=True)
    if args.observables and record.metrics is not None:
        wanted = [w.strip() for w in args.observables.split(",") if w.strip()]
        print(json.dumps({k: v for k, v in record.metrics.to_dict(False).items()
                          if k in wanted or not wanted}, indent=2))
    m = record.metrics
    print(f"config {record.config_hash}: emission={m.emission:.6f} "
          f"purity={m.purity:.6f} indistinguishability={m.indistinguishability:.6f} "
          f"visibility={m.visibility:.6f} g2_zero={m.g2_zero:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    from .runner import load_sweep_spec, run_sweep, records_to_csv, records_to_json
    spec = load_sweep_spec(args.sweep)
    records = run_sweep(spec, threads=_threads(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records_to_csv(records, str(out / "sweep.csv"))
    records_to_json(records, str(out / "sweep.json"))
    n_failed = sum(1 for r in records if not r.ok)
    for r in records:
        status = "failed" if not r.ok else \
            f"emission={r.metrics.emission:.4f} purity={r.metrics.purity:.4f}"
        print(f"{spec.axis}={r.axis_value}: {status}")
    if n_failed == len(records):
        print("all sweep points failed", file=sys.stderr)
        return 3
    if n_failed:
        print(f"{n_failed}/{len(records)} sweep points failed", file=sys.stderr)
        return 4
    return 0


def _cmd_analytic(args) -> int:
    from . import analytic
    from .phonon import displacement_factor
    config = load_config(args.config) if args.config else SimConfig()
    b = displacement_factor(config.phonons)
    rows = ["variant,b,gamma_x,gamma_xx,lifetime_ratio,visibility,indistinguishability,"
            "purcell_rate,weak_coupling"]
    for label, rescaled in (("rescaled", True), ("bare", False)):
        rates = analytic.full_decay_rates(config, b=b, rescaled=rescaled)
        v, i = analytic.visibility_limit(rates)
        g_eff = (b if rescaled else 1.0) * config.cavity.g
        rows.append(",".join([
            label, f"{b:.10e}", f"{rates.gamma_x:.10e}", f"{rates.gamma_xx:.10e}",
            f"{rates.lifetime_ratio:.10e}", f"{v:.10e}", f"{i:.10e}",
            f"{analytic.purcell_rate(g_eff, config.cavity.kappa):.10e}",
            str(int(analytic.purcell_weak_coupling(config, b if rescaled else 1.0))),
        ]))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
