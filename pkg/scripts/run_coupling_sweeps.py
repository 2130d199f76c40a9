#!/usr/bin/env python3
"""Coupling and loss sweeps at fixed binding energy: g with fixed kappa,
g with kappa slaved to the rescaled coupling, and kappa at fixed g."""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from cascade_sim.params import SimConfig, PhononParams
from cascade_sim.runner import SweepSpec, run_sweep, records_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures-data")
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--temperature", type=float, default=4.2)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    phonons = PhononParams(temperature=args.temperature,
                           include_deph=args.temperature > 0)
    base = replace(SimConfig(), phonons=phonons)
    g_values = list(np.round(np.linspace(5.0, 45.0, 9), 2))
    kappa_values = list(np.round(np.linspace(40.0, 250.0, 8), 2))

    sweeps = [
        ("g_fixed_kappa", SweepSpec(axis="g", values=g_values, base=base)),
        ("g_tracking_kappa", SweepSpec(axis="g", values=g_values, base=base,
                                       coupling_mode="kappa_tracks_g")),
        ("kappa_fixed_g", SweepSpec(axis="kappa", values=kappa_values, base=base)),
    ]
    for tag, spec in sweeps:
        records = run_sweep(spec, threads=args.threads)
        records_to_csv(records, str(out / f"coupling_sweep_{tag}.csv"))
        print(f"wrote {out}/coupling_sweep_{tag}.csv")


if __name__ == "__main__":
    main()
