#!/usr/bin/env python3
"""Spectral-filter width sweep: how a Lorentzian filter at the cavity
frequency trades emission against single-photon character."""

import argparse
from dataclasses import replace
from pathlib import Path

from cascade_sim.params import SimConfig, PhononParams, CavityParams, FilterSpec, VModeTreatment
from cascade_sim.runner import SweepSpec, run_sweep, records_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures-data")
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--e-bind", type=float, default=2900.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    base = SimConfig(
        cavity=CavityParams(v_mode=VModeTreatment.EFFECTIVE),
        filter=FilterSpec(enabled=True, mu_s=103.4),
        phonons=PhononParams(temperature=4.2))
    base = replace(base, qd=replace(base.qd, e_bind=args.e_bind))
    kappa = base.cavity.kappa
    spec = SweepSpec(axis="mu_s", values=[0.5 * kappa, kappa, 2 * kappa,
                                          5 * kappa, 10 * kappa], base=base)
    records = run_sweep(spec, threads=args.threads)
    records_to_csv(records, str(out / "filter_width_sweep.csv"))
    print(f"wrote {out}/filter_width_sweep.csv")


if __name__ == "__main__":
    main()
