#!/usr/bin/env python3
"""Binding-energy sweep of the photon quality metrics (emission / purity /
indistinguishability vs E_bind) for the three standard environment cases:
4.2 K, 0 K, and 0 K without phonon coupling.

Writes one CSV per case into --out; these feed the figures front end.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from cascade_sim.params import SimConfig, PhononParams
from cascade_sim.runner import SweepSpec, run_sweep, records_to_csv, records_to_json

CASES = {
    "T4p2K": PhononParams(temperature=4.2),
    "T0K": PhononParams(temperature=0.0, include_deph=False),
    "T0K_no_phonons": PhononParams(include_phonons=False, include_deph=False,
                                   temperature=0.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures-data")
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--values", type=float, nargs="+",
                    default=[-5000, -2000, -1000, -500, 0, 500, 1000, 2000, 5000])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for tag, phonons in CASES.items():
        base = replace(SimConfig(), phonons=phonons)
        spec = SweepSpec(axis="e_bind", values=args.values, base=base)
        records = run_sweep(spec, threads=args.threads)
        records_to_csv(records, str(out / f"e_bind_sweep_{tag}.csv"))
        records_to_json(records, str(out / f"e_bind_sweep_{tag}.json"))
        print(f"wrote {out}/e_bind_sweep_{tag}.csv")


if __name__ == "__main__":
    main()
