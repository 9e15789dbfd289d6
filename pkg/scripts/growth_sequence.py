"""Multi-step run on a synthetic ice sequence with a fixed contact strip.

Writes the sections, manifests and case file, runs every step until the ice
sheds, and prints the forces at the root plane for each step. Adhesion stays
put while centrifugal and cohesion forces grow with the ice.

    python scripts/growth_sequence.py --out runs/growth --steps 18
"""
import argparse
from pathlib import Path

import numpy as np

from iceshed.driver import emit_report, load_case, run_multistep
from iceshed.synthetic import write_growth_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/growth")
    ap.add_argument("--steps", type=int, default=18)
    ap.add_argument("--root-rate", type=float, default=0.002, help="m per step at 0.5 R")
    ap.add_argument("--tip-rate", type=float, default=0.006, help="m per step at the tip")
    ap.add_argument("--flare", type=float, default=2.0)
    ap.add_argument("--contact-width", type=float, default=0.03)
    ap.add_argument("--temperature", type=float, default=-8.0)
    ap.add_argument("--rpm", type=float, default=600.0)
    args = ap.parse_args()

    out = Path(args.out)
    k = np.arange(1, args.steps + 1)
    case_path = write_growth_case(
        out / "case", args.root_rate * k, args.tip_rate * k,
        contact_width=args.contact_width, flare=args.flare,
        extra={"case.name": "synthetic-growth", "case.temperature": repr(args.temperature),
               "case.accretion_dt": "40", "rotor.rpm": repr(args.rpm)})
    report = run_multistep(load_case(case_path))
    emit_report(report, out / "report")

    print(f"{'step':>4} {'t [s]':>7} {'F_C [N]':>10} {'F_coh [N]':>10} {'F_adh [N]':>10}  shed")
    for s in report.steps:
        c = s.curve
        print(f"{s.index:>4} {s.time:>7.0f} {c.F_C[0]:>10.1f} {c.F_coh[0]:>10.1f} "
              f"{c.F_adh[0]:>10.1f}  {s.result.shed}")
    if report.shed_time is None:
        print("no shedding")
    else:
        print(f"shed at {report.shed_time:.0f} s, r/R = {report.shed_location:.4f}")
    print(f"outputs in {out / 'report'}")


if __name__ == "__main__":
    main()
