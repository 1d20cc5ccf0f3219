#!/usr/bin/env python3
"""Write the closed-form curves behind the design plots: sphere responses
across a scale ladder, the inter-scale response dip versus the ratio k,
and the size-error bounds versus k."""
import csv
import pathlib

import numpy as np

from logblob.analytic import dip_response, size_error_bounds, sphere_response
from logblob.scaleplan import build_plan


def main():
    out = pathlib.Path("out")
    out.mkdir(exist_ok=True)
    plan = build_plan(3.0, 25.0, 10)

    with open(out / "sphere_responses.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        sigmas = [e.sigma_mm for e in plan.interior]
        writer.writerow(["d_mm"] + [f"R_sigma_{s:.2f}" for s in sigmas])
        for d in np.linspace(1.0, 30.0, 291):
            writer.writerow([f"{d:.4f}"] + [f"{sphere_response(s, d):.4f}" for s in sigmas])
    print(f"wrote {out / 'sphere_responses.csv'}")

    with open(out / "dip_vs_ratio.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "r_dip"])
        for k in np.linspace(1.01, 2.0, 100):
            writer.writerow([f"{k:.4f}", f"{dip_response(k):.4f}"])
    print(f"wrote {out / 'dip_vs_ratio.csv'}")

    with open(out / "size_errors_vs_ratio.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "underestimate", "overestimate"])
        for k in np.linspace(1.01, 2.0, 100):
            ue, oe = size_error_bounds(k)
            writer.writerow([f"{k:.4f}", f"{ue:.4f}", f"{oe:.4f}"])
    print(f"wrote {out / 'size_errors_vs_ratio.csv'}")


if __name__ == "__main__":
    main()
