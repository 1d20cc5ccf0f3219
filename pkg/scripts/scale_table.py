#!/usr/bin/env python3
"""Print the operating scale ladder and the design numbers derived from it."""
import math

from logblob.analytic import (
    SPHERE_PEAK_RESPONSE,
    derive_solid_threshold,
    dip_response,
    size_error_bounds,
)
from logblob.scaleplan import build_plan, validate_plan


def main():
    plan = build_plan(3.0, 25.0, 10)
    print(f"scale ratio k = {plan.ratio:.4f}")
    print(f"{'i':>2}  {'d_mm':>7}  {'sigma_mm':>8}  {'range_mm':>16}")
    for e in plan.entries:
        rng = "-" if e.is_boundary else f"{e.range_lo_mm:6.2f} - {e.range_hi_mm:6.2f}"
        tag = " (boundary)" if e.is_boundary else ""
        print(f"{e.index:>2}  {e.diameter_mm:7.2f}  {e.sigma_mm:8.2f}  {rng:>16}{tag}")
    for violation in validate_plan(plan):
        print(f"warning: {violation}")

    r_dip = dip_response(plan.ratio)
    d_ue, d_oe = size_error_bounds(plan.ratio)
    threshold = derive_solid_threshold(0.7, r_dip, SPHERE_PEAK_RESPONSE, -474.0, -810.0)
    print(f"\nworst inter-scale response dip: {r_dip:.4f} "
          f"({r_dip / SPHERE_PEAK_RESPONSE:.3f} of peak)")
    print(f"size error bounds: -{d_ue:.3f} / +{d_oe:.3f}")
    print(f"derived solid response threshold: {threshold:.1f} (rounds to {round(threshold)})")


if __name__ == "__main__":
    main()
