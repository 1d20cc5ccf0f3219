#!/usr/bin/env python3
"""Run the sphere-cylinder and sphere-wall interference sweeps and write
their tables to out/ (this is the slow, full-resolution experiment)."""
import csv
import pathlib
import time

from logblob.phantom import SWEEP_CSV_HEADER, sphere_reference, sweep_sphere_cylinder, sweep_sphere_wall
from logblob.scaleplan import build_plan

CYL_DISTANCES = [2.0, 1.5, 1.0, 0.75, 0.6, 0.45, 0.35, 0.2]
WALL_DISTANCES = [1.5, 1.25, 1.0, 0.75, 0.5, 0.25]


def write(points, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for p in points:
            writer.writerow([f"{p.distance_diameters:.4f}", f"{p.response:.4f}",
                             f"{p.size_estimate_mm:.4f}", int(p.merged)])
    print(f"wrote {path}")


def main():
    out = pathlib.Path("out")
    out.mkdir(exist_ok=True)
    plan = build_plan(3.0, 25.0, 10)

    t0 = time.perf_counter()
    iso = sphere_reference(10.0, plan)
    print(f"isolated 10 mm sphere: response {iso.response:.4f}, "
          f"size estimate {iso.size_estimate_mm:.2f} mm [{time.perf_counter() - t0:.0f} s]")

    t0 = time.perf_counter()
    write(sweep_sphere_cylinder(10.0, CYL_DISTANCES, plan), out / "sphere_cylinder.csv")
    print(f"[cylinder sweep {time.perf_counter() - t0:.0f} s]")

    t0 = time.perf_counter()
    write(sweep_sphere_wall(10.0, WALL_DISTANCES, plan), out / "sphere_wall.csv")
    print(f"[wall sweep {time.perf_counter() - t0:.0f} s]")


if __name__ == "__main__":
    main()
