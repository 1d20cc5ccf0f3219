"""Batch command-line front end.

Subcommands: plan-scales, detect, phantom, simulate, evaluate, analytic.
All numeric output uses fixed 4-decimal formatting and deterministic
ordering, so reruns with identical inputs are byte-identical. Exit code
0 on success, 2 on any reported error. The LOGBLOB_MAX_WORKERS
environment variable caps FFT worker threads.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import analytic, phantom
from .detect import DetectionConfig, detect_nonsolid, detect_solid, read_candidates_csv, write_candidates_csv
from .evaluate import match, read_truth_csv, write_per_nodule_csv, write_report_json
from .scaleplan import build_plan, validate_plan
from .volume import Mask3D, load_mask, load_volume, read_grid


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _add_plan_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dmin", type=float, default=3.0, help="smallest interior diameter, mm")
    p.add_argument("--dmax", type=float, default=25.0, help="largest interior diameter, mm")
    p.add_argument("--n", type=int, default=10, help="number of interior scales")


def _plan_rows(plan):
    rows = [["index", "diameter_mm", "sigma_mm", "range_lo_mm", "range_hi_mm", "boundary"]]
    for e in plan.entries:
        rows.append([
            e.index, _fmt(e.diameter_mm), _fmt(e.sigma_mm),
            _fmt(e.range_lo_mm) if e.range_lo_mm is not None else "",
            _fmt(e.range_hi_mm) if e.range_hi_mm is not None else "",
            int(e.is_boundary),
        ])
    return rows


def cmd_plan_scales(args) -> int:
    plan = build_plan(args.dmin, args.dmax, args.n)
    violations = validate_plan(plan, max_k=args.max_k)
    for v in violations:
        print(f"warning: {v}", file=sys.stderr)
    if args.json:
        doc = {
            "ratio": round(plan.ratio, 6),
            "entries": [
                {
                    "index": e.index,
                    "diameter_mm": round(e.diameter_mm, 4),
                    "sigma_mm": round(e.sigma_mm, 4),
                    "range_lo_mm": round(e.range_lo_mm, 4) if e.range_lo_mm is not None else None,
                    "range_hi_mm": round(e.range_hi_mm, 4) if e.range_hi_mm is not None else None,
                    "boundary": e.is_boundary,
                }
                for e in plan.entries
            ],
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        text = "\n".join(",".join(str(c) for c in row) for row in _plan_rows(plan)) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_detect(args) -> int:
    vol = load_volume(args.volume)
    mask = load_mask(args.mask) if args.mask else Mask3D.full(vol.dims, vol.spacing_mm)
    mask.check_paired(vol)
    plan = build_plan(args.dmin, args.dmax, args.n)
    if args.mode == "solid":
        if args.window_t is not None:
            raise ValueError("--window-t applies to nonsolid mode only")
        threshold = 226.0 if args.threshold is None else args.threshold
        cfg = DetectionConfig.solid(response_threshold=threshold,
                                    dilation_radius_mm=args.dilate_mm)
        cands = detect_solid(vol, mask, plan, cfg, workers=args.workers)
    else:
        window = -700.0 if args.window_t is None else args.window_t
        cfg = DetectionConfig.nonsolid(window_T=window,
                                       response_threshold=args.threshold,
                                       dilation_radius_mm=args.dilate_mm)
        cands = detect_nonsolid(vol, mask, plan, cfg, workers=args.workers)
    write_candidates_csv(cands, args.out)
    print(f"{len(cands)} candidates -> {args.out}")
    return 0


def _parse_floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def cmd_phantom(args) -> int:
    prims = []
    for spec_str in args.sphere or []:
        cx, cy, cz, d, inten = _parse_floats(spec_str, 5, "--sphere")
        prims.append(phantom.Sphere((cx, cy, cz), d, inten))
    for spec_str in args.cylinder or []:
        vals = spec_str.split(",")
        if len(vals) == 8:
            cx, cy, cz, ax, ay, az, d, inten = (float(v) for v in vals)
            length = None
        elif len(vals) == 9:
            cx, cy, cz, ax, ay, az, d, inten, length = (float(v) for v in vals)
        else:
            raise ValueError(f"--cylinder: expected 8 or 9 numbers, got {spec_str!r}")
        prims.append(phantom.Cylinder((cx, cy, cz), (ax, ay, az), d, inten, length))
    for spec_str in args.wall or []:
        px, py, pz, nx, ny, nz, t, inten = _parse_floats(spec_str, 8, "--wall")
        prims.append(phantom.Wall((px, py, pz), (nx, ny, nz), t, inten))
    dims = tuple(int(v) for v in _parse_floats(args.dims, 3, "--dims"))
    spacing = _parse_floats(args.spacing, 3, "--spacing")
    scene = phantom.Scene(dims, spacing, args.background, tuple(prims), units=args.units)
    vol = phantom.rasterize(scene, supersample=args.supersample)
    from .volume import save_volume

    save_volume(vol, args.out, dtype=args.dtype)
    print(f"{len(prims)} primitives -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    plan = build_plan(args.dmin, args.dmax, args.n)
    distances = [float(v) for v in args.distances.split(",")]
    if args.mode == "cyl":
        points = phantom.sweep_sphere_cylinder(args.d, distances, plan,
                                               supersample=args.supersample,
                                               workers=args.workers)
    else:
        points = phantom.sweep_sphere_wall(args.d, distances, plan,
                                           supersample=args.supersample,
                                           workers=args.workers)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(phantom.SWEEP_CSV_HEADER)
        for p in points:
            writer.writerow([_fmt(p.distance_diameters), _fmt(p.response),
                             _fmt(p.size_estimate_mm), int(p.merged)])
    print(f"{len(points)} sweep points -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    truth = read_truth_csv(args.truth)
    cands = read_candidates_csv(args.candidates)
    _, spacing = read_grid(args.volume)
    report = match(truth, cands, spacing)
    write_report_json(report, args.out)
    if args.per_nodule:
        write_per_nodule_csv(report, args.per_nodule)
    print(f"sensitivity {report.sensitivity:.4f} -> {args.out}")
    return 0


def cmd_analytic(args) -> int:
    rows = []
    if args.curve in ("sphere", "cylinder"):
        fn = analytic.sphere_response if args.curve == "sphere" else analytic.cylinder_response
        sigmas = [float(v) for v in args.sigmas.split(",")]
        header = ["d_mm"] + [f"R_sigma_{_fmt(s)}" for s in sigmas]
        for d in np.linspace(args.dmin, args.dmax, args.steps):
            rows.append([_fmt(d)] + [_fmt(fn(s, d)) for s in sigmas])
    elif args.curve == "dip":
        header = ["k", "r_dip"]
        for k in np.linspace(args.kmin, args.kmax, args.steps):
            rows.append([_fmt(k), _fmt(analytic.dip_response(k))])
    else:  # size-errors
        header = ["k", "underestimate", "overestimate"]
        for k in np.linspace(args.kmin, args.kmax, args.steps):
            ue, oe = analytic.size_error_bounds(k)
            rows.append([_fmt(k), _fmt(ue), _fmt(oe)])
    text = ",".join(header) + "\n" + "\n".join(",".join(r) for r in rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logblob",
                                     description="multiscale normalized-LoG blob detection for 3D volumes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-scales", help="print the quantized scale table")
    _add_plan_args(p)
    p.add_argument("--max-k", type=float, default=analytic.SHAPE_CONFUSION_RATIO)
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(fn=cmd_plan_scales)

    p = sub.add_parser("detect", help="run candidate generation on a volume file")
    p.add_argument("--mode", choices=["solid", "nonsolid"], required=True)
    p.add_argument("--volume", required=True, help="volume header (JSON)")
    p.add_argument("--mask", help="mask header (JSON); full mask when omitted")
    p.add_argument("--out", required=True, help="candidate CSV path")
    _add_plan_args(p)
    p.add_argument("--threshold", type=float, default=None,
                   help="response threshold (default: 226 solid, none nonsolid)")
    p.add_argument("--window-t", type=float, default=None,
                   help="intensity window level for nonsolid mode (default -700)")
    p.add_argument("--dilate-mm", type=float, default=10.0, help="mask dilation radius")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("phantom", help="rasterize a synthetic scene to a volume file")
    p.add_argument("--dims", default="128,128,128")
    p.add_argument("--spacing", default="1,1,1")
    p.add_argument("--background", type=float, default=0.0)
    p.add_argument("--units", choices=["HU", "unitless"], default="unitless")
    p.add_argument("--supersample", type=int, default=3)
    p.add_argument("--dtype", choices=["f32", "i16"], default="f32")
    p.add_argument("--sphere", action="append", metavar="CX,CY,CZ,D,I")
    p.add_argument("--cylinder", action="append", metavar="CX,CY,CZ,AX,AY,AZ,D,I[,LEN]")
    p.add_argument("--wall", action="append", metavar="PX,PY,PZ,NX,NY,NZ,T,I")
    p.add_argument("--out", required=True, help="volume header path (JSON)")
    p.set_defaults(fn=cmd_phantom)

    p = sub.add_parser("simulate", help="run an interference sweep")
    p.add_argument("--mode", choices=["cyl", "wall"], required=True)
    p.add_argument("--d", type=float, default=10.0, help="sphere diameter, mm")
    p.add_argument("--distances", default=None,
                   help="comma-separated distances in sphere diameters, descending")
    _add_plan_args(p)
    p.add_argument("--supersample", type=int, default=3)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("evaluate", help="score candidates against ground truth")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.add_argument("--candidates", required=True, help="candidate CSV")
    p.add_argument("--volume", required=True, help="volume header for voxel spacing")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--per-nodule", help="optional per-nodule CSV path")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("analytic", help="emit closed-form response curves as CSV")
    p.add_argument("--curve", choices=["sphere", "cylinder", "dip", "size-errors"],
                   required=True)
    p.add_argument("--sigmas", default="0.86,1.09,1.38",
                   help="scales for the sphere/cylinder curves")
    p.add_argument("--dmin", type=float, default=1.0)
    p.add_argument("--dmax", type=float, default=30.0)
    p.add_argument("--kmin", type=float, default=1.01)
    p.add_argument("--kmax", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(fn=cmd_analytic)

    return parser


_DEFAULT_DISTANCES = {"cyl": "2.0,1.5,1.0,0.75,0.6,0.45,0.35",
                      "wall": "1.5,1.25,1.0,0.75,0.5,0.25"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.distances is None:
        args.distances = _DEFAULT_DISTANCES[args.mode]
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
