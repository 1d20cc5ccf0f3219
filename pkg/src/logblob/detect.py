"""Candidate extraction: 4D local maxima of the response stack inside a
mask, minimum-response filtering, and the solid / windowed-nonsolid
pipelines.

A point is a candidate when its response is >= its 26 neighbors at the
same scale and >= the 7-point neighborhoods (center plus 6 face
neighbors) at the scales below and above, its voxel is inside the mask,
and the response is positive (bright-blob contract) and above a noise
floor of 1e-9 times the scale's peak |response| (FFT rounding dust sits
around 1e-13 relative; any real structure sits far above). Boundary
scales never emit candidates; voxels on the volume border lack a full
neighborhood and are skipped. Ties over connected plateaus collapse to
the lexicographically smallest voxel.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .logfilter import ResponseStack, iter_responses
from .scaleplan import ScaleEntry, ScalePlan
from .volume import Mask3D, Volume3D, dilate_mask, window_clamp

_CUBE27 = np.ones((3, 3, 3), dtype=bool)
_FACE7 = np.zeros((3, 3, 3), dtype=bool)
_FACE7[1, 1, 1] = True
_FACE7[0, 1, 1] = _FACE7[2, 1, 1] = True
_FACE7[1, 0, 1] = _FACE7[1, 2, 1] = True
_FACE7[1, 1, 0] = _FACE7[1, 1, 2] = True

CSV_HEADER = ["x_mm", "y_mm", "z_mm", "ix", "iy", "iz",
              "scale_index", "sigma_mm", "diameter_mm", "response"]

# relative per-scale floor separating structure from FFT rounding dust
NOISE_FLOOR_REL = 1e-9


@dataclass(frozen=True)
class Candidate:
    """One 4D local maximum: where, at which scale, how strong."""

    voxel: tuple[int, int, int]
    position_mm: tuple[float, float, float]
    scale_index: int
    sigma_mm: float
    diameter_mm: float
    response: float


@dataclass(frozen=True)
class DetectionConfig:
    response_threshold: float | None = None
    window_T: float | None = None
    dilation_radius_mm: float = 10.0

    def __post_init__(self):
        if self.response_threshold is not None and self.response_threshold < 0:
            raise ValueError(f"response threshold must be >= 0, got {self.response_threshold}")
        if self.dilation_radius_mm < 0:
            raise ValueError(f"dilation radius must be >= 0, got {self.dilation_radius_mm}")

    @classmethod
    def solid(cls, response_threshold: float | None = 226.0,
              dilation_radius_mm: float = 10.0) -> "DetectionConfig":
        return cls(response_threshold=response_threshold, window_T=None,
                   dilation_radius_mm=dilation_radius_mm)

    @classmethod
    def nonsolid(cls, window_T: float = -700.0,
                 response_threshold: float | None = None,
                 dilation_radius_mm: float = 10.0) -> "DetectionConfig":
        return cls(response_threshold=response_threshold, window_T=window_T,
                   dilation_radius_mm=dilation_radius_mm)


def _scale_candidates(
    below: np.ndarray,
    current: np.ndarray,
    above: np.ndarray,
    in_mask: np.ndarray,
    entry: ScaleEntry,
    spacing_mm,
) -> list[Candidate]:
    # size=3 is the separable form of the full 27-point cube window
    same = ndimage.maximum_filter(current, size=3, mode="nearest")
    lo = ndimage.maximum_filter(below, footprint=_FACE7, mode="nearest")
    hi = ndimage.maximum_filter(above, footprint=_FACE7, mode="nearest")
    floor = NOISE_FLOOR_REL * float(np.abs(current).max())
    cand = (current >= same) & (current >= lo) & (current >= hi) & in_mask \
        & (current > 0.0) & (current >= floor)
    # border voxels lack a full neighborhood
    for axis in range(3):
        sl = [slice(None)] * 3
        sl[axis] = 0
        cand[tuple(sl)] = False
        sl[axis] = -1
        cand[tuple(sl)] = False
    if not cand.any():
        return []
    # adjacent co-maximal voxels carry exactly equal responses, so each
    # 26-connected component is a plateau; keep its smallest voxel
    labels, n = ndimage.label(cand, structure=_CUBE27)
    out = []
    sx, sy, sz = spacing_mm
    for component in ndimage.value_indices(labels, ignore_value=0).values():
        order = np.lexsort(component[::-1])  # lexicographic by (ix, iy, iz)
        ix, iy, iz = (int(component[a][order[0]]) for a in range(3))
        out.append(Candidate(
            voxel=(ix, iy, iz),
            position_mm=(ix * sx, iy * sy, iz * sz),
            scale_index=entry.index,
            sigma_mm=entry.sigma_mm,
            diameter_mm=entry.diameter_mm,
            response=float(current[ix, iy, iz]),
        ))
    return out


def _sorted(cands: list[Candidate]) -> list[Candidate]:
    return sorted(cands, key=lambda c: (c.scale_index, c.voxel[2], c.voxel[1], c.voxel[0]))


def find_local_maxima(stack: ResponseStack, mask: Mask3D) -> list[Candidate]:
    """Extract all in-mask 4D local maxima at interior scales of a full stack."""
    if len(stack.responses) < 3:
        raise ValueError(f"need at least 3 scales (2 boundary + 1 interior), got {len(stack.responses)}")
    if mask.dims != stack.dims:
        raise ValueError(f"mask dims {mask.dims} do not match stack dims {stack.dims}")
    cands = []
    for e in stack.plan.interior:
        cands.extend(_scale_candidates(
            stack.responses[e.index - 1],
            stack.responses[e.index],
            stack.responses[e.index + 1],
            mask.membership,
            e,
            stack.spacing_mm,
        ))
    return _sorted(cands)


def _streamed_maxima(v: Volume3D, plan: ScalePlan, in_mask: np.ndarray,
                     workers: int | None) -> list[Candidate]:
    # ascending scale order with a three-volume window, per the memory contract
    window: dict[int, np.ndarray] = {}
    cands: list[Candidate] = []
    last = plan.entries[-1].index
    for index, resp in iter_responses(v, plan, workers=workers):
        window[index] = resp
        mid = index - 1
        if 1 <= mid <= last - 1:
            cands.extend(_scale_candidates(
                window[mid - 1], window[mid], window[mid + 1],
                in_mask, plan.entry(mid), v.spacing_mm,
            ))
            del window[mid - 1]
    return _sorted(cands)


def apply_threshold(cands: list[Candidate], threshold: float) -> list[Candidate]:
    """Keep candidates with response >= threshold, preserving order."""
    if not math.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold}")
    return [c for c in cands if c.response >= threshold]


def detect_solid(
    v: Volume3D,
    mask: Mask3D,
    plan: ScalePlan,
    cfg: DetectionConfig | None = None,
    workers: int | None = None,
) -> list[Candidate]:
    """Solid pipeline: dilate mask, respond at all scales, extract 4D
    maxima, drop low responses (default threshold 226 HU-contrast units)."""
    if cfg is None:
        cfg = DetectionConfig.solid()
    if cfg.window_T is not None:
        raise ValueError("solid detection takes no window level; use detect_nonsolid")
    mask.check_paired(v)
    if plan.n_interior < 1:
        raise ValueError("plan has no interior scales")
    working = dilate_mask(mask, cfg.dilation_radius_mm)
    if not working.membership.any():
        return []
    cands = _streamed_maxima(v, plan, working.membership, workers)
    if cfg.response_threshold is not None:
        cands = apply_threshold(cands, cfg.response_threshold)
    return cands


def detect_nonsolid(
    v: Volume3D,
    mask: Mask3D,
    plan: ScalePlan,
    cfg: DetectionConfig | None = None,
    workers: int | None = None,
) -> list[Candidate]:
    """Nonsolid pipeline: clamp intensities above the window level, then
    run the solid pipeline (no response threshold unless configured)."""
    if cfg is None:
        cfg = DetectionConfig.nonsolid()
    if cfg.window_T is None:
        raise ValueError("nonsolid detection requires a window level (default -700 HU)")
    windowed = window_clamp(v, cfg.window_T)
    passthrough = DetectionConfig(response_threshold=cfg.response_threshold,
                                  window_T=None,
                                  dilation_radius_mm=cfg.dilation_radius_mm)
    return detect_solid(windowed, mask, plan, passthrough, workers=workers)


def write_candidates_csv(cands: list[Candidate], path) -> None:
    """Write the deterministic candidate table (4-decimal fixed point)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for c in cands:
            writer.writerow([
                f"{c.position_mm[0]:.4f}", f"{c.position_mm[1]:.4f}", f"{c.position_mm[2]:.4f}",
                c.voxel[0], c.voxel[1], c.voxel[2],
                c.scale_index, f"{c.sigma_mm:.4f}", f"{c.diameter_mm:.4f}",
                f"{c.response:.4f}",
            ])


def read_candidates_csv(path) -> list[Candidate]:
    cands = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: candidate CSV missing columns {sorted(missing)}")
        for row in reader:
            cands.append(Candidate(
                voxel=(int(row["ix"]), int(row["iy"]), int(row["iz"])),
                position_mm=(float(row["x_mm"]), float(row["y_mm"]), float(row["z_mm"])),
                scale_index=int(row["scale_index"]),
                sigma_mm=float(row["sigma_mm"]),
                diameter_mm=float(row["diameter_mm"]),
                response=float(row["response"]),
            ))
    return cands
