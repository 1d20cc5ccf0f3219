"""Detection-quality metrics against manual ground truth: sensitivity,
diameter bias, and centroid distance.

A nodule counts as detected when some candidate centroid lies within
half the nodule's length of the nodule centroid. Statistics are taken
over the nearest matching candidate per nodule.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .detect import Candidate


@dataclass(frozen=True)
class GroundTruthNodule:
    """Manual reference lesion: integer-voxel centroid, length/width in mm."""

    voxel: tuple[int, int, int]
    length_mm: float
    width_mm: float
    klass: str = "solid"  # "solid" | "nonsolid"

    def __post_init__(self):
        if not (self.length_mm >= self.width_mm > 0):
            raise ValueError(
                f"need length >= width > 0, got ({self.length_mm}, {self.width_mm})"
            )
        if self.klass not in ("solid", "nonsolid"):
            raise ValueError(f'nodule class must be "solid" or "nonsolid", got {self.klass!r}')

    @property
    def effective_diameter_mm(self) -> float:
        return effective_diameter(self.length_mm, self.width_mm)

    def position_mm(self, spacing_mm) -> tuple[float, float, float]:
        return tuple(i * s for i, s in zip(self.voxel, spacing_mm))


def effective_diameter(length_mm: float, width_mm: float) -> float:
    """Effective diameter: the mean of the two manual measurements."""
    if not (length_mm >= width_mm > 0):
        raise ValueError(f"need length >= width > 0, got ({length_mm}, {width_mm})")
    return (length_mm + width_mm) / 2.0


@dataclass(frozen=True)
class NoduleMatch:
    nodule: GroundTruthNodule
    matched: bool
    candidate: Candidate | None
    distance_mm: float | None


@dataclass(frozen=True)
class MatchReport:
    matches: tuple[NoduleMatch, ...]
    sensitivity: float
    diameter_bias_mean_mm: float | None
    diameter_bias_sd_mm: float | None
    mean_centroid_distance_mm: float | None
    candidate_count: int

    def to_dict(self) -> dict:
        return {
            "nodule_count": len(self.matches),
            "matched_count": sum(m.matched for m in self.matches),
            "sensitivity": self.sensitivity,
            "diameter_bias_mean_mm": self.diameter_bias_mean_mm,
            "diameter_bias_sd_mm": self.diameter_bias_sd_mm,
            "mean_centroid_distance_mm": self.mean_centroid_distance_mm,
            "candidate_count": self.candidate_count,
        }


def match(truth: list[GroundTruthNodule], cands: list[Candidate], spacing_mm) -> MatchReport:
    """Match nodules against candidates and compute summary metrics.

    A nodule matches when a candidate lies within 0.5 * length of its
    centroid; each nodule counts once no matter how many candidates
    qualify. Bias and distance statistics use the nearest qualifying
    candidate (ties: first in candidate order). Raises on an empty truth
    list, where sensitivity is undefined.
    """
    if not truth:
        raise ValueError("sensitivity is undefined for an empty ground-truth set")
    matches = []
    biases, distances = [], []
    for nodule in truth:
        pos = nodule.position_mm(spacing_mm)
        best, best_dist = None, math.inf
        for c in cands:
            dist = math.dist(c.position_mm, pos)
            if dist <= 0.5 * nodule.length_mm and dist < best_dist:
                best, best_dist = c, dist
        if best is None:
            matches.append(NoduleMatch(nodule, False, None, None))
        else:
            matches.append(NoduleMatch(nodule, True, best, best_dist))
            biases.append(nodule.effective_diameter_mm - best.diameter_mm)
            distances.append(best_dist)
    sensitivity = len(biases) / len(truth)
    return MatchReport(
        matches=tuple(matches),
        sensitivity=sensitivity,
        diameter_bias_mean_mm=float(np.mean(biases)) if biases else None,
        diameter_bias_sd_mm=float(np.std(biases)) if biases else None,
        mean_centroid_distance_mm=float(np.mean(distances)) if distances else None,
        candidate_count=len(cands),
    )


# ---------------------------------------------------------------------------
# ground-truth and report files

TRUTH_CSV_HEADER = ["ix", "iy", "iz", "length_mm", "width_mm", "class"]


def read_truth_csv(path) -> list[GroundTruthNodule]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRUTH_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: truth CSV missing columns {sorted(missing)}")
        for row in reader:
            out.append(GroundTruthNodule(
                voxel=(int(row["ix"]), int(row["iy"]), int(row["iz"])),
                length_mm=float(row["length_mm"]),
                width_mm=float(row["width_mm"]),
                klass=row["class"],
            ))
    return out


def write_truth_csv(truth: list[GroundTruthNodule], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_CSV_HEADER)
        for n in truth:
            writer.writerow([n.voxel[0], n.voxel[1], n.voxel[2],
                             f"{n.length_mm:.4f}", f"{n.width_mm:.4f}", n.klass])


def write_report_json(report: MatchReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_per_nodule_csv(report: MatchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ix", "iy", "iz", "effective_diameter_mm", "class", "matched",
                         "candidate_diameter_mm", "centroid_distance_mm"])
        for m in report.matches:
            n = m.nodule
            writer.writerow([
                n.voxel[0], n.voxel[1], n.voxel[2],
                f"{n.effective_diameter_mm:.4f}", n.klass,
                int(m.matched),
                f"{m.candidate.diameter_mm:.4f}" if m.candidate else "",
                f"{m.distance_mm:.4f}" if m.distance_mm is not None else "",
            ])
