"""Quantized scale ladder: diameters in geometric progression, matched
Gaussian scales, and the effective-diameter range owned by each scale.

A plan has n interior scales covering [d_min, d_max] plus one boundary
scale below and one above. Boundary scales only provide the scale-space
neighborhood for the first and last interior scales and never emit
candidates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import SHAPE_CONFUSION_RATIO, dip_diameter, sigma_for_sphere

_TWO_SQRT3 = 2.0 * math.sqrt(3.0)


@dataclass(frozen=True)
class ScaleEntry:
    index: int
    diameter_mm: float
    sigma_mm: float
    range_lo_mm: float | None  # None for boundary entries
    range_hi_mm: float | None
    is_boundary: bool


@dataclass(frozen=True)
class ScalePlan:
    entries: tuple[ScaleEntry, ...]
    ratio: float

    @property
    def interior(self) -> tuple[ScaleEntry, ...]:
        return tuple(e for e in self.entries if not e.is_boundary)

    @property
    def n_interior(self) -> int:
        return len(self.entries) - 2

    @property
    def sigmas_mm(self) -> tuple[float, ...]:
        return tuple(e.sigma_mm for e in self.entries)

    @property
    def sigma_max_mm(self) -> float:
        return self.entries[-1].sigma_mm

    def entry(self, index: int) -> ScaleEntry:
        e = self.entries[index]
        assert e.index == index
        return e


def build_plan(d_min: float, d_max: float, n_scales: int) -> ScalePlan:
    """Build a scale plan with n_scales interior diameters from d_min to d_max.

    Diameters grow geometrically with ratio k = (d_max/d_min)^(1/(n-1));
    k is kept at full precision, never rounded. Each entry's size range is
    bounded by the equal-response (dip) diameters against its neighbors,
    so ranges tile [dip(0,1), dip(n, n+1)] without gaps.
    """
    if not (math.isfinite(d_min) and math.isfinite(d_max)) or d_min <= 0 or d_max <= d_min:
        raise ValueError(f"need 0 < d_min < d_max, got ({d_min}, {d_max})")
    if n_scales < 2:
        raise ValueError(f"need at least 2 interior scales, got {n_scales}")

    k = (d_max / d_min) ** (1.0 / (n_scales - 1))
    diameters = [d_min * k ** (i - 1) for i in range(n_scales + 2)]  # index 0 and n+1 are boundary
    diameters[-2] = d_max  # kill accumulated rounding at the top interior entry
    sigmas = [sigma_for_sphere(d) for d in diameters]

    entries = []
    for i, (d, s) in enumerate(zip(diameters, sigmas)):
        boundary = i == 0 or i == n_scales + 1
        if boundary:
            lo = hi = None
        else:
            lo = dip_diameter(sigmas[i - 1], s)
            hi = dip_diameter(s, sigmas[i + 1])
        entries.append(ScaleEntry(i, d, s, lo, hi, boundary))
    return ScalePlan(tuple(entries), k)


def validate_plan(plan: ScalePlan, max_k: float = SHAPE_CONFUSION_RATIO) -> list[str]:
    """Check plan invariants; returns [] when the plan is sound.

    Each violation is a human-readable string naming the entry and the
    broken rule. max_k defaults to the shape-confusion bound 1.746.
    """
    violations = []
    entries = plan.entries
    if plan.ratio > max_k:
        violations.append(
            f"shape-confusion bound exceeded: ratio {plan.ratio:.4f} > {max_k:.4f}"
        )
    n_boundary_lead = sum(1 for e in entries if e.is_boundary and e.index == 0)
    n_boundary_tail = sum(1 for e in entries if e.is_boundary and e.index == len(entries) - 1)
    if n_boundary_lead != 1 or n_boundary_tail != 1 or sum(e.is_boundary for e in entries) != 2:
        violations.append("plan must have exactly one leading and one trailing boundary entry")
    for prev, cur in zip(entries, entries[1:]):
        if cur.diameter_mm <= prev.diameter_mm:
            violations.append(f"entry {cur.index}: diameters not strictly increasing")
        ratio = cur.diameter_mm / prev.diameter_mm
        if abs(ratio - plan.ratio) > 1e-9 * plan.ratio:
            violations.append(
                f"entry {cur.index}: diameter ratio {ratio:.12f} deviates from k={plan.ratio:.12f}"
            )
    for e in entries:
        if abs(e.diameter_mm - _TWO_SQRT3 * e.sigma_mm) > 1e-9 * e.diameter_mm:
            violations.append(f"entry {e.index}: sigma is not diameter/(2*sqrt(3))")
        if e.is_boundary:
            if e.range_lo_mm is not None or e.range_hi_mm is not None:
                violations.append(f"entry {e.index}: boundary entries own no size range")
            continue
        if e.range_lo_mm is None or e.range_hi_mm is None or not e.range_lo_mm < e.diameter_mm < e.range_hi_mm:
            violations.append(f"entry {e.index}: size range must bracket the entry diameter")
    interior = plan.interior
    for prev, cur in zip(interior, interior[1:]):
        if prev.range_hi_mm is None or cur.range_lo_mm is None:
            continue
        if abs(prev.range_hi_mm - cur.range_lo_mm) > 1e-9 * prev.range_hi_mm:
            violations.append(
                f"entries {prev.index}/{cur.index}: size ranges do not tile (gap or overlap)"
            )
    return violations


def assign_size(d_detected: float, plan: ScalePlan) -> int:
    """Index of the interior entry whose size range contains d_detected.

    A diameter on the shared boundary of two ranges belongs to the
    smaller scale. Diameters outside the plan's overall range raise.
    """
    interior = plan.interior
    lo = interior[0].range_lo_mm
    hi = interior[-1].range_hi_mm
    if not (lo <= d_detected <= hi):
        raise ValueError(
            f"diameter {d_detected} outside plan range [{lo:.4f}, {hi:.4f}]"
        )
    for e in interior:
        if d_detected <= e.range_hi_mm:
            return e.index
    return interior[-1].index
