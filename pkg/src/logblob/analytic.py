"""Closed-form response models of the normalized LoG filter and the
quantization error bounds derived from them.

All scales and sizes are in the same physical unit (mm throughout the
package). Responses are for unit-intensity solids on a zero background;
by linearity, multiply by the intensity contrast for anything else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Peak response of the scale-matched filter to a solid sphere:
# sqrt(54/pi) * exp(-3/2), reached at sigma = d / (2*sqrt(3)).
SPHERE_PEAK_RESPONSE = math.sqrt(54.0 / math.pi) * math.exp(-1.5)

# Peak response to a long solid cylinder: 2/e, at sigma = d / (2*sqrt(2)).
CYLINDER_PEAK_RESPONSE = 2.0 / math.e

# Scale ratio above which the worst-case sphere response falls below the
# cylinder ceiling, so sphere and cylinder become indistinguishable.
SHAPE_CONFUSION_RATIO = 1.746

# Worst-case sphere response retained under interference from an
# equal-diameter proximal cylinder (read off the interference sweep).
DEFAULT_INTERFERENCE_FACTOR = 0.7

# CT intensity anchors (HU): median lung parenchyma and the lower bound
# of solid-tissue intensity.
PARENCHYMA_HU = -810.0
SOLID_TISSUE_MIN_HU = -474.0


def sigma_for_sphere(d: float) -> float:
    """Scale maximizing the response to a solid sphere of diameter d."""
    return d / (2.0 * math.sqrt(3.0))


def sigma_for_cylinder(d: float) -> float:
    """Scale maximizing the response to a long solid cylinder of diameter d."""
    return d / (2.0 * math.sqrt(2.0))


def _require_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError(f"{name} must be positive and finite, got {value}")


def sphere_response(sigma: float, d: float) -> float:
    """Center response of the normalized LoG filter to a unit solid sphere.

    R(sigma, d) = d^3 / (2^2.5 pi^0.5 sigma^3) * exp(-d^2 / (8 sigma^2))
    """
    _require_positive(sigma=sigma, d=d)
    return d**3 / (2.0**2.5 * math.pi**0.5 * sigma**3) * math.exp(-(d * d) / (8.0 * sigma * sigma))


def cylinder_response(sigma: float, d: float) -> float:
    """Axis response of the normalized LoG filter to a long unit solid cylinder.

    R'(sigma, d) = d^2 / (4 sigma^2) * exp(-d^2 / (8 sigma^2))
    """
    _require_positive(sigma=sigma, d=d)
    return d * d / (4.0 * sigma * sigma) * math.exp(-(d * d) / (8.0 * sigma * sigma))


def rect_response_1d(sigma: float, d: float) -> float:
    """Center response of the 1D normalized LoG to a unit rectangle of width d.

    R(sigma, d) = d / (sqrt(2 pi) sigma) * exp(-d^2 / (8 sigma^2)); the
    maximum over sigma sits at sigma = d/2.
    """
    _require_positive(sigma=sigma, d=d)
    return d / (math.sqrt(2.0 * math.pi) * sigma) * math.exp(-(d * d) / (8.0 * sigma * sigma))


def dip_diameter(sigma1: float, sigma2: float) -> float:
    """Sphere diameter at which two adjacent scales respond equally.

    Spheres between the matched diameters of sigma1 and sigma2 respond
    below peak at both scales; the response is minimal at

        d_dip = sqrt(8) sigma1 sigma2 sqrt((ln sigma2^3 - ln sigma1^3)
                                            / (sigma2^2 - sigma1^2)).
    """
    _require_positive(sigma1=sigma1, sigma2=sigma2)
    if sigma1 >= sigma2:
        raise ValueError(f"need sigma1 < sigma2, got {sigma1} >= {sigma2}")
    num = math.log(sigma2**3) - math.log(sigma1**3)
    den = sigma2 * sigma2 - sigma1 * sigma1
    return math.sqrt(8.0) * sigma1 * sigma2 * math.sqrt(num / den)


def dip_response(k: float) -> float:
    """Minimal sphere response between adjacent scales with ratio k.

    Depends only on the ratio k = sigma2/sigma1 > 1:

        R_dip = 4/sqrt(pi) * q^(3/(1-q^2)) * (3 ln q / (q^2 - 1))^1.5,
        q = 1/k.

    Approaches the sphere peak as k -> 1; the 0/0 form there is avoided
    by clamping k to 1 + 1e-6.
    """
    if not math.isfinite(k) or k <= 1.0:
        raise ValueError(f"scale ratio must exceed 1, got {k}")
    q = 1.0 / max(k, 1.0 + 1e-6)
    return 4.0 / math.sqrt(math.pi) * q ** (3.0 / (1.0 - q * q)) * (3.0 * math.log(q) / (q * q - 1.0)) ** 1.5


def size_error_bounds(k: float) -> tuple[float, float]:
    """Worst-case relative size errors (underestimate, overestimate) for ratio k.

    d_ue = 1 - sqrt((1 - k^-2) / (2 ln k))
    d_oe = sqrt((k^2 - 1) / (2 ln k)) - 1

    Overestimation always exceeds underestimation (response asymmetry).
    """
    if not math.isfinite(k) or k <= 1.0:
        raise ValueError(f"scale ratio must exceed 1, got {k}")
    k = max(k, 1.0 + 1e-9)
    two_ln_k = 2.0 * math.log(k)
    d_ue = 1.0 - math.sqrt((1.0 - k**-2) / two_ln_k)
    d_oe = math.sqrt((k * k - 1.0) / two_ln_k) - 1.0
    return d_ue, d_oe


@dataclass(frozen=True)
class QuantizationBounds:
    """Error budget of a geometric scale ladder with ratio k: the minimal
    inter-scale sphere response and the worst relative size errors."""

    k: float
    r_dip: float
    d_ue: float
    d_oe: float

    def __post_init__(self):
        if not 0.0 < self.r_dip < SPHERE_PEAK_RESPONSE:
            raise ValueError(f"r_dip {self.r_dip} outside (0, peak)")
        if not 0.0 < self.d_ue < 1.0 or self.d_oe <= self.d_ue:
            raise ValueError(f"bad size error bounds ({self.d_ue}, {self.d_oe})")


def quantization_bounds(k: float) -> QuantizationBounds:
    """Bundle the ratio-k design numbers: response dip and size errors."""
    d_ue, d_oe = size_error_bounds(k)
    return QuantizationBounds(k, dip_response(k), d_ue, d_oe)


def derive_solid_threshold(
    r_int: float,
    r_dip: float,
    r_peak: float,
    i_solid_min: float,
    i_paren: float,
) -> float:
    """Minimum-response threshold for solid candidates in CT intensity units.

    Combines the three worst-case degradations — interference (r_int),
    scale quantization (r_dip/r_peak) and lowest tissue contrast
    (i_solid_min - i_paren):

        R_CT = r_int * (r_dip / r_peak) * (i_solid_min - i_paren)

    With the defaults of this package the value rounds to 226.
    """
    for name, value in (("r_int", r_int), ("r_dip", r_dip), ("r_peak", r_peak),
                        ("i_solid_min", i_solid_min), ("i_paren", i_paren)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")
    if r_peak <= 0.0:
        raise ValueError(f"r_peak must be positive, got {r_peak}")
    return r_int * (r_dip / r_peak) * (i_solid_min - i_paren)
