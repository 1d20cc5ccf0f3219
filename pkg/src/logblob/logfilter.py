"""Discrete multiscale normalized-LoG response via frequency-domain
convolution.

The image is zero-padded by at least 4*sigma_max per side (the kernel
carries no significant mass beyond 4*sigma), transformed once with a
real FFT, multiplied per scale with the analytic LoG transform sampled
on the padded frequency grid, inverse-transformed, negated and scale-
normalized, then cropped back to the input grid. Scales in mm convert
to per-axis frequencies through the voxel spacing, so the kernel stays
spherical in physical space on anisotropic grids.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import fft as sp_fft

from .scaleplan import ScalePlan
from .volume import Volume3D, save_volume

# Kernel support radius in units of sigma; responses beyond this distance
# from a structure are negligible (~1e-3 of its peak).
SUPPORT_RADIUS_SIGMAS = 4.0


class SubvoxelScaleWarning(UserWarning):
    """A plan scale is below half a voxel on some axis; expect aliasing."""


def log_spectrum(freqs, sigma_mm: float, spacing_mm=None) -> np.ndarray:
    """Analytic LoG transform -|w|^2 exp(-sigma^2 |w|^2 / 2) on a frequency grid.

    freqs are per-axis angular frequency arrays in rad/mm. The constant
    factor follows the convention in which convolution is plain spectral
    multiplication, so multiplying an image DFT by this field and
    inverting reproduces spatial convolution with the sampled LoG kernel.
    Real, nonpositive, zero at DC.

    With spacing_mm given, the transform is alias-summed over the grid's
    spectral replicas, yielding the exact DFT of the sampled kernel. This
    matters below sigma of about 1.5 voxels, where the sampled kernel no
    longer carries the continuous spectrum; above that the replica terms
    vanish and both forms agree to machine precision.
    """
    if not math.isfinite(sigma_mm) or sigma_mm <= 0:
        raise ValueError(f"sigma must be positive, got {sigma_mm}")
    if spacing_mm is None:
        wx, wy, wz = freqs
        w2 = (
            wx.reshape(-1, 1, 1) ** 2
            + wy.reshape(1, -1, 1) ** 2
            + wz.reshape(1, 1, -1) ** 2
        )
        return -w2 * np.exp(-0.5 * sigma_mm * sigma_mm * w2)
    gauss, lap = [], []
    for w, s in zip(freqs, spacing_mm):
        a, b = _alias_sums_1d(np.asarray(w, dtype=np.float64), sigma_mm, s)
        gauss.append(a)
        lap.append(b)
    shapes = ((-1, 1, 1), (1, -1, 1), (1, 1, -1))
    gx, gy, gz = (g.reshape(sh) for g, sh in zip(gauss, shapes))
    lx, ly, lz = (l.reshape(sh) for l, sh in zip(lap, shapes))
    spec = lx * gy * gz + gx * ly * gz + gx * gy * lz
    # the replica sum leaks a little into DC at sub-voxel sigma; pin it to
    # zero so the effective kernel stays zero-mean (constants map to 0)
    dc = np.ix_(*(np.asarray(w).ravel() == 0.0 for w in freqs))
    spec[dc] = 0.0
    return spec


def _alias_sums_1d(w: np.ndarray, sigma_mm: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    # 1D factors of the separable transform, summed over spectral replicas
    # w + 2*pi*j/spacing: A = sum exp(-sigma^2 wj^2/2), B = -sum wj^2 exp(...)
    step = 2.0 * math.pi / spacing
    # replicas beyond sigma*|wj| ~ 26 underflow double precision
    jmax = max(1, math.ceil(26.0 / (sigma_mm * step) + 0.5))
    a = np.zeros_like(w)
    b = np.zeros_like(w)
    for j in range(-jmax, jmax + 1):
        wj = w + j * step
        e = np.exp(-0.5 * sigma_mm * sigma_mm * wj * wj)
        a += e
        b -= wj * wj * e
    return a, b


def sample_log_kernel(sigma_mm: float, spacing_mm, radius_sigmas: float = SUPPORT_RADIUS_SIGMAS) -> np.ndarray:
    """Sampled normalized LoG kernel -sigma^2 lap(G) truncated at radius_sigmas.

    Spherical in mm; sampled at voxel centers of an anisotropic grid. The
    array has odd shape with the kernel center in the middle.
    """
    if not math.isfinite(sigma_mm) or sigma_mm <= 0:
        raise ValueError(f"sigma must be positive, got {sigma_mm}")
    half = [max(1, math.ceil(radius_sigmas * sigma_mm / s)) for s in spacing_mm]
    coords = [np.arange(-h, h + 1) * s for h, s in zip(half, spacing_mm)]
    r2 = (
        coords[0].reshape(-1, 1, 1) ** 2
        + coords[1].reshape(1, -1, 1) ** 2
        + coords[2].reshape(1, 1, -1) ** 2
    )
    s2 = sigma_mm * sigma_mm
    gauss = np.exp(-r2 / (2.0 * s2)) / (2.0 * math.pi * s2) ** 1.5
    return gauss * (3.0 * s2 - r2) / s2


@dataclass(frozen=True)
class PadSpec:
    """Geometry of the zero-padded transform grid."""

    padded_dims: tuple[int, int, int]
    offsets: tuple[int, int, int]  # where the original volume starts

    def crop(self, arr: np.ndarray, dims) -> np.ndarray:
        ox, oy, oz = self.offsets
        nx, ny, nz = dims
        return arr[ox:ox + nx, oy:oy + ny, oz:oz + nz]


@dataclass
class ResponseStack:
    """Per-scale response volumes aligned one-to-one with the plan entries."""

    plan: ScalePlan
    dims: tuple[int, int, int]
    spacing_mm: tuple[float, float, float]
    responses: tuple[np.ndarray, ...]
    pad: PadSpec

    def response(self, index: int) -> np.ndarray:
        return self.responses[index]

    def save_scale(self, index: int, header_path, units: str = "unitless") -> None:
        """Dump one response volume in the standard volume file format."""
        save_volume(Volume3D(self.dims, self.spacing_mm, self.responses[index], units), header_path)


def _pad_spec(dims, spacing_mm, sigma_max_mm: float, pad_mm: float | None) -> PadSpec:
    if pad_mm is None:
        pad_mm = SUPPORT_RADIUS_SIGMAS * sigma_max_mm
    offsets, padded = [], []
    for n, s in zip(dims, spacing_mm):
        pad_vox = math.ceil(pad_mm / s)
        total = n + 2 * pad_vox
        if total * s < 2.0 * SUPPORT_RADIUS_SIGMAS * sigma_max_mm:
            raise ValueError(
                f"volume too small for the largest kernel: padded extent {total * s:.1f} mm "
                f"< {2 * SUPPORT_RADIUS_SIGMAS:.0f}*sigma_max = {2 * SUPPORT_RADIUS_SIGMAS * sigma_max_mm:.1f} mm; "
                f"increase pad_mm or the volume size"
            )
        offsets.append(pad_vox)
        padded.append(sp_fft.next_fast_len(total, real=True))
    return PadSpec(tuple(padded), tuple(offsets))


def _warn_subvoxel(plan: ScalePlan, spacing_mm) -> None:
    for e in plan.entries:
        worst = min(e.sigma_mm / s for s in spacing_mm)
        if worst < 0.5:
            warnings.warn(
                f"scale index {e.index} (sigma {e.sigma_mm:.3f} mm) is {worst:.2f} voxels "
                f"on the finest axis; responses will alias",
                SubvoxelScaleWarning,
                stacklevel=3,
            )


def iter_responses(
    v: Volume3D,
    plan: ScalePlan,
    workers: int | None = None,
    pad_mm: float | None = None,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (scale index, response volume) in ascending scale order.

    The forward FFT of the padded image is computed once and shared by
    all scales; each yielded response is an independent array so callers
    can keep a sliding window of scales without retaining the rest.
    """
    pad = _pad_spec(v.dims, v.spacing_mm, plan.sigma_max_mm, pad_mm)
    _warn_subvoxel(plan, v.spacing_mm)
    workers = _effective_workers(workers)

    padded = np.zeros(pad.padded_dims, dtype=np.float64)
    ox, oy, oz = pad.offsets
    nx, ny, nz = v.dims
    padded[ox:ox + nx, oy:oy + ny, oz:oz + nz] = v.data
    image_spectrum = sp_fft.rfftn(padded, workers=workers)
    del padded

    sx, sy, sz = v.spacing_mm
    px, py, pz = pad.padded_dims
    freqs = (
        2.0 * math.pi * np.fft.fftfreq(px, d=sx),
        2.0 * math.pi * np.fft.fftfreq(py, d=sy),
        2.0 * math.pi * np.fft.rfftfreq(pz, d=sz),
    )

    for e in plan.entries:
        product = image_spectrum * log_spectrum(freqs, e.sigma_mm, spacing_mm=v.spacing_mm)
        resp = sp_fft.irfftn(product, s=pad.padded_dims, workers=workers)
        del product
        yield e.index, -(e.sigma_mm**2) * pad.crop(resp, v.dims)


def respond_all_scales(
    v: Volume3D,
    plan: ScalePlan,
    workers: int | None = None,
    pad_mm: float | None = None,
) -> ResponseStack:
    """Compute and retain the response volume for every plan scale.

    Holds the full stack in memory; for large volumes prefer streaming
    through iter_responses (the detection pipeline does).
    """
    responses = [resp for _, resp in iter_responses(v, plan, workers=workers, pad_mm=pad_mm)]
    pad = _pad_spec(v.dims, v.spacing_mm, plan.sigma_max_mm, pad_mm)
    return ResponseStack(plan, v.dims, v.spacing_mm, tuple(responses), pad)


def _effective_workers(workers: int | None) -> int:
    cap = os.environ.get("LOGBLOB_MAX_WORKERS")
    if workers is None:
        workers = os.cpu_count() or 1
    if cap is not None:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)
