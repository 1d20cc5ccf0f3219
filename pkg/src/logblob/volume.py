"""Physical-space 3D scalar volumes and binary masks.

Arrays are indexed [ix, iy, iz] and voxel (i, j, k) has its center at
(i*sx, j*sy, k*sz) mm. The on-disk raw layout is x-fastest little-endian,
so arrays round-trip through order="F" reshapes. Volumes are immutable
after construction (the backing array is marked read-only) and safe to
share across workers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

_DTYPES = {"f32": "<f4", "i16": "<i2", "u8": "u1"}


def _check_grid(dims, spacing_mm):
    if len(dims) != 3 or any(int(n) != n or n <= 0 for n in dims):
        raise ValueError(f"dims must be three positive voxel counts, got {dims}")
    if len(spacing_mm) != 3 or any(not math.isfinite(s) or s <= 0 for s in spacing_mm):
        raise ValueError(f"spacing_mm must be three positive floats, got {spacing_mm}")


@dataclass(frozen=True)
class Volume3D:
    """Scalar grid with physical voxel spacing; units are "HU" or "unitless"."""

    dims: tuple[int, int, int]
    spacing_mm: tuple[float, float, float]
    data: np.ndarray = field(repr=False)
    units: str = "unitless"

    def __post_init__(self):
        _check_grid(self.dims, self.spacing_mm)
        if self.units not in ("HU", "unitless"):
            raise ValueError(f'units must be "HU" or "unitless", got {self.units!r}')
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != tuple(self.dims):
            raise ValueError(f"data shape {data.shape} does not match dims {self.dims}")
        if not np.all(np.isfinite(data)):
            raise ValueError("volume data contains NaN or Inf")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "spacing_mm", tuple(float(s) for s in self.spacing_mm))

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing_mm
        return sx * sy * sz

    def voxel_center_mm(self, ix: int, iy: int, iz: int) -> tuple[float, float, float]:
        sx, sy, sz = self.spacing_mm
        return (ix * sx, iy * sy, iz * sz)


@dataclass(frozen=True)
class Mask3D:
    """Boolean membership grid; dims/spacing must match any paired volume."""

    dims: tuple[int, int, int]
    spacing_mm: tuple[float, float, float]
    membership: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_grid(self.dims, self.spacing_mm)
        member = np.asarray(self.membership, dtype=bool)
        if member.shape != tuple(self.dims):
            raise ValueError(f"mask shape {member.shape} does not match dims {self.dims}")
        member.setflags(write=False)
        object.__setattr__(self, "membership", member)
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "spacing_mm", tuple(float(s) for s in self.spacing_mm))

    @classmethod
    def full(cls, dims, spacing_mm) -> "Mask3D":
        return cls(tuple(dims), tuple(spacing_mm), np.ones(tuple(dims), dtype=bool))

    def check_paired(self, vol: Volume3D) -> None:
        if self.dims != vol.dims or self.spacing_mm != vol.spacing_mm:
            raise ValueError(
                f"mask grid {self.dims}/{self.spacing_mm} does not match "
                f"volume grid {vol.dims}/{vol.spacing_mm}"
            )


def window_clamp(v: Volume3D, T: float) -> Volume3D:
    """Clip intensities above T down to T (suppress bright structures).

    Idempotent and monotone in T; values at or below T pass unchanged.
    """
    if not math.isfinite(T):
        raise ValueError(f"window level must be finite, got {T}")
    return Volume3D(v.dims, v.spacing_mm, np.minimum(v.data, T), v.units)


def dilate_mask(m: Mask3D, radius_mm: float) -> Mask3D:
    """Dilate by a solid sphere of radius_mm in physical (mm) space.

    A voxel joins the mask iff its center lies within radius_mm of the
    center of some set voxel. The exact Euclidean distance transform with
    per-axis sampling makes this correct for anisotropic voxels; radius 0
    is the identity.
    """
    if not math.isfinite(radius_mm) or radius_mm < 0:
        raise ValueError(f"dilation radius must be >= 0, got {radius_mm}")
    if radius_mm == 0 or not m.membership.any() or m.membership.all():
        return m
    dist = ndimage.distance_transform_edt(~m.membership, sampling=m.spacing_mm)
    return Mask3D(m.dims, m.spacing_mm, dist <= radius_mm)


# ---------------------------------------------------------------------------
# volume/mask files: JSON header + raw little-endian payload, x fastest

def _write_pair(header_path, dims, spacing_mm, dtype, units, raw):
    header_path = Path(header_path)
    raw_name = header_path.stem + ".raw"
    header = {
        "dims": list(dims),
        "spacing_mm": list(spacing_mm),
        "dtype": dtype,
        "units": units,
        "data": raw_name,
    }
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    (header_path.parent / raw_name).write_bytes(raw.ravel(order="F").tobytes())


def _read_pair(header_path):
    header_path = Path(header_path)
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{header_path}: malformed JSON header: {exc}") from exc
    for key in ("dims", "spacing_mm", "dtype", "data"):
        if key not in header:
            raise ValueError(f"{header_path}: header missing required field {key!r}")
    if header["dtype"] not in _DTYPES:
        raise ValueError(f"{header_path}: unsupported dtype {header['dtype']!r}")
    dims = tuple(int(n) for n in header["dims"])
    raw_path = header_path.parent / header["data"]
    if not raw_path.is_file():
        raise ValueError(f"{header_path}: raw payload {raw_path} not found")
    buf = np.frombuffer(raw_path.read_bytes(), dtype=_DTYPES[header["dtype"]])
    expected = dims[0] * dims[1] * dims[2]
    if buf.size != expected:
        raise ValueError(
            f"{raw_path}: payload has {buf.size} voxels, header promises {expected}"
        )
    arr = buf.reshape(dims, order="F")
    spacing = tuple(float(s) for s in header["spacing_mm"])
    return header, dims, spacing, arr


def save_volume(v: Volume3D, header_path, dtype: str = "f32") -> None:
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {dtype!r}")
    raw = v.data.astype(_DTYPES[dtype])
    _write_pair(header_path, v.dims, v.spacing_mm, dtype, v.units, raw)


def load_volume(header_path) -> Volume3D:
    header, dims, spacing, arr = _read_pair(header_path)
    units = header.get("units", "unitless")
    return Volume3D(dims, spacing, arr.astype(np.float64), units)


def save_mask(m: Mask3D, header_path) -> None:
    _write_pair(header_path, m.dims, m.spacing_mm, "u8",
                "unitless", m.membership.astype("u1"))


def load_mask(header_path) -> Mask3D:
    _, dims, spacing, arr = _read_pair(header_path)
    return Mask3D(dims, spacing, arr != 0)


def read_grid(header_path) -> tuple[tuple[int, int, int], tuple[float, float, float]]:
    """Read just dims and spacing from a header (no payload access)."""
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    for key in ("dims", "spacing_mm"):
        if key not in header:
            raise ValueError(f"{header_path}: header missing required field {key!r}")
    return tuple(int(n) for n in header["dims"]), tuple(float(s) for s in header["spacing_mm"])
