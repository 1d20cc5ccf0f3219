"""Independent oracles shared by the test suite.

Everything here recomputes expected results by a different route than
the library: brute-force loops, shifted-array scans, explicit Riemann
sums, and separable spatial convolution with a truncated sampled kernel.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

TWO_SQRT3 = 2.0 * math.sqrt(3.0)


def log_kernel_value(r2, sigma):
    """Normalized LoG kernel -sigma^2 lap(G) at squared radius r2."""
    s2 = sigma * sigma
    gauss = np.exp(-r2 / (2.0 * s2)) / (2.0 * math.pi * s2) ** 1.5
    return gauss * (3.0 * s2 - r2) / s2


def ball_integral(sigma, d, step):
    """Riemann sum of the normalized LoG kernel over a solid ball."""
    half = d / 2.0
    n = int(math.ceil(half / step))
    ax = (np.arange(-n, n + 1) + 0.0) * step
    r2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    inside = r2 <= half * half
    return float(np.sum(log_kernel_value(r2[inside], sigma)) * step**3)


def cylinder_integral(sigma, d, step, z_halflen=None):
    """Riemann sum of the normalized LoG kernel over a long solid cylinder."""
    if z_halflen is None:
        z_halflen = 7.0 * sigma
    half = d / 2.0
    n = int(math.ceil(half / step))
    ax = (np.arange(-n, n + 1) + 0.0) * step
    nz = int(math.ceil(z_halflen / step))
    az = (np.arange(-nz, nz + 1) + 0.0) * step
    rho2 = ax[:, None] ** 2 + ax[None, :] ** 2
    inside = rho2 <= half * half
    r2 = rho2[inside][:, None] + az[None, :] ** 2
    return float(np.sum(log_kernel_value(r2, sigma)) * step**3)


def spatial_log_response(data, sigma, spacing=(1.0, 1.0, 1.0), radius_sigmas=4.0):
    """Direct spatial convolution with the truncated sampled LoG kernel.

    The kernel is sampled on the voxel grid and truncated at
    radius_sigmas*sigma per axis; evaluation is separable, which equals
    dense convolution with the truncated kernel exactly. Outside voxels
    count as zero, matching the zero-embedding of the FFT path.
    """
    factors = []
    for s in spacing:
        n = max(1, math.ceil(radius_sigmas * sigma / s))
        x = np.arange(-n, n + 1) * s
        g = np.exp(-x * x / (2.0 * sigma * sigma)) / (math.sqrt(2.0 * math.pi) * sigma)
        g2 = g * (x * x - sigma * sigma) / sigma**4
        factors.append((g, g2))

    def sep(a, fx, fy, fz):
        out = ndimage.correlate1d(a, fx, axis=0, mode="constant")
        out = ndimage.correlate1d(out, fy, axis=1, mode="constant")
        return ndimage.correlate1d(out, fz, axis=2, mode="constant")

    (gx, g2x), (gy, g2y), (gz, g2z) = factors
    lap = sep(data, g2x, gy, gz) + sep(data, gx, g2y, gz) + sep(data, gx, gy, g2z)
    return -sigma * sigma * lap


def brute_dilate(membership, spacing, radius):
    """Ball-stamping dilation oracle (exact, slow)."""
    out = np.array(membership, dtype=bool, copy=True)
    if radius == 0:
        return out
    reach = [int(math.floor(radius / s)) for s in spacing]
    offsets = []
    for dx in range(-reach[0], reach[0] + 1):
        for dy in range(-reach[1], reach[1] + 1):
            for dz in range(-reach[2], reach[2] + 1):
                dist = math.sqrt((dx * spacing[0]) ** 2 + (dy * spacing[1]) ** 2
                                 + (dz * spacing[2]) ** 2)
                if dist <= radius:
                    offsets.append((dx, dy, dz))
    nx, ny, nz = membership.shape
    for ix, iy, iz in zip(*np.nonzero(membership)):
        for dx, dy, dz in offsets:
            jx, jy, jz = ix + dx, iy + dy, iz + dz
            if 0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz:
                out[jx, jy, jz] = True
    return out


_OFF26 = [(dx, dy, dz)
          for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
          if (dx, dy, dz) != (0, 0, 0)]
_FACE6 = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]


def exhaustive_maxima(responses, plan, mask):
    """Exhaustive 4D local-maximum scan over a full response stack.

    Reimplements the candidate predicate with shifted-array comparisons
    and a hand-rolled flood fill for plateau dedup: in-mask interior
    voxels whose response is positive, above the per-scale noise floor
    (1e-9 of the scale's peak |response|), >= all 26 same-scale
    neighbors, and >= the 7-point stencils at the scales below/above.
    Returns {(scale, (ix, iy, iz), response)}.
    """
    found = set()
    nx, ny, nz = responses[0].shape
    for e in plan.interior:
        cur = responses[e.index]
        lo = responses[e.index - 1]
        hi = responses[e.index + 1]
        floor = 1e-9 * float(np.abs(cur).max())
        c = cur[1:-1, 1:-1, 1:-1]
        ok = (c > 0.0) & (c >= floor) & mask[1:-1, 1:-1, 1:-1]
        for dx, dy, dz in _OFF26:
            ok &= c >= cur[1 + dx:nx - 1 + dx, 1 + dy:ny - 1 + dy, 1 + dz:nz - 1 + dz]
        for adj in (lo, hi):
            ok &= c >= adj[1:-1, 1:-1, 1:-1]
            for dx, dy, dz in _FACE6:
                ok &= c >= adj[1 + dx:nx - 1 + dx, 1 + dy:ny - 1 + dy, 1 + dz:nz - 1 + dz]
        passing = {(int(x) + 1, int(y) + 1, int(z) + 1) for x, y, z in zip(*np.nonzero(ok))}
        seen = set()
        for start in sorted(passing):
            if start in seen:
                continue
            component, queue = [start], [start]
            seen.add(start)
            while queue:
                px, py, pz = queue.pop()
                for dx, dy, dz in _OFF26:
                    nb = (px + dx, py + dy, pz + dz)
                    if nb in passing and nb not in seen:
                        seen.add(nb)
                        component.append(nb)
                        queue.append(nb)
            keep = min(component)
            found.add((e.index, keep, float(cur[keep])))
    return found


def candidate_set(cands):
    """Project detected candidates into the oracle's comparable form."""
    return {(c.scale_index, c.voxel, c.response) for c in cands}
