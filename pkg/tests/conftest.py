import math
import time

import numpy as np
import pytest
from hypothesis import settings

from logblob.detect import DetectionConfig, detect_nonsolid, detect_solid, find_local_maxima
from logblob.logfilter import respond_all_scales
from logblob.phantom import Cylinder, Scene, Sphere, rasterize, sphere_reference, sweep_sphere_cylinder, sweep_sphere_wall
from logblob.scaleplan import build_plan
from logblob.volume import Mask3D, Volume3D

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")

WORKERS = 2


@pytest.fixture(scope="session")
def plan():
    return build_plan(3.0, 25.0, 10)


@pytest.fixture(scope="session")
def three_sphere_run(plan):
    """Criterion-7 phantom: three well-separated unit spheres with exact
    plan diameters 4.80, 9.74, 19.75 in a 128^3 unit-spacing volume."""
    centers = [(30.0, 30.0, 30.0), (64.0, 64.0, 64.0), (92.0, 92.0, 92.0)]
    scales = [3, 6, 9]
    prims = tuple(
        Sphere(c, plan.entry(i).diameter_mm, 1.0) for c, i in zip(centers, scales)
    )
    vol = rasterize(Scene((128,) * 3, (1.0,) * 3, 0.0, prims), supersample=3)
    mask = Mask3D.full(vol.dims, vol.spacing_mm)
    t0 = time.perf_counter()
    stack = respond_all_scales(vol, plan, workers=WORKERS)
    cands = find_local_maxima(stack, mask)
    elapsed = time.perf_counter() - t0
    return {
        "volume": vol,
        "mask": mask,
        "stack": stack,
        "candidates": cands,
        "centers": centers,
        "scales": scales,
        "detect_seconds": elapsed,
    }


@pytest.fixture(scope="session")
def random48_match(plan):
    """Criterion-5 data: FFT stack vs truncated-kernel spatial oracle on a
    48^3 standard-normal volume."""
    from helpers import spatial_log_response

    rng = np.random.default_rng(42)
    data = rng.standard_normal((48, 48, 48))
    vol = Volume3D((48, 48, 48), (1.0, 1.0, 1.0), data)
    t0 = time.perf_counter()
    stack = respond_all_scales(vol, plan, workers=WORKERS)
    errors = {}
    for e in plan.interior:
        ref = spatial_log_response(data, e.sigma_mm)
        got = stack.response(e.index)
        errors[e.index] = float(np.max(np.abs(got - ref)) / np.max(np.abs(got)))
    elapsed = time.perf_counter() - t0
    return {"errors": errors, "seconds": elapsed}


@pytest.fixture(scope="session")
def fig18_run(plan):
    """Nonsolid scenario: faint 15 mm sphere with an embedded bright thin
    rod, detected with and without intensity windowing."""
    dims, spacing = (80, 80, 80), (1.0, 1.0, 1.0)
    center = (40.0, 40.0, 40.0)
    scene = Scene(dims, spacing, -810.0,
                  (Sphere(center, 15.0, -680.0),
                   Cylinder(center, (0.0, 0.0, 1.0), 3.0, -200.0, length_mm=12.0)),
                  units="HU")
    vol = rasterize(scene, supersample=3)
    mask = Mask3D.full(dims, spacing)
    plain = DetectionConfig(response_threshold=None, dilation_radius_mm=0.0)
    windowed_cfg = DetectionConfig.nonsolid(window_T=-700.0, dilation_radius_mm=0.0)
    return {
        "volume": vol,
        "center": center,
        "unwindowed": detect_solid(vol, mask, plan, plain, workers=WORKERS),
        "windowed": detect_nonsolid(vol, mask, plan, windowed_cfg, workers=WORKERS),
    }


@pytest.fixture(scope="session")
def isolated_sphere(plan):
    return sphere_reference(10.0, plan, workers=WORKERS)


@pytest.fixture(scope="session")
def cyl_sweep(plan):
    return sweep_sphere_cylinder(
        10.0, [2.0, 1.5, 1.0, 0.75, 0.6, 0.45, 0.35, 0.2], plan, workers=WORKERS
    )


@pytest.fixture(scope="session")
def wall_sweep(plan):
    return sweep_sphere_wall(
        10.0, [1.5, 1.25, 1.0, 0.75, 0.5, 0.25], plan, workers=WORKERS
    )


@pytest.fixture(scope="session")
def size_bound_run(plan):
    """Criterion-8 data: spheres with diameters drawn across the size
    ranges of entries 2..9, detected in two batches."""
    fractions = {2: 0.25, 3: 0.6, 4: 0.85, 5: 0.4, 6: 0.7, 7: 0.3, 8: 0.55, 9: 0.8}
    diameters = {
        i: plan.entry(i).range_lo_mm + f * (plan.entry(i).range_hi_mm - plan.entry(i).range_lo_mm)
        for i, f in fractions.items()
    }
    batches = [
        ((96, 96, 96), [(2, (24.0, 24.0, 24.0)), (3, (72.0, 24.0, 24.0)),
                        (4, (24.0, 72.0, 24.0)), (5, (24.0, 24.0, 72.0))]),
        ((128, 128, 128), [(6, (32.0, 32.0, 32.0)), (7, (96.0, 32.0, 32.0)),
                           (8, (32.0, 96.0, 32.0)), (9, (96.0, 96.0, 96.0))]),
    ]
    plain = DetectionConfig(response_threshold=None, dilation_radius_mm=0.0)
    measured = []
    for dims, placements in batches:
        prims = tuple(Sphere(c, diameters[i], 1.0) for i, c in placements)
        vol = rasterize(Scene(dims, (1.0, 1.0, 1.0), 0.0, prims), supersample=3)
        cands = detect_solid(vol, Mask3D.full(dims, (1.0, 1.0, 1.0)), plan, plain,
                             workers=WORKERS)
        for i, c in placements:
            near = min(cands, key=lambda k: math.dist(k.position_mm, c))
            assert math.dist(near.position_mm, c) <= diameters[i]
            measured.append((diameters[i], near.diameter_mm))
    return measured
