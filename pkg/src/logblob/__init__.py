"""Multiscale scale-normalized LoG blob detection for 3D scalar volumes.

Pipeline: build a quantized scale ladder, filter the volume with
frequency-domain normalized-LoG kernels at every scale, extract 4D
(space x scale) local maxima inside a mask, and threshold by the derived
minimum response. Phantom scenes and metrics support end-to-end checks.
"""
from .analytic import (
    CYLINDER_PEAK_RESPONSE,
    SPHERE_PEAK_RESPONSE,
    QuantizationBounds,
    cylinder_response,
    derive_solid_threshold,
    dip_diameter,
    dip_response,
    quantization_bounds,
    rect_response_1d,
    size_error_bounds,
    sphere_response,
)
from .detect import (
    Candidate,
    DetectionConfig,
    apply_threshold,
    detect_nonsolid,
    detect_solid,
    find_local_maxima,
)
from .evaluate import GroundTruthNodule, MatchReport, effective_diameter, match
from .logfilter import ResponseStack, iter_responses, log_spectrum, respond_all_scales
from .phantom import Cylinder, Scene, Sphere, Wall, rasterize, sweep_sphere_cylinder, sweep_sphere_wall
from .scaleplan import ScaleEntry, ScalePlan, assign_size, build_plan, validate_plan
from .volume import Mask3D, Volume3D, dilate_mask, load_mask, load_volume, save_mask, save_volume, window_clamp

__version__ = "0.1.0"
