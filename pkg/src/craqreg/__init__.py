"""Multi-modal image registration for artwork imagery.

Crack-junction keypoints, mutual nearest-neighbor matching, robust
homography estimation, quantitative evaluation, and a local HTTP
service for the companion viewer.
"""

from .config import EstimatorConfig, RegistrationConfig, default_config
from .detection import DetectionResult, detect_image, plan_patches
from .errors import (
    ConfigError,
    EmptyDetection,
    EstimationFailed,
    NoMatches,
    RegistrationError,
)
from .estimation import (
    EstimationReport,
    estimate_homography,
    estimate_lo_ransac,
    estimate_magsac_simplified,
    estimate_ransac,
)
from .evaluation import evaluate_dataset, load_manifest, mae, me, success_rate
from .geometry import Homography, estimate_dlt, reprojection_error
from .matching import Matches, match_mutual_nn
from .pipeline import (
    RegistrationOutput,
    overlay_blend,
    overlay_redcyan,
    register,
    warp_image,
    write_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DetectionResult",
    "EmptyDetection",
    "EstimationFailed",
    "EstimationReport",
    "EstimatorConfig",
    "Homography",
    "Matches",
    "NoMatches",
    "RegistrationConfig",
    "RegistrationError",
    "RegistrationOutput",
    "default_config",
    "detect_image",
    "estimate_dlt",
    "estimate_homography",
    "estimate_lo_ransac",
    "estimate_magsac_simplified",
    "estimate_ransac",
    "evaluate_dataset",
    "load_manifest",
    "mae",
    "match_mutual_nn",
    "me",
    "overlay_blend",
    "overlay_redcyan",
    "plan_patches",
    "register",
    "reprojection_error",
    "success_rate",
    "warp_image",
    "write_bundle",
    "__version__",
]
