"""Motion detection for moving cameras from dense optical flow.

The background flow of each frame is modelled as a quadratic function of the
pixel coordinates, fitted robustly on grid-constrained samples.  Pixels whose
flow departs from the model by more than an adaptive threshold are
foreground.
"""

from .detector import (
    DetectorConfig,
    FrameResult,
    IntervalState,
    adaptive_threshold,
    detect_frame,
    extract_mask,
    update_interval,
)
from .model import (
    FlowField,
    ForegroundMask,
    LinearFlowModel,
    PixelCoord,
    QuadraticFlowModel,
    SamplePoint,
    evaluate_linear,
    evaluate_model,
    monomial_vector,
)
from .regression import lsre_fit, lsre_fit_linear, residual
from .sampling import GridConfig, RansacConfig, cra_fit, grid_partition, mean_flow_norm, sample_points

__version__ = "0.1.0"

__all__ = [
    "DetectorConfig",
    "FrameResult",
    "IntervalState",
    "adaptive_threshold",
    "detect_frame",
    "extract_mask",
    "update_interval",
    "FlowField",
    "ForegroundMask",
    "LinearFlowModel",
    "PixelCoord",
    "QuadraticFlowModel",
    "SamplePoint",
    "evaluate_linear",
    "evaluate_model",
    "monomial_vector",
    "lsre_fit",
    "lsre_fit_linear",
    "residual",
    "GridConfig",
    "RansacConfig",
    "cra_fit",
    "grid_partition",
    "mean_flow_norm",
    "sample_points",
]
