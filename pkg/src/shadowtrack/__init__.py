"""Multi-target shadow tracking for Video-SAR.

Pipeline stages: shadow enhancement by low-rank/sparse decomposition,
per-frame detection (file source or blob detector), confidence-adaptive
Kalman association with low-confidence recall, Gaussian-process trajectory
interpolation, and CLEAR-MOT evaluation. A synthetic scene simulator
provides ground truth for verification.
"""

from .core import (BBox, Detection, FrameStack, Trajectory, casorati,
                   from_casorati, iou)
from .decompose import DecomposeParams, Decomposition, decompose, enhance, shrink, svt
from .detect import BlobParams, detect_blobs, detect_stack
from .fusion import fuse, fusion_weights, resample_level
from .interpolate import GsiParams, gp_regress, interpolate_trajectory
from .metrics import MotReport, evaluate
from .simulate import PathSpec, SceneConfig, generate
from .track import (AssocConfig, KalmanModel, Track, associate_frame,
                    kf_predict, kf_update, track_video)

__version__ = "0.1.0"

__all__ = [
    "AssocConfig",
    "BBox",
    "BlobParams",
    "Decomposition",
    "DecomposeParams",
    "Detection",
    "FrameStack",
    "GsiParams",
    "KalmanModel",
    "MotReport",
    "PathSpec",
    "SceneConfig",
    "Track",
    "Trajectory",
    "associate_frame",
    "casorati",
    "decompose",
    "detect_blobs",
    "detect_stack",
    "enhance",
    "evaluate",
    "from_casorati",
    "fuse",
    "fusion_weights",
    "generate",
    "gp_regress",
    "interpolate_trajectory",
    "iou",
    "kf_predict",
    "kf_update",
    "resample_level",
    "shrink",
    "svt",
    "track_video",
    "__version__",
]
