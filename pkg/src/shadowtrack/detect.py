"""Per-frame shadow detection on enhanced frames.

A deterministic blob detector stands in for a trained network: threshold
the enhanced frame, take connected components, and emit one detection per
component with a confidence that reflects how bright the component is
relative to the frame peak. Detections can also be read from or written
to MOT CSV files, so an external detector can be plugged in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import BBox, Detection, FrameStack
from .formats import read_detections, write_detections  # noqa: F401  (file I/O surface)

THRESHOLD_MODES = ("otsu", "mean_k_sigma")


@dataclass(frozen=True)
class BlobParams:
    threshold_mode: str = "otsu"
    k: float = 3.0
    min_area: int = 4
    max_area: int | None = None   # None -> 5% of the frame area
    connectivity: int = 8

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}, "
                             f"got {self.threshold_mode!r}")
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if self.max_area is not None and self.max_area < self.min_area:
            raise ValueError(f"max_area {self.max_area} < min_area {self.min_area}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


def otsu_threshold(frame: np.ndarray) -> float:
    """Otsu's threshold on a 256-bin histogram of values in [0, 1].

    Returns a cut value such that `frame > cut` selects the foreground;
    for a constant frame the cut equals the constant, selecting nothing.
    """
    q = np.minimum((frame * 256.0).astype(np.int64), 255)
    hist = np.bincount(q.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        between = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    between = np.nan_to_num(between[:-1], nan=0.0, posinf=0.0)
    if between.max() <= 0.0:
        return float(frame.max())
    level = int(np.argmax(between))
    return (level + 1) / 256.0 - 0.5 / 256.0


def _threshold(frame: np.ndarray, params: BlobParams) -> float:
    if params.threshold_mode == "otsu":
        return otsu_threshold(frame)
    return float(frame.mean() + params.k * frame.std())


def detect_blobs(frame: np.ndarray, params: BlobParams | None = None,
                 frame_index: int = 1) -> list[Detection]:
    """Detect bright blobs in one enhanced frame (values in [0, 1]).

    Connected components above the threshold become detections with
    confidence = (mean intensity inside the component) / (frame max),
    area-filtered and sorted by descending confidence, ties by (y, x).
    """
    params = params or BlobParams()
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {frame.shape}")
    if frame.min() < 0.0 or frame.max() > 1.0:
        raise ValueError("frame samples must lie in [0, 1]")

    max_area = params.max_area if params.max_area is not None else 0.05 * frame.size
    binary = frame > _threshold(frame, params)
    if not binary.any():
        return []
    structure = np.ones((3, 3), dtype=bool) if params.connectivity == 8 else None
    labels, n = ndimage.label(binary, structure=structure)
    frame_max = frame.max()

    dets = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        mask = labels[sl] == index
        area = int(mask.sum())
        if area < params.min_area or area > max_area:
            continue
        conf = float(frame[sl][mask].mean() / frame_max)
        conf = min(max(conf, 0.0), 1.0)
        box = BBox(float(sl[1].start), float(sl[0].start),
                   float(sl[1].stop - sl[1].start), float(sl[0].stop - sl[0].start))
        dets.append(Detection(frame=frame_index, box=box, confidence=conf))
    dets.sort(key=lambda d: (-d.confidence, d.box.y, d.box.x))
    return dets


def detect_stack(stack: FrameStack, params: BlobParams | None = None) -> dict[int, list[Detection]]:
    """Run the blob detector on every frame; keys are 1-based frame indices."""
    params = params or BlobParams()
    return {k + 1: detect_blobs(stack.frame(k), params, frame_index=k + 1)
            for k in range(stack.t)}
