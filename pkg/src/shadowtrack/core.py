"""Shared geometry and video-data types used across the tracking pipeline.

Boxes are stored in top-left (x, y, w, h) float pixels, matching the MOT
file convention. Center form (cx, cy, w, h) is only a view used by the
motion model. Frame indices are 1-based in files, 0-based in arrays; the
I/O layer owns that boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner (x, y) plus positive width/height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box needs w > 0 and h > 0, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_center(self) -> tuple[float, float, float, float]:
        """Return the (cx, cy, w, h) center-form view of this box."""
        return (self.x + self.w / 2.0, self.y + self.h / 2.0, self.w, self.h)

    @staticmethod
    def from_center(cx: float, cy: float, w: float, h: float) -> "BBox":
        return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


@dataclass(frozen=True)
class Detection:
    """A single-frame detection: 1-based frame index, box, confidence in [0, 1]."""

    frame: int
    box: BBox
    confidence: float

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class Trajectory:
    """An identity-labeled sequence of (frame, box) samples.

    Frames are strictly increasing but may be gapped; interpolation fills
    interior gaps downstream.
    """

    id: int
    samples: tuple[tuple[int, BBox], ...]

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"trajectory id must be positive, got {self.id}")
        object.__setattr__(self, "samples", tuple(self.samples))
        frames = [f for f, _ in self.samples]
        if any(b >= a for a, b in zip(frames[1:], frames)):
            raise ValueError("trajectory frames must be strictly increasing")

    def frames(self) -> list[int]:
        return [f for f, _ in self.samples]

    def boxes(self) -> list[BBox]:
        return [b for _, b in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FrameStack:
    """A T-frame grayscale video cube with samples in [0, 1].

    `data` has shape (t, h, w), frame-major and row-major within a frame.
    The array is copied on construction and frozen, so stacks are safe to
    share between threads.
    """

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"stack must be (t, h, w) with all dims >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stack contains non-finite samples")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("stack samples must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def t(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> int:
        return self.data.shape[1]

    @property
    def w(self) -> int:
        return self.data.shape[2]

    def frame(self, k: int) -> np.ndarray:
        """Return frame k (0-based) as a read-only (h, w) view."""
        return self.data[k]


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint, 1 when identical."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def iou_matrix(boxes_a: list[BBox], boxes_b: list[BBox]) -> np.ndarray:
    """Pairwise IoU, shape (len(a), len(b))."""
    out = np.zeros((len(boxes_a), len(boxes_b)))
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            out[i, j] = iou(a, b)
    return out


def casorati(stack: FrameStack) -> np.ndarray:
    """Casorati matrix of a stack: (h*w) x t, column j = frame j vectorized row-major."""
    return stack.data.reshape(stack.t, stack.h * stack.w).T.copy()


def from_casorati(matrix: np.ndarray, h: int, w: int) -> FrameStack:
    """Inverse of :func:`casorati`; exact round-trip."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != h * w:
        raise ValueError(f"matrix shape {m.shape} does not match h*w = {h * w}")
    return FrameStack(m.T.reshape(m.shape[1], h, w))
