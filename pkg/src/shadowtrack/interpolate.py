"""Gaussian-process smoothing and gap filling for coarse trajectories.

Each box coordinate (cx, cy, w, h) is regressed independently over the
trajectory's frame span with an RBF kernel. Values are centered by their
mean before the solve so constant trajectories are exact fixed points.
Interior gaps no longer than `max_gap` frames are filled; nothing is
extrapolated outside the observed span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import BBox, Trajectory


@dataclass(frozen=True)
class GsiParams:
    length_scale: float = 10.0
    noise_var: float = 1e-2
    max_gap: int = 20

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        if self.max_gap < 1:
            raise ValueError(f"max_gap must be >= 1, got {self.max_gap}")


def _rbf(a: np.ndarray, b: np.ndarray, length_scale: float) -> np.ndarray:
    d = a[:, None] - b[None, :]
    return np.exp(-(d * d) / (2.0 * length_scale * length_scale))


def gp_regress(times, values, queries, params: GsiParams | None = None) -> np.ndarray:
    """Posterior mean of an RBF Gaussian process at the query times.

    Requires at least two observations with strictly increasing times and
    queries inside the observed span. The kernel system is solved through
    a Cholesky factorization.
    """
    params = params or GsiParams()
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    q = np.asarray(queries, dtype=np.float64)
    if t.size < 2:
        raise ValueError(f"need at least 2 observations, got {t.size}")
    if t.size != y.size:
        raise ValueError(f"{t.size} times but {y.size} values")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if q.size and (q.min() < t[0] or q.max() > t[-1]):
        raise ValueError("queries must lie within the observed time span")

    mean = y.mean()
    K = _rbf(t, t, params.length_scale)
    K[np.diag_indices_from(K)] += params.noise_var
    factor = cho_factor(K, lower=True)
    alpha = cho_solve(factor, y - mean)
    return _rbf(q, t, params.length_scale) @ alpha + mean


def interpolate_trajectory(traj: Trajectory, params: GsiParams | None = None,
                           fill_only: bool = False) -> Trajectory:
    """Smooth a trajectory and fill its interior gaps.

    Gaps of more than `max_gap` missing frames stay open. With
    `fill_only`, observed samples are kept verbatim and only gap frames
    get predictions. Trajectories with fewer than two samples are
    returned unchanged.
    """
    params = params or GsiParams()
    if len(traj.samples) < 2:
        return traj

    frames = np.array(traj.frames(), dtype=np.int64)
    centers = np.array([box.to_center() for box in traj.boxes()])

    fill_frames: list[int] = []
    for a, b in zip(frames, frames[1:]):
        gap = int(b - a - 1)
        if 0 < gap <= params.max_gap:
            fill_frames.extend(range(int(a) + 1, int(b)))

    observed = [int(f) for f in frames]
    queries = sorted(set(fill_frames) | set(observed))
    preds = np.column_stack([
        gp_regress(frames, centers[:, k], queries, params) for k in range(4)
    ])

    kept = {int(f): box for f, box in traj.samples}
    samples = []
    for i, frame in enumerate(queries):
        if fill_only and frame in kept:
            samples.append((frame, kept[frame]))
            continue
        cx, cy, w, h = preds[i]
        samples.append((frame, BBox.from_center(cx, cy, max(w, 1.0), max(h, 1.0))))
    return Trajectory(id=traj.id, samples=tuple(samples))
