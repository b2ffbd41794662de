"""Adaptive multi-level feature fusion kernel.

Feature maps live on a three-level pyramid where each level step halves
the spatial resolution (level 1 is finest). Maps are resampled to a
common level (nearest-neighbor up, 2x2 mean pooling down) and combined
per position with softmax weights computed from caller-supplied logits,
so the fusion math runs without any trainable network.
"""

from __future__ import annotations

import numpy as np

LEVELS = (1, 2, 3)


def _check_map(arr: np.ndarray, name: str = "feature map") -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"{name} must have shape (channels, rows, cols), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def resample_level(fmap: np.ndarray, from_level: int, to_level: int) -> np.ndarray:
    """Resample a (c, rows, cols) map between pyramid levels.

    Each step toward a coarser level is a 2x2 mean pool (dims must be
    divisible by 2); each step toward a finer level is nearest-neighbor
    replication by 2.
    """
    if from_level not in LEVELS or to_level not in LEVELS:
        raise ValueError(f"levels must be in {LEVELS}, got {from_level} -> {to_level}")
    out = _check_map(fmap)
    for _ in range(from_level, to_level):
        c, r, w = out.shape
        if r % 2 or w % 2:
            raise ValueError(f"dims {r}x{w} not divisible by 2 for downsampling")
        out = out.reshape(c, r // 2, 2, w // 2, 2).mean(axis=(2, 4))
    for _ in range(to_level, from_level):
        out = np.repeat(np.repeat(out, 2, axis=1), 2, axis=2)
    return out


def fusion_weights(logits: np.ndarray) -> np.ndarray:
    """Per-position softmax over three logit planes, shape (3, rows, cols)."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 3 or logits.shape[0] != 3:
        raise ValueError(f"logits must have shape (3, rows, cols), got {logits.shape}")
    shifted = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def fuse(maps: tuple[np.ndarray, np.ndarray, np.ndarray], logits: np.ndarray,
         target_level: int) -> np.ndarray:
    """Fuse three pyramid maps (at levels 1, 2, 3) at the target level.

    Output per position is the convex combination of the three resampled
    maps under the softmax of the logits, applied channelwise.
    """
    if len(maps) != 3:
        raise ValueError(f"need exactly 3 maps, got {len(maps)}")
    resampled = [resample_level(m, level, target_level) for level, m in zip(LEVELS, maps)]
    shapes = {m.shape for m in resampled}
    if len(shapes) != 1:
        raise ValueError(f"resampled maps disagree in shape: {sorted(shapes)}")
    weights = fusion_weights(logits)
    if weights.shape[1:] != resampled[0].shape[1:]:
        raise ValueError(f"logit planes {weights.shape[1:]} do not match maps "
                         f"{resampled[0].shape[1:]} at level {target_level}")
    return sum(w[None, :, :] * m for w, m in zip(weights, resampled))
