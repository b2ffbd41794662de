"""Synthetic Video-SAR scene generator with exact ground truth.

Scenes are built additively: a low-rank smooth background, dark static
distractor patches (absorbed into the background term, like stationary
scene shadows), dark moving target shadows, and Gaussian noise. The
generator returns the stack together with ground-truth trajectories and
the oracle split (background-plus-static matrix, moving-shadow support),
which desk-scale verification uses in place of real radar data.

Randomness comes from numpy's PCG64 generator seeded from the config, so
identical configs reproduce identical stacks bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BBox, FrameStack, Trajectory

PATH_KINDS = ("linear", "arc")


@dataclass(frozen=True)
class PathSpec:
    """Parametric center path of one moving shadow.

    linear: center(k) = start + velocity * k
    arc:    center(k) = center + radius * (cos, sin)(phase + omega * k)
    """

    kind: str = "linear"
    start: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ValueError(f"path kind must be one of {PATH_KINDS}, got {self.kind!r}")

    def position(self, k: int) -> tuple[float, float]:
        """Center position at frame k (0-based)."""
        if self.kind == "linear":
            return (self.start[0] + self.velocity[0] * k,
                    self.start[1] + self.velocity[1] * k)
        ang = self.phase + self.omega * k
        return (self.center[0] + self.radius * math.cos(ang),
                self.center[1] + self.radius * math.sin(ang))


@dataclass(frozen=True)
class SceneConfig:
    h: int = 64
    w: int = 64
    t: int = 40
    rank: int = 3
    n_targets: int = 0
    paths: tuple[PathSpec, ...] = ()
    shadow_depth: float = 0.4
    shadow_size: tuple[int, int] = (6, 6)
    noise_sigma: float = 0.01
    n_static: int = 0
    static_boxes: tuple[tuple[int, int, int, int], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.h < 16 or self.w < 16:
            raise ValueError(f"frame dims must be >= 16, got {self.h}x{self.w}")
        if self.t < 2:
            raise ValueError(f"need at least 2 frames, got {self.t}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if not (0.0 < self.shadow_depth <= 1.0):
            raise ValueError(f"shadow_depth must be in (0, 1], got {self.shadow_depth}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        bw, bh = self.shadow_size
        if bw < 1 or bh < 1 or bw > self.w or bh > self.h:
            raise ValueError(f"shadow_size {self.shadow_size} does not fit a {self.h}x{self.w} frame")
        if self.paths and len(self.paths) != self.n_targets:
            raise ValueError(f"{self.n_targets} targets but {len(self.paths)} paths")
        if self.static_boxes and len(self.static_boxes) != self.n_static:
            raise ValueError(f"{self.n_static} static patches but {len(self.static_boxes)} boxes")
        object.__setattr__(self, "paths", tuple(self.paths))
        object.__setattr__(self, "static_boxes", tuple(tuple(b) for b in self.static_boxes))


@dataclass(frozen=True)
class SceneOracle:
    """Ground-truth split of the scene's Casorati matrix.

    `background` is the low-rank background plus static darkening (what an
    ideal decomposition recovers as L); `shadow_support` flags the pixels
    occupied by moving shadows (the ideal support of X).
    """

    background: np.ndarray = field(repr=False)
    shadow_support: np.ndarray = field(repr=False)


def _chebyshev(x: np.ndarray, order: int) -> np.ndarray:
    """Chebyshev polynomial T_order on values in [-1, 1], by recurrence."""
    if order == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for _ in range(order - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


def _background(cfg: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    """Smooth background cube (t, h, w) of exact Casorati rank <= cfg.rank.

    Sum of separable spatial patterns times slowly varying temporal
    coefficients; a pure scale (no offset) maps it into [0.3, 0.9], which
    keeps the rank exact. The dominant term is bounded away from zero so
    the scaled floor stays above ~0.55, leaving headroom for default-depth
    shadows without clamping.
    """
    u = np.linspace(0.0, 1.0, cfg.h)[:, None]
    v = np.linspace(0.0, 1.0, cfg.w)[None, :]
    s = np.linspace(-1.0, 1.0, cfg.t)

    dome = (1.0 + 0.1 * 4.0 * u * (1.0 - u)) * (1.0 + 0.1 * 4.0 * v * (1.0 - v))
    drift = float(rng.uniform(0.02, 0.03))
    cube = (1.0 + drift * s)[:, None, None] * dome[None, :, :]

    for r in range(1, cfg.rank):
        amp = float(rng.uniform(0.05, 0.09) / max(1.0, (cfg.rank - 1) / 2.0))
        pattern = amp * _chebyshev(2.0 * u - 1.0, r) * _chebyshev(2.0 * v - 1.0, r + 1)
        coeff = float(rng.uniform(0.5, 1.0)) * _chebyshev(s, 1 + (r % 2))
        cube = cube + coeff[:, None, None] * pattern[None, :, :]

    return cube * (0.9 / cube.max())


def _paint_box(path: PathSpec, k: int, size: tuple[int, int]) -> tuple[int, int]:
    """Integer top-left of the painted box at frame k; center error <= 0.5 px."""
    bw, bh = size
    cx, cy = path.position(k)
    return int(round(cx - bw / 2.0)), int(round(cy - bh / 2.0))


def _auto_paths(cfg: SceneConfig) -> tuple[PathSpec, ...]:
    """Evenly spaced horizontal sweeps that stay in frame for all t."""
    bw, bh = cfg.shadow_size
    margin = 2
    span = cfg.w - 2 * margin - bw
    paths = []
    for i in range(cfg.n_targets):
        cy = (i + 1) * cfg.h / (cfg.n_targets + 1)
        start_x = margin + bw / 2.0
        vx = span / (cfg.t - 1)
        if i % 2 == 1:
            start_x = cfg.w - margin - bw / 2.0
            vx = -vx
        paths.append(PathSpec(kind="linear", start=(start_x, cy), velocity=(vx, 0.0)))
    return tuple(paths)


def _auto_static(cfg: SceneConfig, occupied: np.ndarray, rng: np.random.Generator) -> tuple[tuple[int, int, int, int], ...]:
    """Random fixed patches that avoid every moving-shadow pixel."""
    bw, bh = cfg.shadow_size
    boxes = []
    for _ in range(cfg.n_static):
        for _attempt in range(200):
            x0 = int(rng.integers(1, cfg.w - bw - 1))
            y0 = int(rng.integers(1, cfg.h - bh - 1))
            if not occupied[y0:y0 + bh, x0:x0 + bw].any():
                boxes.append((x0, y0, bw, bh))
                break
        else:
            raise ValueError("could not place static distractors clear of target paths")
    return tuple(boxes)


def generate(cfg: SceneConfig) -> tuple[FrameStack, list[Trajectory], SceneOracle]:
    """Render a scene; returns (stack, ground-truth trajectories, oracle split)."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    bw, bh = cfg.shadow_size

    paths = cfg.paths if cfg.paths else _auto_paths(cfg) if cfg.n_targets else ()

    # Validate and precompute painted boxes; any box leaving the frame is a
    # config error.
    painted: list[list[tuple[int, int]]] = []
    occupied = np.zeros((cfg.h, cfg.w), dtype=bool)
    for i, path in enumerate(paths):
        per_frame = []
        for k in range(cfg.t):
            x0, y0 = _paint_box(path, k, cfg.shadow_size)
            if x0 < 0 or y0 < 0 or x0 + bw > cfg.w or y0 + bh > cfg.h:
                raise ValueError(f"target {i} leaves the frame at frame {k + 1}")
            per_frame.append((x0, y0))
            occupied[y0:y0 + bh, x0:x0 + bw] = True
        painted.append(per_frame)

    cube = _background(cfg, rng)

    statics = cfg.static_boxes if cfg.static_boxes else (
        _auto_static(cfg, occupied, rng) if cfg.n_static else ())
    for (x0, y0, sw, sh) in statics:
        if x0 < 0 or y0 < 0 or x0 + sw > cfg.w or y0 + sh > cfg.h:
            raise ValueError(f"static box {(x0, y0, sw, sh)} leaves the frame")
        cube[:, y0:y0 + sh, x0:x0 + sw] -= cfg.shadow_depth
    cube = np.maximum(cube, 0.0)

    background = cube.reshape(cfg.t, cfg.h * cfg.w).T.copy()

    support = np.zeros((cfg.t, cfg.h, cfg.w), dtype=bool)
    trajectories = []
    for i, per_frame in enumerate(painted):
        samples = []
        for k, (x0, y0) in enumerate(per_frame):
            cube[k, y0:y0 + bh, x0:x0 + bw] -= cfg.shadow_depth
            support[k, y0:y0 + bh, x0:x0 + bw] = True
            samples.append((k + 1, BBox(float(x0), float(y0), float(bw), float(bh))))
        trajectories.append(Trajectory(id=i + 1, samples=tuple(samples)))
    cube = np.maximum(cube, 0.0)

    if cfg.noise_sigma > 0.0:
        cube = cube + rng.normal(0.0, cfg.noise_sigma, size=cube.shape)
    cube = np.clip(cube, 0.0, 1.0)

    oracle = SceneOracle(background=background,
                         shadow_support=support.reshape(cfg.t, cfg.h * cfg.w).T.copy())
    return FrameStack(cube), trajectories, oracle
