"""Multi-term spatial decomposition of a video matrix.

The Casorati matrix D (pixels x frames) is split as D = L + X + N, where L
is the low-rank stationary background, X the sparse moving-shadow term and
N the Gaussian clutter/noise residual. The split is computed by
alternating proximal steps on the penalized surrogate

    tau * ||L||_*  +  lam * ||X||_1  +  1/2 * ||D - L - X||_F^2

whose block updates are singular-value thresholding for L and elementwise
soft-thresholding for X. Each update is an exact block minimization, so
the objective is non-increasing across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FrameStack, casorati

POLARITIES = ("dark", "bright")


@dataclass(frozen=True)
class DecomposeParams:
    """Knobs for the decomposition.

    `tau` (nuclear threshold) and `lam` (sparsity threshold) default to
    data-driven values per block: lam = 3 / sqrt(max(rows, cols)) and
    tau = lam * sqrt(max(rows, cols)) / 2, half the usual low-rank/sparse
    weight ratio, which keeps tau above the noise singular-value scale
    while biasing the retained background components as little as
    possible. `window` splits the video into independent blocks of that
    many frames; None means one block covering the whole video.
    """

    tau: float | None = None
    lam: float | None = None
    tol: float = 1e-4
    max_iter: int = 200
    window: int | None = None
    polarity: str = "dark"

    def __post_init__(self):
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not (0.0 < self.tol < 1.0):
            raise ValueError(f"tol must be in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}, got {self.polarity!r}")


@dataclass(frozen=True)
class Decomposition:
    """Result of :func:`decompose`: D = L + X + N with per-block bookkeeping.

    `objectives` holds one per-iteration objective trace per block; the
    block layout (`window` frames each) is retained so that enhancement
    can normalize per block.
    """

    L: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    window: int
    objectives: tuple[tuple[float, ...], ...] = field(repr=False, default=())


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: shrink every singular value by tau, floor at 0."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    U, s, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64), full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0.0
    if not np.any(keep):
        return np.zeros_like(np.asarray(M, dtype=np.float64))
    return (U[:, keep] * s[keep]) @ Vt[keep, :]


def shrink(M: np.ndarray, lam: float) -> np.ndarray:
    """Elementwise soft threshold: m -> sign(m) * max(|m| - lam, 0)."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    M = np.asarray(M, dtype=np.float64)
    return np.sign(M) * np.maximum(np.abs(M) - lam, 0.0)


def nuclear_norm(M: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def default_lam(shape: tuple[int, int]) -> float:
    return 3.0 / np.sqrt(max(shape))


def default_tau(lam: float, shape: tuple[int, int]) -> float:
    return lam * np.sqrt(max(shape)) / 2.0


def _objective(D: np.ndarray, L: np.ndarray, X: np.ndarray, tau: float, lam: float) -> float:
    resid = D - L - X
    return tau * nuclear_norm(L) + lam * float(np.abs(X).sum()) + 0.5 * float(np.sum(resid * resid))


def _decompose_block(D: np.ndarray, params: DecomposeParams) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, bool, tuple[float, ...]]:
    lam = params.lam if params.lam is not None else default_lam(D.shape)
    tau = params.tau if params.tau is not None else default_tau(lam, D.shape)

    norm_d = np.linalg.norm(D)
    L = np.zeros_like(D)
    X = np.zeros_like(D)
    if norm_d == 0.0:
        return L, X, D - L - X, 0, True, (0.0,)

    objectives = [_objective(D, L, X, tau, lam)]
    iterations = 0
    converged = False
    for iterations in range(1, params.max_iter + 1):
        L_new = svt(D - X, tau)
        X_new = shrink(D - L_new, lam)
        objectives.append(_objective(D, L_new, X_new, tau, lam))
        change = (np.linalg.norm(L_new - L) + np.linalg.norm(X_new - X)) / norm_d
        L, X = L_new, X_new
        if change < params.tol:
            converged = True
            break
    return L, X, D - L - X, iterations, converged, tuple(objectives)


def decompose(stack: FrameStack, params: DecomposeParams | None = None) -> Decomposition:
    """Split a video stack into background, shadow and noise terms.

    Blocks of `params.window` consecutive frames are decomposed
    independently and reassembled; with the default window the whole video
    is one block. Pure function: identical inputs give identical results.
    """
    params = params or DecomposeParams()
    if not np.all(np.isfinite(stack.data)):
        raise ValueError("stack contains non-finite samples")
    window = params.window if params.window is not None else stack.t
    if window > stack.t:
        raise ValueError(f"window {window} exceeds frame count {stack.t}")

    D = casorati(stack)
    L = np.empty_like(D)
    X = np.empty_like(D)
    N = np.empty_like(D)
    iterations = 0
    converged = True
    objectives: list[tuple[float, ...]] = []
    for start in range(0, stack.t, window):
        stop = min(start + window, stack.t)
        bL, bX, bN, its, conv, obj = _decompose_block(D[:, start:stop], params)
        L[:, start:stop] = bL
        X[:, start:stop] = bX
        N[:, start:stop] = bN
        iterations = max(iterations, its)
        converged = converged and conv
        objectives.append(obj)
    return Decomposition(L=L, X=X, N=N, iterations=iterations, converged=converged,
                         window=window, objectives=tuple(objectives))


def enhance(stack: FrameStack, decomposition: Decomposition, polarity: str = "dark") -> FrameStack:
    """Turn the shadow term into a [0, 1] stack of enhanced shadow frames.

    Dark polarity keeps the negative part of X (shadows are low-return,
    darker than background); bright keeps the positive part. Each block is
    scaled by its own max so the strongest shadow in a block maps to 1;
    an all-zero block stays zero.
    """
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}, got {polarity!r}")
    X = decomposition.X
    if X.shape != (stack.h * stack.w, stack.t):
        raise ValueError(f"decomposition shape {X.shape} does not match stack "
                         f"({stack.h * stack.w} x {stack.t})")
    E = np.maximum(-X, 0.0) if polarity == "dark" else np.maximum(X, 0.0)
    out = np.zeros_like(E)
    for start in range(0, stack.t, decomposition.window):
        stop = min(start + decomposition.window, stack.t)
        peak = E[:, start:stop].max()
        if peak > 0.0:
            out[:, start:stop] = E[:, start:stop] / peak
    return FrameStack(out.T.reshape(stack.t, stack.h, stack.w))
