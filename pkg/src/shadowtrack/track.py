"""Confidence-adaptive Kalman tracking with two-phase low-confidence recall.

Tracks carry an 8-dim constant-velocity state (cx, cy, w, h plus
velocities). The Kalman gain uses an innovation covariance scaled by
(1 - c) R, so high-confidence detections pull the state harder toward the
measurement. Association runs in two phases per frame: confident
detections are matched first, and detections in the low-confidence band
get a second chance against the tracks left over, recalling shadows whose
confidence dipped instead of fragmenting their trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import match
from .core import BBox, Detection, Trajectory, iou_matrix

TENTATIVE = "tentative"
ACTIVE = "active"
LOST = "lost"
REMOVED = "removed"


class KalmanModel:
    """Constant-velocity motion model for box states.

    A moves position/size by one velocity step per frame; H selects
    (cx, cy, w, h). Process and measurement noise are diagonal, scaled by
    the current box height (position/size std h/20, velocity std h/160),
    unless fixed Q/R matrices are supplied.
    """

    def __init__(self, std_weight_position: float = 1.0 / 20,
                 std_weight_velocity: float = 1.0 / 160,
                 q: np.ndarray | None = None, r: np.ndarray | None = None):
        self.std_weight_position = std_weight_position
        self.std_weight_velocity = std_weight_velocity
        self.A = np.eye(8)
        self.A[:4, 4:] = np.eye(4)
        self.H = np.zeros((4, 8))
        self.H[:, :4] = np.eye(4)
        self.q = None if q is None else np.asarray(q, dtype=np.float64)
        self.r = None if r is None else np.asarray(r, dtype=np.float64)

    def process_noise(self, box_h: float) -> np.ndarray:
        if self.q is not None:
            return self.q
        sp = self.std_weight_position * box_h
        sv = self.std_weight_velocity * box_h
        return np.diag([sp * sp] * 4 + [sv * sv] * 4)

    def measurement_noise(self, box_h: float) -> np.ndarray:
        if self.r is not None:
            return self.r
        sp = self.std_weight_position * box_h
        return np.diag([sp * sp] * 4)


@dataclass(frozen=True)
class AssocConfig:
    """Association thresholds and lifecycle knobs."""

    tau_high: float = 0.6
    tau_low: float = 0.1
    iou_min: float = 0.5
    n_init: int = 2
    max_age: int = 30
    c_max: float = 0.99
    recall_enabled: bool = True
    lost_in_phase1: bool = True

    def __post_init__(self):
        if not (0.0 <= self.tau_low < self.tau_high <= 1.0):
            raise ValueError(f"need 0 <= tau_low < tau_high <= 1, got {self.tau_low}, {self.tau_high}")
        if not (0.0 < self.iou_min < 1.0):
            raise ValueError(f"iou_min must be in (0, 1), got {self.iou_min}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")
        if self.max_age < 1:
            raise ValueError(f"max_age must be >= 1, got {self.max_age}")
        if not (0.0 <= self.c_max < 1.0):
            raise ValueError(f"c_max must be in [0, 1), got {self.c_max}")


class Track:
    """One tracked target: Kalman state, covariance, lifecycle, box history."""

    def __init__(self, serial: int, det: Detection, model: KalmanModel):
        cx, cy, w, h = det.box.to_center()
        self.serial = serial          # creation order, pre-promotion identity
        self.id: int | None = None    # public id, assigned at promotion
        self.x = np.array([cx, cy, w, h, 0.0, 0.0, 0.0, 0.0])
        sp = 2.0 * model.std_weight_position * h
        sv = 10.0 * model.std_weight_velocity * h
        self.P = np.diag([sp * sp] * 4 + [sv * sv] * 4)
        self.status = TENTATIVE
        self.age_since_update = 0
        self.hits = 1
        self.history: list[tuple[int, BBox, float]] = []

    @property
    def box(self) -> BBox:
        cx, cy, w, h = self.x[:4]
        return BBox.from_center(cx, cy, max(w, 1.0), max(h, 1.0))


def kf_predict(track: Track, model: KalmanModel) -> tuple[np.ndarray, np.ndarray]:
    """Prior state and covariance: x_bar = A x, P_bar = A P A^T + Q."""
    x_bar = model.A @ track.x
    Q = model.process_noise(track.x[3])
    P_bar = model.A @ track.P @ model.A.T + Q
    return x_bar, 0.5 * (P_bar + P_bar.T)


def kf_update(prior: tuple[np.ndarray, np.ndarray], z: np.ndarray, c: float,
              model: KalmanModel, c_max: float = 0.99) -> tuple[np.ndarray, np.ndarray]:
    """Confidence-weighted measurement update.

    The gain is K = P_bar H^T [H P_bar H^T + (1 - c) R]^{-1} with c the
    detection confidence clamped to [0, c_max]; c -> 0 recovers the
    standard Kalman update, larger c trusts the measurement more.
    """
    x_bar, P_bar = prior
    c = min(max(float(c), 0.0), c_max)
    R = model.measurement_noise(x_bar[3])
    y = np.asarray(z, dtype=np.float64) - model.H @ x_bar
    S = model.H @ P_bar @ model.H.T + (1.0 - c) * R
    K = np.linalg.solve(S, model.H @ P_bar).T
    x = x_bar + K @ y
    P = (np.eye(8) - K @ model.H) @ P_bar
    x[2] = max(x[2], 1.0)
    x[3] = max(x[3], 1.0)
    return x, 0.5 * (P + P.T)


@dataclass
class FrameAssociation:
    """What happened to each track and detection in one frame."""

    matches: list[tuple[Track, Detection]] = field(default_factory=list)
    recalled_matches: list[tuple[Track, Detection]] = field(default_factory=list)
    new_tentatives: list[Track] = field(default_factory=list)
    lost_tracks: list[Track] = field(default_factory=list)
    dropped_dets: list[Detection] = field(default_factory=list)


def _apply_match(track: Track, det: Detection, model: KalmanModel, cfg: AssocConfig):
    z = np.array(det.box.to_center())
    track.x, track.P = kf_update((track.x, track.P), z, det.confidence, model, cfg.c_max)
    track.age_since_update = 0
    track.hits += 1


def _match_tracks(tracks: list[Track], dets: list[Detection], iou_min: float):
    scores = iou_matrix([t.box for t in tracks], [d.box for d in dets])
    return match(scores, min_score=iou_min, strict=True)


def associate_frame(tracks: list[Track], dets: list[Detection], cfg: AssocConfig,
                    model: KalmanModel, serial_start: int = 0,
                    next_id: int = 1) -> tuple[FrameAssociation, int, int]:
    """Run one frame of prediction + two-phase association.

    Mutates the given tracks (prediction, updates, lifecycle) and returns
    the FrameAssociation together with the next free serial and public id.
    Detections must all belong to the same frame.
    """
    frames = {d.frame for d in dets}
    if len(frames) > 1:
        raise ValueError(f"detections span multiple frames: {sorted(frames)}")
    frame = frames.pop() if frames else None

    out = FrameAssociation()
    keep = [d for d in dets if d.confidence >= cfg.tau_low]
    out.dropped_dets.extend(d for d in dets if d.confidence < cfg.tau_low)

    live = [t for t in tracks if t.status != REMOVED]
    for t in live:
        t.x, t.P = kf_predict(t, model)
        t.age_since_update += 1

    high = [d for d in keep if d.confidence >= cfg.tau_high]
    low = [d for d in keep if d.confidence < cfg.tau_high]

    # Phase 1: confirmed tracks vs confident detections.
    pool = [t for t in live if t.status == ACTIVE or (t.status == LOST and cfg.lost_in_phase1)]
    pool.sort(key=lambda t: t.id)
    pairs, un_pool_idx, un_high_idx = _match_tracks(pool, high, cfg.iou_min)
    for ti, di in pairs:
        out.matches.append((pool[ti], high[di]))

    # Phase 2: recall low-confidence detections against the leftovers.
    phase2_pool = [pool[i] for i in un_pool_idx]
    if not cfg.lost_in_phase1:
        phase2_pool += [t for t in live if t.status == LOST]
        phase2_pool.sort(key=lambda t: t.id)
    un_low: list[Detection] = list(low)
    if cfg.recall_enabled and phase2_pool and low:
        pairs, un_p2, un_low_idx = _match_tracks(phase2_pool, low, cfg.iou_min)
        for ti, di in pairs:
            out.recalled_matches.append((phase2_pool[ti], low[di]))
        matched_tracks = {id(phase2_pool[ti]) for ti, _ in pairs}
        un_pool_tracks = [t for t in phase2_pool if id(t) not in matched_tracks]
        un_low = [low[i] for i in un_low_idx]
    else:
        un_pool_tracks = phase2_pool

    # Tentative tracks may continue on any detection above the floor, so a
    # target whose confidence dips while it is being confirmed still
    # accumulates its adjacent-frame streak. New tracks start from
    # confident detections only.
    tents = sorted([t for t in live if t.status == TENTATIVE], key=lambda t: t.serial)
    rem_high = {id(high[i]) for i in un_high_idx}
    rem_low = {id(d) for d in un_low}
    remaining = [d for d in keep if id(d) in rem_high or id(d) in rem_low]
    t_pairs, un_tent_idx, un_rem_idx = _match_tracks(tents, remaining, cfg.iou_min)
    tent_matches = [(tents[ti], remaining[di]) for ti, di in t_pairs]
    unmatched_tents = [tents[i] for i in un_tent_idx]
    leftovers = [remaining[i] for i in un_rem_idx]
    new_high = [d for d in leftovers if d.confidence >= cfg.tau_high]
    out.dropped_dets.extend(d for d in leftovers if d.confidence < cfg.tau_high)

    serial = serial_start
    for det in new_high:
        t = Track(serial, det, model)
        serial += 1
        out.new_tentatives.append(t)
        if cfg.n_init == 1:
            t.id = next_id
            next_id += 1
            t.status = ACTIVE
            t.history.append((det.frame, t.box, det.confidence))

    for track, det in out.matches + out.recalled_matches:
        _apply_match(track, det, model, cfg)
        track.status = ACTIVE
        track.history.append((det.frame, track.box, det.confidence))

    for track, det in tent_matches:
        _apply_match(track, det, model, cfg)
        if track.hits >= cfg.n_init:
            track.id = next_id
            next_id += 1
            track.status = ACTIVE
            track.history.append((det.frame, track.box, det.confidence))

    # Lifecycle for everything left unmatched.
    for t in unmatched_tents:
        t.status = REMOVED
        t.hits = 0
    still_unmatched = [t for t in un_pool_tracks
                       if t.status in (ACTIVE, LOST) and t.age_since_update > 0]
    for t in still_unmatched:
        t.hits = 0
        if t.status == ACTIVE:
            t.status = LOST
            out.lost_tracks.append(t)
        if t.status == LOST and t.age_since_update > cfg.max_age:
            t.status = REMOVED

    return out, serial, next_id


def track_video(dets_by_frame, cfg: AssocConfig | None = None,
                model: KalmanModel | None = None,
                n_frames: int | None = None) -> list[Trajectory]:
    """Associate per-frame detections into identity-labeled trajectories.

    `dets_by_frame` maps 1-based frame index to that frame's detections
    (a dict, or a sequence starting at frame 1). Returns one trajectory
    per track that ever reached active status, ids in promotion order.
    """
    cfg = cfg or AssocConfig()
    model = model or KalmanModel()
    if isinstance(dets_by_frame, dict):
        frame_map = dets_by_frame
    else:
        frame_map = {k + 1: v for k, v in enumerate(dets_by_frame)}
    if n_frames is None:
        n_frames = max(frame_map.keys(), default=0)

    tracks: list[Track] = []
    serial, next_id = 0, 1
    for frame in range(1, n_frames + 1):
        dets = frame_map.get(frame, [])
        bad = [d for d in dets if d.frame != frame]
        if bad:
            raise ValueError(f"detection with frame {bad[0].frame} supplied at frame {frame}")
        assoc, serial, next_id = associate_frame(tracks, dets, cfg, model, serial, next_id)
        tracks.extend(assoc.new_tentatives)

    out = []
    for t in sorted((t for t in tracks if t.id is not None), key=lambda t: t.id):
        samples = tuple((frame, box) for frame, box, _conf in t.history)
        if samples:
            out.append(Trajectory(id=t.id, samples=samples))
    return out
