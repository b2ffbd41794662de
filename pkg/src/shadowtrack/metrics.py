"""CLEAR-MOT evaluation: MOTA, FP, FN, IDSW, FM against ground truth.

Matching follows the MOT16 protocol: pairings that survived from the
previous frame are kept first (if still above the IoU threshold), then the
remainder is assigned optimally. Fragmentation counts matched-to-unmatched
transitions of a ground-truth object after its first match; identity
switches count changes of the matched hypothesis id relative to the
object's last match, across gaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .assignment import match
from .core import BBox, Trajectory, iou, iou_matrix


@dataclass(frozen=True)
class FrameMatch:
    """Per-frame bookkeeping: accepted (gt_id, hyp_id) pairs and leftovers."""

    frame: int
    pairs: tuple[tuple[int, int], ...]
    missed_gt: tuple[int, ...]
    false_hyp: tuple[int, ...]


@dataclass(frozen=True)
class MotReport:
    mota: float | None
    fp: int
    fn: int
    idsw: int
    fm: int
    gt_boxes: int
    per_frame: tuple[FrameMatch, ...] = field(repr=False, default=())


def _by_frame(trajectories: list[Trajectory]) -> dict[int, list[tuple[int, BBox]]]:
    table: dict[int, list[tuple[int, BBox]]] = {}
    seen = set()
    for traj in trajectories:
        if traj.id in seen:
            raise ValueError(f"duplicate trajectory id {traj.id}")
        seen.add(traj.id)
        for frame, box in traj.samples:
            table.setdefault(frame, []).append((traj.id, box))
    for items in table.values():
        items.sort(key=lambda p: p[0])
    return table


def evaluate(gt: list[Trajectory], hyp: list[Trajectory], iou_thresh: float = 0.5,
             persistent: bool = True) -> MotReport:
    """Score hypothesis trajectories against ground truth.

    `persistent` keeps previous-frame pairings that still meet the IoU
    threshold before re-assigning (MOT16 behavior); set it False for pure
    per-frame optimal matching.
    """
    gt_frames = _by_frame(gt)
    hyp_frames = _by_frame(hyp)
    frames = sorted(set(gt_frames) | set(hyp_frames))

    fp = fn = idsw = fm = gt_boxes = 0
    last_hyp: dict[int, int] = {}        # gt id -> hyp id of its last match
    prev_matched: dict[int, bool] = {}   # state at the gt object's last appearance
    per_frame: list[FrameMatch] = []

    for frame in frames:
        gt_items = gt_frames.get(frame, [])
        hyp_items = hyp_frames.get(frame, [])
        gt_boxes += len(gt_items)

        pairs: dict[int, int] = {}
        taken_hyp: set[int] = set()
        if persistent:
            hyp_by_id = dict(hyp_items)
            for gid, gbox in gt_items:
                hid = last_hyp.get(gid)
                if hid is None or hid in taken_hyp or hid not in hyp_by_id:
                    continue
                if iou(gbox, hyp_by_id[hid]) >= iou_thresh:
                    pairs[gid] = hid
                    taken_hyp.add(hid)

        rest_gt = [(gid, box) for gid, box in gt_items if gid not in pairs]
        rest_hyp = [(hid, box) for hid, box in hyp_items if hid not in taken_hyp]
        scores = iou_matrix([b for _, b in rest_gt], [b for _, b in rest_hyp])
        accepted, un_gt, un_hyp = match(scores, min_score=iou_thresh, strict=False)
        for gi, hi in accepted:
            pairs[rest_gt[gi][0]] = rest_hyp[hi][0]
            taken_hyp.add(rest_hyp[hi][0])

        missed = [gid for gid, _ in gt_items if gid not in pairs]
        false = [hid for hid, _ in hyp_items if hid not in taken_hyp]
        fn += len(missed)
        fp += len(false)

        for gid, hid in pairs.items():
            prev = last_hyp.get(gid)
            if prev is not None and prev != hid:
                idsw += 1
            last_hyp[gid] = hid

        for gid, _ in gt_items:
            matched_now = gid in pairs
            if prev_matched.get(gid, False) and not matched_now:
                fm += 1
            prev_matched[gid] = matched_now

        per_frame.append(FrameMatch(
            frame=frame,
            pairs=tuple(sorted(pairs.items())),
            missed_gt=tuple(sorted(missed)),
            false_hyp=tuple(sorted(false)),
        ))

    mota = 1.0 - (fn + fp + idsw) / gt_boxes if gt_boxes > 0 else None
    return MotReport(mota=mota, fp=fp, fn=fn, idsw=idsw, fm=fm,
                     gt_boxes=gt_boxes, per_frame=tuple(per_frame))
