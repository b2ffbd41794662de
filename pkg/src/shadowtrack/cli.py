"""Command-line surface for the shadow-tracking pipeline.

Each subcommand runs one pipeline stage; `pipeline` chains
enhance -> detect -> track -> interp -> eval under the ablation switches.
Parameters come from a JSON config file plus `--set block.key=value`
overrides (flags win over file values). Exit codes: 0 success, 1 usage
error, 2 data/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from contextlib import nullcontext

import numpy as np

from .core import FrameStack
from .decompose import decompose, enhance
from .detect import detect_stack
from .formats import (ConfigError, FormatError, PipelineConfig, load_config,
                      quantize_detections, quantize_trajectories,
                      read_detections, read_stack, read_trajectories,
                      report_table, write_detections, write_report, write_stack,
                      write_trajectories)
from .interpolate import interpolate_trajectory
from .metrics import evaluate
from .render import render_svg
from .simulate import SceneConfig, generate
from .track import track_video

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # determinism flag degrades gracefully
    threadpool_limits = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve(flag_value, cfg: PipelineConfig, key: str, required: bool = True,
             flag: str | None = None):
    value = flag_value if flag_value is not None else cfg.paths.get(key)
    if value is None and required:
        flag = flag or "--" + key.replace("_", "-")
        raise UsageError(f"missing path: give {flag} or config paths.{key}")
    return value


def _shadow_map(stack: FrameStack, cfg: PipelineConfig) -> FrameStack:
    """Detector input: enhanced shadows, or polarity-flipped raw frames.

    With decomposition disabled the detector still expects a map where
    shadows are bright, so dark polarity inverts the raw frames.
    """
    if cfg.switches.mtsd_on:
        dec = decompose(stack, cfg.decompose)
        shadow = enhance(stack, dec, cfg.decompose.polarity)
    elif cfg.decompose.polarity == "dark":
        shadow = FrameStack(1.0 - stack.data)
    else:
        shadow = stack
    # float32 pass, as if the map had crossed a VSR1 file boundary
    return FrameStack(shadow.data.astype("<f4"))


def _effective_assoc(cfg: PipelineConfig):
    recall = cfg.assoc.recall_enabled and cfg.switches.recall_on
    return dataclasses.replace(cfg.assoc, recall_enabled=recall)


def cmd_simulate(args, cfg: PipelineConfig) -> int:
    scene = cfg.scene if cfg.scene is not None else SceneConfig()
    if args.seed is not None:
        scene = dataclasses.replace(scene, seed=args.seed)
    stack, gt, _oracle = generate(scene)
    write_stack(stack, args.out_frames)
    if args.out_gt:
        write_trajectories(gt, args.out_gt)
    return 0


def cmd_enhance(args, cfg: PipelineConfig) -> int:
    stack = read_stack(_resolve(args.frames, cfg, "frames"))
    dec = decompose(stack, cfg.decompose)
    write_stack(enhance(stack, dec, cfg.decompose.polarity), args.out)
    return 0


def cmd_detect(args, cfg: PipelineConfig) -> int:
    stack = read_stack(_resolve(args.frames, cfg, "frames"))
    dets = detect_stack(stack, cfg.blob)
    write_detections(dets, _resolve(args.out, cfg, "detections_out", flag="--out"))
    return 0


def cmd_track(args, cfg: PipelineConfig) -> int:
    dets = read_detections(_resolve(args.detections, cfg, "detections_in", flag="--detections"))
    trajs = track_video(dets, _effective_assoc(cfg), n_frames=args.n_frames)
    write_trajectories(trajs, _resolve(args.out, cfg, "tracks_out", flag="--out"))
    return 0


def cmd_interp(args, cfg: PipelineConfig) -> int:
    trajs = read_trajectories(args.tracks)
    trajs = [interpolate_trajectory(t, cfg.gsi, fill_only=args.fill_only) for t in trajs]
    write_trajectories(trajs, args.out)
    return 0


def cmd_eval(args, cfg: PipelineConfig) -> int:
    gt = read_trajectories(_resolve(args.gt, cfg, "gt"))
    hyp = read_trajectories(args.tracks)
    report = evaluate(gt, hyp, iou_thresh=cfg.evaluation.iou_thresh,
                      persistent=cfg.evaluation.persistent)
    write_report(report, _resolve(args.out, cfg, "report_out", flag="--out"))
    print(report_table(report))
    return 0


def cmd_pipeline(args, cfg: PipelineConfig) -> int:
    # Stage boundaries quantize to the 6-decimal file precision so the
    # chained run is byte-identical to running the stages one by one.
    stack = read_stack(_resolve(args.frames, cfg, "frames"))
    shadow = _shadow_map(stack, cfg)
    dets = quantize_detections(detect_stack(shadow, cfg.blob))
    out_dets = _resolve(args.out_detections, cfg, "detections_out", required=False)
    if out_dets:
        write_detections(dets, out_dets)
    trajs = track_video(dets, _effective_assoc(cfg), n_frames=stack.t)
    if cfg.switches.gsi_on:
        trajs = quantize_trajectories(trajs)
        trajs = [interpolate_trajectory(t, cfg.gsi) for t in trajs]
    write_trajectories(trajs, _resolve(args.out_tracks, cfg, "tracks_out", flag="--out-tracks"))
    gt_path = _resolve(args.gt, cfg, "gt", required=False)
    if gt_path:
        report = evaluate(read_trajectories(gt_path), trajs,
                          iou_thresh=cfg.evaluation.iou_thresh,
                          persistent=cfg.evaluation.persistent)
        write_report(report, _resolve(args.out_report, cfg, "report_out", flag="--out-report"))
        print(report_table(report))
    return 0


def cmd_render(args, cfg: PipelineConfig) -> int:
    trajs = read_trajectories(args.tracks)
    background = None
    frames = _resolve(args.frames, cfg, "frames", required=False)
    if frames:
        background = read_stack(frames)
    render_svg(trajs, _resolve(args.out, cfg, "render_out", flag="--out"), background=background)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="shadowtrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="BLOCK.KEY=VALUE", help="override a config value")
        p.add_argument("--threads", type=int, default=0,
                       help="cap math library threads; 1 forces deterministic mode")

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    common(p)
    p.add_argument("--out-frames", required=True)
    p.add_argument("--out-gt")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enhance", help="decompose a stack and write enhanced shadows")
    common(p)
    p.add_argument("--frames")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("detect", help="run the blob detector on an enhanced stack")
    common(p)
    p.add_argument("--frames")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("track", help="associate detections into trajectories")
    common(p)
    p.add_argument("--detections")
    p.add_argument("--out")
    p.add_argument("--n-frames", type=int)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("interp", help="smooth trajectories and fill gaps")
    common(p)
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fill-only", action="store_true")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("eval", help="score trajectories against ground truth")
    common(p)
    p.add_argument("--gt")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run enhance/detect/track/interp/eval")
    common(p)
    p.add_argument("--frames")
    p.add_argument("--gt")
    p.add_argument("--out-detections")
    p.add_argument("--out-tracks")
    p.add_argument("--out-report")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("render", help="draw trajectories as an SVG")
    common(p)
    p.add_argument("--tracks", required=True)
    p.add_argument("--frames")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    limits = (threadpool_limits(limits=args.threads)
              if threadpool_limits is not None and args.threads >= 1 else nullcontext())
    try:
        with limits:
            cfg = load_config(args.config, args.overrides)
            return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FormatError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
