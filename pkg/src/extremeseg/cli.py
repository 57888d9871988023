"""Command-line entry point.

Subcommands: simulate-points, segment, phantom, resample, serve.
Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import geodesic, learner, pipeline, randomwalker
from .phantom import make_dataset
from .points import ExtremePointSet, PointError, simulate_extreme_points
from .volume import Mask, Volume, VolumeError, load_volume, resample_isotropic, save_volume

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def cmd_simulate_points(args) -> int:
    gt = load_volume(args.gt)
    if not isinstance(gt, Mask):
        print("error: ground truth must be a u8 mask volume", file=sys.stderr)
        return EXIT_DATA
    pts = simulate_extreme_points(gt, jitter_mm=args.jitter_mm, rng_seed=args.seed)
    Path(args.out).write_text(pts.to_json())
    return EXIT_OK


def cmd_segment(args) -> int:
    vol = load_volume(args.volume)
    if isinstance(vol, Mask):
        print("error: input volume must be f32 intensity data", file=sys.stderr)
        return EXIT_DATA
    pts = ExtremePointSet.load(args.points)
    cfg = pipeline.PipelineConfig.from_json(Path(args.config).read_text()) \
        if args.config else pipeline.PipelineConfig()
    gt = load_volume(args.gt) if args.gt else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    case = (vol, pts, gt) if gt is not None else (vol, pts)
    cases, records = pipeline.run_detailed([case], cfg, log_path=out_dir / "rounds.jsonl")
    state = cases[0]
    save_volume(state.full_mask(), out_dir / "mask")
    save_volume(state.pseudo, out_dir / "probability")
    (out_dir / "crop.json").write_text(json.dumps({"lo": list(state.box.lo),
                                                   "hi": list(state.box.hi)}))
    print(f"wrote {out_dir / 'mask.json'} ({len(records)} rounds)")
    return EXIT_OK


def cmd_phantom(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, (vol, gt) in enumerate(make_dataset(args.cases, args.seed)):
        save_volume(vol, out_dir / f"case{k:03d}")
        save_volume(gt, out_dir / f"case{k:03d}_gt")
    return EXIT_OK


def cmd_resample(args) -> int:
    vol = load_volume(args.volume)
    if isinstance(vol, Mask):
        print("error: resample expects f32 intensity data", file=sys.stderr)
        return EXIT_DATA
    save_volume(resample_isotropic(vol, args.target_mm), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.data_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="extremeseg")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate-points", help="derive extreme points from a ground-truth mask")
    sp.add_argument("--gt", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jitter-mm", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_simulate_points)

    sg = sub.add_parser("segment", help="run the full loop on one case")
    sg.add_argument("--volume", required=True)
    sg.add_argument("--points", required=True)
    sg.add_argument("--gt", default=None)
    sg.add_argument("--config", default=None)
    sg.add_argument("--out", required=True)
    sg.set_defaults(func=cmd_segment)

    ph = sub.add_parser("phantom", help="generate synthetic ellipsoid cases")
    ph.add_argument("--out", required=True)
    ph.add_argument("--cases", type=int, default=8)
    ph.add_argument("--seed", type=int, default=0)
    ph.set_defaults(func=cmd_phantom)

    rs = sub.add_parser("resample", help="resample a volume to isotropic spacing")
    rs.add_argument("--volume", required=True)
    rs.add_argument("--out", required=True)
    rs.add_argument("--target-mm", type=float, default=1.0)
    rs.set_defaults(func=cmd_resample)

    sv = sub.add_parser("serve", help="host the annotation HTTP API")
    sv.add_argument("--data-dir", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (VolumeError, PointError, geodesic.SeedError, FileNotFoundError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (randomwalker.SolverError, learner.TrainingError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
