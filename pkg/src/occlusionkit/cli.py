"""Command-line interface.

Subcommands: check, synth, img2vid, stitch, eval, pipeline, stats, shard,
serve. Exit codes: 0 success, 1 systemic failure, 2 configuration error.
Set OCCLUSIONKIT_LOG=DEBUG|INFO|WARNING|ERROR for log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("occlusionkit")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _setup_logging() -> None:
    level = os.environ.get("OCCLUSIONKIT_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    from .checks import CheckConfig, run_amodal_check
    from .core import load_depth_png, load_mask_png

    candidate = Path(args.candidate)
    masks_dir = candidate / "masks"
    if not masks_dir.is_dir():
        raise ConfigError(f"{candidate} has no masks/ directory")
    mask_paths = sorted(masks_dir.glob("*.png"))
    if not mask_paths:
        raise ConfigError(f"{masks_dir} holds no PNG masks")
    masks = [load_mask_png(p) for p in mask_paths]

    depths = None
    depth_dir = candidate / "depth"
    if depth_dir.is_dir():
        depth_paths = sorted(depth_dir.glob("*.png"))
        if [p.name for p in depth_paths] == [p.name for p in mask_paths]:
            depths = [load_depth_png(p) for p in depth_paths]

    overrides = {}
    if args.config:
        overrides.update(_load_toml(args.config).get("checks", {}))
    for name in ("boundary_margin", "min_area_fraction", "max_hole_count",
                 "max_hole_area_fraction", "depth_band",
                 "depth_closer_fraction_threshold"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    cfg = CheckConfig(**overrides)

    report = run_amodal_check(masks, depths, cfg)
    out = {
        "candidate": candidate.name,
        "verdict": report.verdict,
        "reject_reasons": list(report.reject_reasons),
        "measurements": report.measurements(),
        "thresholds": cfg.to_dict(),
        "frames": [
            [{"rule_id": r.rule_id, "passed": r.passed, "measured": r.measured}
             for r in frame]
            for frame in report.frame_results
        ],
    }
    _emit_json(out, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .pipeline import PipelineConfig, SourceSpec, run_pipeline

    cfg = PipelineConfig(
        root_seed=args.seed,
        strategy=args.strategy,
        sources=(SourceSpec(path=args.input, domain=args.domain),),
        occluder_banks={"generic": args.occluder_bank},
        out_dir=args.out,
        shard_size=args.shard_size,
        worker_count=args.workers,
    )
    manifest = run_pipeline(cfg)
    log.info("synthesized %d clips (%d failures) into %s",
             len(manifest.clips), len(manifest.failures), args.out)
    return EXIT_OK


def cmd_img2vid(args) -> int:
    from .core import load_frame_png, load_mask_png
    from .img2vid import MotionSpec, image_to_clip, random_motion_spec
    from .synthdata import write_clip_dir

    img = load_frame_png(args.image)
    mask = load_mask_png(args.mask)
    if args.randomize:
        spec = random_motion_spec(args.kind, args.frames,
                                  np.random.default_rng(np.uint64(args.seed)))
    else:
        kwargs = {"kind": args.kind, "frames": args.frames}
        if args.kind == "zoom":
            kwargs["zoom_end"] = args.zoom_end
        elif args.kind == "parallel_move":
            kwargs["displacement"] = (args.dx, args.dy)
        else:
            if args.homography:
                values = [float(v) for v in args.homography.split(",")]
                if len(values) != 9:
                    raise ConfigError("--homography needs 9 comma-separated values")
                kwargs["homography_end"] = np.array(values).reshape(3, 3)
        spec = MotionSpec(**kwargs)
    clip, masks = image_to_clip(img, mask, spec)
    clip_id = args.clip_id or Path(args.image).stem
    write_clip_dir(args.out, clip_id, clip, masks)
    log.info("wrote %d-frame %s clip to %s/%s", len(clip), args.kind, args.out, clip_id)
    return EXIT_OK


def cmd_stitch(args) -> int:
    from .core import load_frame_png, load_mask_png, save_frame_png
    from .stitch import StitchConfig, SubprocessCompleter, stitch, visible_pixels_completer
    from .core import VideoClip

    frames_dir = Path(args.input) / "frames"
    masks_dir = Path(args.input) / "masks"
    frame_paths = sorted(frames_dir.glob("*.png"))
    if not frame_paths:
        raise ConfigError(f"{frames_dir} holds no frames")
    clip = VideoClip(frames=tuple(load_frame_png(p) for p in frame_paths))
    masks = [load_mask_png(masks_dir / p.name) for p in frame_paths]

    if args.completer == "builtin://visible":
        completer = visible_pixels_completer
    elif args.completer.startswith("cmd://"):
        completer = SubprocessCompleter(args.completer[len("cmd://"):].split())
    else:
        raise ConfigError("completer must be cmd://<executable> or builtin://visible")

    cfg = StitchConfig(k=args.k, m=args.m, mask_threshold=args.mask_threshold)
    out_clip = stitch(clip, masks, completer, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(out_clip.frames):
        save_frame_png(out_dir / f"{i:04d}.png", frame)
    log.info("stitched %d frames into %s", len(out_clip), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .core import VideoClip, load_frame_png, load_mask_png
    from .metrics import evaluate_clip

    pred_root, gt_root = Path(args.pred), Path(args.gt)
    if not pred_root.is_dir() or not gt_root.is_dir():
        raise ConfigError("eval needs --pred and --gt directories")

    rows = []
    reports = {}
    clip_ids = sorted(p.name for p in gt_root.iterdir() if p.is_dir())
    for clip_id in clip_ids:
        gt_dir = gt_root / clip_id
        pred_dir = pred_root / clip_id
        frame_names = sorted(p.name for p in (gt_dir / "gt").glob("*.png"))
        gt_clip = VideoClip(frames=tuple(
            load_frame_png(gt_dir / "gt" / n) for n in frame_names))
        gt_masks = [load_mask_png(gt_dir / "gt_masks" / n) for n in frame_names]
        pred_clip = VideoClip(frames=tuple(
            load_frame_png(pred_dir / n) for n in frame_names))
        report = evaluate_clip(pred_clip, gt_clip, gt_masks,
                               dilation=args.dilation,
                               resize_to=args.resize_to)
        reports[clip_id] = report.to_dict()
        rows.append({
            "clip_id": clip_id,
            "psnr": report.mean_psnr,
            "ssim": report.mean_ssim,
            "miou": report.mean_iou,
        })

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "reports.json").write_text(
        json.dumps(reports, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["clip_id", "psnr", "ssim", "miou"])
        writer.writeheader()
        writer.writerows(rows)
    log.info("evaluated %d clips into %s", len(rows), args.out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    from .pipeline import load_config_toml, run_pipeline

    cfg = load_config_toml(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["root_seed"] = args.seed
    if args.workers is not None:
        overrides["worker_count"] = args.workers
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    manifest = run_pipeline(cfg)
    log.info("pipeline wrote %d clips, %d failures", len(manifest.clips),
             len(manifest.failures))
    return EXIT_OK


def cmd_stats(args) -> int:
    from .core import manifest_from_json
    from .pipeline import stats

    manifest = manifest_from_json(Path(args.manifest).read_text(encoding="utf-8"))
    _emit_json(stats(manifest), args.out)
    return EXIT_OK


def cmd_shard(args) -> int:
    from .core import manifest_from_json, manifest_to_json
    from .pipeline import reshard

    manifest = manifest_from_json(Path(args.manifest).read_text(encoding="utf-8"))
    new = reshard(manifest, args.shard_size)
    out = Path(args.out or args.manifest)
    out.write_text(manifest_to_json(new), encoding="utf-8")
    log.info("re-sharded %d clips into %d shards", len(new.clips), len(new.shards))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .review import build_app

    app = build_app(manifest_path=args.manifest, log_path=args.log,
                    static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Wiring
# ---------------------------------------------------------------------------

def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occlusionkit",
        description="Synthetic-occlusion video dataset toolchain.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="screen one candidate directory")
    p.add_argument("candidate", help="directory with frames/, masks/[, depth/]")
    p.add_argument("--config", help="TOML file with a [checks] table")
    p.add_argument("--out", help="write verdict JSON here instead of stdout")
    p.add_argument("--boundary-margin", dest="boundary_margin", type=int)
    p.add_argument("--min-area-fraction", dest="min_area_fraction", type=float)
    p.add_argument("--max-hole-count", dest="max_hole_count", type=int)
    p.add_argument("--max-hole-area-fraction", dest="max_hole_area_fraction", type=float)
    p.add_argument("--depth-band", dest="depth_band", type=int)
    p.add_argument("--depth-closer-fraction-threshold",
                   dest="depth_closer_fraction_threshold", type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="synthesize occluded/GT pairs from clips")
    p.add_argument("--strategy", choices=["easy", "hard"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--occluder-bank", required=True, help="directory of RGBA PNGs")
    p.add_argument("--in", dest="input", required=True, help="source clip tree")
    p.add_argument("--out", required=True)
    p.add_argument("--domain", default="generic", choices=["generic", "driving"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--shard-size", dest="shard_size", type=int, default=100)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("img2vid", help="turn an annotated image into a clip")
    p.add_argument("--kind", choices=["zoom", "parallel_move", "warp"], required=True)
    p.add_argument("--frames", type=int, default=14)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clip-id", dest="clip_id")
    p.add_argument("--zoom-end", dest="zoom_end", type=float, default=0.6)
    p.add_argument("--dx", type=float, default=20.0)
    p.add_argument("--dy", type=float, default=0.0)
    p.add_argument("--homography", help="9 comma-separated row-major values")
    p.add_argument("--randomize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_img2vid)

    p = sub.add_parser("stitch", help="complete a long clip window by window")
    p.add_argument("--in", dest="input", required=True,
                   help="directory with frames/ and masks/")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=14)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--mask-threshold", dest="mask_threshold", type=int, default=250)
    p.add_argument("--completer", required=True,
                   help="cmd://<executable> or builtin://visible")
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("eval", help="score predictions against GT")
    p.add_argument("--pred", required=True, help="pred/<clip_id>/NNNN.png tree")
    p.add_argument("--gt", required=True, help="synth output tree (gt/, gt_masks/)")
    p.add_argument("--dilation", type=int, default=7)
    p.add_argument("--resize-to", dest="resize_to", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run the full batch pipeline from a config")
    p.add_argument("--config", required=True, help="TOML pipeline config")
    p.add_argument("--seed", type=int, help="override root_seed")
    p.add_argument("--workers", type=int, help="override worker_count")
    p.add_argument("--out", help="override out_dir")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("stats", help="distribution report for a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("shard", help="recompute manifest shards")
    p.add_argument("manifest")
    p.add_argument("--shard-size", dest="shard_size", type=int, required=True)
    p.add_argument("--out", help="write here instead of in place")
    p.set_defaults(func=cmd_shard)

    p = sub.add_parser("serve", help="run the human review service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--log", required=True, help="decision log (JSONL, append-only)")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", dest="static_dir",
                   help="review UI bundle to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # systemic failure
        log.error("failed: %s", exc, exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
