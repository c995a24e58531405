import json

import numpy as np
import pytest

from occlusionkit.cli import main
from occlusionkit.core import (
    load_frame_png,
    load_mask_png,
    manifest_from_json,
    save_frame_png,
    save_mask_png,
)
from occlusionkit.synthdata import make_shape_clip, write_clip_dir, write_occluder_bank


@pytest.fixture(scope="module")
def tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    src = root / "clips"
    src.mkdir()
    for i in range(3):
        clip, masks = make_shape_clip(seed=500 + i, frames=4, size=96)
        write_clip_dir(src, f"c{i:02d}", clip, masks)
    bank = write_occluder_bank(root / "banks", "generic", [41, 42])
    return {"root": root, "src": src, "bank": bank}


def test_check_command(tree, capsys):
    candidate = next(p for p in tree["src"].iterdir() if p.is_dir())
    rc = main(["check", str(candidate)])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] in ("pending", "auto_reject")
    assert "measurements" in out and "thresholds" in out


def test_check_threshold_override(tree, capsys):
    candidate = next(p for p in tree["src"].iterdir() if p.is_dir())
    rc = main(["check", str(candidate), "--min-area-fraction", "0.99"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "auto_reject"
    assert "too_small" in out["reject_reasons"]


def test_synth_command(tree, tmp_path):
    out = tmp_path / "synth-out"
    rc = main(["synth", "--strategy", "easy", "--seed", "3",
               "--occluder-bank", str(tree["bank"]),
               "--in", str(tree["src"]), "--out", str(out)])
    assert rc == 0
    manifest = manifest_from_json((out / "manifest.json").read_text())
    pending = [c for c in manifest.clips if c.verdict == "pending"]
    for c in pending:
        clip_dir = out / c.clip_id
        for sub in ("occluded", "gt", "gt_masks", "occluder_masks"):
            assert (clip_dir / sub / "0000.png").exists()
        assert (clip_dir / "manifest.json").exists()


def test_img2vid_command(tree, tmp_path):
    clip, masks = make_shape_clip(seed=900, frames=2, size=64)
    img_path = tmp_path / "img.png"
    mask_path = tmp_path / "mask.png"
    save_frame_png(img_path, clip.frames[0])
    save_mask_png(mask_path, masks[0])
    out = tmp_path / "i2v"
    rc = main(["img2vid", "--kind", "zoom", "--frames", "5",
               "--image", str(img_path), "--mask", str(mask_path),
               "--out", str(out), "--zoom-end", "0.6"])
    assert rc == 0
    frames = sorted((out / "img" / "frames").glob("*.png"))
    assert len(frames) == 5
    first = load_frame_png(frames[0])
    assert np.array_equal(first.pixels, clip.frames[0].pixels)


def test_stitch_command_builtin_completer(tree, tmp_path):
    clip_dir = next(p for p in tree["src"].iterdir() if p.is_dir())
    out = tmp_path / "stitched"
    rc = main(["stitch", "--in", str(clip_dir), "--out", str(out),
               "--k", "3", "--m", "1", "--completer", "builtin://visible"])
    assert rc == 0
    outs = sorted(out.glob("*.png"))
    assert len(outs) == 4
    # visible completer output: visible pixels on white
    frame = load_frame_png(clip_dir / "frames" / "0000.png")
    mask = load_mask_png(clip_dir / "masks" / "0000.png")
    got = load_frame_png(outs[0])
    assert np.all(got.pixels[~mask.bits] == 255)
    assert np.array_equal(got.pixels[mask.bits], frame.pixels[mask.bits])


def test_eval_command(tree, tmp_path):
    synth_out = tmp_path / "synth"
    assert main(["synth", "--strategy", "easy", "--seed", "3",
                 "--occluder-bank", str(tree["bank"]),
                 "--in", str(tree["src"]), "--out", str(synth_out)]) == 0
    manifest = manifest_from_json((synth_out / "manifest.json").read_text())
    pending = [c.clip_id for c in manifest.clips if c.verdict == "pending"]
    # predictions = the GT itself (perfect prediction)
    pred = tmp_path / "pred"
    for cid in pending:
        (pred / cid).mkdir(parents=True)
        for p in (synth_out / cid / "gt").glob("*.png"):
            (pred / cid / p.name).write_bytes(p.read_bytes())
    out = tmp_path / "eval"
    assert main(["eval", "--pred", str(pred), "--gt", str(synth_out),
                 "--dilation", "7", "--out", str(out)]) == 0
    reports = json.loads((out / "reports.json").read_text())
    assert set(reports) == set(pending)
    for r in reports.values():
        assert r["mean_psnr"] == 99.0
        assert r["mean_iou"] == 1.0
    csv_lines = (out / "summary.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "clip_id,psnr,ssim,miou"
    assert len(csv_lines) == 1 + len(pending)


def test_pipeline_command_with_toml(tree, tmp_path):
    cfg = tmp_path / "cfg.toml"
    out = tmp_path / "pout"
    cfg.write_text(f"""
root_seed = 11
strategy = "hard"
out_dir = "{out}"

[[sources]]
path = "{tree['src']}"

[occluder_banks]
generic = "{tree['bank']}"
""")
    assert main(["pipeline", "--config", str(cfg)]) == 0
    assert (out / "manifest.json").exists()


def test_stats_and_shard_commands(tree, tmp_path, capsys):
    out = tmp_path / "sout"
    assert main(["synth", "--strategy", "easy", "--seed", "3",
                 "--occluder-bank", str(tree["bank"]),
                 "--in", str(tree["src"]), "--out", str(out)]) == 0
    assert main(["stats", str(out / "manifest.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["clip_count"] >= 1
    resharded = tmp_path / "resharded.json"
    assert main(["shard", str(out / "manifest.json"), "--shard-size", "1",
                 "--out", str(resharded)]) == 0
    manifest = manifest_from_json(resharded.read_text())
    assert len(manifest.shards) == len(manifest.clips)


def test_missing_config_exits_2(tmp_path):
    assert main(["pipeline", "--config", str(tmp_path / "nope.toml")]) == 2


def test_bad_completer_scheme_exits_2(tree, tmp_path):
    clip_dir = next(p for p in tree["src"].iterdir() if p.is_dir())
    rc = main(["stitch", "--in", str(clip_dir), "--out", str(tmp_path / "x"),
               "--completer", "weird://nope"])
    assert rc == 2
