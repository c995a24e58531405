"""Complete a 30-frame clip through the 14-frame sliding window.

The completer here is a stand-in that copies visible pixels onto white; a
real completion model plugs in through the same callable (or subprocess)
contract. Watch the window plan: each later window re-ingests the last 5
blended frames before seeing new ones.
"""

from pathlib import Path

import numpy as np

from occlusionkit.core import Mask, save_frame_png
from occlusionkit.overlay import easy_config, synthesize_pair
from occlusionkit.stitch import StitchConfig, plan_windows, stitch, visible_pixels_completer
from occlusionkit.synthdata import make_occluder_asset, make_shape_clip

out_dir = Path(__file__).parent / "output" / "stitched"
out_dir.mkdir(parents=True, exist_ok=True)

cfg = StitchConfig(k=14, m=5)
n_frames = 30
print(f"window plan for {n_frames} frames (k={cfg.k}, m={cfg.m}):")
for start, end in plan_windows(n_frames, cfg):
    print(f"  [{start:3d}, {end:3d})")

gt_clip, amodal_masks = make_shape_clip(seed=11, frames=n_frames, size=256)
occluder = make_occluder_asset(seed=6, max_side=120)
synth = synthesize_pair(gt_clip, amodal_masks, occluder, easy_config(), seed=9)
assert synth is not None

visible = [Mask(amodal_masks[i].bits & ~synth.occluder_masks[i].bits)
           for i in range(n_frames)]
hidden = [int(np.count_nonzero(amodal_masks[i].bits) - np.count_nonzero(visible[i].bits))
          for i in range(n_frames)]
print(f"occluded pixels per frame: min={min(hidden)} max={max(hidden)}")

completed = stitch(synth.occluded, visible, visible_pixels_completer, cfg)
for i, frame in enumerate(completed.frames):
    save_frame_png(out_dir / f"{i:04d}.png", frame)
print(f"wrote {len(completed)} completed frames to {out_dir}")
print("swap in a real model with SubprocessCompleter(['my-model', ...]) or "
      "the CLI: occlusionkit stitch --completer cmd://my-model")
