"""Turn one annotated image into synthetic clips via zoom, move, and warp."""

from pathlib import Path

import numpy as np

from occlusionkit.core import mask_area, save_frame_png
from occlusionkit.img2vid import MotionSpec, image_to_clip
from occlusionkit.synthdata import make_shape_clip

out_root = Path(__file__).parent / "output" / "img2vid"

source_clip, source_masks = make_shape_clip(seed=21, frames=2, size=256)
img, mask = source_clip.frames[0], source_masks[0]
print(f"source image {img.width}x{img.height}, object covers {mask_area(mask)} px")

specs = [
    MotionSpec(kind="zoom", frames=10, zoom_end=0.55),
    MotionSpec(kind="parallel_move", frames=10, displacement=(36.0, -14.0)),
    MotionSpec(kind="warp", frames=10, homography_end=np.array([
        [1.06, 0.04, 8.0],
        [0.02, 0.95, -5.0],
        [1e-4, -5e-5, 1.0],
    ])),
]

for spec in specs:
    clip, masks = image_to_clip(img, mask, spec)
    areas = [mask_area(m) for m in masks]
    print(f"{spec.kind}: {len(clip)} frames, object area {areas[0]} -> {areas[-1]} px")
    base = out_root / spec.kind
    base.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip.frames):
        save_frame_png(base / f"{i:04d}.png", frame)
    print(f"  wrote {base}")

print("each output clip is a valid overlay-engine input "
      "(same resolution, one mask per frame)")
