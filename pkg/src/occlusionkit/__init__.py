"""occlusionkit: synthetic-occlusion video dataset toolchain.

Converts unoccluded clips plus object masks into paired occluded/ground-truth
clips, screens candidates with amodal-quality heuristics, completes long
videos through a sliding window around a pluggable completer, scores
predictions with cropped PSNR/SSIM and mIoU, and runs a human review loop
over synthesized candidates.
"""

from .core import (
    BBox,
    ClipManifest,
    DatasetManifest,
    DepthMap,
    Frame,
    Mask,
    OccluderAsset,
    OccluderTrack,
    VideoClip,
    mask_area,
    mask_bbox,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ClipManifest",
    "DatasetManifest",
    "DepthMap",
    "Frame",
    "Mask",
    "OccluderAsset",
    "OccluderTrack",
    "VideoClip",
    "mask_area",
    "mask_bbox",
    "__version__",
]
