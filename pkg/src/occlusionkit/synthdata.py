"""Procedural clips and occluder assets for demos, benchmarks, and tests.

Each clip is a textured background with one drifting solid shape (ellipse or
polygon) and its exact per-frame mask; shapes stay clear of the frame border
so the clips pass the amodal screening rules. Everything is deterministic
from the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .core import (
    Frame,
    Mask,
    OccluderAsset,
    VideoClip,
    save_frame_png,
    save_mask_png,
)
from .resample import resize_bilinear


def _textured_background(rng: np.random.Generator, size: int) -> np.ndarray:
    """Smooth low-frequency color noise, upsampled from a coarse grid."""
    coarse = rng.integers(30, 226, size=(6, 6, 3), dtype=np.uint8)
    return resize_bilinear(coarse, size, size)


def _shape_mask(rng: np.random.Generator, size: int, cx: float, cy: float,
                radius: float, kind: str, angles: np.ndarray | None) -> np.ndarray:
    img = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(img)
    if kind == "ellipse":
        rx, ry = radius, radius * 0.7
        draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    else:
        pts = [(cx + radius * np.cos(a), cy + radius * np.sin(a)) for a in angles]
        draw.polygon(pts, fill=255)
    return np.asarray(img, dtype=np.uint8) > 127


def make_shape_clip(
    seed: int, frames: int = 14, size: int = 384
) -> tuple[VideoClip, list[Mask]]:
    """One textured clip with a drifting random shape and exact masks."""
    rng = np.random.default_rng(np.uint64(seed))
    bg = _textured_background(rng, size)
    kind = "ellipse" if rng.random() < 0.5 else "polygon"
    n_pts = int(rng.integers(5, 9))
    angles = np.sort(rng.uniform(0, 2 * np.pi, n_pts)) if kind == "polygon" else None
    radius = float(rng.uniform(0.14, 0.22)) * size
    margin = radius + 0.05 * size
    cx0 = float(rng.uniform(margin, size - margin))
    cy0 = float(rng.uniform(margin, size - margin))
    max_dx = min(cx0 - margin, size - margin - cx0)
    max_dy = min(cy0 - margin, size - margin - cy0)
    dx = float(rng.uniform(-max_dx, max_dx))
    dy = float(rng.uniform(-max_dy, max_dy))
    color = rng.integers(20, 236, size=3, dtype=np.uint8)
    color2 = rng.integers(20, 236, size=3, dtype=np.uint8)

    out_frames = []
    out_masks = []
    for i in range(frames):
        t = i / (frames - 1) if frames > 1 else 0.0
        cx, cy = cx0 + t * dx, cy0 + t * dy
        bits = _shape_mask(rng, size, cx, cy, radius, kind, angles)
        px = bg.copy()
        stripes = ((np.arange(size)[None, :] + np.arange(size)[:, None] + i) // 8) % 2 == 0
        px[bits & stripes] = color
        px[bits & ~stripes] = color2
        out_frames.append(Frame(pixels=px))
        out_masks.append(Mask(bits))
    return VideoClip(frames=tuple(out_frames)), out_masks


def make_occluder_asset(seed: int, bank: str = "generic", max_side: int = 160) -> OccluderAsset:
    """A blobby textured occluder with an irregular silhouette."""
    rng = np.random.default_rng(np.uint64(seed))
    w = int(rng.integers(max_side // 2, max_side))
    h = int(rng.integers(max_side // 2, max_side))
    img = Image.new("L", (w, h), 0)
    draw = ImageDraw.Draw(img)
    n_pts = int(rng.integers(6, 12))
    angles = np.sort(rng.uniform(0, 2 * np.pi, n_pts))
    radii = rng.uniform(0.55, 1.0, n_pts)
    pts = [((w / 2) + (w / 2 - 1) * r * np.cos(a), (h / 2) + (h / 2 - 1) * r * np.sin(a))
           for a, r in zip(angles, radii)]
    draw.polygon(pts, fill=255)
    alpha = np.asarray(img, dtype=np.uint8)
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    rgba[:, :, :3] = _textured_background(rng, max(w, h))[:h, :w]
    rgba[:, :, 3] = np.where(alpha > 127, 255, 0).astype(np.uint8)
    return OccluderAsset.from_rgba(f"{bank}/synthetic-{seed}", rgba, source_bank=bank)


def write_clip_dir(
    root: str | Path, clip_id: str, clip: VideoClip, masks: list[Mask]
) -> Path:
    """Lay a clip out as clip_id/{frames,masks}/NNNN.png for pipeline ingestion."""
    base = Path(root) / clip_id
    (base / "frames").mkdir(parents=True, exist_ok=True)
    (base / "masks").mkdir(parents=True, exist_ok=True)
    for i, (f, m) in enumerate(zip(clip.frames, masks)):
        save_frame_png(base / "frames" / f"{i:04d}.png", f)
        save_mask_png(base / "masks" / f"{i:04d}.png", m)
    return base


def write_occluder_bank(root: str | Path, bank: str, seeds: list[int]) -> Path:
    """Write synthetic occluders as RGBA PNGs into an occluder bank directory."""
    base = Path(root) / bank
    base.mkdir(parents=True, exist_ok=True)
    for s in seeds:
        asset = make_occluder_asset(s, bank=bank)
        rgba = Frame(pixels=asset.rgba.pixels, alpha=asset.rgba.alpha)
        save_frame_png(base / f"occ-{s:05d}.png", rgba)
    return base
