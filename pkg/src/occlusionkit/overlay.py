"""Occluded/ground-truth pair synthesis.

An occluder asset is placed over the object with a rejection-sampled
position and scale, tracked across the clip by one of two strategies, and
alpha-composited over every frame:

* easy: endpoint placements are sampled for the first and last frame with
  the occlusion rate (occluded object area / object area) constrained to the
  configured range in both, then position and scale vary linearly in between.
* hard: one placement is sampled for the first frame only; afterwards the
  occluder translates with the object's bounding-box center and its scale
  follows the cube root of the dominant bbox growth ratio, keeping part of
  the object persistently hidden. Feathering softens the boundary.

The ground-truth target is the object isolated on a pure white canvas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    ClipManifest,
    Frame,
    Mask,
    OccluderAsset,
    OccluderTrack,
    VideoClip,
    mask_area,
    mask_bbox,
)
from .errors import DegenerateBBoxError, EmptyMaskError
from .resample import resize_bilinear

log = logging.getLogger(__name__)

GT_BACKGROUND = 255  # white canvas behind the isolated object

# Binary footprints (for occlusion rates and emitted occluder masks) threshold
# the resampled alpha at its midpoint.
ALPHA_FOOTPRINT_THRESHOLD = 128


@dataclass(frozen=True)
class StrategyConfig:
    """Knobs for one synthesis strategy."""

    strategy: str
    rate_range: tuple[float, float]
    feather_radius: int = 0
    placement_budget: int = 200
    scale_range: tuple[float, float] = (0.3, 2.0)

    def __post_init__(self):
        if self.strategy not in ("easy", "hard"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        lo, hi = self.rate_range
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"bad rate range {self.rate_range}")
        if self.placement_budget < 1:
            raise ValueError("placement budget must be >= 1")
        s_lo, s_hi = self.scale_range
        if not (0.0 < s_lo <= s_hi):
            raise ValueError(f"bad scale range {self.scale_range}")
        if self.feather_radius < 0:
            raise ValueError("feather radius must be >= 0")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "rate_range": list(self.rate_range),
            "feather_radius": self.feather_radius,
            "placement_budget": self.placement_budget,
            "scale_range": list(self.scale_range),
        }


def easy_config(**overrides) -> StrategyConfig:
    """First and last frame occluded at a rate in [0.3, 0.7], no feathering."""
    base = dict(strategy="easy", rate_range=(0.3, 0.7), feather_radius=0)
    base.update(overrides)
    return StrategyConfig(**base)


def hard_config(**overrides) -> StrategyConfig:
    """First frame occluded at a rate in [0.4, 0.8], feathered boundaries."""
    base = dict(strategy="hard", rate_range=(0.4, 0.8), feather_radius=2)
    base.update(overrides)
    return StrategyConfig(**base)


def config_for(strategy: str, **overrides) -> StrategyConfig:
    if strategy == "easy":
        return easy_config(**overrides)
    if strategy == "hard":
        return hard_config(**overrides)
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Rates and tracks
# ---------------------------------------------------------------------------

def occlusion_rate(obj: Mask, occluder_footprint: Mask) -> float:
    """Occluded fraction of the object: area(object & footprint) / area(object)."""
    area = mask_area(obj)
    if area == 0:
        raise EmptyMaskError("occlusion rate needs a non-empty object mask")
    if obj.bits.shape != occluder_footprint.bits.shape:
        raise EmptyMaskError(
            f"mask shapes differ: {obj.bits.shape} vs {occluder_footprint.bits.shape}")
    covered = int(np.count_nonzero(obj.bits & occluder_footprint.bits))
    return covered / area


def interpolate_track_easy(
    p_st: tuple[float, float],
    s_st: float,
    p_ed: tuple[float, float],
    s_ed: float,
    n: int,
) -> OccluderTrack:
    """Linear position/scale interpolation hitting both endpoints exactly.

    Frame i uses parameter i/(n-1), so frame 0 is the start placement and
    frame n-1 the end placement.
    """
    if n < 2:
        raise ValueError(f"need at least 2 frames, got {n}")
    if s_st <= 0 or s_ed <= 0:
        raise ValueError("scales must be positive")
    t = np.arange(n, dtype=np.float64) / (n - 1)
    # (1-t)*a + t*b hits a and b exactly at the endpoints
    px = (1.0 - t) * p_st[0] + t * p_ed[0]
    py = (1.0 - t) * p_st[1] + t * p_ed[1]
    s = (1.0 - t) * s_st + t * s_ed
    return OccluderTrack(positions=np.column_stack([px, py]), scales=s)


def track_hard(p_st: tuple[float, float], s_st: float, bboxes) -> OccluderTrack:
    """Lock the occluder to the object bbox: translate with its center and
    scale with the cube root of the dominant height/width growth ratio."""
    if not bboxes:
        raise ValueError("need at least one bbox")
    if s_st <= 0:
        raise ValueError("start scale must be positive")
    first = bboxes[0]
    h_st, w_st = first.height, first.width
    if h_st <= 0 or w_st <= 0:
        raise DegenerateBBoxError("first bbox is degenerate")
    positions = np.empty((len(bboxes), 2), dtype=np.float64)
    scales = np.empty(len(bboxes), dtype=np.float64)
    c_st = first.center
    for i, b in enumerate(bboxes):
        if b.height <= 0 or b.width <= 0:
            raise DegenerateBBoxError(f"bbox {i} is degenerate")
        c = b.center
        positions[i, 0] = c[0] - c_st[0] + p_st[0]
        positions[i, 1] = c[1] - c_st[1] + p_st[1]
        scales[i] = max(b.height / h_st, b.width / w_st) ** (1.0 / 3.0) * s_st
    return OccluderTrack(positions=positions, scales=scales)


# ---------------------------------------------------------------------------
# Rasterization, feathering, compositing
# ---------------------------------------------------------------------------

def _scaled_size(occluder: OccluderAsset, s: float) -> tuple[int, int]:
    tw = max(1, int(np.floor(occluder.width * s + 0.5)))
    th = max(1, int(np.floor(occluder.height * s + 0.5)))
    return tw, th


def _paste_window(p: tuple[float, float], tw: int, th: int, fw: int, fh: int):
    """Integer top-left for a (tw x th) patch centered at sub-pixel p, plus the
    clipped destination/source slices. Rounding happens here and only here."""
    x0 = int(np.floor(p[0] - tw / 2.0 + 0.5))
    y0 = int(np.floor(p[1] - th / 2.0 + 0.5))
    dx0, dy0 = max(0, x0), max(0, y0)
    dx1, dy1 = min(fw, x0 + tw), min(fh, y0 + th)
    if dx0 >= dx1 or dy0 >= dy1:
        return None
    sx0, sy0 = dx0 - x0, dy0 - y0
    sx1, sy1 = sx0 + (dx1 - dx0), sy0 + (dy1 - dy0)
    return (slice(dy0, dy1), slice(dx0, dx1)), (slice(sy0, sy1), slice(sx0, sx1))


def rasterize_footprint(
    occluder: OccluderAsset, p: tuple[float, float], s: float, width: int, height: int
) -> Mask:
    """Binary occluder coverage on a width x height canvas.

    The asset's alpha is bilinearly resized by s and thresholded at 128;
    feathering never enters the footprint, so recorded occlusion rates are
    reproducible from the emitted masks alone.
    """
    tw, th = _scaled_size(occluder, s)
    alpha = resize_bilinear(occluder.rgba.alpha, tw, th)
    bits = np.zeros((height, width), dtype=bool)
    win = _paste_window(p, tw, th, width, height)
    if win is not None:
        dst, src = win
        bits[dst] = alpha[src] >= ALPHA_FOOTPRINT_THRESHOLD
    return Mask(bits)


def feather(alpha: np.ndarray, radius: int) -> np.ndarray:
    """Box-blur an 8-bit alpha plane with a (2*radius+1)^2 window.

    Windows are clipped at the plane edges and normalized by their actual
    pixel count, so pixels deeper than ``radius`` inside the silhouette stay
    at 255. Radius 0 is the identity. Integer arithmetic, round half up.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    a = np.asarray(alpha)
    if a.dtype != np.uint8 or a.ndim != 2:
        raise ValueError("alpha must be a 2-D uint8 plane")
    if radius == 0:
        return a.copy()
    h, w = a.shape
    k = radius
    # windowed sums via padded cumulative sums, exact in int64
    cs = np.zeros((h + 1, w + 1), dtype=np.int64)
    cs[1:, 1:] = np.cumsum(np.cumsum(a.astype(np.int64), axis=0), axis=1)
    y0 = np.clip(np.arange(h) - k, 0, h)
    y1 = np.clip(np.arange(h) + k + 1, 0, h)
    x0 = np.clip(np.arange(w) - k, 0, w)
    x1 = np.clip(np.arange(w) + k + 1, 0, w)
    sums = (cs[y1[:, None], x1[None, :]] - cs[y0[:, None], x1[None, :]]
            - cs[y1[:, None], x0[None, :]] + cs[y0[:, None], x0[None, :]])
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    out = (2 * sums + counts) // (2 * counts)  # round half up
    return np.clip(out, 0, 255).astype(np.uint8)


def _blend_u8(frame_px: np.ndarray, occ_px: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Per-channel out = alpha*occ + (1-alpha)*frame with exact rounding."""
    a = alpha.astype(np.uint32)[:, :, None]
    num = a * occ_px.astype(np.uint32) + (255 - a) * frame_px.astype(np.uint32)
    return ((num + 127) // 255).astype(np.uint8)


def composite(
    frame: Frame,
    occluder: OccluderAsset,
    p: tuple[float, float],
    s: float,
    alpha: np.ndarray | None = None,
    feather_radius: int = 0,
) -> Frame:
    """Overlay the occluder, resized by s and centered at p, onto the frame.

    The blend alpha defaults to the resized silhouette (binary at radius 0,
    box-feathered otherwise); pass ``alpha`` to override it at the resized
    geometry. Regions falling outside the frame are clipped.
    """
    if s <= 0:
        raise ValueError("scale must be positive")
    tw, th = _scaled_size(occluder, s)
    rgb = resize_bilinear(occluder.rgba.pixels, tw, th)
    if alpha is None:
        raw = resize_bilinear(occluder.rgba.alpha, tw, th)
        alpha = np.where(raw >= ALPHA_FOOTPRINT_THRESHOLD, 255, 0).astype(np.uint8)
        if feather_radius > 0:
            alpha = feather(alpha, feather_radius)
    elif alpha.shape != (th, tw):
        raise ValueError(f"alpha must match the resized occluder {th}x{tw}")

    out = frame.pixels.copy()
    win = _paste_window(p, tw, th, frame.width, frame.height)
    if win is not None:
        dst, src = win
        out[dst] = _blend_u8(out[dst], rgb[src], alpha[src])
    return Frame(pixels=out)


# ---------------------------------------------------------------------------
# Placement sampling
# ---------------------------------------------------------------------------

def sample_placement(
    obj: Mask,
    occluder: OccluderAsset,
    cfg: StrategyConfig,
    rng: np.random.Generator,
) -> tuple[tuple[float, float], float] | None:
    """Rejection-sample an occluder placement hitting the target rate range.

    Centers are drawn uniformly over a box 1.5x the object's bbox; scales are
    log-uniform over ``scale_range`` relative to the bbox-diagonal ratio of
    object to occluder. Returns None once the budget is spent; the caller
    skips the clip.
    """
    bbox = mask_bbox(obj)
    if bbox is None:
        raise EmptyMaskError("placement needs a non-empty object mask")
    cx, cy = bbox.center
    half_w = 0.75 * bbox.width
    half_h = 0.75 * bbox.height
    occ_diag = float(np.hypot(occluder.width, occluder.height))
    obj_diag = float(np.hypot(bbox.width, bbox.height))
    base_scale = obj_diag / occ_diag
    lo, hi = cfg.rate_range
    log_lo, log_hi = np.log(cfg.scale_range[0]), np.log(cfg.scale_range[1])

    for _ in range(cfg.placement_budget):
        p = (cx + rng.uniform(-half_w, half_w), cy + rng.uniform(-half_h, half_h))
        s = base_scale * float(np.exp(rng.uniform(log_lo, log_hi)))
        footprint = rasterize_footprint(occluder, p, s, obj.width, obj.height)
        rate = occlusion_rate(obj, footprint)
        if lo <= rate <= hi:
            return p, s
    return None


# ---------------------------------------------------------------------------
# Pair synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisResult:
    """One synthesized pair plus everything needed to audit it."""

    occluded: VideoClip
    gt: VideoClip
    gt_masks: tuple[Mask, ...]          # the object masks, re-emitted with outputs
    occluder_masks: tuple[Mask, ...]    # binary occluder footprints per frame
    manifest: ClipManifest


def isolate_on_white(frame: Frame, m: Mask) -> Frame:
    out = np.full_like(frame.pixels, GT_BACKGROUND)
    out[m.bits] = frame.pixels[m.bits]
    return Frame(pixels=out)


def synthesize_pair(
    clip: VideoClip,
    masks: list[Mask],
    occluder: OccluderAsset,
    cfg: StrategyConfig,
    seed: int,
    clip_id: str = "clip",
) -> SynthesisResult | None:
    """Build one occluded/GT pair, or None when no valid placement exists.

    The seed is recorded in the manifest and fully determines the output
    given the same inputs.
    """
    n = len(clip)
    if len(masks) != n:
        raise ValueError("need one mask per frame")
    for i, m in enumerate(masks):
        if (m.height, m.width) != (clip.height, clip.width):
            raise ValueError(f"mask {i} dimensions do not match the clip")
        if not m.bits.any():
            log.info("skip %s: empty object mask at frame %d", clip_id, i)
            return None

    rng = np.random.default_rng(np.uint64(seed))

    if cfg.strategy == "easy":
        start = sample_placement(masks[0], occluder, cfg, rng)
        end = sample_placement(masks[-1], occluder, cfg, rng)
        if start is None or end is None:
            log.info("skip %s: no valid placement within budget", clip_id)
            return None
        track = interpolate_track_easy(start[0], start[1], end[0], end[1], n)
    else:
        start = sample_placement(masks[0], occluder, cfg, rng)
        if start is None:
            log.info("skip %s: no valid placement within budget", clip_id)
            return None
        bboxes = [mask_bbox(m) for m in masks]
        track = track_hard(start[0], start[1], bboxes)

    occluded_frames = []
    gt_frames = []
    occ_masks = []
    rates = []
    for i, frame in enumerate(clip.frames):
        p = (float(track.positions[i, 0]), float(track.positions[i, 1]))
        s = float(track.scales[i])
        footprint = rasterize_footprint(occluder, p, s, clip.width, clip.height)
        rates.append(occlusion_rate(masks[i], footprint))
        occluded_frames.append(
            composite(frame, occluder, p, s, feather_radius=cfg.feather_radius))
        gt_frames.append(isolate_on_white(frame, masks[i]))
        occ_masks.append(footprint)

    manifest = ClipManifest(
        clip_id=clip_id,
        strategy=cfg.strategy,
        occluder_id=occluder.id,
        track=track,
        occlusion_rates=tuple(rates),
        feather_radius=cfg.feather_radius,
        rng_seed=int(seed),
    )
    return SynthesisResult(
        occluded=VideoClip(frames=tuple(occluded_frames), fps=clip.fps),
        gt=VideoClip(frames=tuple(gt_frames), fps=clip.fps),
        gt_masks=tuple(masks),
        occluder_masks=tuple(occ_masks),
        manifest=manifest,
    )
