"""Single annotated image to synthetic clip, via three camera-motion fakes.

zoom: progressive center crop resized back to the source resolution.
parallel_move: the foreground object slides one way while the inpainted
background counter-slides at half magnitude, giving parallax-like motion.
warp: a homography interpolated from the identity, inverse-mapped with
bilinear sampling.

Masks ride along with nearest-neighbor resampling so the output clips drop
straight into the occlusion-overlay stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Frame, Mask, VideoClip
from .errors import EmptyMaskError, InvalidMotionSpecError
from .resample import resize_bilinear, resize_nearest, warp_perspective

MOTION_KINDS = ("zoom", "parallel_move", "warp")


@dataclass(frozen=True)
class MotionSpec:
    kind: str
    frames: int
    zoom_end: float = 1.0
    displacement: tuple[float, float] = (0.0, 0.0)
    homography_end: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise InvalidMotionSpecError(f"unknown motion kind {self.kind!r}")
        if self.frames < 2:
            raise InvalidMotionSpecError("need at least 2 frames")
        if not (0.0 < self.zoom_end <= 1.0):
            raise InvalidMotionSpecError("zoom_end must be in (0, 1]")
        h = np.asarray(self.homography_end, dtype=np.float64)
        if h.shape != (3, 3) or abs(h[2, 2]) < 1e-12:
            raise InvalidMotionSpecError("homography_end must be 3x3 with nonzero corner")
        if abs(np.linalg.det(h)) < 1e-12:
            raise InvalidMotionSpecError("homography_end must be invertible")
        object.__setattr__(self, "homography_end", h / h[2, 2])


def _timeline(n: int) -> np.ndarray:
    return np.arange(n, dtype=np.float64) / (n - 1)


def zoom_sequence(img: Frame, mask: Mask, spec: MotionSpec) -> tuple[VideoClip, list[Mask]]:
    """Zoom in by center-cropping a shrinking window and resizing back."""
    w, h = img.width, img.height
    # validate the tightest crop up front so failures are not mid-sequence
    min_cw = int(np.floor(w * spec.zoom_end + 0.5))
    min_ch = int(np.floor(h * spec.zoom_end + 0.5))
    if min_cw < 2 or min_ch < 2:
        raise InvalidMotionSpecError(f"final crop {min_cw}x{min_ch} smaller than 2x2")

    frames = []
    masks = []
    for t in _timeline(spec.frames):
        f = (1.0 - t) * 1.0 + t * spec.zoom_end
        cw = int(np.floor(w * f + 0.5))
        ch = int(np.floor(h * f + 0.5))
        x0 = (w - cw) // 2
        y0 = (h - ch) // 2
        if cw == w and ch == h:
            frames.append(Frame(pixels=img.pixels.copy()))
            masks.append(Mask(mask.bits.copy()))
            continue
        crop = img.pixels[y0:y0 + ch, x0:x0 + cw]
        frames.append(Frame(pixels=resize_bilinear(crop, w, h)))
        mcrop = mask.bits[y0:y0 + ch, x0:x0 + cw]
        masks.append(Mask(resize_nearest(mcrop.astype(np.uint8), w, h).astype(bool)))
    return VideoClip(frames=tuple(frames)), masks


def fill_background(img: Frame, fg_mask: Mask) -> np.ndarray:
    """Replace foreground pixels by repeatedly averaging known 4-neighbors.

    Unknown pixels adjacent to known ones are resolved layer by layer (each
    takes the rounded mean of its already-known neighbors), so every filled
    value stays within the min/max of the mask's boundary ring.
    """
    bits = fg_mask.bits
    if not bits.any():
        raise EmptyMaskError("parallel move needs a non-empty foreground mask")
    if bits.all():
        raise EmptyMaskError("foreground mask covers the whole image; nothing to fill from")
    plate = img.pixels.astype(np.float64)
    known = ~bits
    while not known.all():
        kf = known.astype(np.float64)
        neighbor_sum = np.zeros_like(plate)
        neighbor_cnt = np.zeros(plate.shape[:2])
        for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
            rolled_v = np.roll(plate * kf[:, :, None], shift, axis=axis)
            rolled_k = np.roll(kf, shift, axis=axis)
            # roll wraps around; zero out the wrapped edge
            if axis == 0 and shift == 1:
                rolled_v[0], rolled_k[0] = 0, 0
            elif axis == 0 and shift == -1:
                rolled_v[-1], rolled_k[-1] = 0, 0
            elif axis == 1 and shift == 1:
                rolled_v[:, 0], rolled_k[:, 0] = 0, 0
            else:
                rolled_v[:, -1], rolled_k[:, -1] = 0, 0
            neighbor_sum += rolled_v
            neighbor_cnt += rolled_k
        layer = ~known & (neighbor_cnt > 0)
        if not layer.any():  # unreachable region (mask spans the frame)
            break
        plate[layer] = np.floor(
            neighbor_sum[layer] / neighbor_cnt[layer, None] + 0.5)
        known |= layer
    return np.clip(plate, 0, 255).astype(np.uint8)


def _shift_edge_clamped(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer shift; vacated borders replicate the nearest edge row/column."""
    h, w = img.shape[:2]
    pad = max(abs(dx), abs(dy))
    if pad == 0:
        return img.copy()
    pad_spec = ((pad, pad), (pad, pad)) + (((0, 0),) if img.ndim == 3 else ())
    padded = np.pad(img, pad_spec, mode="edge")
    return padded[pad - dy:pad - dy + h, pad - dx:pad - dx + w]


def parallel_move_sequence(
    img: Frame, fg_mask: Mask, spec: MotionSpec
) -> tuple[VideoClip, list[Mask]]:
    """Slide the foreground over a counter-shifted inpainted background."""
    plate = fill_background(img, fg_mask)
    h, w = img.height, img.width
    ys, xs = np.nonzero(fg_mask.bits)
    dx_total, dy_total = spec.displacement

    frames = []
    masks = []
    for t in _timeline(spec.frames):
        fg_dx = int(np.floor(t * dx_total + 0.5))
        fg_dy = int(np.floor(t * dy_total + 0.5))
        bg_dx = int(np.floor(-0.5 * t * dx_total + 0.5))
        bg_dy = int(np.floor(-0.5 * t * dy_total + 0.5))

        canvas = _shift_edge_clamped(plate, bg_dx, bg_dy)
        tx = xs + fg_dx
        ty = ys + fg_dy
        keep = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
        canvas[ty[keep], tx[keep]] = img.pixels[ys[keep], xs[keep]]
        frames.append(Frame(pixels=canvas))

        bits = np.zeros((h, w), dtype=bool)
        bits[ty[keep], tx[keep]] = True
        masks.append(Mask(bits))
    return VideoClip(frames=tuple(frames)), masks


def warp_sequence(img: Frame, mask: Mask, spec: MotionSpec) -> tuple[VideoClip, list[Mask]]:
    """Warp by element-wise interpolation from the identity homography."""
    h_end = spec.homography_end
    frames = []
    masks = []
    for t in _timeline(spec.frames):
        m = (1.0 - t) * np.eye(3) + t * h_end
        if abs(m[2, 2]) < 1e-12:
            raise InvalidMotionSpecError(f"degenerate interpolated matrix at t={t}")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12:
            raise InvalidMotionSpecError(f"non-invertible interpolated matrix at t={t}")
        if np.array_equal(m, np.eye(3)):
            frames.append(Frame(pixels=img.pixels.copy()))
            masks.append(Mask(mask.bits.copy()))
            continue
        frames.append(Frame(pixels=warp_perspective(img.pixels, m)))
        warped = warp_perspective(mask.bits.astype(np.uint8), m, nearest=True)
        masks.append(Mask(warped.astype(bool)))
    return VideoClip(frames=tuple(frames)), masks


def image_to_clip(
    img: Frame, mask: Mask, spec: MotionSpec
) -> tuple[VideoClip, list[Mask]]:
    """Dispatch to the transform named by the spec."""
    if spec.kind == "zoom":
        return zoom_sequence(img, mask, spec)
    if spec.kind == "parallel_move":
        return parallel_move_sequence(img, mask, spec)
    return warp_sequence(img, mask, spec)


def random_motion_spec(kind: str, frames: int, rng: np.random.Generator) -> MotionSpec:
    """Sample transform parameters from sensible ranges (for --randomize)."""
    if kind == "zoom":
        return MotionSpec(kind=kind, frames=frames,
                          zoom_end=float(rng.uniform(0.5, 0.9)))
    if kind == "parallel_move":
        return MotionSpec(kind=kind, frames=frames,
                          displacement=(float(rng.uniform(-40, 40)),
                                        float(rng.uniform(-25, 25))))
    h = np.eye(3)
    h[0, 0] += rng.uniform(-0.08, 0.08)
    h[1, 1] += rng.uniform(-0.08, 0.08)
    h[0, 1] = rng.uniform(-0.05, 0.05)
    h[1, 0] = rng.uniform(-0.05, 0.05)
    h[0, 2] = rng.uniform(-15, 15)
    h[1, 2] = rng.uniform(-15, 15)
    h[2, 0] = rng.uniform(-1e-4, 1e-4)
    h[2, 1] = rng.uniform(-1e-4, 1e-4)
    return MotionSpec(kind="warp", frames=frames, homography_end=h)
