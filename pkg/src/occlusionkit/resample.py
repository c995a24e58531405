"""Raster resampling: bilinear/nearest resize and perspective warps.

Hand-rolled on purpose: half-pixel-center sampling makes a same-size resize
and an identity homography bit-exact no-ops, and integral translations copy
pixels exactly, which the synthesis invariants rely on. Out-of-source samples
are black (or clear, for alpha planes).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidMotionSpecError


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _sample_bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear gather at float coordinates; out-of-range contributes zero.

    img: (H, W) or (H, W, C) uint8. xs/ys: same output shape.
    """
    h, w = img.shape[:2]
    chans = img if img.ndim == 3 else img[:, :, None]

    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = np.zeros(xs.shape + (chans.shape[2],), dtype=np.float64)
    weight_total = np.zeros(xs.shape, dtype=np.float64)
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            xi = x0 + dx
            yi = y0 + dy
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            wgt = wx * wy
            wgt = np.where(valid, wgt, 0.0)
            xi_c = np.clip(xi, 0, w - 1)
            yi_c = np.clip(yi, 0, h - 1)
            out += chans[yi_c, xi_c].astype(np.float64) * wgt[..., None]
            weight_total += wgt
    # Samples fully outside the source stay black; partially-outside samples
    # are not renormalized, so content fades to black at the border.
    del weight_total
    out = np.clip(_round_half_up(out), 0, 255).astype(np.uint8)
    return out if img.ndim == 3 else out[..., 0]


def _sample_nearest(img: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill=0) -> np.ndarray:
    h, w = img.shape[:2]
    xi = _round_half_up(xs).astype(np.int64)
    yi = _round_half_up(ys).astype(np.int64)
    valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    xi_c = np.clip(xi, 0, w - 1)
    yi_c = np.clip(yi, 0, h - 1)
    out = img[yi_c, xi_c]
    if img.ndim == 3:
        out = np.where(valid[..., None], out, fill)
    else:
        out = np.where(valid, out, fill)
    return out


def _dst_to_src_grid(src_w: int, src_h: int, dst_w: int, dst_h: int):
    """Half-pixel-center source coordinates for every destination pixel."""
    sx = src_w / dst_w
    sy = src_h / dst_h
    xs = (np.arange(dst_w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(dst_h, dtype=np.float64) + 0.5) * sy - 0.5
    return np.meshgrid(xs, ys)


def resize_bilinear(img: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    """Resize (H, W[, C]) uint8 to dst_h x dst_w. Same-size is the identity."""
    if dst_w < 1 or dst_h < 1:
        raise InvalidMotionSpecError(f"bad resize target {dst_w}x{dst_h}")
    h, w = img.shape[:2]
    if (w, h) == (dst_w, dst_h):
        return img.copy()
    xs, ys = _dst_to_src_grid(w, h, dst_w, dst_h)
    # Clamp to the source rectangle: resizing never introduces black borders.
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    return _sample_bilinear(img, xs, ys)


def resize_nearest(img: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    if dst_w < 1 or dst_h < 1:
        raise InvalidMotionSpecError(f"bad resize target {dst_w}x{dst_h}")
    h, w = img.shape[:2]
    if (w, h) == (dst_w, dst_h):
        return img.copy()
    xs, ys = _dst_to_src_grid(w, h, dst_w, dst_h)
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    return _sample_nearest(img, xs, ys)


def warp_perspective(img: np.ndarray, matrix: np.ndarray, nearest: bool = False) -> np.ndarray:
    """Forward-warp by a 3x3 homography via inverse mapping.

    A point p in the source appears at matrix @ p in the output. Output size
    equals input size; samples from outside the source are black.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3):
        raise InvalidMotionSpecError("homography must be 3x3")
    det = np.linalg.det(m)
    if not np.isfinite(det) or abs(det) < 1e-12:
        raise InvalidMotionSpecError("homography is not invertible")
    inv = np.linalg.inv(m)

    h, w = img.shape[:2]
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    denom = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / denom
        sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / denom
    bad = ~np.isfinite(sx) | ~np.isfinite(sy)
    sx = np.where(bad, -1e9, sx)
    sy = np.where(bad, -1e9, sy)
    if nearest:
        return _sample_nearest(img, sx, sy)
    return _sample_bilinear(img, sx, sy)


def apply_homography(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map (N, 2) points through a homography (projective division included)."""
    m = np.asarray(matrix, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    homo = np.column_stack([pts, np.ones(len(pts))])
    mapped = homo @ m.T
    return mapped[:, :2] / mapped[:, 2:3]
