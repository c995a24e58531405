"""Non-neural alignment metrics for completed-object clips.

Because most of a completed frame is white background, PSNR and SSIM are
computed inside the dilated bounding box of the ground-truth amodal mask;
mask alignment is intersection-over-union on the full masks. Neural metric
fields (LPIPS, CLIP-T, FVD) are reserved as nulls in the report schema so
downstream tooling can merge them in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BBox, Frame, Mask, VideoClip, mask_bbox
from .errors import DimensionMismatchError, EmptyMaskError, RegionTooSmallError
from .resample import resize_bilinear, resize_nearest

PSNR_CAP_DB = 99.0        # stands in for +inf at zero error
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255) ** 2
SSIM_C2 = (0.03 * 255) ** 2
PRED_MASK_THRESHOLD = 250  # shared with stitching's object-on-white convention


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union; two empty masks count as a perfect match."""
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatchError(f"{a.bits.shape} vs {b.bits.shape}")
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    return inter / union


def dilated_bbox(gt_amodal: Mask, dilation: int) -> BBox:
    """The mask's tight bbox grown by ``dilation`` px, clamped to the image."""
    box = mask_bbox(gt_amodal)
    if box is None:
        raise EmptyMaskError("dilated bbox needs a non-empty mask")
    return box.dilate(dilation, gt_amodal.width, gt_amodal.height)


def _crop(frame: Frame, region: BBox) -> np.ndarray:
    if not (0 <= region.x_min and region.x_max <= frame.width
            and 0 <= region.y_min and region.y_max <= frame.height):
        raise ValueError(f"region {region} outside {frame.width}x{frame.height}")
    return frame.pixels[region.y_min:region.y_max, region.x_min:region.x_max]


def psnr(pred: Frame, gt: Frame, region: BBox) -> float:
    """10*log10(255^2 / MSE) over the region, all channels; capped at 99 dB."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise DimensionMismatchError("pred and gt frames differ in size")
    a = _crop(pred, region).astype(np.float64)
    b = _crop(gt, region).astype(np.float64)
    if a.size == 0:
        raise ValueError("empty region")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0 ** 2 / mse))


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = size // 2
    coords = np.arange(size, dtype=np.float64) - half
    g1 = np.exp(-(coords ** 2) / (2 * sigma ** 2))
    k = np.outer(g1, g1)
    return k / k.sum()


def _windowed_weighted(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode weighted windowed sums via stride tricks."""
    kh, kw = kernel.shape
    h, w = img.shape
    shape = (h - kh + 1, w - kw + 1, kh, kw)
    strides = img.strides * 2
    windows = np.lib.stride_tricks.as_strided(img, shape=shape, strides=strides)
    return np.einsum("ijkl,kl->ij", windows, kernel)


def ssim(pred: Frame, gt: Frame, region: BBox) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5),
    computed per channel over the region and averaged."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise DimensionMismatchError("pred and gt frames differ in size")
    if region.width < SSIM_WINDOW or region.height < SSIM_WINDOW:
        raise RegionTooSmallError(
            f"region {region.width}x{region.height} below {SSIM_WINDOW}x{SSIM_WINDOW}")
    a = _crop(pred, region).astype(np.float64)
    b = _crop(gt, region).astype(np.float64)
    kernel = _gaussian_kernel()
    scores = []
    for ch in range(3):
        x, y = a[:, :, ch], b[:, :, ch]
        mu_x = _windowed_weighted(x, kernel)
        mu_y = _windowed_weighted(y, kernel)
        ex2 = _windowed_weighted(x * x, kernel)
        ey2 = _windowed_weighted(y * y, kernel)
        exy = _windowed_weighted(x * y, kernel)
        var_x = ex2 - mu_x ** 2
        var_y = ey2 - mu_y ** 2
        cov = exy - mu_x * mu_y
        num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
        den = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def predicted_mask(pred: Frame, threshold: int = PRED_MASK_THRESHOLD) -> Mask:
    """Amodal mask of a predicted object-on-white frame, by thresholding."""
    return Mask((pred.pixels < threshold).any(axis=2))


@dataclass(frozen=True)
class MetricReport:
    """Per-frame and aggregate alignment scores for one clip."""

    per_frame_psnr: tuple[float | None, ...]
    per_frame_ssim: tuple[float | None, ...]
    per_frame_iou: tuple[float, ...]
    mean_psnr: float | None
    mean_ssim: float | None
    mean_iou: float | None
    crop_regions: tuple[tuple[int, int, int, int] | None, ...]
    dilation: int
    psnr_cap_db: float = PSNR_CAP_DB
    resized_to: int | None = None
    # reserved for neural metrics computed elsewhere
    lpips: None = None
    clip_t: None = None
    fvd: None = None

    def to_dict(self) -> dict:
        return {
            "per_frame": {
                "psnr": list(self.per_frame_psnr),
                "ssim": list(self.per_frame_ssim),
                "iou": list(self.per_frame_iou),
            },
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "mean_iou": self.mean_iou,
            "crop_regions": [list(r) if r is not None else None for r in self.crop_regions],
            "dilation": self.dilation,
            "psnr_cap_db": self.psnr_cap_db,
            "resized_to": self.resized_to,
            "lpips": None,
            "clip_t": None,
            "fvd": None,
        }


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def evaluate_clip(
    pred: VideoClip,
    gt: VideoClip,
    gt_amodal_masks,
    pred_masks=None,
    dilation: int = 7,
    resize_to: int | None = None,
) -> MetricReport:
    """Score a predicted clip against ground truth.

    PSNR/SSIM are taken inside each frame's dilated GT-mask bbox; IoU uses
    the full masks (predicted masks default to thresholding the predicted
    frames). Aggregates average the frames whose GT mask is non-empty.
    When ``resize_to`` is set, frames and masks are first normalized to that
    square resolution (bilinear / nearest), matching cross-method comparison
    setups with fixed-resolution baselines.
    """
    if len(pred) != len(gt) or len(gt_amodal_masks) != len(gt):
        raise DimensionMismatchError("pred/gt/mask lengths differ")
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatchError("pred and gt resolutions differ")
    if pred_masks is None:
        pred_masks = [predicted_mask(f) for f in pred.frames]
    if len(pred_masks) != len(gt):
        raise DimensionMismatchError("pred_masks length differs")

    def norm_frame(f: Frame) -> Frame:
        if resize_to is None:
            return f
        return Frame(pixels=resize_bilinear(f.pixels, resize_to, resize_to))

    def norm_mask(m: Mask) -> Mask:
        if resize_to is None:
            return m
        return Mask(resize_nearest(m.bits.astype(np.uint8), resize_to, resize_to).astype(bool))

    psnrs: list[float | None] = []
    ssims: list[float | None] = []
    ious: list[float] = []
    regions: list[tuple[int, int, int, int] | None] = []
    agg_psnr: list[float] = []
    agg_ssim: list[float] = []
    agg_iou: list[float] = []

    for pf, gf, gm, pm in zip(pred.frames, gt.frames, gt_amodal_masks, pred_masks):
        pf, gf, gm, pm = norm_frame(pf), norm_frame(gf), norm_mask(gm), norm_mask(pm)
        ious.append(iou(pm, gm))
        if not gm.bits.any():
            psnrs.append(None)
            ssims.append(None)
            regions.append(None)
            continue
        region = dilated_bbox(gm, dilation)
        regions.append((region.x_min, region.y_min, region.x_max, region.y_max))
        p = psnr(pf, gf, region)
        psnrs.append(p)
        agg_psnr.append(p)
        if region.width >= SSIM_WINDOW and region.height >= SSIM_WINDOW:
            s = ssim(pf, gf, region)
            ssims.append(s)
            agg_ssim.append(s)
        else:
            ssims.append(None)
        agg_iou.append(ious[-1])

    return MetricReport(
        per_frame_psnr=tuple(psnrs),
        per_frame_ssim=tuple(ssims),
        per_frame_iou=tuple(ious),
        mean_psnr=_mean_or_none(agg_psnr),
        mean_ssim=_mean_or_none(agg_ssim),
        mean_iou=_mean_or_none(agg_iou),
        crop_regions=tuple(regions),
        dilation=dilation,
        resized_to=resize_to,
    )
