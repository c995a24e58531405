"""Heuristic screening of amodal candidates.

Four rules flag likely-occluded or low-quality object masks: a depth rule
(background ring closer to the camera than the object), boundary contact,
tiny area, and internal holes. A failing rule auto-rejects the candidate;
anything else stays pending until a human reviews it. Auto-accept is
deliberately impossible here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import DepthMap, Mask, mask_area
from .errors import DimensionMismatchError, EmptyMaskError

RULE_DEPTH = "depth_occluded"
RULE_BOUNDARY = "touches_boundary"
RULE_AREA = "too_small"
RULE_HOLES = "too_many_holes"

# 4-connectivity for hole analysis: diagonal contact does not connect
# background regions, so thin masks cannot leak holes to the border.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_SQUARE = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CheckConfig:
    """Thresholds for the screening rules.

    The source heuristics come without numbers; these defaults are the
    artifact's own and are recorded alongside every verdict so runs are
    reproducible.
    """

    boundary_margin: int = 2
    min_area_fraction: float = 0.005
    max_hole_count: int = 3
    max_hole_area_fraction: float = 0.05
    depth_band: int = 5
    depth_closer_fraction_threshold: float = 0.4

    def __post_init__(self):
        if min(self.boundary_margin, self.max_hole_count, self.depth_band) < 0:
            raise ValueError("thresholds must be non-negative")
        for frac in (self.min_area_fraction, self.max_hole_area_fraction,
                     self.depth_closer_fraction_threshold):
            if not (0.0 <= frac <= 1.0):
                raise ValueError(f"fraction {frac} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "boundary_margin": self.boundary_margin,
            "min_area_fraction": self.min_area_fraction,
            "max_hole_count": self.max_hole_count,
            "max_hole_area_fraction": self.max_hole_area_fraction,
            "depth_band": self.depth_band,
            "depth_closer_fraction_threshold": self.depth_closer_fraction_threshold,
        }


@dataclass(frozen=True)
class CheckResult:
    rule_id: str
    passed: bool
    measured: float

    def __post_init__(self):
        if not np.isfinite(self.measured):
            raise ValueError("measured value must be finite")


@dataclass(frozen=True)
class AmodalCheckReport:
    """Outcome of screening one candidate across all frames."""

    verdict: str                                   # "auto_reject" or "pending"
    frame_results: tuple[tuple[CheckResult, ...], ...]
    reject_reasons: tuple[str, ...] = field(default=())

    def measurements(self) -> dict[str, float]:
        """Worst measured value per rule across frames (for review UIs)."""
        worst: dict[str, float] = {}
        for frame in self.frame_results:
            for res in frame:
                cur = worst.get(res.rule_id)
                # "worst" = the failing direction: smaller is worse for
                # boundary/area, larger is worse for holes/depth.
                if res.rule_id in (RULE_BOUNDARY, RULE_AREA):
                    worst[res.rule_id] = res.measured if cur is None else min(cur, res.measured)
                else:
                    worst[res.rule_id] = res.measured if cur is None else max(cur, res.measured)
        return worst


def check_boundary(m: Mask, cfg: CheckConfig) -> CheckResult:
    """Fail when any set bit sits within ``boundary_margin`` px of an image edge."""
    ys, xs = np.nonzero(m.bits)
    if ys.size == 0:
        raise EmptyMaskError("boundary check needs a non-empty mask")
    h, w = m.bits.shape
    dist = int(min(xs.min(), ys.min(), (w - 1 - xs.max()), (h - 1 - ys.max())))
    return CheckResult(RULE_BOUNDARY, passed=dist >= cfg.boundary_margin, measured=float(dist))


def check_area(m: Mask, cfg: CheckConfig) -> CheckResult:
    """Fail when the mask covers less than ``min_area_fraction`` of the frame."""
    frac = mask_area(m) / (m.width * m.height)
    return CheckResult(RULE_AREA, passed=frac >= cfg.min_area_fraction, measured=frac)


def hole_components(m: Mask) -> tuple[int, int]:
    """(hole count, total hole area): 4-connected background regions sealed off
    from the image border."""
    background = ~m.bits
    labels, n = ndimage.label(background, structure=_CROSS)
    if n == 0:
        return 0, 0
    border = np.zeros_like(background)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    border_labels = np.unique(labels[border & background])
    hole_mask = background & ~np.isin(labels, border_labels)
    if not hole_mask.any():
        return 0, 0
    _, n_holes = ndimage.label(hole_mask, structure=_CROSS)
    return int(n_holes), int(hole_mask.sum())


def check_holes(m: Mask, cfg: CheckConfig) -> CheckResult:
    """Fail on too many enclosed background regions or too much enclosed area."""
    if not m.bits.any():
        raise EmptyMaskError("hole check needs a non-empty mask")
    count, hole_area = hole_components(m)
    ok = count <= cfg.max_hole_count and hole_area <= cfg.max_hole_area_fraction * mask_area(m)
    return CheckResult(RULE_HOLES, passed=ok, measured=float(count))


def depth_band_mask(m: Mask, band: int) -> np.ndarray:
    """Background pixels within Chebyshev distance ``band`` of the mask."""
    if band <= 0:
        return np.zeros_like(m.bits)
    dilated = ndimage.binary_dilation(m.bits, structure=_SQUARE, iterations=band)
    return dilated & ~m.bits


def check_depth_occlusion(m: Mask, d: DepthMap, cfg: CheckConfig) -> CheckResult:
    """Fail when most of the surrounding background sits closer than the object.

    Reference depth is the median over the mask's own boundary pixels, which
    is robust against depth noise at silhouette edges. The measured value is
    the fraction of ring pixels strictly closer than that reference.
    """
    if not m.bits.any():
        raise EmptyMaskError("depth check needs a non-empty mask")
    if d.depth.shape != m.bits.shape:
        raise DimensionMismatchError(
            f"depth {d.depth.shape} vs mask {m.bits.shape}")
    eroded = ndimage.binary_erosion(m.bits, structure=_SQUARE, border_value=0)
    boundary = m.bits & ~eroded
    ref = float(np.median(d.depth[boundary]))
    band = depth_band_mask(m, cfg.depth_band)
    n_band = int(band.sum())
    if n_band == 0:  # mask fills the frame: nothing around it to compare
        frac = 0.0
    else:
        frac = float(np.count_nonzero(d.depth[band] < ref)) / n_band
    return CheckResult(RULE_DEPTH, passed=frac <= cfg.depth_closer_fraction_threshold,
                       measured=frac)


def run_amodal_check(
    masks: list[Mask],
    depths: list[DepthMap] | None = None,
    cfg: CheckConfig | None = None,
) -> AmodalCheckReport:
    """Screen a per-frame mask sequence; any failing rule on any frame rejects.

    The area rule runs first on every frame; the remaining rules need a
    non-empty mask and are skipped for empty frames (which the area rule
    already flags for any positive threshold). The depth rule only runs when
    depth maps are supplied.
    """
    if not masks:
        raise ValueError("need at least one mask")
    if depths is not None and len(depths) != len(masks):
        raise DimensionMismatchError("depths length must match masks length")
    cfg = cfg or CheckConfig()

    per_frame: list[tuple[CheckResult, ...]] = []
    failing: set[str] = set()
    for i, m in enumerate(masks):
        results = [check_area(m, cfg)]
        if m.bits.any():
            results.append(check_boundary(m, cfg))
            results.append(check_holes(m, cfg))
            if depths is not None:
                results.append(check_depth_occlusion(m, depths[i], cfg))
        for res in results:
            if not res.passed:
                failing.add(res.rule_id)
        per_frame.append(tuple(results))

    verdict = "auto_reject" if failing else "pending"
    return AmodalCheckReport(verdict=verdict, frame_results=tuple(per_frame),
                             reject_reasons=tuple(sorted(failing)))
