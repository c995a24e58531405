"""Core value types: frames, clips, masks, boxes, occluder assets, manifests.

Everything here is an immutable value after construction (arrays are made
read-only) so instances can be shared freely between worker processes.
Coordinates are pixels, origin top-left, y downward. Boxes are
inclusive-exclusive so that ``width == x_max - x_min``.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .errors import DegenerateBBoxError, DimensionMismatchError, MalformedFileError

# Fixed compression level keeps PNG bytes identical across runs while staying
# fast enough for bulk dataset emission.
PNG_COMPRESS_LEVEL = 3

VERDICTS = ("pending", "auto_pass", "auto_reject", "human_accept", "human_reject")
STRATEGIES = ("easy", "hard")
BANKS = ("generic", "driving")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Frame:
    """One 8-bit RGB time slice, with an optional 8-bit alpha plane."""

    pixels: np.ndarray           # (H, W, 3) uint8
    alpha: np.ndarray | None = None  # (H, W) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(f"Frame.pixels must be (H, W, 3) uint8, got {px.shape} {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("Frame must be at least 1x1")
        object.__setattr__(self, "pixels", _freeze(px))
        if self.alpha is not None:
            a = np.asarray(self.alpha)
            if a.shape != px.shape[:2] or a.dtype != np.uint8:
                raise ValueError("Frame.alpha must be (H, W) uint8 matching pixels")
            object.__setattr__(self, "alpha", _freeze(a))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class VideoClip:
    """An ordered, constant-resolution frame sequence. fps is metadata only."""

    frames: tuple[Frame, ...]
    fps: float = 12.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("VideoClip needs at least one frame")
        w, h = frames[0].width, frames[0].height
        for i, f in enumerate(frames):
            if (f.width, f.height) != (w, h):
                raise DimensionMismatchError(
                    f"frame {i} is {f.width}x{f.height}, expected {w}x{h}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


@dataclass(frozen=True)
class Mask:
    """Per-frame binary object mask, one bit per pixel."""

    bits: np.ndarray  # (H, W) bool

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.dtype != np.bool_:
            raise ValueError(f"Mask.bits must be (H, W) bool, got {b.shape} {b.dtype}")
        if b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("Mask must be at least 1x1")
        object.__setattr__(self, "bits", _freeze(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned pixel box, inclusive-exclusive."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DegenerateBBoxError(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def dilate(self, pixels: int, width: int, height: int) -> "BBox":
        """Expand by `pixels` on every side, clamped to a width x height image."""
        return BBox(
            max(0, self.x_min - pixels),
            max(0, self.y_min - pixels),
            min(width, self.x_max + pixels),
            min(height, self.y_max + pixels),
        )


@dataclass(frozen=True)
class DepthMap:
    """Relative per-pixel depth, smaller = closer to the camera."""

    depth: np.ndarray  # (H, W) float

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError("DepthMap.depth must be 2-D")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("DepthMap values must be finite and non-negative")
        object.__setattr__(self, "depth", _freeze(d))

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]


@dataclass(frozen=True)
class OccluderAsset:
    """A segmented occluder image drawn from an occluder bank.

    The RGBA raster must be trimmed: the alpha support touches all four edges
    of the asset's bounding box.
    """

    id: str
    rgba: Frame
    source_bank: str = "generic"
    native_area: int = 0  # set pixels of the alpha support

    def __post_init__(self):
        if self.source_bank not in BANKS:
            raise ValueError(f"unknown occluder bank {self.source_bank!r}")
        if self.rgba.alpha is None:
            raise ValueError("OccluderAsset frame needs an alpha plane")
        support = self.rgba.alpha > 0
        if not support.any():
            raise ValueError("OccluderAsset alpha is empty")
        ys, xs = np.nonzero(support)
        h, w = support.shape
        if ys.min() != 0 or xs.min() != 0 or ys.max() != h - 1 or xs.max() != w - 1:
            raise ValueError("OccluderAsset must be trimmed to its alpha support")
        object.__setattr__(self, "native_area", int(support.sum()))

    @classmethod
    def from_rgba(cls, asset_id: str, rgba: np.ndarray, source_bank: str = "generic") -> "OccluderAsset":
        """Build an asset from an (H, W, 4) uint8 array, trimming to the alpha support."""
        rgba = np.asarray(rgba)
        if rgba.ndim != 3 or rgba.shape[2] != 4 or rgba.dtype != np.uint8:
            raise ValueError("expected (H, W, 4) uint8 RGBA")
        support = rgba[:, :, 3] > 0
        if not support.any():
            raise ValueError("occluder alpha is empty")
        ys, xs = np.nonzero(support)
        crop = rgba[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
        frame = Frame(pixels=crop[:, :, :3].copy(), alpha=crop[:, :, 3].copy())
        return cls(id=asset_id, rgba=frame, source_bank=source_bank)

    @property
    def width(self) -> int:
        return self.rgba.width

    @property
    def height(self) -> int:
        return self.rgba.height


@dataclass(frozen=True)
class OccluderTrack:
    """Per-frame occluder center positions (x, y) and positive scale factors."""

    positions: np.ndarray  # (N, 2) float64
    scales: np.ndarray     # (N,) float64

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        s = np.asarray(self.scales, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError("positions must be (N, 2)")
        if s.shape != (p.shape[0],):
            raise ValueError("scales length must match positions")
        if not np.all(s > 0):
            raise ValueError("scales must be positive")
        object.__setattr__(self, "positions", _freeze(p))
        object.__setattr__(self, "scales", _freeze(s))

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ClipManifest:
    """Record of one synthesized occluded/GT pair.

    ``rng_seed`` together with the source inputs fully determines the pair.
    """

    clip_id: str
    strategy: str
    occluder_id: str
    track: OccluderTrack
    occlusion_rates: tuple[float, ...]
    feather_radius: int
    rng_seed: int
    verdict: str = "pending"
    reject_reasons: tuple[str, ...] = ()
    checks: dict | None = None  # optional auto-check measurements for reviewers

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        rates = tuple(float(r) for r in self.occlusion_rates)
        if len(rates) != len(self.track):
            raise ValueError("occlusion_rates length must equal track length")
        if any(not (0.0 <= r <= 1.0) for r in rates):
            raise ValueError("occlusion rates must lie in [0, 1]")
        object.__setattr__(self, "occlusion_rates", rates)
        object.__setattr__(self, "reject_reasons", tuple(self.reject_reasons))

    def to_dict(self) -> dict:
        d = {
            "clip_id": self.clip_id,
            "strategy": self.strategy,
            "occluder_id": self.occluder_id,
            "track": {
                "positions": [[float(x), float(y)] for x, y in self.track.positions],
                "scales": [float(s) for s in self.track.scales],
            },
            "occlusion_rates": list(self.occlusion_rates),
            "feather_radius": int(self.feather_radius),
            "rng_seed": int(self.rng_seed),
            "verdict": self.verdict,
            "reject_reasons": list(self.reject_reasons),
        }
        if self.checks is not None:
            d["checks"] = self.checks
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClipManifest":
        track = OccluderTrack(
            positions=np.array(d["track"]["positions"], dtype=np.float64).reshape(-1, 2),
            scales=np.array(d["track"]["scales"], dtype=np.float64),
        )
        return cls(
            clip_id=d["clip_id"],
            strategy=d["strategy"],
            occluder_id=d["occluder_id"],
            track=track,
            occlusion_rates=tuple(d["occlusion_rates"]),
            feather_radius=int(d["feather_radius"]),
            rng_seed=int(d["rng_seed"]),
            verdict=d["verdict"],
            reject_reasons=tuple(d.get("reject_reasons", ())),
            checks=d.get("checks"),
        )

    def with_verdict(self, verdict: str, reasons: Iterable[str] = ()) -> "ClipManifest":
        return replace(self, verdict=verdict,
                       reject_reasons=tuple(self.reject_reasons) + tuple(reasons))


@dataclass(frozen=True)
class DatasetManifest:
    """Shardable index of clip manifests for one difficulty split."""

    version: str
    clips: tuple[ClipManifest, ...]
    difficulty: str
    shards: tuple[tuple[str, int, int], ...]  # (shard_id, start index, end index)
    config: dict | None = None     # effective pipeline config, for reproducibility
    failures: tuple[tuple[str, str], ...] = ()  # (clip_id, reason) for skipped clips

    def __post_init__(self):
        if self.difficulty not in STRATEGIES:
            raise ValueError(f"unknown difficulty {self.difficulty!r}")
        clips = tuple(self.clips)
        ids = [c.clip_id for c in clips]
        if len(set(ids)) != len(ids):
            raise ValueError("clip_ids must be unique")
        shards = tuple((str(s), int(a), int(b)) for s, a, b in self.shards)
        covered = 0
        for _, a, b in shards:
            if a != covered or b < a:
                raise ValueError("shards must be non-overlapping, ordered, covering")
            covered = b
        if covered != len(clips):
            raise ValueError("shards must cover all clips exactly")
        object.__setattr__(self, "clips", clips)
        object.__setattr__(self, "shards", shards)
        object.__setattr__(self, "failures", tuple((str(c), str(r)) for c, r in self.failures))

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "difficulty": self.difficulty,
            "clips": [c.to_dict() for c in self.clips],
            "shards": [{"shard_id": s, "start": a, "end": b} for s, a, b in self.shards],
            "failures": [{"clip_id": c, "reason": r} for c, r in self.failures],
        }
        if self.config is not None:
            d["config"] = self.config
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            version=d["version"],
            clips=tuple(ClipManifest.from_dict(c) for c in d["clips"]),
            difficulty=d["difficulty"],
            shards=tuple((s["shard_id"], s["start"], s["end"]) for s in d["shards"]),
            config=d.get("config"),
            failures=tuple((f["clip_id"], f["reason"]) for f in d.get("failures", ())),
        )


# ---------------------------------------------------------------------------
# Mask primitives
# ---------------------------------------------------------------------------

def mask_area(m: Mask) -> int:
    """Number of set bits."""
    return int(np.count_nonzero(m.bits))


def mask_bbox(m: Mask) -> BBox | None:
    """Tightest box containing all set bits; None for an empty mask."""
    ys, xs = np.nonzero(m.bits)
    if ys.size == 0:
        return None
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def mask_intersection(a: Mask, b: Mask) -> Mask:
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatchError(f"{a.bits.shape} vs {b.bits.shape}")
    return Mask(a.bits & b.bits)


def mask_union(a: Mask, b: Mask) -> Mask:
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatchError(f"{a.bits.shape} vs {b.bits.shape}")
    return Mask(a.bits | b.bits)


# ---------------------------------------------------------------------------
# Serialization: PNG for frames/masks, RLE for masks in JSON, JSON manifests
# ---------------------------------------------------------------------------

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _validate_png_structure(data: bytes) -> None:
    """Walk the chunk layout; raise MalformedFileError with a byte offset."""
    if len(data) < 8 or data[:8] != _PNG_SIGNATURE:
        raise MalformedFileError("not a PNG: bad signature", offset=0)
    pos = 8
    saw_iend = False
    while pos < len(data):
        if pos + 8 > len(data):
            raise MalformedFileError("truncated chunk header", offset=pos)
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        ctype = data[pos + 4:pos + 8]
        end = pos + 8 + length + 4
        if end > len(data):
            raise MalformedFileError(f"truncated chunk {ctype!r}", offset=pos)
        (crc,) = struct.unpack(">I", data[end - 4:end])
        if zlib.crc32(data[pos + 4:end - 4]) & 0xFFFFFFFF != crc:
            raise MalformedFileError(f"bad CRC in chunk {ctype!r}", offset=pos)
        if ctype == b"IEND":
            saw_iend = True
            break
        pos = end
    if not saw_iend:
        raise MalformedFileError("missing IEND chunk", offset=len(data))


def frame_to_png(frame: Frame) -> bytes:
    mode = "RGB" if frame.alpha is None else "RGBA"
    if frame.alpha is None:
        img = Image.fromarray(frame.pixels, "RGB")
    else:
        img = Image.fromarray(
            np.dstack([frame.pixels, frame.alpha[:, :, None]]), "RGBA")
    buf = io.BytesIO()
    img.save(buf, format="PNG", compress_level=PNG_COMPRESS_LEVEL)
    return buf.getvalue()


def frame_from_png(data: bytes) -> Frame:
    _validate_png_structure(data)
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:  # PIL raises a zoo of types here
        raise MalformedFileError(f"PNG decode failed: {exc}", offset=None) from exc
    if img.mode == "RGBA":
        arr = np.asarray(img, dtype=np.uint8)
        return Frame(pixels=arr[:, :, :3].copy(), alpha=arr[:, :, 3].copy())
    arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Frame(pixels=arr)


def mask_to_png(m: Mask) -> bytes:
    img = Image.fromarray(m.bits.astype(np.uint8) * 255, "L").convert("1", dither=Image.Dither.NONE)
    buf = io.BytesIO()
    img.save(buf, format="PNG", compress_level=PNG_COMPRESS_LEVEL)
    return buf.getvalue()


def mask_from_png(data: bytes) -> Mask:
    _validate_png_structure(data)
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise MalformedFileError(f"PNG decode failed: {exc}", offset=None) from exc
    if img.mode != "1":
        img = img.convert("L").point(lambda v: 255 if v > 127 else 0).convert("1")
    return Mask(np.asarray(img, dtype=bool))


def mask_to_rle(m: Mask) -> str:
    """Row-major run-length string: 'WxH:r0,r1,...' with runs alternating 0/1, starting at 0."""
    flat = m.bits.ravel().astype(np.int8)
    if flat.size == 0:
        return f"{m.width}x{m.height}:"
    change = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0] == 1:  # leading zero-run of length 0 keeps the alternation convention
        runs = [0] + runs
    return f"{m.width}x{m.height}:" + ",".join(str(r) for r in runs)


def mask_from_rle(s: str) -> Mask:
    try:
        head, _, body = s.partition(":")
        w_s, _, h_s = head.partition("x")
        w, h = int(w_s), int(h_s)
        runs = [int(r) for r in body.split(",")] if body else []
    except ValueError as exc:
        raise MalformedFileError(f"bad RLE string: {exc}") from exc
    total = sum(runs)
    if total != w * h:
        raise MalformedFileError(f"RLE covers {total} pixels, expected {w * h}")
    flat = np.zeros(w * h, dtype=bool)
    pos = 0
    val = False
    for r in runs:
        if val:
            flat[pos:pos + r] = True
        pos += r
        val = not val
    return Mask(flat.reshape(h, w))


def manifest_to_json(manifest: DatasetManifest | ClipManifest) -> str:
    """Deterministic, diffable JSON encoding."""
    return json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n"


def manifest_from_json(text: str) -> DatasetManifest:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"bad manifest JSON: {exc.msg}", offset=exc.pos) from exc
    return DatasetManifest.from_dict(d)


def clip_manifest_from_json(text: str) -> ClipManifest:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"bad manifest JSON: {exc.msg}", offset=exc.pos) from exc
    return ClipManifest.from_dict(d)


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------

def save_frame_png(path: str | Path, frame: Frame) -> None:
    Path(path).write_bytes(frame_to_png(frame))


def load_frame_png(path: str | Path) -> Frame:
    return frame_from_png(Path(path).read_bytes())


def save_mask_png(path: str | Path, m: Mask) -> None:
    Path(path).write_bytes(mask_to_png(m))


def load_mask_png(path: str | Path) -> Mask:
    return mask_from_png(Path(path).read_bytes())


def load_depth_png(path: str | Path) -> DepthMap:
    data = Path(path).read_bytes()
    _validate_png_structure(data)
    img = Image.open(io.BytesIO(data))
    img.load()
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    return DepthMap(depth=arr)
