"""Long-video completion by sliding a fixed-size window over the clip.

Video models complete a fixed number of frames at a time. The first window
is completed directly; its object frames are blended back into the input
video (object pixels where the derived mask is set, original pixels
elsewhere). Every later window starts with the last ``m`` blended frames as
context, followed by fresh frames, so content stays consistent across
windows. Overlap frames in the final output come from the later window.
"""

from __future__ import annotations

import logging
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import (
    Frame,
    Mask,
    VideoClip,
    load_frame_png,
    save_frame_png,
    save_mask_png,
)
from .errors import CompleterContractError, DimensionMismatchError

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 14
DEFAULT_OVERLAP = 5
DEFAULT_MASK_THRESHOLD = 250


@dataclass(frozen=True)
class StitchConfig:
    k: int = DEFAULT_WINDOW          # window length in frames
    m: int = DEFAULT_OVERLAP         # overlap carried between windows
    mask_threshold: int = DEFAULT_MASK_THRESHOLD  # near-white cutoff for derive_M

    def __post_init__(self):
        if not (1 <= self.m < self.k):
            raise ValueError(f"need 1 <= m < k, got m={self.m} k={self.k}")
        if not (0 <= self.mask_threshold <= 255):
            raise ValueError("mask_threshold must be an 8-bit value")


class Completer(Protocol):
    """Window-in, object-on-white-out contract.

    Takes a window of (possibly blended) video frames plus per-frame visible
    masks, returns the completed object frames on a white background at the
    same resolution. Windows normally hold exactly k frames; clips shorter
    than k arrive whole.
    """

    def __call__(self, frames: Sequence[Frame], masks: Sequence[Mask]) -> Sequence[Frame]:
        ...


def blend(v_frame: Frame, o_frame: Frame, m: Mask) -> Frame:
    """Per-pixel select: object frame where the mask is set, video elsewhere."""
    if (v_frame.height, v_frame.width) != (o_frame.height, o_frame.width):
        raise DimensionMismatchError("video and object frames differ in size")
    if (m.height, m.width) != (v_frame.height, v_frame.width):
        raise DimensionMismatchError("mask does not match the frames")
    out = np.where(m.bits[:, :, None], o_frame.pixels, v_frame.pixels)
    return Frame(pixels=out)


def derive_M(o_frame: Frame, cfg: StitchConfig) -> Mask:
    """Object mask from an object-on-white frame: any channel below threshold."""
    return Mask((o_frame.pixels < cfg.mask_threshold).any(axis=2))


def plan_windows(n: int, cfg: StitchConfig) -> list[tuple[int, int]]:
    """Window start/end pairs covering [0, n).

    The first window is [0, min(k, n)); each later one starts m frames before
    the previous end and spans k frames, with the final window right-aligned
    to end exactly at n (no frames are fabricated, the fresh-frame count just
    shrinks).
    """
    if n < 1:
        raise ValueError("need at least one frame")
    k, m = cfg.k, cfg.m
    windows = [(0, min(k, n))]
    while windows[-1][1] < n:
        start = windows[-1][1] - m
        end = start + k
        if end > n:
            start, end = n - k, n
        windows.append((start, end))
    return windows


def stitch(
    clip: VideoClip,
    masks: Sequence[Mask],
    completer: Completer,
    cfg: StitchConfig | None = None,
) -> VideoClip:
    """Complete the whole clip window by window, reblending between windows.

    Returns the full-length object video; on overlaps the later window's
    frames win. Completer failures propagate with the window index attached.
    """
    cfg = cfg or StitchConfig()
    n = len(clip)
    if len(masks) != n:
        raise DimensionMismatchError("need one visible mask per frame")

    o_frames: list[Frame | None] = [None] * n
    work_frames = list(clip.frames)      # original frames, progressively blended
    work_masks = list(masks)             # original masks, re-derived on overlaps
    completed_until = 0

    for w_index, (start, end) in enumerate(plan_windows(n, cfg)):
        in_frames = work_frames[start:end]
        in_masks = work_masks[start:end]
        try:
            out = list(completer(in_frames, in_masks))
        except Exception as exc:
            raise CompleterContractError(
                f"completer failed on window {w_index} [{start},{end})") from exc
        if len(out) != end - start:
            raise CompleterContractError(
                f"completer returned {len(out)} frames for window {w_index}, "
                f"expected {end - start}")
        for f in out:
            if (f.height, f.width) != (clip.height, clip.width):
                raise CompleterContractError(
                    f"completer output {f.width}x{f.height} does not match "
                    f"input {clip.width}x{clip.height} on window {w_index}")

        for i, o in zip(range(start, end), out):
            o_frames[i] = o
            derived = derive_M(o, cfg)
            work_frames[i] = blend(clip.frames[i], o, derived)
            work_masks[i] = derived
        completed_until = end

    assert completed_until == n
    return VideoClip(frames=tuple(o_frames), fps=clip.fps)  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Completers
# ---------------------------------------------------------------------------

def visible_pixels_completer(frames: Sequence[Frame], masks: Sequence[Mask]) -> list[Frame]:
    """Trivial completer: copies the visible object pixels onto white.

    Useful as a smoke-test stand-in for a real completion model.
    """
    out = []
    for f, m in zip(frames, masks):
        px = np.full_like(f.pixels, 255)
        px[m.bits] = f.pixels[m.bits]
        out.append(Frame(pixels=px))
    return out


class SubprocessCompleter:
    """Bridge to an external completer executable.

    Protocol per window: frames and masks are written to a fresh temp
    directory as ``frames/NNNN.png`` and ``masks/NNNN.png``; the executable
    is invoked as ``cmd <in_dir> <out_dir>`` and must write one completed
    ``NNNN.png`` per input frame into ``<out_dir>``.
    """

    def __init__(self, command: list[str]):
        if not command:
            raise ValueError("empty completer command")
        self.command = list(command)

    def __call__(self, frames: Sequence[Frame], masks: Sequence[Mask]) -> list[Frame]:
        with tempfile.TemporaryDirectory(prefix="stitch-window-") as tmp:
            in_dir = Path(tmp) / "in"
            out_dir = Path(tmp) / "out"
            (in_dir / "frames").mkdir(parents=True)
            (in_dir / "masks").mkdir(parents=True)
            out_dir.mkdir()
            for i, (f, m) in enumerate(zip(frames, masks)):
                save_frame_png(in_dir / "frames" / f"{i:04d}.png", f)
                save_mask_png(in_dir / "masks" / f"{i:04d}.png", m)
            proc = subprocess.run(self.command + [str(in_dir), str(out_dir)],
                                  capture_output=True, text=True)
            if proc.returncode != 0:
                raise CompleterContractError(
                    f"completer exited {proc.returncode}: {proc.stderr.strip()[:500]}")
            out = []
            for i in range(len(frames)):
                path = out_dir / f"{i:04d}.png"
                if not path.exists():
                    raise CompleterContractError(f"completer wrote no frame {i:04d}.png")
                out.append(load_frame_png(path))
            return out
