import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occlusionkit.core import Frame, Mask, VideoClip
from occlusionkit.errors import CompleterContractError, DimensionMismatchError
from occlusionkit.stitch import (
    StitchConfig,
    SubprocessCompleter,
    blend,
    derive_M,
    plan_windows,
    stitch,
    visible_pixels_completer,
)

from conftest import random_frame, random_mask


# --- blend (oracle: per-pixel loop) --------------------------------------------

def blend_pixel_oracle(v, o, m):
    out = v.copy()
    for y in range(v.shape[0]):
        for x in range(v.shape[1]):
            if m[y, x]:
                out[y, x] = o[y, x]
    return out


def test_blend_full_mask_projects_onto_object(rng):
    v, o = random_frame(rng, 8, 8), random_frame(rng, 8, 8)
    full = Mask(np.ones((8, 8), dtype=bool))
    assert np.array_equal(blend(v, o, full).pixels, o.pixels)


def test_blend_empty_mask_projects_onto_video(rng):
    v, o = random_frame(rng, 8, 8), random_frame(rng, 8, 8)
    empty = Mask(np.zeros((8, 8), dtype=bool))
    assert np.array_equal(blend(v, o, empty).pixels, v.pixels)


def test_blend_checkerboard_matches_loop_oracle(rng):
    v, o = random_frame(rng, 10, 10), random_frame(rng, 10, 10)
    bits = np.indices((10, 10)).sum(axis=0) % 2 == 0
    got = blend(v, o, Mask(bits))
    assert np.array_equal(got.pixels, blend_pixel_oracle(v.pixels, o.pixels, bits))


def test_blend_idempotent(rng):
    v, o = random_frame(rng, 12, 12), random_frame(rng, 12, 12)
    m = random_mask(rng, 12, 12)
    once = blend(v, o, m)
    twice = blend(once, o, m)
    assert np.array_equal(once.pixels, twice.pixels)


def test_blend_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        blend(random_frame(rng, 8, 8), random_frame(rng, 8, 9),
              Mask(np.zeros((8, 8), dtype=bool)))


# --- derive_M --------------------------------------------------------------------

def test_derive_m_all_white_is_empty():
    f = Frame(pixels=np.full((6, 6, 3), 255, dtype=np.uint8))
    assert not derive_M(f, StitchConfig()).bits.any()


def test_derive_m_black_square():
    px = np.full((16, 16, 3), 255, dtype=np.uint8)
    px[4:9, 5:11] = 0
    m = derive_M(Frame(pixels=px), StitchConfig())
    want = np.zeros((16, 16), dtype=bool)
    want[4:9, 5:11] = True
    assert np.array_equal(m.bits, want)


def test_derive_m_near_white_excluded_per_threshold(rng):
    cfg = StitchConfig(mask_threshold=250)
    px = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
    m = derive_M(Frame(pixels=px), cfg)
    # per-pixel oracle
    for y in range(12):
        for x in range(12):
            want = bool((px[y, x] < 250).any())
            assert m.bits[y, x] == want


# --- plan_windows -------------------------------------------------------------------

def coverage_oracle(windows, n, k, m):
    """Brute-force validity check for a window plan."""
    covered = np.zeros(n, dtype=bool)
    assert windows[0][0] == 0
    for (s, e) in windows:
        assert 0 <= s < e <= n
        assert e - s <= k
        covered[s:e] = True
    assert covered.all()
    for (s0, e0), (s1, e1) in zip(windows, windows[1:]):
        overlap = e0 - s1
        assert overlap >= m
    # all but the last overlap are exactly m
    for (s0, e0), (s1, e1) in zip(windows[:-1], windows[1:-1]):
        assert e0 - s1 == m


def test_plan_windows_single():
    assert plan_windows(14, StitchConfig(k=14, m=5)) == [(0, 14)]


def test_plan_windows_23():
    assert plan_windows(23, StitchConfig(k=14, m=5)) == [(0, 14), (9, 23)]


def test_plan_windows_30_right_aligned():
    assert plan_windows(30, StitchConfig(k=14, m=5)) == [(0, 14), (9, 23), (16, 30)]


def test_plan_windows_short_clips():
    for n in range(1, 14):
        assert plan_windows(n, StitchConfig(k=14, m=5)) == [(0, n)]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 400), st.integers(2, 40), st.data())
def test_plan_windows_invariants_random(n, k, data):
    m = data.draw(st.integers(1, k - 1))
    cfg = StitchConfig(k=k, m=m)
    coverage_oracle(plan_windows(n, cfg), n, k, m)


# --- stitch ---------------------------------------------------------------------------

def _clip_with_masks(rng, n, size=24):
    frames = [random_frame(rng, size, size) for _ in range(n)]
    masks = []
    for i in range(n):
        bits = np.zeros((size, size), dtype=bool)
        x = 4 + (i % 10)
        bits[8:16, x:x + 6] = True
        masks.append(Mask(bits))
    return VideoClip(frames=tuple(frames)), masks


def test_stitch_single_window_passthrough(rng):
    clip, masks = _clip_with_masks(rng, 9)
    out = stitch(clip, masks, visible_pixels_completer, StitchConfig(k=14, m=5))
    want = visible_pixels_completer(clip.frames, masks)
    for got, exp in zip(out.frames, want):
        assert np.array_equal(got.pixels, exp.pixels)


def test_stitch_output_lengths(rng):
    for n in (14, 23, 30, 100):
        clip, masks = _clip_with_masks(rng, n, size=12)
        out = stitch(clip, masks, visible_pixels_completer, StitchConfig(k=14, m=5))
        assert len(out) == n


def test_stitch_gt_isolation_oracle(rng):
    """An oracle completer isolating the object from held-out GT: stitched
    output must equal per-frame isolation bit-exactly."""
    n = 30
    size = 24
    gt_frames = [random_frame(rng, size, size) for _ in range(n)]
    amodal = []
    for i in range(n):
        bits = np.zeros((size, size), dtype=bool)
        x = 3 + (i % 8)
        bits[6:18, x:x + 9] = True
        amodal.append(Mask(bits))
    gt = VideoClip(frames=tuple(gt_frames))

    def isolate(i):
        px = np.full((size, size, 3), 255, dtype=np.uint8)
        px[amodal[i].bits] = gt_frames[i].pixels[amodal[i].bits]
        return Frame(pixels=px)

    cfg = StitchConfig(k=14, m=5)
    windows = iter(plan_windows(n, cfg))

    def oracle_completer(frames, masks):
        start, end = next(windows)
        assert len(frames) == end - start
        return [isolate(i) for i in range(start, end)]

    # the "occluded" input here is arbitrary; the oracle ignores it
    occluded = VideoClip(frames=tuple(random_frame(rng, size, size) for _ in range(n)))
    visible = [Mask(np.zeros((size, size), dtype=bool)) for _ in range(n)]
    out = stitch(occluded, visible, oracle_completer, cfg)
    for i in range(n):
        assert np.array_equal(out.frames[i].pixels, isolate(i).pixels)


def test_stitch_deterministic(rng):
    clip, masks = _clip_with_masks(rng, 23)
    cfg = StitchConfig(k=14, m=5)
    a = stitch(clip, masks, visible_pixels_completer, cfg)
    b = stitch(clip, masks, visible_pixels_completer, cfg)
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.pixels, fb.pixels)


def test_stitch_overlap_frames_fed_as_blended(rng):
    """Later windows must receive the blended frames and re-derived masks."""
    clip, masks = _clip_with_masks(rng, 23)
    cfg = StitchConfig(k=14, m=5)
    seen = []

    def spy_completer(frames, masks_in):
        seen.append(([f.pixels.copy() for f in frames],
                     [m.bits.copy() for m in masks_in]))
        return visible_pixels_completer(frames, masks_in)

    stitch(clip, masks, spy_completer, cfg)
    assert len(seen) == 2
    # window 1 starts at frame 9; its first 5 frames are blends, not originals
    first_out = visible_pixels_completer(clip.frames[:14], masks[:14])
    for j, i in enumerate(range(9, 14)):
        derived = derive_M(first_out[i], cfg)
        expected = blend(clip.frames[i], first_out[i], derived)
        assert np.array_equal(seen[1][0][j], expected.pixels)
        assert np.array_equal(seen[1][1][j], derived.bits)
    # fresh frames arrive untouched
    for j, i in enumerate(range(14, 23), start=5):
        assert np.array_equal(seen[1][0][j], clip.frames[i].pixels)


def test_stitch_bad_completer_length(rng):
    clip, masks = _clip_with_masks(rng, 14)

    def broken(frames, masks_in):
        return visible_pixels_completer(frames, masks_in)[:-1]

    with pytest.raises(CompleterContractError):
        stitch(clip, masks, broken, StitchConfig(k=14, m=5))


def test_stitch_completer_failure_names_window(rng):
    clip, masks = _clip_with_masks(rng, 23)
    calls = {"n": 0}

    def flaky(frames, masks_in):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("boom")
        return visible_pixels_completer(frames, masks_in)

    with pytest.raises(CompleterContractError, match="window 1"):
        stitch(clip, masks, flaky, StitchConfig(k=14, m=5))


def test_subprocess_completer_round_trip(rng, tmp_path):
    """A tiny on-disk completer that isolates visible pixels."""
    script = tmp_path / "complete.py"
    script.write_text(
        "import sys\n"
        "from pathlib import Path\n"
        "import numpy as np\n"
        "from occlusionkit.core import load_frame_png, load_mask_png, save_frame_png, Frame\n"
        "inp, outp = Path(sys.argv[1]), Path(sys.argv[2])\n"
        "for fp in sorted((inp / 'frames').iterdir()):\n"
        "    f = load_frame_png(fp)\n"
        "    m = load_mask_png(inp / 'masks' / fp.name)\n"
        "    px = np.full_like(f.pixels, 255)\n"
        "    px[m.bits] = f.pixels[m.bits]\n"
        "    save_frame_png(outp / fp.name, Frame(pixels=px))\n"
    )
    clip, masks = _clip_with_masks(rng, 6, size=16)
    completer = SubprocessCompleter(["python3", str(script)])
    out = stitch(clip, masks, completer, StitchConfig(k=14, m=5))
    want = visible_pixels_completer(clip.frames, masks)
    for got, exp in zip(out.frames, want):
        assert np.array_equal(got.pixels, exp.pixels)
