"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one line per
criterion. Each test prints ``[PASS] <criterion>`` on success; a failure
shows up as the test failing.
"""

import hashlib
import math
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from occlusionkit.checks import CheckConfig, check_area, check_boundary, hole_components
from occlusionkit.core import BBox, Frame, Mask
from occlusionkit.metrics import PSNR_CAP_DB, SSIM_C1, SSIM_C2, iou, psnr, ssim
from occlusionkit.overlay import (
    easy_config,
    hard_config,
    interpolate_track_easy,
    isolate_on_white,
    synthesize_pair,
    track_hard,
)
from occlusionkit.pipeline import PipelineConfig, SourceSpec, run_pipeline
from occlusionkit.review import ReviewState, build_app_from_state, fold_decisions, read_decision_log
from occlusionkit.stitch import StitchConfig, blend, plan_windows, stitch
from occlusionkit.synthdata import (
    make_occluder_asset,
    make_shape_clip,
    write_clip_dir,
    write_occluder_bank,
)


def _report(name: str) -> None:
    print(f"[PASS] {name}")


# ---------------------------------------------------------------------------
# 1. Occlusion-rate contract
# ---------------------------------------------------------------------------

def test_acceptance_occlusion_rate_contract():
    """50 Easy + 50 Hard pairs from procedural 14-frame 384x384 clips; rates
    at the strategy's anchor frames verified from emitted masks with exact
    integer arithmetic; total runtime under 60 s."""
    start = time.perf_counter()
    occluders = [make_occluder_asset(seed=900 + i) for i in range(8)]

    def exact_rate_in(gt_mask: Mask, occ_mask: Mask, lo10: int, hi10: int) -> bool:
        inter = int(np.count_nonzero(gt_mask.bits & occ_mask.bits))
        area = int(np.count_nonzero(gt_mask.bits))
        return lo10 * area <= 10 * inter <= hi10 * area

    n_easy = n_hard = 0
    for i in range(50):
        clip, masks = make_shape_clip(seed=10_000 + i, frames=14, size=384)
        res = synthesize_pair(clip, masks, occluders[i % len(occluders)],
                              easy_config(), seed=555 + i)
        assert res is not None, f"easy clip {i} found no placement"
        assert exact_rate_in(res.gt_masks[0], res.occluder_masks[0], 3, 7)
        assert exact_rate_in(res.gt_masks[-1], res.occluder_masks[-1], 3, 7)
        n_easy += 1
    for i in range(50):
        clip, masks = make_shape_clip(seed=20_000 + i, frames=14, size=384)
        res = synthesize_pair(clip, masks, occluders[i % len(occluders)],
                              hard_config(), seed=777 + i)
        assert res is not None, f"hard clip {i} found no placement"
        assert exact_rate_in(res.gt_masks[0], res.occluder_masks[0], 4, 8)
        n_hard += 1

    elapsed = time.perf_counter() - start
    assert n_easy == 50 and n_hard == 50
    assert elapsed < 60.0, f"occlusion-rate contract took {elapsed:.1f}s (budget 60s)"
    _report(f"occlusion-rate contract (100/100 pairs in range, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 2. Track laws
# ---------------------------------------------------------------------------

def test_acceptance_track_laws():
    """1000 random parameterizations per strategy: easy tracks affine with
    exact endpoints; hard tracks obey the cube-root bbox-ratio law to 1e-9."""
    rng = np.random.default_rng(31337)
    for _ in range(1000):
        p0 = (float(rng.uniform(-500, 500)), float(rng.uniform(-500, 500)))
        p1 = (float(rng.uniform(-500, 500)), float(rng.uniform(-500, 500)))
        s0 = float(rng.uniform(0.05, 8.0))
        s1 = float(rng.uniform(0.05, 8.0))
        n = int(rng.integers(2, 60))
        tr = interpolate_track_easy(p0, s0, p1, s1, n)
        assert tuple(tr.positions[0]) == p0 and tuple(tr.positions[-1]) == p1
        assert tr.scales[0] == s0 and tr.scales[-1] == s1
        for seq in (tr.positions[:, 0], tr.positions[:, 1], tr.scales):
            if n >= 3:
                assert np.max(np.abs(np.diff(seq, n=2))) < 1e-9

    for _ in range(1000):
        w0, h0 = int(rng.integers(2, 200)), int(rng.integers(2, 200))
        boxes = [BBox(0, 0, w0, h0)]
        for _ in range(int(rng.integers(1, 20))):
            w, h = int(rng.integers(2, 400)), int(rng.integers(2, 400))
            x, y = int(rng.integers(0, 100)), int(rng.integers(0, 100))
            boxes.append(BBox(x, y, x + w, y + h))
        s_st = float(rng.uniform(0.05, 5.0))
        tr = track_hard((0.0, 0.0), s_st, boxes)
        for i, b in enumerate(boxes):
            want = max(b.height / h0, b.width / w0)
            got = tr.scales[i] ** 3 / s_st ** 3
            assert abs(got - want) <= 1e-9 * abs(want)
    _report("track laws (1000 easy + 1000 hard parameterizations)")


# ---------------------------------------------------------------------------
# 3. Blend properties
# ---------------------------------------------------------------------------

def test_acceptance_blend_properties():
    """10,000 random pixels: projections, idempotence, per-pixel oracle, exact."""
    rng = np.random.default_rng(4242)
    v = Frame(pixels=rng.integers(0, 256, (100, 100, 3), dtype=np.uint8))
    o = Frame(pixels=rng.integers(0, 256, (100, 100, 3), dtype=np.uint8))
    m = Mask(rng.random((100, 100)) < 0.5)

    full = Mask(np.ones((100, 100), dtype=bool))
    empty = Mask(np.zeros((100, 100), dtype=bool))
    assert np.array_equal(blend(v, o, full).pixels, o.pixels)
    assert np.array_equal(blend(v, o, empty).pixels, v.pixels)

    once = blend(v, o, m)
    assert np.array_equal(blend(once, o, m).pixels, once.pixels)

    # per-pixel oracle over all 10,000 pixels
    want = np.empty_like(v.pixels)
    for y in range(100):
        for x in range(100):
            want[y, x] = o.pixels[y, x] if m.bits[y, x] else v.pixels[y, x]
    assert np.array_equal(once.pixels, want)
    _report("blend properties (10,000 pixels, exact)")


# ---------------------------------------------------------------------------
# 4. Window planning
# ---------------------------------------------------------------------------

def test_acceptance_window_planning():
    """plan_windows(N, 14, 5) against enumerated expectations, plus coverage
    invariants on 1000 random (N, k, m) triples via a brute-force checker."""
    cfg = StitchConfig(k=14, m=5)
    for n in range(1, 14):
        assert plan_windows(n, cfg) == [(0, n)]
    assert plan_windows(14, cfg) == [(0, 14)]
    assert plan_windows(23, cfg) == [(0, 14), (9, 23)]
    assert plan_windows(30, cfg) == [(0, 14), (9, 23), (16, 30)]
    assert plan_windows(100, cfg) == [
        (0, 14), (9, 23), (18, 32), (27, 41), (36, 50), (45, 59), (54, 68),
        (63, 77), (72, 86), (81, 95), (86, 100)]

    rng = np.random.default_rng(777)
    for _ in range(1000):
        n = int(rng.integers(1, 500))
        k = int(rng.integers(2, 50))
        m = int(rng.integers(1, k))
        windows = plan_windows(n, StitchConfig(k=k, m=m))
        covered = np.zeros(n, dtype=bool)
        assert windows[0][0] == 0 and windows[-1][1] == n
        for s, e in windows:
            assert 0 <= s < e <= n and e - s <= k
            covered[s:e] = True
        assert covered.all()
        for (s0, e0), (s1, e1) in zip(windows, windows[1:]):
            assert e0 - s1 >= m
        for (s0, e0), (s1, e1) in zip(windows[:-1], windows[1:-1]):
            assert e0 - s1 == m
    _report("window planning (enumerated + 1000 random triples)")


# ---------------------------------------------------------------------------
# 5. Stitcher oracle
# ---------------------------------------------------------------------------

def test_acceptance_stitcher_oracle():
    """10 synthetic occluded 30-frame clips; an oracle completer isolating the
    object from held-out GT must round-trip bit-exactly through stitch."""
    cfg = StitchConfig(k=14, m=5)
    occluder = make_occluder_asset(seed=5150, max_side=60)
    for c in range(10):
        gt_clip, amodal_masks = make_shape_clip(seed=40_000 + c, frames=30, size=96)
        synth = synthesize_pair(gt_clip, amodal_masks, occluder,
                                easy_config(), seed=88 + c)
        assert synth is not None

        isolations = [isolate_on_white(gt_clip.frames[i], amodal_masks[i])
                      for i in range(30)]
        windows = iter(plan_windows(30, cfg))

        def oracle_completer(frames, masks, _w=windows, _iso=isolations):
            start, end = next(_w)
            return _iso[start:end]

        visible = [Mask(amodal_masks[i].bits & ~synth.occluder_masks[i].bits)
                   for i in range(30)]
        out = stitch(synth.occluded, visible, oracle_completer, cfg)
        for i in range(30):
            assert np.array_equal(out.frames[i].pixels, isolations[i].pixels), \
                f"clip {c} frame {i} differs"
    _report("stitcher oracle (10 clips x 30 frames, bit-exact)")


# ---------------------------------------------------------------------------
# 6. Metric oracles
# ---------------------------------------------------------------------------

def _psnr_loop_oracle(a, b):
    total = 0.0
    count = 0
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            for ch in range(3):
                d = float(a[y, x, ch]) - float(b[y, x, ch])
                total += d * d
                count += 1
    mse = total / count
    return PSNR_CAP_DB if mse == 0 else 10.0 * math.log10(255.0 ** 2 / mse)


def _iou_loop_oracle(a, b):
    inter = union = 0
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            inter += bool(a[y, x]) and bool(b[y, x])
            union += bool(a[y, x]) or bool(b[y, x])
    return 1.0 if union == 0 else inter / union


def _ssim_window_oracle(a, b):
    half = 5
    kernel = np.empty((11, 11))
    for i in range(11):
        for j in range(11):
            kernel[i, j] = math.exp(-((i - half) ** 2 + (j - half) ** 2) / (2 * 1.5 ** 2))
    kernel /= kernel.sum()
    scores = []
    for ch in range(3):
        pa = a[:, :, ch].astype(np.float64)
        pb = b[:, :, ch].astype(np.float64)
        vals = []
        for wy in range(a.shape[0] - 10):
            for wx in range(a.shape[1] - 10):
                wa = pa[wy:wy + 11, wx:wx + 11]
                wb = pb[wy:wy + 11, wx:wx + 11]
                mu_x = (wa * kernel).sum()
                mu_y = (wb * kernel).sum()
                var_x = (wa * wa * kernel).sum() - mu_x ** 2
                var_y = (wb * wb * kernel).sum() - mu_y ** 2
                cov = (wa * wb * kernel).sum() - mu_x * mu_y
                num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
                den = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
                vals.append(num / den)
        scores.append(np.mean(vals))
    return float(np.mean(scores))


def test_acceptance_metric_oracles():
    """100 random 64x64 pairs vs naive loop oracles (PSNR 1e-9 dB, SSIM 1e-6,
    IoU exact) plus the fixed analytic cases."""
    rng = np.random.default_rng(2024)
    box = BBox(0, 0, 64, 64)
    for i in range(100):
        a = Frame(pixels=rng.integers(0, 256, (64, 64, 3), dtype=np.uint8))
        b = Frame(pixels=rng.integers(0, 256, (64, 64, 3), dtype=np.uint8))
        assert abs(psnr(a, b, box) - _psnr_loop_oracle(a.pixels, b.pixels)) < 1e-9
        ma = Mask(rng.random((64, 64)) < 0.5)
        mb = Mask(rng.random((64, 64)) < 0.5)
        assert iou(ma, mb) == _iou_loop_oracle(ma.bits, mb.bits)
        assert abs(ssim(a, b, box) - _ssim_window_oracle(a.pixels, b.pixels)) < 1e-6

    f = Frame(pixels=rng.integers(0, 256, (32, 32, 3), dtype=np.uint8))
    region = BBox(0, 0, 32, 32)
    assert psnr(f, f, region) == 99.0
    assert ssim(f, f, region) == pytest.approx(1.0, abs=1e-12)
    m = Mask(np.ones((32, 32), dtype=bool))
    assert iou(m, m) == 1.0
    black = Frame(pixels=np.zeros((32, 32, 3), dtype=np.uint8))
    white = Frame(pixels=np.full((32, 32, 3), 255, dtype=np.uint8))
    assert psnr(black, white, region) == 0.0
    _report("metric oracles (100 pairs + analytic cases)")


# ---------------------------------------------------------------------------
# 7. Amodal-check oracles
# ---------------------------------------------------------------------------

def _flood_fill_holes(bits):
    h, w = bits.shape
    seen = np.zeros_like(bits)
    stack = [(y, x) for y in range(h) for x in (0, w - 1) if not bits[y, x]]
    stack += [(y, x) for x in range(w) for y in (0, h - 1) if not bits[y, x]]
    for y, x in stack:
        seen[y, x] = True
    while stack:
        y, x = stack.pop()
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not bits[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                stack.append((ny, nx))
    holes = 0
    for y in range(h):
        for x in range(w):
            if not bits[y, x] and not seen[y, x]:
                holes += 1
                comp = [(y, x)]
                seen[y, x] = True
                while comp:
                    cy, cx = comp.pop()
                    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        ny, nx = cy + dy, cx + dx
                        if (0 <= ny < h and 0 <= nx < w and not bits[ny, nx]
                                and not seen[ny, nx]):
                            seen[ny, nx] = True
                            comp.append((ny, nx))
    return holes


def test_acceptance_amodal_check_oracles():
    """Hole counts vs flood fill on 200 random masks; boundary/area rules vs
    brute-force scans; donut -> 1 hole, solid -> 0."""
    rng = np.random.default_rng(606)
    cfg = CheckConfig(boundary_margin=2, min_area_fraction=0.1)
    for _ in range(200):
        bits = rng.random((24, 24)) < rng.uniform(0.35, 0.75)
        if not bits.any():
            bits[12, 12] = True
        m = Mask(bits)
        count, _ = hole_components(m)
        assert count == _flood_fill_holes(bits)

        # boundary: brute-force min distance scan
        best = None
        for y in range(24):
            for x in range(24):
                if bits[y, x]:
                    d = min(x, y, 23 - x, 23 - y)
                    best = d if best is None else min(best, d)
        res = check_boundary(m, cfg)
        assert res.measured == float(best) and res.passed == (best >= 2)

        # area: brute-force count
        n_set = sum(1 for y in range(24) for x in range(24) if bits[y, x])
        res = check_area(m, cfg)
        assert res.measured == n_set / 576
        assert res.passed == (n_set / 576 >= 0.1)

    solid = np.zeros((20, 20), dtype=bool)
    solid[5:15, 5:15] = True
    assert hole_components(Mask(solid))[0] == 0
    donut = solid.copy()
    donut[9:11, 9:11] = False
    assert hole_components(Mask(donut))[0] == 1
    _report("amodal-check oracles (200 masks + donut/solid)")


# ---------------------------------------------------------------------------
# 8. Determinism
# ---------------------------------------------------------------------------

def _tree_digest(root: Path) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def test_acceptance_pipeline_determinism(tmp_path):
    """Identical config and inputs give byte-identical manifests and images,
    twice each at worker counts 1 and 8."""
    src = tmp_path / "clips"
    src.mkdir()
    for i in range(10):
        clip, masks = make_shape_clip(seed=60_000 + i, frames=6, size=256)
        write_clip_dir(src, f"det{i:03d}", clip, masks)
    bank = write_occluder_bank(tmp_path / "banks", "generic", [11, 12, 13])

    digests = []
    for label, workers in (("w1a", 1), ("w1b", 1), ("w8a", 8), ("w8b", 8)):
        out = tmp_path / label
        cfg = PipelineConfig(
            root_seed=2468, strategy="hard",
            sources=(SourceSpec(path=str(src)),),
            occluder_banks={"generic": str(bank)},
            out_dir=str(out), worker_count=workers,
        )
        manifest = run_pipeline(cfg)
        assert manifest.clips, "determinism run synthesized nothing"
        digests.append(_tree_digest(out))
    assert digests[0] == digests[1] == digests[2] == digests[3]
    _report("pipeline determinism (workers 1 and 8, byte-identical)")


# ---------------------------------------------------------------------------
# 9. Throughput
# ---------------------------------------------------------------------------

def test_acceptance_throughput(tmp_path):
    """Full pipeline over 100 clips x 14 frames x 384x384 in under 120 s."""
    src = tmp_path / "clips"
    src.mkdir()
    for i in range(100):
        clip, masks = make_shape_clip(seed=70_000 + i, frames=14, size=384)
        write_clip_dir(src, f"tp{i:04d}", clip, masks)
    bank = write_occluder_bank(tmp_path / "banks", "generic", [21, 22, 23, 24])

    cfg = PipelineConfig(
        root_seed=1357, strategy="easy",
        sources=(SourceSpec(path=str(src)),),
        occluder_banks={"generic": str(bank)},
        out_dir=str(tmp_path / "out"), worker_count=1,
    )
    start = time.perf_counter()
    manifest = run_pipeline(cfg)
    elapsed = time.perf_counter() - start
    assert len(manifest.clips) + len(manifest.failures) == 100
    assert elapsed < 120.0, f"pipeline took {elapsed:.1f}s (budget 120s)"
    _report(f"throughput (100 clips in {elapsed:.1f}s < 120s)")


# ---------------------------------------------------------------------------
# 10. Review service
# ---------------------------------------------------------------------------

def test_acceptance_review_service(tmp_path):
    """20-decision trace via plain HTTP; crash replay at every log position
    equals the fold oracle; export equals the filter oracle."""
    src = tmp_path / "clips"
    src.mkdir()
    for i in range(6):
        clip, masks = make_shape_clip(seed=80_000 + i, frames=4, size=96)
        write_clip_dir(src, f"rev{i:03d}", clip, masks)
    bank = write_occluder_bank(tmp_path / "banks", "generic", [31, 32])
    out = tmp_path / "out"
    manifest = run_pipeline(PipelineConfig(
        root_seed=13, strategy="easy",
        sources=(SourceSpec(path=str(src)),),
        occluder_banks={"generic": str(bank)},
        out_dir=str(out)))

    log_path = tmp_path / "decisions.jsonl"
    state = ReviewState(manifest, out, log_path)
    client = TestClient(build_app_from_state(state))

    pending = [item["candidate_id"] for item in
               client.get("/api/candidates?status=pending&limit=100").json()["items"]]
    assert pending, "nothing pending to review"

    rng = np.random.default_rng(55)
    trace = []
    for i in range(20):
        cid = pending[int(rng.integers(0, len(pending)))]
        verdict = "accept" if rng.random() < 0.5 else "reject"
        r = client.post(f"/api/candidates/{cid}/decision",
                        json={"verdict": verdict, "reviewer": "acceptance",
                              "decision_id": f"acc-{i:02d}"})
        assert r.status_code == 200
        trace.append((cid, verdict))

    log_bytes = log_path.read_bytes()
    lines = log_bytes.decode().strip().split("\n")
    assert len(lines) == 20

    pos = 0
    cuts = [0]
    for line in lines:
        end = pos + len(line.encode()) + 1
        cuts.extend([end - 2, end])  # torn line, then clean cut
        pos = end
    for cut in cuts:
        trunc = tmp_path / "crash.jsonl"
        trunc.write_bytes(log_bytes[:cut])
        replayed = ReviewState(manifest, out, trunc)
        want = fold_decisions(read_decision_log(trunc))
        for cid in replayed.clips:
            base = replayed.clips[cid].verdict
            if base != "auto_reject" and cid in want:
                expected = ("human_accept" if want[cid].verdict == "accept"
                            else "human_reject")
            else:
                expected = base
            assert replayed.verdict_of(cid) == expected, f"cut={cut} cid={cid}"

    exported = client.get("/api/export?verdict=accepted").json()
    effective = {}
    for cid, verdict in trace:
        effective[cid] = verdict
    want_ids = sorted(cid for cid, v in effective.items() if v == "accept")
    assert [c["clip_id"] for c in exported["clips"]] == want_ids
    _report("review service (crash replay + export oracle over HTTP)")
