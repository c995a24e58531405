"""Batch pipeline: ingest candidate clips, screen, synthesize, shard, report.

Clips are processed in sorted clip_id order with per-clip seeds derived from
the root seed, so reruns produce byte-identical outputs at any worker count.
The seed derivation is fixed for all time:

    clip_seed = splitmix64(root_seed XOR first-8-bytes-big-endian(sha256(clip_id)))

Auto-rejected candidates stay in the manifest (empty track, verdict
``auto_reject``) so review tooling can audit them; placement failures are
recorded in the manifest's failure list and produce no outputs.
"""

from __future__ import annotations

import hashlib
import logging
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checks import CheckConfig, run_amodal_check
from .core import (
    ClipManifest,
    DatasetManifest,
    OccluderAsset,
    OccluderTrack,
    VideoClip,
    load_depth_png,
    load_frame_png,
    load_mask_png,
    manifest_to_json,
    save_frame_png,
    save_mask_png,
)
from .errors import MalformedFileError, ToolkitError
from .overlay import StrategyConfig, config_for, synthesize_pair

log = logging.getLogger(__name__)

MANIFEST_VERSION = "1"

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; the stated per-clip seed scrambler."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_clip_seed(root_seed: int, clip_id: str) -> int:
    digest = hashlib.sha256(clip_id.encode("utf-8")).digest()
    clip_hash = int.from_bytes(digest[:8], "big")
    return splitmix64((root_seed & _MASK64) ^ clip_hash)


@dataclass(frozen=True)
class SourceSpec:
    path: str
    domain: str = "generic"  # driving sources draw from the driving bank


@dataclass(frozen=True)
class PipelineConfig:
    root_seed: int
    strategy: str
    sources: tuple[SourceSpec, ...]
    occluder_banks: dict[str, str]       # bank name -> directory of RGBA PNGs
    out_dir: str
    checks: CheckConfig = field(default_factory=CheckConfig)
    strategy_params: StrategyConfig | None = None
    shard_size: int = 100
    worker_count: int = 1

    def __post_init__(self):
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if "generic" not in self.occluder_banks:
            raise ValueError("an occluder bank named 'generic' is required")
        if self.strategy_params is None:
            object.__setattr__(self, "strategy_params", config_for(self.strategy))

    def to_dict(self) -> dict:
        return {
            "root_seed": int(self.root_seed),
            "strategy": self.strategy,
            "sources": [{"path": s.path, "domain": s.domain} for s in self.sources],
            "occluder_banks": dict(sorted(self.occluder_banks.items())),
            "out_dir": self.out_dir,
            "checks": self.checks.to_dict(),
            "strategy_params": self.strategy_params.to_dict(),
            "shard_size": self.shard_size,
            "worker_count": self.worker_count,
        }

    def reproducibility_dict(self) -> dict:
        """The data-defining subset embedded in manifests.

        Excludes out_dir and worker_count so reruns into another directory or
        at another parallelism produce byte-identical manifests.
        """
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("worker_count")
        return d


def load_config_toml(path: str | Path) -> PipelineConfig:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    checks = CheckConfig(**raw.get("checks", {}))
    sp_raw = raw.get("strategy_params")
    strategy = raw["strategy"]
    if sp_raw is not None:
        sp_raw = dict(sp_raw)
        for key in ("rate_range", "scale_range"):
            if key in sp_raw:
                sp_raw[key] = tuple(sp_raw[key])
        strategy_params = config_for(strategy, **sp_raw)
    else:
        strategy_params = None
    sources = tuple(SourceSpec(path=s["path"], domain=s.get("domain", "generic"))
                    for s in raw.get("sources", ()))
    return PipelineConfig(
        root_seed=int(raw["root_seed"]),
        strategy=strategy,
        sources=sources,
        occluder_banks=dict(raw["occluder_banks"]),
        out_dir=raw["out_dir"],
        checks=checks,
        strategy_params=strategy_params,
        shard_size=int(raw.get("shard_size", 100)),
        worker_count=int(raw.get("worker_count", 1)),
    )


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateClip:
    clip_id: str
    frame_paths: tuple[str, ...]
    mask_paths: tuple[str, ...]
    depth_paths: tuple[str, ...] | None
    domain: str = "generic"


def _png_dimensions(path: Path) -> tuple[int, int]:
    """(width, height) from the IHDR chunk, without decoding pixel data."""
    with open(path, "rb") as fh:
        head = fh.read(26)
    if len(head) < 26 or head[:8] != b"\x89PNG\r\n\x1a\n" or head[12:16] != b"IHDR":
        raise MalformedFileError(f"{path} is not a PNG", offset=0)
    w, h = struct.unpack(">II", head[16:24])
    return int(w), int(h)


def _numbered_pngs(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix == ".png")


def ingest(sources: tuple[SourceSpec, ...] | list[SourceSpec]) -> list[CandidateClip]:
    """Scan clip_id/{frames,masks[,depth]}/NNNN.png trees into candidates.

    Malformed clips are logged and skipped; an unreadable source directory is
    fatal. Candidates come back sorted by clip_id.
    """
    candidates: dict[str, CandidateClip] = {}
    for source in sources:
        root = Path(source.path)
        if not root.is_dir():
            raise ToolkitError(f"source directory not readable: {root}")
        for clip_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            clip_id = clip_dir.name
            if clip_id in candidates:
                log.warning("skip %s: duplicate clip_id across sources", clip_id)
                continue
            frames_dir = clip_dir / "frames"
            masks_dir = clip_dir / "masks"
            if not frames_dir.is_dir() or not masks_dir.is_dir():
                log.warning("skip %s: missing frames/ or masks/", clip_id)
                continue
            frames = _numbered_pngs(frames_dir)
            masks = _numbered_pngs(masks_dir)
            if not frames or [p.name for p in frames] != [p.name for p in masks]:
                log.warning("skip %s: frame/mask file lists disagree", clip_id)
                continue
            try:
                dims = {_png_dimensions(p) for p in frames}
                dims |= {_png_dimensions(p) for p in masks}
            except MalformedFileError as exc:
                log.warning("skip %s: %s", clip_id, exc)
                continue
            if len(dims) != 1:
                log.warning("skip %s: mask/frame dimension mismatch", clip_id)
                continue
            depth_dir = clip_dir / "depth"
            depth_paths = None
            if depth_dir.is_dir():
                depths = _numbered_pngs(depth_dir)
                if [p.name for p in depths] == [p.name for p in frames]:
                    depth_paths = tuple(str(p) for p in depths)
                else:
                    log.warning("%s: depth/ present but incomplete; ignoring depth", clip_id)
            candidates[clip_id] = CandidateClip(
                clip_id=clip_id,
                frame_paths=tuple(str(p) for p in frames),
                mask_paths=tuple(str(p) for p in masks),
                depth_paths=depth_paths,
                domain=source.domain,
            )
    return [candidates[k] for k in sorted(candidates)]


def list_bank(bank_dir: str | Path) -> list[str]:
    root = Path(bank_dir)
    if not root.is_dir():
        raise ToolkitError(f"occluder bank not readable: {root}")
    paths = sorted(str(p) for p in root.iterdir() if p.suffix == ".png")
    if not paths:
        raise ToolkitError(f"occluder bank {root} holds no PNGs")
    return paths


def load_occluder(path: str | Path, bank: str) -> OccluderAsset:
    frame = load_frame_png(path)
    if frame.alpha is None:
        raise MalformedFileError(f"occluder {path} has no alpha channel")
    rgba = np.dstack([frame.pixels, frame.alpha[:, :, None]])
    return OccluderAsset.from_rgba(f"{bank}/{Path(path).name}", rgba, source_bank=bank)


# ---------------------------------------------------------------------------
# Per-clip processing (also the worker-pool entry point)
# ---------------------------------------------------------------------------

def _empty_track_manifest(candidate, seed, strategy, verdict, reasons, checks) -> ClipManifest:
    return ClipManifest(
        clip_id=candidate.clip_id,
        strategy=strategy,
        occluder_id="",
        track=OccluderTrack(positions=np.empty((0, 2)), scales=np.empty(0)),
        occlusion_rates=(),
        feather_radius=0,
        rng_seed=seed,
        verdict=verdict,
        reject_reasons=tuple(reasons),
        checks=checks,
    )


def process_clip(args: tuple) -> tuple[dict | None, tuple[str, str] | None]:
    """Screen and synthesize one candidate; returns (clip manifest dict, failure).

    Module-level so a process pool can pickle it. Writes this clip's outputs
    under out_dir/<clip_id>/ and returns the manifest as a plain dict.
    """
    (candidate, cfg_checks, strategy, strategy_params, seed, bank_paths,
     bank_name, out_dir) = args
    try:
        frames = [load_frame_png(p) for p in candidate.frame_paths]
        masks = [load_mask_png(p) for p in candidate.mask_paths]
        clip = VideoClip(frames=tuple(frames))
        for i, m in enumerate(masks):
            if (m.height, m.width) != (clip.height, clip.width):
                return None, (candidate.clip_id, f"mask {i} dimension mismatch")
        depths = None
        if candidate.depth_paths:
            depths = [load_depth_png(p) for p in candidate.depth_paths]

        report = run_amodal_check(masks, depths, cfg_checks)
        measurements = report.measurements()
        if report.verdict == "auto_reject":
            manifest = _empty_track_manifest(
                candidate, seed, strategy, "auto_reject",
                report.reject_reasons, measurements)
            return manifest.to_dict(), None

        rng = np.random.default_rng(np.uint64(seed))
        occ_path = bank_paths[int(rng.integers(0, len(bank_paths)))]
        occluder = load_occluder(occ_path, bank_name)
        # a fresh generator for synthesis keeps placement independent of how
        # the occluder was chosen
        result = synthesize_pair(clip, masks, occluder, strategy_params,
                                 seed=splitmix64(seed), clip_id=candidate.clip_id)
        if result is None:
            return None, (candidate.clip_id, "no valid placement within budget")

        clip_out = Path(out_dir) / candidate.clip_id
        for sub in ("occluded", "gt", "gt_masks", "occluder_masks"):
            (clip_out / sub).mkdir(parents=True, exist_ok=True)
        for i in range(len(clip)):
            save_frame_png(clip_out / "occluded" / f"{i:04d}.png", result.occluded.frames[i])
            save_frame_png(clip_out / "gt" / f"{i:04d}.png", result.gt.frames[i])
            save_mask_png(clip_out / "gt_masks" / f"{i:04d}.png", result.gt_masks[i])
            save_mask_png(clip_out / "occluder_masks" / f"{i:04d}.png",
                          result.occluder_masks[i])
        manifest = ClipManifest(
            clip_id=result.manifest.clip_id,
            strategy=result.manifest.strategy,
            occluder_id=result.manifest.occluder_id,
            track=result.manifest.track,
            occlusion_rates=result.manifest.occlusion_rates,
            feather_radius=result.manifest.feather_radius,
            rng_seed=seed,
            verdict="pending",
            checks=measurements,
        )
        _atomic_write(clip_out / "manifest.json", manifest_to_json(manifest))
        return manifest.to_dict(), None
    except ToolkitError as exc:
        return None, (candidate.clip_id, str(exc))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def compute_shards(n_clips: int, shard_size: int) -> tuple[tuple[str, int, int], ...]:
    shards = []
    for j, start in enumerate(range(0, n_clips, shard_size)):
        shards.append((f"shard-{j:05d}", start, min(start + shard_size, n_clips)))
    return tuple(shards)


def run_pipeline(cfg: PipelineConfig) -> DatasetManifest:
    """Ingest, screen, synthesize, and emit a sharded dataset manifest."""
    candidates = ingest(cfg.sources)
    log.info("ingested %d candidates", len(candidates))

    banks = {name: list_bank(path) for name, path in cfg.occluder_banks.items()}
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = []
    for cand in candidates:
        bank_name = cand.domain if cand.domain in banks else "generic"
        jobs.append((
            cand, cfg.checks, cfg.strategy, cfg.strategy_params,
            derive_clip_seed(cfg.root_seed, cand.clip_id),
            tuple(banks[bank_name]), bank_name, str(out_dir),
        ))

    if cfg.worker_count == 1:
        outcomes = [process_clip(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.worker_count) as pool:
            outcomes = list(pool.map(process_clip, jobs, chunksize=1))

    clips = []
    failures = []
    for manifest_dict, failure in outcomes:
        if manifest_dict is not None:
            clips.append(ClipManifest.from_dict(manifest_dict))
        if failure is not None:
            failures.append(failure)
            log.warning("clip %s failed: %s", failure[0], failure[1])

    clips.sort(key=lambda c: c.clip_id)
    manifest = DatasetManifest(
        version=MANIFEST_VERSION,
        clips=tuple(clips),
        difficulty=cfg.strategy,
        shards=compute_shards(len(clips), cfg.shard_size),
        config=cfg.reproducibility_dict(),
        failures=tuple(sorted(failures)),
    )
    _atomic_write(out_dir / "manifest.json", manifest_to_json(manifest))
    return manifest


# ---------------------------------------------------------------------------
# Reporting and re-sharding
# ---------------------------------------------------------------------------

RATE_HISTOGRAM_BINS = 20


def stats(manifest: DatasetManifest) -> dict:
    """Distribution report: rates, strategies, verdicts, reject reasons, banks."""
    rates = [r for c in manifest.clips for r in c.occlusion_rates]
    counts, edges = np.histogram(rates, bins=RATE_HISTOGRAM_BINS, range=(0.0, 1.0))
    strategy_counts: dict[str, int] = {}
    verdict_counts: dict[str, int] = {}
    reason_counts: dict[str, int] = {}
    bank_usage: dict[str, int] = {}
    for c in manifest.clips:
        strategy_counts[c.strategy] = strategy_counts.get(c.strategy, 0) + 1
        verdict_counts[c.verdict] = verdict_counts.get(c.verdict, 0) + 1
        for r in c.reject_reasons:
            reason_counts[r] = reason_counts.get(r, 0) + 1
        if c.occluder_id:
            bank = c.occluder_id.split("/", 1)[0]
            bank_usage[bank] = bank_usage.get(bank, 0) + 1
    return {
        "clip_count": len(manifest.clips),
        "failure_count": len(manifest.failures),
        "frame_rate_count": len(rates),
        "rate_histogram": {
            "bin_edges": [float(e) for e in edges],
            "counts": [int(v) for v in counts],
        },
        "strategy_counts": strategy_counts,
        "verdict_counts": verdict_counts,
        "reject_reason_counts": reason_counts,
        "occluder_bank_usage": bank_usage,
    }


def reshard(manifest: DatasetManifest, shard_size: int) -> DatasetManifest:
    return DatasetManifest(
        version=manifest.version,
        clips=manifest.clips,
        difficulty=manifest.difficulty,
        shards=compute_shards(len(manifest.clips), shard_size),
        config=manifest.config,
        failures=manifest.failures,
    )
