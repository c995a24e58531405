"""Human review service for synthesized candidates.

Serves pending clips with optional mask-tinted frame renders, records
accept/reject decisions into an append-only fsynced JSONL log, and exports
manifests filtered to the reviewers' accepts. State is always the fold of
the log over the loaded manifest: a restart replays the log and lands in
exactly the pre-crash state. The newest decision per candidate wins, so a
reviewer can correct an earlier mistake; history is never rewritten.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .core import (
    DatasetManifest,
    Frame,
    frame_from_png,
    frame_to_png,
    manifest_from_json,
    mask_from_png,
)
from .pipeline import compute_shards

DECISION_VERDICTS = ("accept", "reject")
REASON_CODES = ("occluded", "bad_mask", "other")

MASK_TINT = np.array([255, 64, 64], dtype=np.float64)  # overlay color
MASK_TINT_ALPHA = 0.45


def compute_overlay_png(frame_png: bytes, mask_png: bytes) -> bytes:
    """Tint the mask's set bits semi-transparently; everything else untouched."""
    frame = frame_from_png(frame_png)
    mask = mask_from_png(mask_png)
    out = frame.pixels.copy()
    tinted = ((1.0 - MASK_TINT_ALPHA) * frame.pixels[mask.bits].astype(np.float64)
              + MASK_TINT_ALPHA * MASK_TINT)
    out[mask.bits] = np.clip(np.floor(tinted + 0.5), 0, 255).astype(np.uint8)
    return frame_to_png(Frame(pixels=out))


@dataclass(frozen=True)
class Decision:
    candidate_id: str
    verdict: str  # accept | reject
    reviewer: str
    timestamp: float
    reason_code: str | None = None
    reason_text: str | None = None
    decision_id: str | None = None  # idempotency key for client replays

    def to_dict(self) -> dict:
        d = {
            "candidate_id": self.candidate_id,
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }
        if self.reason_code is not None:
            d["reason_code"] = self.reason_code
        if self.reason_text is not None:
            d["reason_text"] = self.reason_text
        if self.decision_id is not None:
            d["decision_id"] = self.decision_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Decision":
        return cls(
            candidate_id=d["candidate_id"],
            verdict=d["verdict"],
            reviewer=d.get("reviewer", ""),
            timestamp=float(d["timestamp"]),
            reason_code=d.get("reason_code"),
            reason_text=d.get("reason_text"),
            decision_id=d.get("decision_id"),
        )


def read_decision_log(path: str | Path) -> list[Decision]:
    """Parse a JSONL decision log; a torn trailing line (crash) is dropped."""
    decisions = []
    p = Path(path)
    if not p.exists():
        return decisions
    with open(p, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                decisions.append(Decision.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError):
                break  # torn write at the tail; everything before it stands
    return decisions


def fold_decisions(decisions: list[Decision]) -> dict[str, Decision]:
    """Latest decision per candidate (the effective verdicts)."""
    effective: dict[str, Decision] = {}
    for d in decisions:
        effective[d.candidate_id] = d
    return effective


class ReviewState:
    """Manifest plus decision log, with a single serialized writer."""

    def __init__(self, manifest: DatasetManifest, manifest_dir: Path, log_path: Path):
        self.manifest = manifest
        self.manifest_dir = manifest_dir
        self.log_path = log_path
        self.clips = {c.clip_id: c for c in manifest.clips}
        self._lock = threading.Lock()
        self.decisions: list[Decision] = read_decision_log(log_path)
        self._seen_ids = {d.decision_id for d in self.decisions if d.decision_id}
        self.effective = fold_decisions(self.decisions)

    def verdict_of(self, clip_id: str) -> str:
        clip = self.clips[clip_id]
        if clip.verdict == "auto_reject":
            return "auto_reject"
        decided = self.effective.get(clip_id)
        if decided is None:
            return clip.verdict
        return "human_accept" if decided.verdict == "accept" else "human_reject"

    def revision_of(self, clip_id: str) -> int:
        return sum(1 for d in self.decisions if d.candidate_id == clip_id)

    def pending(self) -> list[str]:
        return [cid for cid in sorted(self.clips)
                if self.verdict_of(cid) == "pending"]

    def record(self, decision: Decision, expected_revision: int | None = None) -> str:
        """Append one decision durably; returns the new effective verdict.

        Raises ConflictError when the caller's expected_revision is stale.
        Replays with an already-seen decision_id are acknowledged without a
        second log entry.
        """
        with self._lock:
            if decision.decision_id and decision.decision_id in self._seen_ids:
                return self.verdict_of(decision.candidate_id)
            if expected_revision is not None:
                current = self.revision_of(decision.candidate_id)
                if current != expected_revision:
                    raise ConflictError(
                        f"revision {expected_revision} is stale (now {current})")
            line = json.dumps(decision.to_dict(), sort_keys=True)
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.decisions.append(decision)
            if decision.decision_id:
                self._seen_ids.add(decision.decision_id)
            self.effective[decision.candidate_id] = decision
            return self.verdict_of(decision.candidate_id)

    def export(self, verdict: str = "accepted") -> DatasetManifest:
        """Manifest filtered to candidates with the requested effective verdict."""
        wanted = {
            "accepted": ("human_accept",),
            "rejected": ("human_reject",),
            "pending": ("pending",),
        }.get(verdict)
        if wanted is None:
            raise ValueError(f"unknown export verdict {verdict!r}")
        kept = []
        for cid in sorted(self.clips):
            effective = self.verdict_of(cid)
            if effective in wanted:
                kept.append(self.clips[cid].with_verdict(effective)
                            if effective != self.clips[cid].verdict
                            else self.clips[cid])
        shard_size = 100
        if self.manifest.shards:
            shard_size = max(b - a for _, a, b in self.manifest.shards)
        return DatasetManifest(
            version=self.manifest.version,
            clips=tuple(kept),
            difficulty=self.manifest.difficulty,
            shards=compute_shards(len(kept), shard_size),
            config=self.manifest.config,
        )


class ConflictError(Exception):
    pass


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

class DecisionBody(BaseModel):
    verdict: str
    reviewer: str = "anonymous"
    reason_code: str | None = None
    reason_text: str | None = None
    decision_id: str | None = None
    expected_revision: int | None = Field(default=None, ge=0)


def build_app(manifest_path: str | Path, log_path: str | Path,
              static_dir: str | Path | None = None) -> FastAPI:
    manifest_path = Path(manifest_path)
    manifest = manifest_from_json(manifest_path.read_text(encoding="utf-8"))
    state = ReviewState(manifest, manifest_path.parent, Path(log_path))
    return build_app_from_state(state, static_dir)


def build_app_from_state(state: ReviewState,
                         static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="occlusionkit review service")
    app.state.review = state

    @app.get("/api/candidates")
    def list_candidates(status: str = "pending", limit: int = Query(50, ge=1, le=1000),
                        after: str | None = None):
        if status != "pending":
            raise HTTPException(status_code=400, detail="only status=pending is queryable")
        pending = state.pending()
        if after is not None:
            pending = [cid for cid in pending if cid > after]
        page = pending[:limit]
        items = []
        for cid in page:
            clip = state.clips[cid]
            items.append({
                "candidate_id": cid,
                "frame_count": len(clip.track),
                "strategy": clip.strategy,
                "occlusion_rates": list(clip.occlusion_rates),
                "checks": clip.checks or {},
                "thumbnail_url": f"/api/candidates/{cid}/frames/0?overlay=none",
            })
        next_token = page[-1] if len(pending) > limit else None
        return {"items": items, "next": next_token}

    @app.get("/api/candidates/{candidate_id}/frames/{index}")
    def get_frame(candidate_id: str, index: int, overlay: str = "none",
                  view: str = "gt"):
        if candidate_id not in state.clips:
            raise HTTPException(status_code=404, detail="unknown candidate")
        if view not in ("gt", "occluded"):
            raise HTTPException(status_code=400, detail="view must be gt or occluded")
        frame_path = state.manifest_dir / candidate_id / view / f"{index:04d}.png"
        if not frame_path.exists():
            raise HTTPException(status_code=404, detail="unknown frame")
        if overlay == "none":
            return Response(content=frame_path.read_bytes(), media_type="image/png")
        if overlay != "mask":
            raise HTTPException(status_code=400, detail="overlay must be none or mask")
        mask_path = state.manifest_dir / candidate_id / "gt_masks" / f"{index:04d}.png"
        if not mask_path.exists():
            raise HTTPException(status_code=404, detail="mask missing for frame")
        png = compute_overlay_png(frame_path.read_bytes(), mask_path.read_bytes())
        return Response(content=png, media_type="image/png")

    @app.post("/api/candidates/{candidate_id}/decision")
    def post_decision(candidate_id: str, body: DecisionBody):
        if candidate_id not in state.clips:
            raise HTTPException(status_code=404, detail="unknown candidate")
        if state.clips[candidate_id].verdict == "auto_reject":
            raise HTTPException(status_code=404, detail="candidate was auto-rejected")
        if body.verdict not in DECISION_VERDICTS:
            raise HTTPException(status_code=400, detail="verdict must be accept or reject")
        if body.reason_code is not None and body.reason_code not in REASON_CODES:
            raise HTTPException(status_code=400, detail=f"reason must be one of {REASON_CODES}")
        decision = Decision(
            candidate_id=candidate_id,
            verdict=body.verdict,
            reviewer=body.reviewer,
            timestamp=time.time(),
            reason_code=body.reason_code,
            reason_text=body.reason_text,
            decision_id=body.decision_id,
        )
        try:
            verdict = state.record(decision, expected_revision=body.expected_revision)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "candidate_id": candidate_id,
            "verdict": verdict,
            "revision": state.revision_of(candidate_id),
        }

    @app.get("/api/export")
    def export(verdict: str = "accepted"):
        try:
            manifest = state.export(verdict)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return JSONResponse(content=manifest.to_dict())

    @app.get("/api/progress")
    def progress():
        total = len(state.clips)
        counts: dict[str, int] = {}
        for cid in state.clips:
            v = state.verdict_of(cid)
            counts[v] = counts.get(v, 0) + 1
        return {"total": total, "verdicts": counts}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
