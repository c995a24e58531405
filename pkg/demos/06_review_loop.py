"""Run the human review loop end to end, in process.

Builds a small dataset with the batch pipeline, then drives the review
service the way the browser UI would: list pending candidates, fetch an
overlay render, record decisions, and export the accepted manifest. The
decision log survives restarts; re-opening the state replays it.
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from occlusionkit.pipeline import PipelineConfig, SourceSpec, run_pipeline
from occlusionkit.review import ReviewState, build_app_from_state
from occlusionkit.synthdata import make_shape_clip, write_clip_dir, write_occluder_bank

work = Path(tempfile.mkdtemp(prefix="review-demo-"))
src = work / "clips"
src.mkdir()
for i in range(5):
    clip, masks = make_shape_clip(seed=100 + i, frames=4, size=128)
    write_clip_dir(src, f"cand{i:02d}", clip, masks)
bank = write_occluder_bank(work / "banks", "generic", [1, 2])

out = work / "dataset"
manifest = run_pipeline(PipelineConfig(
    root_seed=1, strategy="easy",
    sources=(SourceSpec(path=str(src)),),
    occluder_banks={"generic": str(bank)},
    out_dir=str(out)))
print(f"pipeline: {len(manifest.clips)} clips "
      f"({sum(c.verdict == 'pending' for c in manifest.clips)} pending review)")

state = ReviewState(manifest, out, work / "decisions.jsonl")
client = TestClient(build_app_from_state(state))

page = client.get("/api/candidates?status=pending&limit=10").json()
print(f"review queue: {[item['candidate_id'] for item in page['items']]}")

first = page["items"][0]["candidate_id"]
overlay = client.get(f"/api/candidates/{first}/frames/0?overlay=mask")
print(f"overlay render for {first}: {len(overlay.content)} bytes of PNG")

for i, item in enumerate(page["items"]):
    verdict = "accept" if i % 2 == 0 else "reject"
    r = client.post(f"/api/candidates/{item['candidate_id']}/decision",
                    json={"verdict": verdict, "reviewer": "demo",
                          "reason_code": None if verdict == "accept" else "bad_mask"})
    print(f"  {item['candidate_id']}: {verdict} -> {r.json()['verdict']}")

accepted = client.get("/api/export?verdict=accepted").json()
print(f"exported accepted manifest: {[c['clip_id'] for c in accepted['clips']]}")

# restart: state is the fold of the log
replayed = ReviewState(manifest, out, work / "decisions.jsonl")
assert [c.clip_id for c in replayed.export("accepted").clips] == \
    [c["clip_id"] for c in accepted["clips"]]
print("restart replayed the decision log to the identical state")
print(f"(scratch dir: {work})")
