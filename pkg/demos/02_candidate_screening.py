"""Screen candidate masks with the amodal-quality heuristics.

Builds three candidates: a clean interior object, one touching the image
border, and one riddled with holes, then shows which rules fire.
"""

import numpy as np

from occlusionkit.checks import CheckConfig, run_amodal_check
from occlusionkit.core import DepthMap, Mask

cfg = CheckConfig()
print("thresholds:", cfg.to_dict())


def describe(name, masks, depths=None):
    report = run_amodal_check(masks, depths, cfg)
    print(f"\n{name}: verdict={report.verdict} reasons={list(report.reject_reasons)}")
    for rule, value in sorted(report.measurements().items()):
        print(f"  {rule}: worst measured {value:.4f}")


clean = np.zeros((128, 128), dtype=bool)
clean[40:90, 30:100] = True
describe("clean object", [Mask(clean)] * 3)

touching = clean.copy()
touching[0:40, 60] = True  # a sliver reaching the top edge
describe("touches the border", [Mask(touching)])

holey = clean.copy()
rng = np.random.default_rng(1)
for _ in range(8):
    y, x = rng.integers(45, 85), rng.integers(35, 95)
    holey[y:y + 2, x:x + 2] = False
describe("hole-riddled segmentation", [Mask(holey)])

# depth rule: same mask, background plane closer than the object
depth = np.full((128, 128), 5.0)
depth[clean] = 5.0
depth[~clean] = 1.0  # everything around is closer
describe("object behind its surroundings", [Mask(clean)], [DepthMap(depth)])

print("\nnote: nothing auto-passes; survivors stay pending for human review")
