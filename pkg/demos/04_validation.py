"""
Scoring risk maps against flood truth
=====================================

Compare High + Very High cells with a flood mask using the correct and
fit ratios, then summarise their spread over the sweep.
"""

from floodrisk.ahp import weights_table
from floodrisk.indicators import build_stack
from floodrisk.risk import ModelVariant, classify_fri, compute_fri
from floodrisk.synthetic import generate, valley_scenario
from floodrisk.terrain import derive_terrain
from floodrisk.validation import FloodMask, level_distribution, positive_mask, score, sweep_stability

scene = generate(valley_scenario(128, seed=0, noise_sigma=2.0))
tp = derive_terrain(scene.dem)
stack = build_stack(tp, scene.dem, scene.landuse, scene.hydrolith, scene.permanent_water)
mask = FloodMask(scene.truth, scene.permanent_water)

per_variant = {}
for variant in (ModelVariant.PIXEL_AHP, ModelVariant.MFD_RC, ModelVariant.D8_RC):
    per_variant[variant.value] = [
        score(positive_mask(classify_fri(compute_fri(stack, w, variant, tp.zones_mfd, tp.zones_d8))), mask)
        for _, w in weights_table()
    ]

# spread of the two ratios across the 48 projects
report = sweep_stability(per_variant)
for row in report.rows:
    print(f"{row.variant:9s} {row.metric:7s} mean {row.mean:6.2f}  range {row.range:6.2f}")
print("most stable correct ratio:", report.most_stable("correct"))

# how the risk levels spread over the largest MFD basins for project 1
product = classify_fri(compute_fri(stack, weights_table()[0][1], ModelVariant.MFD_RC, tp.zones_mfd, tp.zones_d8))
rows = level_distribution(product, tp.zones_mfd)
for r in rows[:10]:
    print(f"basin {r.basin:3d} level {r.level} ratio {r.ratio:.3f}")
