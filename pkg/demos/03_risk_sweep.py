"""
Flood-risk maps across the judgment sweep
=========================================

Rank the five criteria, compute the flood-risk index for every model
variant and project, slice it into five levels and watch how much the
High + Very High share moves between projects.
"""

import numpy as np

from floodrisk.ahp import weights_table
from floodrisk.indicators import build_stack
from floodrisk.risk import LEVEL_NAMES, ModelVariant, classify_fri, compute_fri
from floodrisk.synthetic import generate, valley_scenario
from floodrisk.terrain import derive_terrain
from floodrisk.validation import high_ratio

scene = generate(valley_scenario(128, seed=0))
tp = derive_terrain(scene.dem)
stack = build_stack(tp, scene.dem, scene.landuse, scene.hydrolith, scene.permanent_water)

# one project, one variant: the five classes and their sizes
weights = weights_table()[0][1]
product = classify_fri(compute_fri(stack, weights, ModelVariant.MFD_RC, tp.zones_mfd, tp.zones_d8))
for name, n in zip(LEVEL_NAMES, product.level_counts()):
    print(f"{name:10s} {n:6d}")
print("breaks", np.round(product.breaks, 3))

# every variant over all 48 projects
table = weights_table()
for variant in ModelVariant:
    highs = [high_ratio(classify_fri(compute_fri(stack, w, variant, tp.zones_mfd, tp.zones_d8))) for _, w in table]
    print(f"{variant.value:9s} high share {min(highs):.3f} - {max(highs):.3f}  range {max(highs) - min(highs):.4f}")
