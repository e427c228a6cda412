"""
Terrain products from a synthetic DEM
=====================================

Fill, route and cut a stream network from a gullied valley, then compare
the two sub-watershed labelings.
"""

import numpy as np

from floodrisk.synthetic import generate, valley_scenario
from floodrisk.terrain import count_interior_sinks, derive_terrain

# 128 x 128 cells of 30 m with one metre of DEM noise
scene = generate(valley_scenario(128, seed=0))
dem = scene.dem
print(dem, "elevation", dem.cells.min().round(1), "-", dem.cells.max().round(1), "m")

# one call runs slope, fill, D8, accumulation, streams, distances and zones
tp = derive_terrain(dem, threshold_ha=66.7)
print("interior sinks before / after fill:", count_interior_sinks(dem), count_interior_sinks(tp.filled))
print("stream cutoff:", tp.stream_cutoff, "cells")

# Strahler levels present in the network
levels, counts = np.unique(tp.network.level.cells[tp.network.mask.cells == 1], return_counts=True)
print("stream cells per level:", dict(zip(levels.astype(int).tolist(), counts.tolist())))

# distance to the nearest stream of each level (inf when the level is absent)
for lv, d in tp.distances.items():
    med = np.median(d.cells)
    print(f"level {lv}:", f"median distance {med:.0f} m" if np.isfinite(med) else "absent")

# D8 zones follow stream links, MFD zones follow sinks of the raw surface
print("D8 zones:", int(tp.zones_d8.cells.max()), " MFD zones:", int(tp.zones_mfd.cells.max()))
