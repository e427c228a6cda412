"""Deterministic synthetic terrain for tests, demos and end-to-end runs.

``single_valley`` also produces companion land-use, hydro-lithology,
permanent-water and flood-truth layers so a whole sweep can be scored
without external data.  Flood truth marks the non-river cells whose
elevation lies below the ``flood_quantile`` quantile.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .indicators import (
    HYDRO_IMPERVIOUS,
    HYDRO_PERVIOUS,
    HYDRO_WATER,
    LU_BUILDING,
    LU_ROAD,
    LU_SOIL,
    LU_VEGETATION,
    LU_WATER,
)
from .raster import GridHeader, Kind, RasterGrid


GULLY_COUNT = 6
GULLY_DEPTH = 0.06


class Motif(str, Enum):
    TILTED_PLANE = "tilted_plane"
    SINGLE_VALLEY = "single_valley"
    TWIN_BOWL = "twin_bowl"
    BRANCHED_NETWORK = "branched_network"


@dataclass(frozen=True)
class SyntheticTerrainSpec:
    """Parameters of a synthetic scene.

    ``amplitude`` is the relief in metres, except for ``tilted_plane``
    where it is the rise per cell eastward.
    """

    nrows: int = 64
    ncols: int = 64
    motif: Motif = Motif.SINGLE_VALLEY
    amplitude: float = 200.0
    noise_sigma: float = 0.0
    seed: int = 0
    cellsize: float = 30.0
    flood_quantile: float = 0.2

    def __post_init__(self):
        if self.nrows < 1 or self.ncols < 1:
            raise ValueError(f"synthetic grid size must be positive, got {self.nrows}x{self.ncols}")
        object.__setattr__(self, "motif", Motif(self.motif))
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0 < self.flood_quantile < 1:
            raise ValueError("flood_quantile must lie in (0, 1)")

    @property
    def header(self):
        return GridHeader(self.ncols, self.nrows, 0.0, 0.0, self.cellsize)


@dataclass(frozen=True)
class SyntheticScene:
    dem: RasterGrid
    landuse: RasterGrid | None = None
    hydrolith: RasterGrid | None = None
    permanent_water: RasterGrid | None = None
    truth: RasterGrid | None = None

    def layers(self):
        """Non-empty layers keyed by file stem."""
        names = ("dem", "landuse", "hydrolith", "permanent_water", "truth")
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}


def _tilted_plane(spec, rows, cols):
    return spec.amplitude * cols.astype(float)


def _single_valley(spec, rows, cols):
    # south-draining main valley; side slopes cut by periodic gullies that
    # feed tributaries into the valley floor
    cc = (spec.ncols - 1) / 2
    across = np.abs(cols - cc) / max(cc, 1.0)
    down = rows / max(spec.nrows - 1, 1)
    floor = 2.0 + 0.25 * spec.amplitude * (1.0 - down)
    period = max(spec.nrows / GULLY_COUNT, 4.0)
    gullies = GULLY_DEPTH * np.minimum(4.0 * across, 1.0) * (1.0 - np.cos(2 * np.pi * rows / period)) / 2
    return floor + spec.amplitude * (across**1.2 + gullies)


def _twin_bowl(spec, rows, cols):
    rc = spec.nrows // 2
    c1 = spec.ncols // 4
    c2 = spec.ncols - 1 - spec.ncols // 4
    d1 = (rows - rc) ** 2 + (cols - c1) ** 2
    d2 = (rows - rc) ** 2 + (cols - c2) ** 2
    radius = max(spec.ncols / 4, 1.0)
    return spec.amplitude * np.minimum(d1, d2) / radius**2


def _segment_distance(rows, cols, p, q):
    """Distance to segment p-q and the fraction along it of the closest point."""
    pr, pc = p
    qr, qc = q
    vr, vc = qr - pr, qc - pc
    length2 = vr * vr + vc * vc
    t = np.clip(((rows - pr) * vr + (cols - pc) * vc) / length2, 0.0, 1.0)
    d = np.hypot(rows - (pr + t * vr), cols - (pc + t * vc))
    return d, t, np.sqrt(length2)


def _branched_network(spec, rows, cols):
    nr, nc = spec.nrows, spec.ncols
    outlet = (nr - 1, (nc - 1) / 2)
    junction = (nr // 2, (nc - 1) / 2)
    heads = ((0, nc // 4), (0, nc - 1 - nc // 4))
    d_trunk, t_trunk, l_trunk = _segment_distance(rows, cols, outlet, junction)
    best_d = d_trunk
    along = t_trunk * l_trunk
    for head in heads:
        d, t, length = _segment_distance(rows, cols, junction, head)
        closer = d < best_d
        best_d = np.where(closer, d, best_d)
        along = np.where(closer, l_trunk + t * length, along)
    gradient = 0.1 * spec.amplitude / max(nr, 1)
    return 2.0 + gradient * along + spec.amplitude * best_d / max(nc / 2, 1.0)


_SURFACES = {
    Motif.TILTED_PLANE: _tilted_plane,
    Motif.SINGLE_VALLEY: _single_valley,
    Motif.TWIN_BOWL: _twin_bowl,
    Motif.BRANCHED_NETWORK: _branched_network,
}


def _valley_companions(spec, dem, rng):
    nr, nc = spec.nrows, spec.ncols
    rows, cols = np.indices((nr, nc))
    cc = (nc - 1) / 2
    across = np.abs(cols - cc) / max(cc, 1.0)
    down = rows / max(nr - 1, 1)
    half_width = max(1, nc // 64) - 0.5
    river = np.abs(cols - cc) <= half_width

    landuse = np.full((nr, nc), LU_VEGETATION, dtype=float)
    landuse[rng.random((nr, nc)) < 0.15] = LU_SOIL
    town = (down > 0.45) & (across < 0.35) & (rng.random((nr, nc)) < 0.45)
    landuse[town] = LU_BUILDING
    road_col = int(round(cc + max(2, nc // 8)))
    landuse[:, min(road_col, nc - 1)] = LU_ROAD
    landuse[(2 * nr) // 3, :] = LU_ROAD
    landuse[river] = LU_WATER

    hydro = np.full((nr, nc), HYDRO_PERVIOUS, dtype=float)
    hydro[np.isin(landuse, (LU_ROAD, LU_BUILDING))] = HYDRO_IMPERVIOUS
    hydro[landuse == LU_WATER] = HYDRO_WATER

    permanent = river.astype(float)
    z = dem.cells
    land = ~river
    cutoff = np.quantile(z[land], spec.flood_quantile)
    truth = (land & (z <= cutoff)).astype(float)

    h = spec.header
    return (
        RasterGrid(h, landuse, Kind.CATEGORICAL),
        RasterGrid(h, hydro, Kind.CATEGORICAL),
        RasterGrid(h, permanent, Kind.CATEGORICAL),
        RasterGrid(h, truth, Kind.CATEGORICAL),
    )


def generate(spec):
    """Build the scene described by ``spec``; identical specs give identical grids."""
    rng = np.random.default_rng(spec.seed)
    rows, cols = np.indices((spec.nrows, spec.ncols))
    z = _SURFACES[spec.motif](spec, rows, cols)
    if spec.noise_sigma > 0:
        z = z + rng.normal(0.0, spec.noise_sigma, z.shape)
    dem = RasterGrid(spec.header, z, Kind.CONTINUOUS)
    if spec.motif is Motif.SINGLE_VALLEY:
        landuse, hydro, permanent, truth = _valley_companions(spec, dem, rng)
        return SyntheticScene(dem, landuse, hydro, permanent, truth)
    return SyntheticScene(dem)


def valley_scenario(size=128, seed=0, noise_sigma=1.0):
    """The reference end-to-end scene: a gullied 30 m valley with 1 m DEM noise."""
    return SyntheticTerrainSpec(
        nrows=size,
        ncols=size,
        motif=Motif.SINGLE_VALLEY,
        amplitude=200.0,
        noise_sigma=noise_sigma,
        seed=seed,
        cellsize=30.0,
    )
