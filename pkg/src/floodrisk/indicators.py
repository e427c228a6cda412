"""Ranking raw layers into the five flood-risk criteria.

Slope and elevation use fixed class bounds; interval ends are closed on
the right, so 2 degrees falls in the (0, 2] class.  Distance from streams
is ranked per stream level and the best (highest) rank over levels wins.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ClassificationError, DomainError
from .raster import Kind, RasterGrid, require_aligned


class Indicator(str, Enum):
    SLOPE = "Slope"
    ELEVATION = "Elevation"
    DIST_STREAMS = "DistStreams"
    HYDRO_LITH = "HydroLith"
    LAND_USE = "LandUse"

    @property
    def converging_related(self):
        return self in (Indicator.SLOPE, Indicator.DIST_STREAMS)

    @property
    def legal_ranks(self):
        return LEGAL_RANKS[self]


INDICATOR_ORDER = tuple(Indicator)

LEGAL_RANKS = {
    Indicator.SLOPE: frozenset(range(0, 6)),
    Indicator.ELEVATION: frozenset(range(1, 6)),
    Indicator.DIST_STREAMS: frozenset(range(0, 6)),
    Indicator.HYDRO_LITH: frozenset({1, 3, 4}),
    Indicator.LAND_USE: frozenset(range(1, 6)),
}

# Category codes used by input rasters.
HYDRO_WATER, HYDRO_IMPERVIOUS, HYDRO_PERVIOUS = 1, 2, 3
LU_WATER, LU_ROAD, LU_BUILDING, LU_SOIL, LU_VEGETATION = 1, 2, 3, 4, 5

HYDROLITH_RANKS = {HYDRO_WATER: 4, HYDRO_IMPERVIOUS: 3, HYDRO_PERVIOUS: 1}
LANDUSE_RANKS = {LU_WATER: 5, LU_ROAD: 4, LU_BUILDING: 3, LU_SOIL: 2, LU_VEGETATION: 1}

# (upper bound inclusive, rank), scanned in order; values above the last bound
# take the trailing rank.
SLOPE_CLASSES = ((0.0, 5), (2.0, 4), (6.0, 3), (12.0, 2), (20.0, 1))
SLOPE_ABOVE = 0
ELEVATION_CLASSES = ((12.0, 5), (23.0, 4), (46.0, 3), (152.0, 2))
ELEVATION_ABOVE = 1

# Per stream level: (upper bound in metres, rank); farther than the last
# bound ranks 1.  The first band of each level starts at 0 m.
DISTANCE_BANDS = {
    1: ((500.0, 2),),
    2: ((500.0, 3), (1000.0, 2)),
    3: ((500.0, 4), (1000.0, 3), (1500.0, 2)),
    4: ((1000.0, 4), (2000.0, 3), (3000.0, 2)),
    5: ((2000.0, 4), (4000.0, 3), (6000.0, 2)),
}
DISTANCE_FAR = 1
PERMANENT_WATER_RANK = 5


@dataclass(frozen=True)
class RankedIndicator:
    name: Indicator
    grid: RasterGrid

    def __post_init__(self):
        name = Indicator(self.name)
        object.__setattr__(self, "name", name)
        vals = np.unique(self.grid.cells[self.grid.valid])
        bad = set(vals.tolist()) - set(name.legal_ranks)
        if bad:
            raise DomainError(f"{name.value} ranks {sorted(bad)} outside {sorted(name.legal_ranks)}")

    @property
    def converging_related(self):
        return self.name.converging_related


@dataclass(frozen=True)
class IndicatorStack:
    """The five ranked criteria in canonical order, on a common lattice."""

    indicators: tuple

    def __post_init__(self):
        inds = tuple(self.indicators)
        names = [i.name for i in inds]
        if sorted(names) != sorted(INDICATOR_ORDER) or len(names) != len(INDICATOR_ORDER):
            raise ValueError(f"stack needs exactly one of each indicator, got {[n.value for n in names]}")
        by_name = {i.name: i for i in inds}
        inds = tuple(by_name[n] for n in INDICATOR_ORDER)
        require_aligned(*(i.grid for i in inds), names=[n.value for n in INDICATOR_ORDER])
        object.__setattr__(self, "indicators", inds)

    def __getitem__(self, name):
        return self.indicators[INDICATOR_ORDER.index(Indicator(name))]

    def __iter__(self):
        return iter(self.indicators)

    def __len__(self):
        return len(self.indicators)

    @property
    def header(self):
        return self.indicators[0].grid.header


def _classify(values, classes, above):
    out = np.full(values.shape, float(above))
    assigned = np.zeros(values.shape, dtype=bool)
    for upper, rank in classes:
        sel = ~assigned & (values <= upper)
        out[sel] = rank
        assigned |= sel
    out[np.isnan(values)] = np.nan
    return out


def rank_slope(slope_deg):
    v = slope_deg.masked()
    if np.any(v[~np.isnan(v)] < 0):
        raise DomainError("slope must be non-negative")
    out = _classify(v, SLOPE_CLASSES, SLOPE_ABOVE)
    return RankedIndicator(Indicator.SLOPE, slope_deg.like(out, Kind.CATEGORICAL))


def rank_elevation(dem):
    out = _classify(dem.masked(), ELEVATION_CLASSES, ELEVATION_ABOVE)
    return RankedIndicator(Indicator.ELEVATION, dem.like(out, Kind.CATEGORICAL))


def rank_distance(distance_grids, water_mask, isolated_rank=DISTANCE_FAR):
    """Rank proximity to the stream network.

    Parameters
    ----------
    distance_grids : mapping of int to RasterGrid
        Distance (m) to the nearest stream of each level 1-5; a level that
        is absent is all ``inf`` (or may be left out).
    water_mask : RasterGrid
        1 on permanent rivers, lakes and reservoirs.
    isolated_rank : int
        Rank for cells with no stream of any level on the grid.

    Cells on permanent water rank 5.  Elsewhere every level proposes a
    rank from its distance bands and the highest proposal is kept.
    """
    levels = sorted(distance_grids)
    grids = [distance_grids[lv] for lv in levels]
    require_aligned(water_mask, *grids, names=["water_mask"] + [f"distance level {lv}" for lv in levels])
    shape = water_mask.shape
    best = np.full(shape, 0.0)
    any_stream = np.zeros(shape, dtype=bool)
    nodata = ~water_mask.valid
    for lv, g in zip(levels, grids):
        if lv not in DISTANCE_BANDS:
            raise ValueError(f"unknown stream level {lv}")
        d = g.masked()
        nodata |= np.isnan(d)
        present = np.isfinite(d)
        any_stream |= present
        r = _classify(np.where(present, d, np.inf), DISTANCE_BANDS[lv], DISTANCE_FAR)
        r[~present] = 0.0
        best = np.maximum(best, np.nan_to_num(r, nan=0.0))
    best[~any_stream] = isolated_rank
    best[water_mask.cells == 1] = PERMANENT_WATER_RANK
    best[nodata] = np.nan
    return RankedIndicator(Indicator.DIST_STREAMS, water_mask.like(best, Kind.CATEGORICAL))


def _rank_codes(classes, table, what):
    v = classes.masked()
    ok = ~np.isnan(v)
    codes = np.unique(v[ok])
    unknown = [c for c in codes.tolist() if c not in table]
    if unknown:
        raise ClassificationError(f"unknown {what} code(s) {unknown}; expected {sorted(table)}")
    out = np.full(v.shape, np.nan)
    for code, rank in table.items():
        out[v == code] = rank
    return out


def rank_hydrolith(classes):
    out = _rank_codes(classes, HYDROLITH_RANKS, "hydro-lithological")
    return RankedIndicator(Indicator.HYDRO_LITH, classes.like(out, Kind.CATEGORICAL))


def rank_landuse(classes):
    out = _rank_codes(classes, LANDUSE_RANKS, "land-use")
    return RankedIndicator(Indicator.LAND_USE, classes.like(out, Kind.CATEGORICAL))


def build_stack(terrain, dem, landuse, hydrolith, water_mask=None):
    """Rank every criterion from terrain products and categorical inputs.

    Without ``water_mask`` the land-use water class marks permanent water.
    """
    require_aligned(dem, landuse, hydrolith, names=["dem", "landuse", "hydrolith"])
    if water_mask is None:
        wm = np.where(landuse.cells == LU_WATER, 1.0, 0.0)
        wm[~landuse.valid] = np.nan
        water_mask = landuse.like(wm, Kind.CATEGORICAL)
    return IndicatorStack((
        rank_slope(terrain.slope),
        rank_elevation(dem),
        rank_distance(terrain.distances, water_mask),
        rank_hydrolith(hydrolith),
        rank_landuse(landuse),
    ))
