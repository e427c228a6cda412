"""Flood-risk index for the five model variants and its natural-breaks map.

The sub-watershed variants replace selected ranked indicators by their
zonal maximum before the weighted sum: ``*_RC`` constrain only Slope and
Distance from streams, ``*_All`` constrain all five.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ClassificationError, ConfigurationError
from .indicators import INDICATOR_ORDER, Indicator
from .raster import Kind, RasterGrid, require_aligned, write_ascii_grid

N_CLASSES = 5
LEVEL_NAMES = ("Very Low", "Low", "Normal", "High", "Very High")
MAX_EXACT_VALUES = 4000

_CONVERGING = frozenset({Indicator.SLOPE, Indicator.DIST_STREAMS})


class ModelVariant(str, Enum):
    PIXEL_AHP = "PixelAHP"
    MFD_RC = "MFD_RC"
    MFD_ALL = "MFD_All"
    D8_RC = "D8_RC"
    D8_ALL = "D8_All"

    @property
    def constrained(self):
        if self is ModelVariant.PIXEL_AHP:
            return frozenset()
        if self in (ModelVariant.MFD_RC, ModelVariant.D8_RC):
            return _CONVERGING
        return frozenset(INDICATOR_ORDER)

    @property
    def zone_source(self):
        if self is ModelVariant.PIXEL_AHP:
            return None
        return "MFD" if self.value.startswith("MFD") else "D8"

    @classmethod
    def parse(cls, text):
        """Accept ``MFD_RC``, ``mfd-rc``, ``pixelahp``, ``AHP`` and similar spellings."""
        key = text.strip().replace("-", "_").lower()
        if key in ("ahp", "pixel_ahp", "pixel"):
            key = "pixelahp"
        for v in cls:
            if v.value.lower() == key:
                return v
        raise ValueError(f"unknown model variant {text!r}; choose from {[v.value for v in cls]}")


def zonal_max(zones, indicator):
    """Replace each cell by the maximum of ``indicator`` over its zone.

    Cells with zone id 0 or nodata zone keep their own value; nodata
    indicator cells stay nodata and do not contribute to zone maxima.
    """
    grid = getattr(indicator, "grid", indicator)
    require_aligned(zones, grid, names=["zones", "indicator"])
    z = np.where(zones.valid, zones.cells, 0).astype(np.int64).ravel()
    v = grid.masked().ravel()
    ok = (z > 0) & ~np.isnan(v)
    maxima = np.full(int(z.max(initial=0)) + 1, -np.inf)
    np.maximum.at(maxima, z[ok], v[ok])
    out = v.copy()
    assigned = (z > 0) & ~np.isnan(v)
    out[assigned] = maxima[z[assigned]]
    return grid.like(out.reshape(grid.shape))


def compute_fri(stack, weights, variant, zones_mfd=None, zones_d8=None):
    """Weighted sum of (possibly zone-constrained) ranked indicators.

    ``weights`` is an :class:`~floodrisk.ahp.EigenResult` or a length-5
    sequence in stack order.  A cell that is nodata in any layer is nodata.
    """
    variant = ModelVariant(variant)
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    if w.shape != (len(INDICATOR_ORDER),):
        raise ConfigurationError(f"expected {len(INDICATOR_ORDER)} weights, got shape {w.shape}")
    zones = {"MFD": zones_mfd, "D8": zones_d8, None: None}[variant.zone_source]
    if variant.zone_source and zones is None:
        raise ConfigurationError(f"{variant.value} needs a {variant.zone_source} zone raster")
    fri = np.zeros(stack.header.shape)
    for wj, ind in zip(w, stack):
        layer = zonal_max(zones, ind) if ind.name in variant.constrained else ind.grid
        fri += wj * layer.masked()
    return RasterGrid.from_array(fri, stack.header, Kind.CONTINUOUS)


def _suffix_dp(u, c, k, tie_rtol):
    """Optimal split of sorted distinct values ``u`` (counts ``c``) into ``k`` classes.

    Returns (cost, class upper indices).  Suffix formulation so that the
    forward reconstruction can pick the smallest first break among ties.
    """
    m = u.size
    x = u - np.average(u, weights=c)
    s1 = np.concatenate(([0.0], np.cumsum(c * x)))
    s2 = np.concatenate(([0.0], np.cumsum(c * x * x)))
    sw = np.concatenate(([0.0], np.cumsum(c)))

    def ssd(a, b):
        # a scalar start, b array of inclusive ends
        n = sw[b + 1] - sw[a]
        s = s1[b + 1] - s1[a]
        return np.maximum(s2[b + 1] - s2[a] - s * s / n, 0.0)

    # cost[t][a]: best cost of splitting u[a:] into t classes
    cost = np.full((k + 1, m + 1), np.inf)
    cost[1, :m] = [ssd(a, np.array([m - 1]))[0] for a in range(m)]
    for t in range(2, k + 1):
        for a in range(0, m - t + 1):
            b = np.arange(a, m - t + 1)
            cost[t, a] = np.min(ssd(a, b) + cost[t - 1, b + 1])

    ends = []
    a = 0
    for t in range(k, 1, -1):
        b = np.arange(a, m - t + 1)
        total = ssd(a, b) + cost[t - 1, b + 1]
        best = total.min()
        tol = tie_rtol * max(abs(best), 1.0) * 16
        pick = int(b[np.flatnonzero(total <= best + tol)[0]])
        ends.append(pick)
        a = pick + 1
    return float(cost[k, 0]), ends


@dataclass(frozen=True)
class Breaks:
    """Natural-breaks result; ``sample_size`` is set when values were subsampled."""

    thresholds: tuple
    cost: float
    seed: int | None = None
    sample_size: int | None = None


def natural_breaks(values, k, seed=0, max_values=MAX_EXACT_VALUES, tie_rtol=1e-12):
    """Fisher-Jenks optimal ``k``-class breaks, with run metadata.

    The dynamic programme runs over distinct values weighted by their
    multiplicity, so it is exact for any number of cells as long as the
    distinct count stays below ``max_values``.  Beyond that, ``max_values``
    values are drawn uniformly without replacement using ``seed``.
    """
    if int(k) != k or k < 2:
        raise ValueError(f"number of classes must be an integer >= 2, got {k}")
    v = np.asarray(values, dtype=float).ravel()
    v = v[np.isfinite(v)]
    u, c = np.unique(v, return_counts=True)
    if u.size < k:
        raise ClassificationError(f"need at least {k} distinct values, found {u.size}")
    sample_size = None
    used_seed = None
    if u.size > max_values:
        rng = np.random.default_rng(seed)
        sample = rng.choice(v, size=max_values, replace=False)
        u, c = np.unique(sample, return_counts=True)
        sample_size, used_seed = max_values, seed
        if u.size < k:
            raise ClassificationError(f"subsample holds only {u.size} distinct values")
    cost, ends = _suffix_dp(u, c.astype(float), int(k), tie_rtol)
    return Breaks(tuple(float(u[e]) for e in ends), cost, used_seed, sample_size)


def jenks_breaks(values, k, seed=0):
    """The ``k - 1`` ascending class upper bounds minimising within-class SSD.

    A break value belongs to the class below it.
    """
    return list(natural_breaks(values, k, seed=seed).thresholds)


def apply_breaks(values, thresholds):
    """Class index ``1 + #(thresholds < value)``; NaN stays NaN."""
    v = np.asarray(values, dtype=float)
    lv = 1.0 + np.searchsorted(np.asarray(thresholds), v, side="left")
    return np.where(np.isnan(v), np.nan, lv)


@dataclass(frozen=True)
class RiskProduct:
    fri: RasterGrid
    levels: RasterGrid
    breaks: tuple
    seed: int | None = None
    sample_size: int | None = None
    metadata: dict = field(default_factory=dict)

    def level_counts(self):
        lv = self.levels.cells[self.levels.valid].astype(int)
        return np.bincount(lv, minlength=N_CLASSES + 1)[1:]


def classify_fri(fri, seed=0, n_classes=N_CLASSES, **metadata):
    """Slice an FRI raster into five natural-breaks risk levels (1 = Very Low)."""
    v = fri.masked()
    finite = v[np.isfinite(v)]
    n_distinct = np.unique(finite).size
    if n_distinct < n_classes:
        raise ClassificationError(
            f"FRI has {n_distinct} distinct value(s); {n_classes} classes need at least {n_classes}"
        )
    br = natural_breaks(finite, n_classes, seed=seed)
    levels = fri.like(apply_breaks(v, br.thresholds), Kind.CATEGORICAL)
    return RiskProduct(fri, levels, br.thresholds, br.seed, br.sample_size, dict(metadata))


def write_risk_product(product, directory, stem):
    """Write ``<stem>_fri.asc``, ``<stem>_levels.asc`` and ``<stem>_meta.txt``."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "fri": os.path.join(directory, f"{stem}_fri.asc"),
        "levels": os.path.join(directory, f"{stem}_levels.asc"),
        "meta": os.path.join(directory, f"{stem}_meta.txt"),
    }
    write_ascii_grid(product.fri, paths["fri"])
    write_ascii_grid(product.levels, paths["levels"])
    meta = dict(product.metadata)
    meta["breaks"] = ",".join(repr(b) for b in product.breaks)
    meta["subsample_seed"] = "none" if product.seed is None else str(product.seed)
    meta["subsample_size"] = "none" if product.sample_size is None else str(product.sample_size)
    with open(paths["meta"], "w", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"{key} = {value}\n")
    return paths
