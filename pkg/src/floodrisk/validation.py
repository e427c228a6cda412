"""Scoring risk maps against observed flooding, and sweep statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .raster import Kind, RasterGrid, require_aligned
from .risk import N_CLASSES

POSITIVE_LEVELS = (4, 5)


@dataclass(frozen=True)
class FloodMask:
    """Observed flood water (1) plus permanent water excluded from scoring."""

    truth: RasterGrid
    permanent_water: RasterGrid | None = None

    def __post_init__(self):
        if self.permanent_water is not None:
            require_aligned(self.truth, self.permanent_water, names=["truth", "permanent_water"])

    def scored(self):
        """Boolean mask of cells that take part in scoring."""
        ok = self.truth.valid.copy()
        if self.permanent_water is not None:
            ok &= ~(self.permanent_water.valid & (self.permanent_water.cells == 1))
        return ok


@dataclass(frozen=True)
class ValidationScores:
    correct_pct: float
    fit_pct: float
    intersection: int
    fa_fri: int
    fa_water: int
    union: int
    degenerate: bool = False


def positive_mask(product):
    """1 where the risk level is High or Very High, else 0."""
    levels = getattr(product, "levels", product)
    lv = levels.masked()
    out = np.where(np.isin(lv, POSITIVE_LEVELS), 1.0, 0.0)
    out[np.isnan(lv)] = np.nan
    return levels.like(out, Kind.CATEGORICAL)


def score(pred, mask):
    """Correct ratio ``|P & T| / |T|`` and fit ratio ``|P & T| / |P | T|``, in percent.

    Permanent-water and nodata cells are left out of every count.  With no
    flooded cells both ratios are 0 and ``degenerate`` is set.
    """
    require_aligned(pred, mask.truth, names=["prediction", "truth"])
    ok = mask.scored() & pred.valid
    p = ok & (pred.cells == 1)
    t = ok & (mask.truth.cells == 1)
    inter = int(np.count_nonzero(p & t))
    n_p = int(np.count_nonzero(p))
    n_t = int(np.count_nonzero(t))
    union = int(np.count_nonzero(p | t))
    if n_t == 0:
        return ValidationScores(0.0, 0.0, inter, n_p, n_t, union, degenerate=True)
    return ValidationScores(100.0 * inter / n_t, 100.0 * inter / union, inter, n_p, n_t, union)


@dataclass(frozen=True)
class LevelRow:
    basin: int
    level: int
    count: int
    ratio: float


def level_distribution(product, basins):
    """Per-basin histogram of risk levels 1-5 with within-basin ratios.

    Cells outside any basin (id 0 or nodata) or without a level are skipped.
    """
    levels = getattr(product, "levels", product)
    require_aligned(levels, basins, names=["levels", "basins"])
    ok = levels.valid & basins.valid & (basins.cells > 0)
    b = basins.cells[ok].astype(np.int64)
    lv = levels.cells[ok].astype(np.int64)
    rows = []
    for basin in np.unique(b).tolist():
        counts = np.bincount(lv[b == basin], minlength=N_CLASSES + 1)[1 : N_CLASSES + 1]
        total = counts.sum()
        for level, n in enumerate(counts.tolist(), start=1):
            rows.append(LevelRow(basin, level, n, n / total))
    return rows


def level_ratios(product):
    """Share of valid cells in each level 1-5 over the whole map."""
    levels = getattr(product, "levels", product)
    lv = levels.cells[levels.valid].astype(np.int64)
    counts = np.bincount(lv, minlength=N_CLASSES + 1)[1 : N_CLASSES + 1]
    return counts / max(counts.sum(), 1)


def high_ratio(product):
    """Share of valid cells classed High or Very High."""
    r = level_ratios(product)
    return float(r[3] + r[4])


@dataclass(frozen=True)
class StabilityRow:
    variant: str
    metric: str
    n: int
    min: float
    max: float
    mean: float
    std: float

    @property
    def range(self):
        return self.max - self.min


STABILITY_COLUMNS = ("variant", "metric", "n", "min", "max", "mean", "std", "range")


@dataclass(frozen=True)
class StabilityReport:
    rows: tuple

    def ranges(self, metric):
        """``{variant: range}`` for one metric."""
        return {r.variant: r.range for r in self.rows if r.metric == metric}

    def most_stable(self, metric):
        """Variants ordered from smallest to largest range of ``metric``."""
        rng = self.ranges(metric)
        return sorted(rng, key=lambda v: (rng[v], v))

    def get(self, variant, metric):
        for r in self.rows:
            if r.variant == variant and r.metric == metric:
                return r
        raise KeyError((variant, metric))


def _metrics_of(item):
    if isinstance(item, ValidationScores):
        return {"correct": item.correct_pct, "fit": item.fit_pct}
    return dict(item)


def sweep_stability(per_variant):
    """Spread of per-project metrics for each variant.

    Parameters
    ----------
    per_variant : mapping of str to sequence
        For each variant, one entry per project: a
        :class:`ValidationScores` or a ``{metric: value}`` mapping (for
        example level ratios).

    Standard deviation is the population value (ddof 0).
    """
    rows = []
    for variant, items in per_variant.items():
        items = list(items)
        if len(items) < 2:
            raise ConfigurationError(f"{variant}: stability needs at least 2 projects, got {len(items)}")
        metrics = [_metrics_of(i) for i in items]
        names = list(metrics[0])
        for name in names:
            vals = np.array([m[name] for m in metrics], dtype=float)
            rows.append(
                StabilityRow(
                    str(getattr(variant, "value", variant)),
                    name,
                    vals.size,
                    float(vals.min()),
                    float(vals.max()),
                    float(vals.mean()),
                    float(vals.std()),
                )
            )
    return StabilityReport(tuple(rows))


def stability_rows(report):
    """Report rows as strings in :data:`STABILITY_COLUMNS` order."""
    out = []
    for r in report.rows:
        out.append([r.variant, r.metric, str(r.n)] + [_fmt(x) for x in (r.min, r.max, r.mean, r.std, r.range)])
    return out


def _fmt(x):
    return repr(float(x)) if math.isfinite(x) else str(x)
