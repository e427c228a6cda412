"""Grid data model and ESRI ASCII grid I/O.

Every layer in the pipeline (DEM, ranked indicators, zones, risk maps) is a
:class:`RasterGrid`: a header describing the lattice plus a 2-D float64
array in row-major order with row 0 at the northern edge.  Missing cells
hold the header's ``nodata`` sentinel; use :meth:`RasterGrid.masked` to get
a NaN-filled working copy.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AlignmentError, CellCountError, GridFormatError, HeaderError, TokenError

DEFAULT_NODATA = -9999.0

_HEADER_KEYS = ("ncols", "nrows", "xll", "yll", "cellsize", "nodata_value")
_KEY_ALIASES = {
    "ncols": "ncols",
    "nrows": "nrows",
    "xllcorner": "xll",
    "xllcenter": "xll",
    "yllcorner": "yll",
    "yllcenter": "yll",
    "cellsize": "cellsize",
    "nodata_value": "nodata_value",
}


class Kind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    LABEL = "label"


@dataclass(frozen=True)
class GridHeader:
    """Lattice geometry: size, lower-left corner, cell size and nodata sentinel."""

    ncols: int
    nrows: int
    xll: float = 0.0
    yll: float = 0.0
    cellsize: float = 1.0
    nodata: float = DEFAULT_NODATA

    def __post_init__(self):
        if int(self.ncols) != self.ncols or self.ncols < 1:
            raise ValueError(f"ncols must be a positive integer, got {self.ncols}")
        if int(self.nrows) != self.nrows or self.nrows < 1:
            raise ValueError(f"nrows must be a positive integer, got {self.nrows}")
        if not self.cellsize > 0:
            raise ValueError(f"cellsize must be positive, got {self.cellsize}")
        object.__setattr__(self, "ncols", int(self.ncols))
        object.__setattr__(self, "nrows", int(self.nrows))
        for name in ("xll", "yll", "cellsize", "nodata"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def cell_area(self):
        return self.cellsize * self.cellsize


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """An immutable georeferenced grid.

    ``cells`` may be given flat (length ``nrows * ncols``) or 2-D; it is
    stored as a read-only ``(nrows, ncols)`` float64 array.  Categorical and
    label grids must hold integer values (or nodata).
    """

    header: GridHeader
    cells: np.ndarray
    kind: Kind = Kind.CONTINUOUS

    def __post_init__(self):
        arr = np.array(self.cells, dtype=np.float64)
        n = self.header.nrows * self.header.ncols
        if arr.size != n:
            raise CellCountError(n, arr.size)
        arr = arr.reshape(self.header.shape)
        kind = Kind(self.kind)
        if kind is not Kind.CONTINUOUS:
            vals = arr[_valid(arr, self.header.nodata)]
            if vals.size and not np.all(np.isfinite(vals) & (vals == np.round(vals))):
                raise ValueError(f"{kind.value} grid holds non-integer cells")
        arr.flags.writeable = False
        object.__setattr__(self, "cells", arr)
        object.__setattr__(self, "kind", kind)

    @classmethod
    def from_array(cls, array, header, kind=Kind.CONTINUOUS):
        """Build a grid from a working array where NaN marks missing cells."""
        arr = np.array(array, dtype=np.float64)
        arr[np.isnan(arr)] = header.nodata
        return cls(header, arr, kind)

    def like(self, array, kind=None):
        """New grid on this grid's lattice; NaN cells become nodata."""
        return RasterGrid.from_array(array, self.header, self.kind if kind is None else kind)

    @property
    def shape(self):
        return self.header.shape

    @property
    def nodata(self):
        return self.header.nodata

    @property
    def valid(self):
        """Boolean mask of cells holding data."""
        return _valid(self.cells, self.header.nodata)

    def masked(self):
        """Writable float copy with NaN in place of nodata."""
        out = self.cells.copy()
        out[~self.valid] = np.nan
        return out

    def __eq__(self, other):
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return (
            self.header == other.header
            and self.kind == other.kind
            and np.array_equal(self.cells, other.cells, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self):
        h = self.header
        return f"RasterGrid({h.nrows}x{h.ncols}, cellsize={h.cellsize:g}, kind={self.kind.value})"


def _valid(arr, nodata):
    if math.isnan(nodata):
        return ~np.isnan(arr)
    return (arr != nodata) & ~np.isnan(arr)


def grids_aligned(a, b):
    """True when ``a`` and ``b`` share size, cell size and corner (to 1e-6 cells)."""
    ha, hb = a.header, b.header
    if ha.ncols != hb.ncols or ha.nrows != hb.nrows:
        return False
    tol = 1e-6 * min(ha.cellsize, hb.cellsize)
    return (
        abs(ha.cellsize - hb.cellsize) <= tol
        and abs(ha.xll - hb.xll) <= tol
        and abs(ha.yll - hb.yll) <= tol
    )


def require_aligned(*grids, names=None):
    """Raise :class:`AlignmentError` unless every grid is aligned with the first."""
    for i, g in enumerate(grids[1:], start=1):
        if not grids_aligned(grids[0], g):
            label = names[i] if names else f"grid #{i}"
            first = names[0] if names else "grid #0"
            raise AlignmentError(f"{label} is not aligned with {first}")


def _format_number(value):
    if math.isfinite(value) and value == int(value) and abs(value) < 2**53:
        return str(int(value))
    return repr(float(value))


def write_ascii_grid(grid, path):
    """Write ``grid`` as an ESRI ASCII grid.

    Cell values are written with the shortest decimal that parses back to
    the same double, so ``read_ascii_grid(path) == grid`` holds exactly.
    """
    h = grid.header
    nodata_text = _format_number(h.nodata)
    integral = grid.kind is not Kind.CONTINUOUS
    valid = grid.valid
    lines = [
        f"ncols {h.ncols}",
        f"nrows {h.nrows}",
        f"xllcorner {_format_number(h.xll)}",
        f"yllcorner {_format_number(h.yll)}",
        f"cellsize {_format_number(h.cellsize)}",
        f"NODATA_value {nodata_text}",
    ]
    for r in range(h.nrows):
        row = grid.cells[r]
        ok = valid[r]
        if integral:
            toks = [str(int(v)) if k else nodata_text for v, k in zip(row, ok)]
        else:
            toks = [repr(float(v)) if k else nodata_text for v, k in zip(row, ok)]
        lines.append(" ".join(toks))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_ascii_grid(path, kind=Kind.CONTINUOUS):
    """Read an ESRI ASCII grid.

    Parameters
    ----------
    path : str or os.PathLike
        File to read.
    kind : Kind
        Tag for the returned grid; categorical and label grids must hold
        integers.

    Raises
    ------
    HeaderError
        A header key is unknown, duplicated, missing or has a bad value.
    CellCountError
        The body does not hold ``nrows * ncols`` values.
    TokenError
        A body token is not a number.
    """
    with open(os.fspath(path)) as fh:
        tokens = fh.read().split()

    raw = {}
    center = {}
    pos = 0
    while pos + 1 < len(tokens) and tokens[pos][:1].isalpha():
        key = tokens[pos].lower()
        if key not in _KEY_ALIASES:
            if key in ("nan", "inf", "infinity"):
                break
            raise HeaderError(tokens[pos], "unrecognized key")
        canon = _KEY_ALIASES[key]
        if canon in raw:
            raise HeaderError(tokens[pos], "duplicated key")
        raw[canon] = (tokens[pos], tokens[pos + 1])
        center[canon] = key.endswith("center")
        pos += 2

    for canon in _HEADER_KEYS:
        if canon not in raw and canon != "nodata_value":
            name = {"xll": "xllcorner", "yll": "yllcorner"}.get(canon, canon)
            raise HeaderError(name, "missing")

    def number(canon, integer=False):
        key, text = raw[canon]
        try:
            value = float(text)
        except ValueError:
            raise HeaderError(key, f"invalid value {text!r}") from None
        if integer:
            if value != int(value) or value < 1:
                raise HeaderError(key, f"must be a positive integer, got {text!r}")
            return int(value)
        return value

    ncols = number("ncols", integer=True)
    nrows = number("nrows", integer=True)
    cellsize = number("cellsize")
    if not cellsize > 0:
        raise HeaderError(raw["cellsize"][0], "must be positive")
    xll = number("xll")
    yll = number("yll")
    if center["xll"]:
        xll -= cellsize / 2
    if center["yll"]:
        yll -= cellsize / 2
    nodata = number("nodata_value") if "nodata_value" in raw else DEFAULT_NODATA
    header = GridHeader(ncols, nrows, xll, yll, cellsize, nodata)

    body = tokens[pos:]
    try:
        values = np.array(body, dtype=np.float64)
    except ValueError:
        for i, tok in enumerate(body):
            try:
                float(tok)
            except ValueError:
                r, c = divmod(i, ncols)
                raise TokenError(tok, r, c) from None
        raise GridFormatError("unparseable grid body") from None
    if values.size != ncols * nrows:
        raise CellCountError(ncols * nrows, values.size)
    try:
        return RasterGrid(header, values, kind)
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from None
