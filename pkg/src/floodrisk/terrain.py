"""Hydrology products derived from a DEM.

Slope, depression filling, D8 routing and accumulation, stream extraction
with Strahler levels, per-level distance to streams, and the two
sub-watershed labelings: D8 (cells sharing an outlet stream link) and MFD
(cells sharing a sink of the unfilled surface).
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DelineationError, RoutingError
from .raster import Kind, RasterGrid

# Neighbour offsets in D8 code order: E, SE, S, SW, W, NW, N, NE.
D8_CODES = np.array([1, 2, 4, 8, 16, 32, 64, 128])
D8_OFFSETS = np.array([(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)])
D8_DIAGONAL = np.array([False, True, False, True, False, True, False, True])

FILL_EPSILON = 1e-5
MAX_STREAM_LEVEL = 5


@dataclass(frozen=True)
class StreamNetwork:
    mask: RasterGrid
    level: RasterGrid

    @property
    def is_empty(self):
        return not np.any(self.mask.cells == 1)


@dataclass(frozen=True)
class MFDBasins:
    """Sink-basin labeling with its mass bookkeeping.

    ``sinks`` labels each sink region with its zone id (0 elsewhere);
    ``sink_mass[k - 1]`` is the total routed mass that reached zone ``k``.
    """

    zones: RasterGrid
    sinks: RasterGrid
    sink_mass: np.ndarray

    @property
    def n_zones(self):
        return int(self.sink_mass.size)


def _shifted(arr, dr, dc, fill=np.nan):
    """``out[r, c] = arr[r + dr, c + dc]`` with ``fill`` off-grid."""
    nr, nc = arr.shape
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    rs = slice(max(0, -dr), min(nr, nr - dr))
    cs = slice(max(0, -dc), min(nc, nc - dc))
    rsrc = slice(max(0, dr), min(nr, nr + dr))
    csrc = slice(max(0, dc), min(nc, nc + dc))
    out[rs, cs] = arr[rsrc, csrc]
    return out


def _neighbour_drops(z, cellsize):
    """Stack (8, nrows, ncols) of drop/distance to each neighbour; NaN off-grid."""
    drops = np.empty((8,) + z.shape)
    for k, (dr, dc) in enumerate(D8_OFFSETS):
        dist = cellsize * (math.sqrt(2.0) if D8_DIAGONAL[k] else 1.0)
        drops[k] = (z - _shifted(z, dr, dc)) / dist
    return drops


def slope_degrees(dem):
    """Slope in degrees by Horn's 3x3 finite differences.

    Neighbours that are off-grid or nodata take the centre cell's elevation.
    """
    z = dem.masked()
    cs = dem.header.cellsize
    win = {}
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            n = _shifted(z, dr, dc)
            win[dr, dc] = np.where(np.isnan(n), z, n)
    dzdx = (
        (win[-1, 1] + 2 * win[0, 1] + win[1, 1]) - (win[-1, -1] + 2 * win[0, -1] + win[1, -1])
    ) / (8 * cs)
    dzdy = (
        (win[1, -1] + 2 * win[1, 0] + win[1, 1]) - (win[-1, -1] + 2 * win[-1, 0] + win[-1, 1])
    ) / (8 * cs)
    slope = np.degrees(np.arctan(np.hypot(dzdx, dzdy)))
    return dem.like(slope, Kind.CONTINUOUS)


def _edge_cells(valid):
    """Valid cells on the grid border or touching a nodata cell."""
    padded = np.pad(valid, 1, constant_values=False)
    interior = ndimage.binary_erosion(padded, structure=np.ones((3, 3)), border_value=0)[1:-1, 1:-1]
    return valid & ~interior


def fill_sinks(dem, epsilon=FILL_EPSILON):
    """Raise depressions so every cell has a descending path to the edge.

    Priority-flood from the border; a cell reached from a neighbour at
    elevation ``z`` is lifted to at least ``z + epsilon``.  The result is the
    minimal such surface (the Planchon-Darboux fixed point), so cells that
    already drain are left unchanged.
    """
    z = dem.masked()
    valid = ~np.isnan(z)
    nr, nc = z.shape
    out = z.copy()
    done = ~valid
    heap = []
    for r, c in zip(*np.nonzero(_edge_cells(valid))):
        heapq.heappush(heap, (out[r, c], r * nc + c))
        done[r, c] = True
    offsets = [tuple(o) for o in D8_OFFSETS]
    while heap:
        zc, idx = heapq.heappop(heap)
        r, c = divmod(idx, nc)
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < nr and 0 <= cc < nc and not done[rr, cc]:
                done[rr, cc] = True
                if out[rr, cc] < zc + epsilon:
                    out[rr, cc] = zc + epsilon
                heapq.heappush(heap, (out[rr, cc], rr * nc + cc))
    return dem.like(out, Kind.CONTINUOUS)


def count_interior_sinks(dem):
    """Number of interior cells strictly lower than all valid neighbours."""
    z = dem.masked()
    valid = ~np.isnan(z)
    lower_all = valid & ~_edge_cells(valid)
    for dr, dc in D8_OFFSETS:
        n = _shifted(z, dr, dc)
        lower_all &= ~(n <= z)
    return int(lower_all.sum())


def d8_flow_directions(filled_dem):
    """Steepest-descent D8 codes; 0 where no neighbour is strictly lower.

    Ties between equally steep neighbours go to the lowest code.
    """
    z = filled_dem.masked()
    drops = _neighbour_drops(z, filled_dem.header.cellsize)
    drops = np.where(np.isnan(drops), -np.inf, drops)
    best = np.argmax(drops, axis=0)
    steepest = np.take_along_axis(drops, best[None], axis=0)[0]
    codes = np.where(steepest > 0, D8_CODES[best], 0).astype(float)
    codes[np.isnan(z)] = np.nan
    return filled_dem.like(codes, Kind.LABEL)


def downstream_index(dirs):
    """Flat index of each cell's receiver, -1 for terminal or nodata cells.

    Codes pointing off-grid or onto nodata are treated as terminal.
    """
    codes = dirs.cells
    valid = dirs.valid
    nr, nc = codes.shape
    rows, cols = np.indices(codes.shape)
    down = np.full(codes.shape, -1, dtype=np.int64)
    for k, (dr, dc) in enumerate(D8_OFFSETS):
        sel = valid & (codes == D8_CODES[k])
        rr, cc = rows[sel] + dr, cols[sel] + dc
        inside = (rr >= 0) & (rr < nr) & (cc >= 0) & (cc < nc)
        target = np.full(rr.shape, -1, dtype=np.int64)
        target[inside] = rr[inside] * nc + cc[inside]
        ok = inside.copy()
        ok[inside] = valid.ravel()[target[inside]]
        target[~ok] = -1
        down[sel] = target
    return down.ravel()


def topological_order(dirs):
    """Valid cells ordered so every cell precedes its receiver.

    Raises :class:`RoutingError` if the routing graph has a cycle.
    """
    down = downstream_index(dirs)
    valid = dirs.valid.ravel()
    indeg = np.bincount(down[down >= 0], minlength=down.size)
    queue = deque(np.flatnonzero(valid & (indeg == 0)).tolist())
    order = []
    indeg = indeg.tolist()
    down_l = down.tolist()
    while queue:
        i = queue.popleft()
        order.append(i)
        j = down_l[i]
        if j >= 0:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if len(order) != int(valid.sum()):
        raise RoutingError(
            f"flow directions contain a cycle ({int(valid.sum()) - len(order)} cells unreachable)"
        )
    return np.array(order, dtype=np.int64), down


def flow_accumulation(dirs):
    """Number of cells (including itself) draining through each cell."""
    order, down = topological_order(dirs)
    acc = np.zeros(down.size)
    acc[order] = 1.0
    for i in order.tolist():
        j = down[i]
        if j >= 0:
            acc[j] += acc[i]
    out = acc.reshape(dirs.shape)
    out[~dirs.valid] = np.nan
    return dirs.like(out, Kind.CONTINUOUS)


def stream_cell_threshold(threshold_ha, cellsize):
    """Minimum accumulation (cells) whose drained area reaches ``threshold_ha``."""
    if not threshold_ha > 0:
        raise ValueError(f"stream threshold must be positive, got {threshold_ha} ha")
    if not cellsize > 0:
        raise ValueError(f"cellsize must be positive, got {cellsize}")
    cells = threshold_ha * 1e4 / (cellsize * cellsize)
    return max(1, math.ceil(cells - 1e-9 * cells))


def _strahler(mask, order, down):
    """Strahler order on masked cells, visiting cells in topological order."""
    n = down.size
    best = np.zeros(n, dtype=np.int64)
    best_count = np.zeros(n, dtype=np.int64)
    level = np.zeros(n, dtype=np.int64)
    for i in order.tolist():
        if not mask[i]:
            continue
        if best[i] == 0:
            lvl = 1
        elif best_count[i] >= 2:
            lvl = best[i] + 1
        else:
            lvl = best[i]
        level[i] = lvl
        j = down[i]
        if j >= 0 and mask[j]:
            if lvl > best[j]:
                best[j] = lvl
                best_count[j] = 1
            elif lvl == best[j]:
                best_count[j] += 1
    return level


def extract_streams(acc, threshold_ha, cellsize=None, *, dirs):
    """Threshold accumulation into a stream mask with Strahler levels 1-5.

    A cell is a stream when its drained area ``acc * cellsize**2`` reaches
    ``threshold_ha`` hectares.  ``dirs`` is the D8 routing that produced
    ``acc``; Strahler orders are clamped to 5.
    """
    if cellsize is None:
        cellsize = acc.header.cellsize
    cutoff = stream_cell_threshold(threshold_ha, cellsize)
    a = acc.masked()
    mask = np.nan_to_num(a, nan=0.0) >= cutoff
    order, down = topological_order(dirs)
    level = _strahler(mask.ravel(), order, down).reshape(a.shape)
    level = np.minimum(level, MAX_STREAM_LEVEL).astype(float)
    nodata = np.isnan(a)
    mask_f = mask.astype(float)
    mask_f[nodata] = np.nan
    level[nodata] = np.nan
    return StreamNetwork(acc.like(mask_f, Kind.LABEL), acc.like(level, Kind.LABEL))


def distance_to_streams(network, level):
    """Euclidean distance (map units) to the nearest stream cell of ``level``.

    Cells are ``inf`` everywhere when the network has no cell of that level.
    """
    if not 1 <= int(level) <= MAX_STREAM_LEVEL:
        raise ValueError(f"stream level must be in 1..{MAX_STREAM_LEVEL}, got {level}")
    lv = network.level.cells
    target = network.level.valid & (lv == level)
    valid = network.level.valid
    if not target.any():
        out = np.full(lv.shape, np.inf)
    else:
        out = ndimage.distance_transform_edt(~target, sampling=network.level.header.cellsize)
    out = out.astype(float)
    out[~valid] = np.nan
    return network.level.like(out, Kind.CONTINUOUS)


def stream_links(dirs, network):
    """Split the stream network into links; returns a label grid (0 off-stream).

    A link starts at a source (no upstream stream cell) or at a junction
    cell (two or more upstream stream cells); link ids follow the row-major
    position of their first cell.
    """
    order, down = topological_order(dirs)
    mask = (network.mask.cells == 1) & network.mask.valid
    flat = mask.ravel()
    n_up = np.zeros(flat.size, dtype=np.int64)
    src = np.flatnonzero(flat & (down >= 0))
    src = src[flat[down[src]]]
    np.add.at(n_up, down[src], 1)
    heads = np.flatnonzero(flat & (n_up != 1))
    link = np.zeros(flat.size, dtype=np.int64)
    link[heads] = np.arange(1, heads.size + 1)
    for i in order.tolist():
        if flat[i] and link[i] == 0:
            raise DelineationError("stream cell without a labelled upstream link")
        j = down[i]
        if j >= 0 and flat[i] and flat[j] and link[j] == 0:
            link[j] = link[i]
    return link.reshape(mask.shape), heads.size


def delineate_d8(dirs, network):
    """Sub-watersheds draining to the same stream link under D8 routing.

    Stream cells carry their own link id.  Every other cell takes the link
    that its flow path reaches first.  Cells whose path leaves the grid
    without touching a stream get one extra zone per terminal outlet, with
    ids following the link ids.
    """
    if network.is_empty:
        raise DelineationError("stream network is empty; lower the area threshold")
    link, n_links = stream_links(dirs, network)
    order, down = topological_order(dirs)
    zone = link.ravel().copy()
    for i in order[::-1].tolist():
        if zone[i] == 0:
            j = down[i]
            zone[i] = zone[j] if j >= 0 else -(i + 1)
    # streamless outlets are numbered by their row-major position
    outlets = np.unique(-zone[zone < 0])
    if outlets.size:
        neg = zone < 0
        zone[neg] = n_links + 1 + np.searchsorted(outlets, -zone[neg])
    out = zone.reshape(dirs.shape).astype(float)
    out[~dirs.valid] = np.nan
    return dirs.like(out, Kind.LABEL)


def find_sink_regions(dem):
    """Label 8-connected groups of cells with no strictly lower neighbour.

    Returns ``(labels, count)``; labels are numbered by the row-major
    position of each region's first cell.
    """
    z = dem.masked()
    valid = ~np.isnan(z)
    has_lower = np.zeros(z.shape, dtype=bool)
    for dr, dc in D8_OFFSETS:
        has_lower |= _shifted(z, dr, dc) < z
    sink = valid & ~has_lower
    labels, count = ndimage.label(sink, structure=np.ones((3, 3), dtype=int))
    return labels, count


def mfd_basins(dem, tie_tol=1e-12):
    """Route unit mass from every cell to the sinks of the unfilled surface.

    Each non-sink cell splits its mass over all strictly lower neighbours
    in proportion to drop/distance (MFD-8).  A cell joins the sink that
    receives the largest share of its mass; shares within ``tie_tol`` of
    the maximum tie and go to the smallest sink id.
    """
    z = dem.masked()
    valid = ~np.isnan(z)
    nr, nc = z.shape
    labels, n_sinks = find_sink_regions(dem)

    drops = _neighbour_drops(z, dem.header.cellsize)
    drops = np.where(np.isnan(drops) | (drops <= 0), 0.0, drops)
    total = drops.sum(axis=0)

    flat_z = z.ravel()
    flat_labels = labels.ravel()
    offsets = (D8_OFFSETS[:, 0] * nc + D8_OFFSETS[:, 1]).tolist()
    weights = (drops / np.where(total > 0, total, 1.0)).reshape(8, -1).T
    cand = np.flatnonzero(valid.ravel())
    order = cand[np.argsort(flat_z[cand], kind="stable")]

    shares = {}
    sink_mass = np.zeros(n_sinks)
    zone = np.zeros(nr * nc, dtype=np.int64)
    for i in order.tolist():
        s = flat_labels[i]
        if s:
            share = {int(s): 1.0}
        else:
            share = {}
            w = weights[i]
            for k in range(8):
                if w[k] > 0:
                    for sid, v in shares[i + offsets[k]].items():
                        share[sid] = share.get(sid, 0.0) + w[k] * v
        shares[i] = share
        top = max(share.values())
        zone[i] = min(sid for sid, v in share.items() if v >= top - tie_tol)
        for sid, v in share.items():
            sink_mass[sid - 1] += v

    zones = zone.reshape(z.shape).astype(float)
    zones[~valid] = np.nan
    sinks = labels.astype(float)
    sinks[~valid] = np.nan
    return MFDBasins(dem.like(zones, Kind.LABEL), dem.like(sinks, Kind.LABEL), sink_mass)


def delineate_mfd(dem):
    """Sub-watersheds as sink basins of the unfilled DEM (see :func:`mfd_basins`)."""
    return mfd_basins(dem).zones


@dataclass(frozen=True)
class TerrainProducts:
    slope: RasterGrid
    filled: RasterGrid
    dirs: RasterGrid
    acc: RasterGrid
    network: StreamNetwork
    distances: dict
    zones_d8: RasterGrid
    zones_mfd: RasterGrid
    stream_cutoff: int
    threshold_ha: float


def derive_terrain(dem, threshold_ha=66.7):
    """Run every terrain step on ``dem`` and collect the products."""
    filled = fill_sinks(dem)
    dirs = d8_flow_directions(filled)
    acc = flow_accumulation(dirs)
    network = extract_streams(acc, threshold_ha, dem.header.cellsize, dirs=dirs)
    distances = {lv: distance_to_streams(network, lv) for lv in range(1, MAX_STREAM_LEVEL + 1)}
    return TerrainProducts(
        slope=slope_degrees(dem),
        filled=filled,
        dirs=dirs,
        acc=acc,
        network=network,
        distances=distances,
        zones_d8=delineate_d8(dirs, network),
        zones_mfd=delineate_mfd(dem),
        stream_cutoff=stream_cell_threshold(threshold_ha, dem.header.cellsize),
        threshold_ha=float(threshold_ha),
    )
