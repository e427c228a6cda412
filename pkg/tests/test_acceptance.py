"""One test per acceptance criterion, each checked at its tolerance and time limit.

A summary line per criterion is printed at the end of the pytest run.
"""
import itertools
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, make_grid, random_filled_dem
from floodrisk.ahp import consistency_gate, enumerate_projects, weights_table
from floodrisk.cli import cmd_weights
from floodrisk.indicators import INDICATOR_ORDER, build_stack
from floodrisk.raster import Kind
from floodrisk.risk import ModelVariant, apply_breaks, classify_fri, compute_fri, jenks_breaks, zonal_max
from floodrisk.synthetic import generate, valley_scenario
from floodrisk.terrain import (
    d8_flow_directions,
    delineate_d8,
    derive_terrain,
    downstream_index,
    extract_streams,
    flow_accumulation,
    mfd_basins,
    topological_order,
)
from floodrisk.validation import FloodMask, high_ratio, positive_mask, score
from test_ahp import load_reference
from test_risk import brute_zonal_max, random_stack

ACCEPTANCE_LINES[3] = "criterion 3: N/A  desk-scale reproduction unavailable; substituted by criteria 4-8"


@contextmanager
def criterion(n, title, limit_s):
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES[n] = f"criterion {n}: FAIL  {title} ({elapsed:.2f}s) {type(exc).__name__}: {exc}"
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < limit_s
    extra = f" {detail['note']}" if "note" in detail else ""
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES[n] = f"criterion {n}: {status}  {title} ({elapsed:.2f}s < {limit_s:g}s){extra}"
    assert ok, f"criterion {n} took {elapsed:.2f}s, limit {limit_s}s"


def test_criterion_1_weights_table():
    with criterion(1, "weights table within 0.001 of reference", 1.0) as d:
        text = cmd_weights()
        lines = text.splitlines()
        header = lines[0].split(",")
        assert len(lines) == 49
        worst = 0.0
        for line, ref in zip(lines[1:], load_reference()):
            row = dict(zip(header, line.split(",")))
            assert [row["prj_no"], row["s_e"], row["s_r"], row["e_r"]] == [ref["prj_no"], ref["s_e"], ref["s_r"], ref["e_r"]]
            for ours, theirs in (("w1", "w1"), ("w2", "w2"), ("w3", "w3"), ("w4", "w4"), ("w5", "w5"), ("lambda_max", "lambda_max"), ("CR", "CR")):
                diff = abs(float(row[ours]) - float(ref[theirs]))
                worst = max(worst, diff)
                assert diff <= 0.001 + 1e-9, (row["prj_no"], ours, row[ours], ref[theirs])
        first, p45, p48 = (dict(zip(header, lines[i].split(","))) for i in (1, 45, 48))
        assert [first[k] for k in ("w1", "w2", "w3", "w4", "w5", "lambda_max", "CR")] == [
            "0.214", "0.068", "0.302", "0.100", "0.315", "5.133", "0.030"]
        assert (p45["lambda_max"], p45["CR"]) == ("5.423", "0.095")
        assert [p48[k] for k in ("w1", "w2", "w3", "w4", "w5")] == ["0.222", "0.047", "0.351", "0.089", "0.291"]
        d["note"] = f"max |diff| {worst:.3f}"


def test_criterion_2_consistency_gate():
    with criterion(2, "all 48 matrices consistent with w3 > w1 > w2", 1.0):
        table = weights_table(enumerate_projects())
        assert len(table) == 48
        for p, r in table:
            assert r.cr < 0.1 and consistency_gate(r), p
            assert r.weights[2] > r.weights[0] > r.weights[1], p


def test_criterion_4_zonal_max_oracle():
    rng = np.random.default_rng(4)
    with criterion(4, "zonal max equals brute force on 200 instances", 5.0):
        for _ in range(200):
            nr, nc = rng.integers(1, 21, 2)
            zones = rng.integers(0, rng.integers(1, 30), (nr, nc)).astype(float)
            vals = rng.choice([0.0, 1, 2, 3, 4, 5], (nr, nc))
            got = zonal_max(make_grid(zones, kind=Kind.LABEL), make_grid(vals)).cells
            assert np.array_equal(got, brute_zonal_max(zones, vals))


def _exact_ssd(groups):
    total = Fraction(0)
    for g in groups:
        g = [Fraction(int(x)) for x in g]
        m = sum(g) / len(g)
        total += sum((x - m) ** 2 for x in g)
    return total


def _exhaustive_cost(values, k):
    v = sorted(int(x) for x in values)
    best = None
    # every partition of the sorted values into k contiguous non-empty runs
    for cuts in itertools.combinations(range(1, len(v)), k - 1):
        bounds = (0,) + cuts + (len(v),)
        groups = [v[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        cost = _exact_ssd(groups)
        best = cost if best is None or cost < best else best
    return best


def test_criterion_5_jenks_oracle():
    rng = np.random.default_rng(5)
    with criterion(5, "Jenks cost equals exhaustive enumeration", 10.0) as d:
        done = 0
        while done < 240:
            n = int(rng.integers(2, 13))
            k = int(rng.integers(2, 5))
            vals = rng.integers(0, 30, n).astype(float)
            if np.unique(vals).size < k:
                continue
            levels = apply_breaks(vals, jenks_breaks(vals, k))
            groups = [vals[levels == i] for i in range(1, k + 1)]
            assert _exact_ssd(groups) == _exhaustive_cost(vals, k), (vals.tolist(), k)
            done += 1
        d["note"] = f"{done} instances"


def test_criterion_6_singleton_zones():
    rng = np.random.default_rng(6)
    weights = [r for _, r in weights_table()]
    with criterion(6, "constrained variants equal PixelAHP on singleton zones", 10.0):
        for _ in range(50):
            shape = tuple(int(x) for x in rng.integers(1, 16, 2))
            stack = random_stack(rng, shape)
            singles = make_grid(rng.permutation(shape[0] * shape[1]).reshape(shape) + 1.0, kind=Kind.LABEL)
            for w in weights:
                pixel = compute_fri(stack, w, ModelVariant.PIXEL_AHP).cells
                for v in (ModelVariant.MFD_ALL, ModelVariant.D8_ALL, ModelVariant.MFD_RC, ModelVariant.D8_RC):
                    fri = compute_fri(stack, w, v, singles, singles).cells
                    assert np.max(np.abs(fri - pixel)) <= 1e-12


def test_criterion_7_hydrology_conservation():
    rng = np.random.default_rng(7)
    with criterion(7, "accumulation, acyclicity, partitions and MFD mass on 50 DEMs", 30.0):
        for _ in range(50):
            nr, nc = (int(x) for x in rng.integers(1, 65, 2))
            filled = random_filled_dem(rng, nr, nc, nodata_frac=float(rng.choice([0.0, 0.03])))
            if not filled.valid.any():
                continue
            dirs = d8_flow_directions(filled)
            order, down = topological_order(dirs)
            assert order.size == filled.valid.sum()
            acc = flow_accumulation(dirs)
            outlets = filled.valid.ravel() & (downstream_index(dirs) < 0)
            assert acc.cells.ravel()[outlets].sum() == filled.valid.sum()
            # a cutoff of about ten cells keeps a network on every size
            cutoff = min(10, int(acc.cells[filled.valid].max()))
            threshold_ha = cutoff * filled.header.cell_area / 1e4
            net = extract_streams(acc, threshold_ha, dirs=dirs)
            zones_d8 = delineate_d8(dirs, net)
            assert np.array_equal(zones_d8.valid, filled.valid)
            assert np.all(zones_d8.cells[filled.valid] >= 1)
            b = mfd_basins(filled)
            zm = b.zones.cells
            assert np.all(zm[filled.valid] >= 1)
            assert set(np.unique(zm[filled.valid]).tolist()) == set(range(1, b.n_zones + 1))
            n = filled.valid.sum()
            assert abs(b.sink_mass.sum() - n) <= 1e-6 * n


def test_criterion_8_end_to_end_stability():
    with criterion(8, "MFD_RC high+very-high ratio range <= PixelAHP range over 48 projects", 60.0) as d:
        scene = generate(valley_scenario(128, seed=0))
        tp = derive_terrain(scene.dem)
        stack = build_stack(tp, scene.dem, scene.landuse, scene.hydrolith, scene.permanent_water)
        mask = FloodMask(scene.truth, scene.permanent_water)
        ranges = {}
        for v in (ModelVariant.PIXEL_AHP, ModelVariant.MFD_RC):
            highs = []
            for _, w in weights_table():
                product = classify_fri(compute_fri(stack, w, v, tp.zones_mfd, tp.zones_d8))
                assert not score(positive_mask(product), mask).degenerate
                highs.append(high_ratio(product))
            ranges[v] = max(highs) - min(highs)
        d["note"] = f"range MFD_RC {ranges[ModelVariant.MFD_RC]:.4f} vs PixelAHP {ranges[ModelVariant.PIXEL_AHP]:.4f}"
        assert ranges[ModelVariant.MFD_RC] <= ranges[ModelVariant.PIXEL_AHP]


def test_criterion_9_validation_arithmetic():
    def grids(n, p_idx, t_idx):
        p, t = np.zeros((1, n)), np.zeros((1, n))
        p[0, list(p_idx)] = 1
        t[0, list(t_idx)] = 1
        return make_grid(p, kind=Kind.CATEGORICAL), FloodMask(make_grid(t, kind=Kind.CATEGORICAL))

    with criterion(9, "correct/fit arithmetic and edge cases", 1.0):
        s = score(*grids(200, range(60), range(30, 80)))
        assert (s.correct_pct, s.fit_pct) == (60.0, 37.5)
        s = score(*grids(20, range(5), range(5)))
        assert (s.correct_pct, s.fit_pct) == (100.0, 100.0)
        s = score(*grids(20, range(5), range(10, 15)))
        assert (s.correct_pct, s.fit_pct) == (0.0, 0.0)
