import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floodrisk.ahp import get_project, principal_eigen, build_matrix, weights_table
from floodrisk.errors import AlignmentError, ClassificationError, ConfigurationError
from floodrisk.indicators import INDICATOR_ORDER, Indicator, IndicatorStack, RankedIndicator
from floodrisk.raster import Kind
from floodrisk.risk import (
    ModelVariant,
    apply_breaks,
    classify_fri,
    compute_fri,
    jenks_breaks,
    natural_breaks,
    write_risk_product,
    zonal_max,
)

from conftest import make_grid


def brute_zonal_max(zones, values):
    out = values.copy()
    for z in np.unique(zones):
        if z == 0:
            continue
        sel = zones == z
        out[sel] = values[sel].max()
    return out


def test_zonal_max_single_zone():
    zones = make_grid(np.ones((2, 3)), kind=Kind.LABEL)
    vals = make_grid([[1, 3, 5], [1, 1, 3]])
    assert np.all(zonal_max(zones, vals).cells == 5)


def test_zonal_max_two_zones_and_passthrough():
    zones = make_grid([[1, 1, 2, 0]], kind=Kind.LABEL)
    vals = make_grid([[2, 1, 4, 3]])
    assert zonal_max(zones, vals).cells.tolist() == [[2, 2, 4, 3]]


def test_zonal_max_misaligned():
    with pytest.raises(AlignmentError):
        zonal_max(make_grid([[1, 1]], kind=Kind.LABEL), make_grid([[1, 2, 3]]))


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_zonal_max_oracle_and_properties(seed):
    rng = np.random.default_rng(seed)
    nr, nc = rng.integers(1, 21, 2)
    zones = rng.integers(0, rng.integers(1, 12), (nr, nc)).astype(float)
    vals = rng.integers(0, 6, (nr, nc)).astype(float)
    got = zonal_max(make_grid(zones, kind=Kind.LABEL), make_grid(vals)).cells
    assert np.array_equal(got, brute_zonal_max(zones, vals))
    assert np.all(got >= vals)
    for z in np.unique(zones[zones > 0]):
        assert np.unique(got[zones == z]).size == 1


def random_stack(rng, shape):
    inds = []
    for name in INDICATOR_ORDER:
        legal = np.array(sorted(name.legal_ranks), float)
        inds.append(RankedIndicator(name, make_grid(rng.choice(legal, shape), kind=Kind.CATEGORICAL)))
    return IndicatorStack(tuple(inds))


def _single_rank_stack(values):
    # values: {Indicator: 2-D array}
    return IndicatorStack(tuple(RankedIndicator(n, make_grid(values[n], kind=Kind.CATEGORICAL)) for n in INDICATOR_ORDER))


def test_pixel_fri_uniform_rank():
    rng = np.random.default_rng(0)
    stack = _single_rank_stack({n: np.full((2, 2), 3.0) for n in INDICATOR_ORDER})
    for _, r in weights_table():
        fri = compute_fri(stack, r, ModelVariant.PIXEL_AHP)
        np.testing.assert_allclose(fri.cells, 3.0, atol=1e-14)


def test_mfd_rc_worked_cell():
    # cell 0 carries the raw ranks; cell 1 lifts the zone maxima of S and D
    vals = {
        Indicator.SLOPE: np.array([[2.0, 4.0]]),
        Indicator.ELEVATION: np.array([[5.0, 1.0]]),
        Indicator.DIST_STREAMS: np.array([[1.0, 3.0]]),
        Indicator.HYDRO_LITH: np.array([[3.0, 1.0]]),
        Indicator.LAND_USE: np.array([[1.0, 1.0]]),
    }
    zones = make_grid([[1, 1]], kind=Kind.LABEL)
    w = [0.214, 0.068, 0.302, 0.100, 0.315]
    fri = compute_fri(_single_rank_stack(vals), w, ModelVariant.MFD_RC, zones_mfd=zones)
    assert fri.cells[0, 0] == pytest.approx(2.717, abs=1e-12)


def test_missing_zone_raster():
    stack = _single_rank_stack({n: np.full((1, 1), 1.0) for n in INDICATOR_ORDER})
    with pytest.raises(ConfigurationError):
        compute_fri(stack, [0.2] * 5, ModelVariant.D8_RC)
    with pytest.raises(ConfigurationError):
        compute_fri(stack, [0.5] * 2, ModelVariant.PIXEL_AHP)


def test_variant_parse_and_sets():
    assert ModelVariant.parse("mfd-rc") is ModelVariant.MFD_RC
    assert ModelVariant.parse("AHP") is ModelVariant.PIXEL_AHP
    assert ModelVariant.MFD_RC.constrained == {Indicator.SLOPE, Indicator.DIST_STREAMS}
    assert ModelVariant.D8_ALL.constrained == set(INDICATOR_ORDER)
    with pytest.raises(ValueError):
        ModelVariant.parse("bogus")


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_fri_properties(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(1, 9, 2))
    stack = random_stack(rng, shape)
    singles = make_grid(np.arange(1, shape[0] * shape[1] + 1).reshape(shape), kind=Kind.LABEL)
    zones = make_grid(rng.integers(0, 4, shape), kind=Kind.LABEL)
    w = principal_eigen(build_matrix(get_project(int(rng.integers(1, 49)))))
    pixel = compute_fri(stack, w, ModelVariant.PIXEL_AHP).cells
    layers = np.stack([i.grid.cells for i in stack])
    assert np.all(pixel >= layers.min(axis=0) - 1e-12) and np.all(pixel <= layers.max(axis=0) + 1e-12)
    for v in ModelVariant:
        fri = compute_fri(stack, w, v, singles, singles).cells
        np.testing.assert_allclose(fri, pixel, atol=1e-12)
        # constraining never lowers the index
        assert np.all(compute_fri(stack, w, v, zones, zones).cells >= pixel - 1e-12)
    # raising one rank at one cell never lowers that cell's FRI
    j = int(rng.integers(5))
    name = INDICATOR_ORDER[j]
    arr = stack[name].grid.cells.copy()
    r, c = rng.integers(shape[0]), rng.integers(shape[1])
    higher = [x for x in sorted(name.legal_ranks) if x > arr[r, c]]
    if higher:
        arr[r, c] = higher[0]
        bumped = list(stack.indicators)
        bumped[j] = RankedIndicator(name, make_grid(arr, kind=Kind.CATEGORICAL))
        for v in ModelVariant:
            before = compute_fri(stack, w, v, zones, zones).cells[r, c]
            after = compute_fri(IndicatorStack(tuple(bumped)), w, v, zones, zones).cells[r, c]
            assert after >= before - 1e-12


def test_fri_nodata_propagates():
    vals = {n: np.array([[1.0, 1.0]]) for n in INDICATOR_ORDER}
    vals[Indicator.ELEVATION] = np.array([[np.nan, 1.0]])
    fri = compute_fri(_single_rank_stack(vals), [0.2] * 5, ModelVariant.PIXEL_AHP)
    assert fri.valid.tolist() == [[False, True]]


# -- natural breaks ---------------------------------------------------------

def _ssd(groups):
    return sum(float(((g - g.mean()) ** 2).sum()) for g in groups)


def brute_jenks_cost(values, k):
    v = np.sort(np.asarray(values, float))
    u = np.unique(v)
    best = np.inf
    # classes may only split between distinct values
    for cuts in itertools.combinations(range(1, u.size), k - 1):
        edges = [u[0] - 1] + [u[c - 1] for c in cuts] + [u[-1]]
        groups = [v[(v > lo) & (v <= hi)] for lo, hi in zip(edges[:-1], edges[1:])]
        best = min(best, _ssd(groups))
    return best


def test_breaks_examples():
    assert jenks_breaks([1, 2, 3, 4, 5], 5) == [1.0, 2.0, 3.0, 4.0]
    assert jenks_breaks([1, 1, 1, 10, 10, 10], 2) == [1.0]
    with pytest.raises(ClassificationError):
        jenks_breaks([1, 1, 2], 3)


@settings(max_examples=250)
@given(st.lists(st.integers(0, 40), min_size=2, max_size=12), st.integers(2, 4))
def test_jenks_cost_equals_exhaustive(vals, k):
    vals = np.array(vals, float) / 4.0
    if np.unique(vals).size < k:
        return
    br = natural_breaks(vals, k)
    levels = apply_breaks(vals, br.thresholds)
    groups = [vals[levels == i] for i in range(1, k + 1)]
    assert all(g.size for g in groups)
    assert _ssd(groups) == pytest.approx(brute_jenks_cost(vals, k), rel=1e-9, abs=1e-12)
    assert br.cost == pytest.approx(_ssd(groups), rel=1e-9, abs=1e-9)


def test_break_value_goes_to_lower_class():
    assert apply_breaks(np.array([1.0, 2.0, 2.5, 3.0]), [2.0]).tolist() == [1, 1, 2, 2]


def test_subsampling_records_seed():
    v = np.random.default_rng(1).normal(size=6000)
    a = natural_breaks(v, 5, seed=7, max_values=500)
    b = natural_breaks(v, 5, seed=7, max_values=500)
    assert a == b and a.seed == 7 and a.sample_size == 500
    assert natural_breaks(v[:100], 5).sample_size is None


def test_classify_constant_fri():
    with pytest.raises(ClassificationError, match="1 distinct"):
        classify_fri(make_grid(np.full((3, 3), 2.0)))


def test_classify_uniform_ranks():
    fri = make_grid(np.tile(np.arange(1.0, 6.0), (4, 1)))
    assert np.array_equal(classify_fri(fri).levels.cells, fri.cells)


def test_classify_valley_class_means_increase():
    from floodrisk.indicators import build_stack
    from floodrisk.synthetic import generate, valley_scenario
    from floodrisk.terrain import derive_terrain

    scene = generate(valley_scenario(128))
    tp = derive_terrain(scene.dem)
    stack = build_stack(tp, scene.dem, scene.landuse, scene.hydrolith, scene.permanent_water)
    w = principal_eigen(build_matrix(get_project(1)))
    for v in ModelVariant:
        product = classify_fri(compute_fri(stack, w, v, tp.zones_mfd, tp.zones_d8))
        counts = product.level_counts()
        assert np.all(counts > 0), v
        means = [product.fri.cells[product.levels.cells == i].mean() for i in range(1, 6)]
        assert np.all(np.diff(means) > 0), v


def test_write_risk_product(tmp_path):
    from floodrisk.raster import read_ascii_grid

    fri = make_grid(np.tile(np.arange(1.0, 6.0), (2, 1)))
    product = classify_fri(fri, seed=3, variant="PixelAHP", prj_no=1)
    paths = write_risk_product(product, tmp_path, "PixelAHP")
    assert read_ascii_grid(paths["levels"], Kind.CATEGORICAL) == product.levels
    meta = (tmp_path / "PixelAHP_meta.txt").read_text().splitlines()
    assert "variant = PixelAHP" in meta and "prj_no = 1" in meta
    assert "breaks = 1.0,2.0,3.0,4.0" in meta
