import numpy as np
import pytest
from hypothesis import given, strategies as st

from floodrisk.errors import AlignmentError, CellCountError, HeaderError, TokenError
from floodrisk.raster import (
    GridHeader,
    Kind,
    RasterGrid,
    grids_aligned,
    read_ascii_grid,
    require_aligned,
    write_ascii_grid,
)

from conftest import make_grid


def _write(tmp_path, text, name="g.asc"):
    p = tmp_path / name
    p.write_text(text)
    return p


HEADER_1x1 = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n"


def test_read_smallest_grid(tmp_path):
    g = read_ascii_grid(_write(tmp_path, HEADER_1x1 + "7\n"))
    assert g.header.ncols == 1 and g.header.nrows == 1
    assert g.cells.tolist() == [[7.0]]
    assert g.header.cellsize == 30.0


def test_header_keys_case_insensitive_and_center(tmp_path):
    text = "NCOLS 2\nNROWS 1\nXLLCENTER 15\nYLLCENTER 15\nCELLSIZE 30\n1 2\n"
    g = read_ascii_grid(_write(tmp_path, text))
    assert g.header.xll == 0.0 and g.header.yll == 0.0
    assert g.header.nodata == -9999.0


def test_cell_count_error_message(tmp_path):
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n"
    with pytest.raises(CellCountError, match="expected 4, found 3"):
        read_ascii_grid(_write(tmp_path, text))


def test_header_error_names_key(tmp_path):
    text = "ncols 2\nnrows x\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3 4\n"
    with pytest.raises(HeaderError, match="nrows"):
        read_ascii_grid(_write(tmp_path, text))
    with pytest.raises(HeaderError, match="cellsize"):
        read_ascii_grid(_write(tmp_path, "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\n1\n"))


def test_token_error_position(tmp_path):
    text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3 abc\n"
    with pytest.raises(TokenError) as info:
        read_ascii_grid(_write(tmp_path, text))
    assert (info.value.row, info.value.col) == (1, 1)


def test_roundtrip_zero(tmp_path):
    g = make_grid([[0.0]])
    write_ascii_grid(g, tmp_path / "z.asc")
    assert read_ascii_grid(tmp_path / "z.asc") == g


def test_nodata_token_matches_header(tmp_path):
    g = make_grid([[1.5, np.nan]])
    write_ascii_grid(g, tmp_path / "n.asc")
    lines = (tmp_path / "n.asc").read_text().splitlines()
    assert lines[5] == "NODATA_value -9999"
    assert lines[6].split()[1] == "-9999"


def test_unwritable_path_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        write_ascii_grid(make_grid([[1.0]]), tmp_path / "missing" / "x.asc")


def test_categorical_requires_integers():
    with pytest.raises(ValueError):
        make_grid([[1.5]], kind=Kind.CATEGORICAL)


def test_cells_read_only():
    g = make_grid([[1.0, 2.0]])
    with pytest.raises(ValueError):
        g.cells[0, 0] = 5.0


@given(st.integers(0, 2**32 - 1), st.sampled_from([Kind.CONTINUOUS, Kind.CATEGORICAL]))
def test_roundtrip_random_8x8(tmp_path_factory, seed, kind):
    rng = np.random.default_rng(seed)
    if kind is Kind.CONTINUOUS:
        arr = rng.normal(0, 1e3, (8, 8)) * 10.0 ** rng.integers(-6, 6, (8, 8))
    else:
        arr = rng.integers(0, 6, (8, 8)).astype(float)
    arr[rng.random((8, 8)) < 0.1] = np.nan
    g = make_grid(arr, cellsize=float(rng.uniform(0.5, 100)), kind=kind, xll=float(rng.normal(0, 1e5)))
    path = tmp_path_factory.mktemp("rt") / "g.asc"
    write_ascii_grid(g, path)
    assert read_ascii_grid(path, kind) == g


def test_alignment_examples():
    h = GridHeader(10, 5, 0.0, 0.0, 30.0)
    a = RasterGrid(h, np.zeros(h.shape))
    assert grids_aligned(a, RasterGrid(GridHeader(10, 5, 0.0, 0.0, 30.0), np.zeros(h.shape)))
    assert not grids_aligned(a, RasterGrid(GridHeader(11, 5, 0.0, 0.0, 30.0), np.zeros((5, 11))))
    assert not grids_aligned(a, RasterGrid(GridHeader(10, 5, 15.0, 0.0, 30.0), np.zeros(h.shape)))
    with pytest.raises(AlignmentError, match="b is not aligned with a"):
        require_aligned(a, RasterGrid(GridHeader(10, 5, 15.0, 0.0, 30.0), np.zeros(h.shape)), names=["a", "b"])


@given(st.lists(st.sampled_from([0.0, 1.0, 100.0]), min_size=3, max_size=3), st.lists(st.integers(1, 3), min_size=3, max_size=3))
def test_alignment_equivalence(offsets, sizes):
    grids = [RasterGrid(GridHeader(s, 2, o, 0.0, 30.0), np.zeros((2, s))) for o, s in zip(offsets, sizes)]
    a, b, c = grids
    assert grids_aligned(a, a)
    assert grids_aligned(a, b) == grids_aligned(b, a)
    if grids_aligned(a, b) and grids_aligned(b, c):
        assert grids_aligned(a, c)
