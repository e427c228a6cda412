import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floodrisk.raster import GridHeader, Kind, RasterGrid

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_grid(arr, cellsize=30.0, kind=Kind.CONTINUOUS, xll=0.0, yll=0.0):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    header = GridHeader(arr.shape[1], arr.shape[0], xll, yll, cellsize)
    return RasterGrid.from_array(arr, header, kind)


@pytest.fixture
def grid():
    return make_grid


def random_filled_dem(rng, nrows, ncols, nodata_frac=0.0):
    from floodrisk.terrain import fill_sinks

    z = rng.normal(0, 5, (nrows, ncols)).cumsum(axis=0) + rng.uniform(0, 50, (nrows, ncols))
    if nodata_frac:
        z[rng.random((nrows, ncols)) < nodata_frac] = np.nan
    return fill_sinks(make_grid(z))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
