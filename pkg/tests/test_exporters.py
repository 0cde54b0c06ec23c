from specpart.exporters import (
    HISTORY_COLUMNS,
    PALETTE,
    history_to_csv,
    support_labels,
    write_manifest,
    write_support_raster,
)
from specpart.optimizer import SolverConfig, solve

from collections import OrderedDict
import json

import numpy as np
import pandas as pd

import pytest

from .fixtures.grids import unit_square_32
from .fixtures.grids import unit_cube_16
from .fixtures.grids import l_shape_grid
from .fixtures.grids import half_square_supports


def read_ppm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        width, height = (int(v) for v in f.readline().split())
        maxval = int(f.readline())
        data = np.frombuffer(f.read(), dtype=np.uint8)
    return magic, width, height, maxval, data.reshape(height, width, 3)


def test_support_labels(l_shape_grid):
    supports = half_square_supports(l_shape_grid)
    supports[1] = False
    labels = support_labels(l_shape_grid, supports)
    assert np.all(labels[~l_shape_grid.mask] == -1)
    assert np.all(labels[supports[0]] == 1)
    assert np.all(labels[l_shape_grid.mask & ~supports[0]] == 0)


def test_support_raster(tmp_path, l_shape_grid):
    supports = half_square_supports(l_shape_grid)
    path = str(tmp_path / "support.ppm")
    write_support_raster(path, l_shape_grid, supports)
    magic, width, height, maxval, image = read_ppm(path)
    assert magic == b"P6"
    assert (width, height) == (16, 16)
    assert maxval == 255
    # first axis left to right, second axis bottom to top
    assert tuple(image[-1, 0]) == PALETTE[0]
    assert tuple(image[0, 15]) == (255, 255, 255)
    assert tuple(image[-1, 15]) == PALETTE[1]


def test_support_raster_three_dimensional(tmp_path, unit_cube_16):
    supports = np.zeros((2,) + unit_cube_16.dims, dtype=bool)
    supports[0, :8] = True
    path = str(tmp_path / "support.ppm")
    write_support_raster(path, unit_cube_16, supports)
    _, width, height, _, image = read_ppm(path)
    assert (width, height) == (16, 16)
    assert tuple(image[0, 15]) == (0, 0, 0)


def test_history_to_csv(tmp_path, unit_square_32):
    state, _ = solve(unit_square_32, SolverConfig(2, 0.1, resolution=32, max_outer=2,
                                                  max_inner=5))
    path = str(tmp_path / "history.csv")
    history_to_csv(state.energy_history, path)
    df = pd.read_csv(path)
    assert list(df.columns) == HISTORY_COLUMNS
    assert len(df) == len(state.energy_history)
    assert df.iteration.is_monotonic_increasing


def test_write_manifest(tmp_path):
    manifest = OrderedDict([
        ("count", np.int64(3)),
        ("value", np.float64(0.5)),
        ("flag", np.bool_(True)),
        ("array", np.arange(3)),
        ("nested", {(0, 1): (1.0, 2.0)}),
        ("missing", None),
        ("sem", np.nan),
        ("bound", float("inf")),
    ])
    path = str(tmp_path / "manifest.json")
    write_manifest(path, manifest)
    with open(path) as f:
        loaded = json.load(f)
    assert list(loaded) == ["count", "value", "flag", "array", "nested", "missing", "sem",
                            "bound"]
    assert loaded["count"] == 3
    assert loaded["flag"] is True
    assert loaded["array"] == [0, 1, 2]
    assert loaded["nested"] == {"(0, 1)": [1.0, 2.0]}
    assert loaded["missing"] is None
    assert loaded["sem"] is None
    assert loaded["bound"] is None
