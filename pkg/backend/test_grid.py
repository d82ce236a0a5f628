# test_grid.py
# Run: pytest test_grid.py

import math

import pytest

from config import build_settings, parse_kv
from forecaster.errors import ConfigError
from forecaster.grid import GridSpec, grid_frame, grid_search, one_at_a_time_grid
from forecaster.training import TrainConfig


@pytest.fixture
def training():
    return TrainConfig(epochs=1, batch_size=32)


def test_grid_document_accepts_short_names():
    values = parse_kv("h = 3, 5\nk = 1\nhidden = 2, 4\nepochs = 1\n")
    grid = build_settings(GridSpec, GridSpec.canonical_keys(values), "grid.conf")
    assert grid.history == [3, 5]
    assert grid.horizon == [1]
    assert grid.enc_hidden == [2, 4]
    assert grid.half_window is None


def test_grid_document_errors():
    with pytest.raises(ConfigError, match="grid.conf"):
        build_settings(GridSpec, {"history": "3, x"}, "grid.conf")
    with pytest.raises(ConfigError):
        build_settings(GridSpec, {"dropout": "0.1"}, "grid.conf")


def test_grid_search_ranks_cells(dataset, tiny_config, training):
    grid = GridSpec(history=[3, 4], enc_hidden=[2])
    rows = grid_search(grid, dataset, tiny_config, training)
    assert len(rows) == 2
    assert all(row.status == "ok" for row in rows)
    assert rows[0].val_rmse <= rows[1].val_rmse
    assert {row.params["history"] for row in rows} == {3, 4}
    assert rows[0].params["half_window"] == tiny_config.half_window
    assert len(rows[0].history) == 1


def test_unrunnable_cells_sort_last(dataset, tiny_config, training):
    grid = GridSpec(history=[200, 3])
    rows = grid_search(grid, dataset, tiny_config, training)
    assert [row.params["history"] for row in rows] == [3, 200]
    assert rows[1].status == "skipped"
    assert "needs at least" in rows[1].reason
    assert math.isnan(rows[1].val_rmse)

    frame = grid_frame(rows)
    assert list(frame["status"]) == ["ok", "skipped"]


def test_one_at_a_time_grid(tiny_config):
    grid = one_at_a_time_grid(tiny_config, "l", [0, 2], seed=9)
    assert grid.half_window == [0, 2]
    assert grid.history is None
    assert grid.seed == 9
    with pytest.raises(ConfigError, match="unknown grid axis"):
        one_at_a_time_grid(tiny_config, "dropout", [1])
    with pytest.raises(ConfigError):
        one_at_a_time_grid(tiny_config, "k", [0])
