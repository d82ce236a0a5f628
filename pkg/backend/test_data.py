# test_data.py
# Run: pytest test_data.py

import numpy as np
import pandas as pd  # type: ignore[reportMissingImports]
import pytest

from forecaster.data import (
    first_anchor,
    load_csv,
    make_windows,
    prepare_splits,
    scaler_apply,
    scaler_fit,
    scaler_invert,
    split_dataset,
    split_sizes,
    window_count,
    write_csv,
    dataset_feature_provider,
)
from forecaster.errors import DataError, MissingFeatureError, ScalerError, SeriesTooShortError
from forecaster.hfr import default_schema

HEADER = "date,y,temperature,weather,holiday,week\n"
ROWS = [
    "2016-06-01,1043,24.5,sunny,ordinary,2",
    "2016-06-02,1010,25.0,cloudy,ordinary,3",
    "2016-06-03,990,23.1,light_rain,ordinary,4",
    "2016-06-04,820,22.0,sunny,festival,5",
]


def _write(tmp_path, rows, header=HEADER):
    path = tmp_path / "series.csv"
    path.write_text(header + "\n".join(rows) + "\n", encoding="utf-8")
    return path


# ── Loading ───────────────────────────────────────────

def test_load_csv(tmp_path):
    ds = load_csv(_write(tmp_path, ROWS))
    assert len(ds) == 4
    assert str(ds.dates[0]) == "2016-06-01"
    np.testing.assert_array_equal(ds.y, [1043, 1010, 990, 820])
    np.testing.assert_array_equal(ds.weather, [0, 1, 3, 0])
    np.testing.assert_array_equal(ds.holiday, [0, 0, 0, 2])


def test_write_then_load_keeps_the_series(tmp_path, dataset):
    path = tmp_path / "out.csv"
    write_csv(dataset, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.dates, dataset.dates)
    np.testing.assert_array_equal(back.y, dataset.y)
    np.testing.assert_array_equal(back.weather, dataset.weather)
    np.testing.assert_allclose(back.temperature, dataset.temperature, rtol=1e-15)


@pytest.mark.parametrize("rows, message", [
    (ROWS[:1] + ["2016-06-0x,1010,25.0,cloudy,ordinary,3"], "row 2: date"),
    (ROWS[:1] + ["2016-06-02,lots,25.0,cloudy,ordinary,3"], "row 2: y is not numeric"),
    (ROWS[:1] + ["2016-06-02,-4,25.0,cloudy,ordinary,3"], "row 2: y must be nonnegative"),
    (ROWS[:2] + ["2016-06-03,990,23.1,drizzle,ordinary,4"], "row 3: unknown weather"),
    (ROWS[:2] + ["2016-06-03,990,23.1,sunny,birthday,4"], "row 3: unknown holiday"),
    (ROWS[:2] + ["2016-06-03,990,23.1,sunny,ordinary,9"], "row 3: week must be"),
    (ROWS[:2] + ["2016-06-03,990,23.1,sunny,ordinary,1"], "row 3: week 1 does not match"),
    (ROWS[:2] + ["2016-06-02,990,23.1,sunny,ordinary,3"], "row 3: duplicated date"),
    (ROWS[:2] + ["2016-06-05,990,23.1,sunny,ordinary,6"], "gap in dates"),
])
def test_load_csv_errors_name_the_row(tmp_path, rows, message):
    with pytest.raises(DataError, match=message):
        load_csv(_write(tmp_path, rows))


def test_load_csv_missing_column(tmp_path):
    with pytest.raises(DataError, match="missing column"):
        load_csv(_write(tmp_path, [r.rsplit(",", 1)[0] for r in ROWS], header="date,y,temperature,weather,holiday\n"))


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "nope.csv")


# ── Windows ───────────────────────────────────────────

def _enumerate_windows(length, h, l, k):
    count = 0
    for t in range(length):
        if t - h + 1 >= 0 and t + 1 - l >= 0 and t + k + l <= length - 1:
            count += 1
    return count


def test_window_count_matches_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(200):
        length, h, l, k = rng.integers(1, 60), rng.integers(1, 15), rng.integers(0, 6), rng.integers(1, 5)
        assert window_count(length, h, l, k) == _enumerate_windows(length, h, l, k)


@pytest.mark.parametrize("seed", range(5))
def test_make_windows_anchors_match_enumeration(dataset, seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        length = int(rng.integers(30, 120))
        h, l, k = int(rng.integers(1, 15)), int(rng.integers(0, 6)), int(rng.integers(1, 8))
        part = dataset.slice(0, length)
        anchors = [s.anchor for s in make_windows(part, h, l, k)]
        expected = [t for t in range(length) if t - h + 1 >= 0 and t + 1 - l >= 0 and t + k + l <= length - 1]
        assert anchors == expected
        assert len(anchors) == _enumerate_windows(length, h, l, k)


def test_make_windows_contents(dataset):
    h, l, k = 5, 2, 3
    samples = make_windows(dataset, h, l, k)
    assert len(samples) == window_count(len(dataset), h, l, k)
    first = samples[0]
    t = first_anchor(h, l)
    assert first.anchor == t == 4
    np.testing.assert_array_equal(first.history, dataset.y[t - h + 1:t + 1])
    np.testing.assert_array_equal(first.targets, dataset.y[t + 1:t + k + 1])
    assert first.features.shape == (k + 2 * l, 4)
    np.testing.assert_array_equal(first.window(1)[:, 0], dataset.temperature[t + 1 - l:t + l + 2])
    np.testing.assert_array_equal(first.window(3)[:, 3], dataset.week[t + 3 - l:t + 3 + l + 1])
    assert first.target_dates[0] == dataset.dates[t + 1]
    last = samples[-1]
    assert last.anchor + k + l == len(dataset) - 1


def test_half_window_longer_than_history(dataset):
    samples = make_windows(dataset, 2, 4, 1)
    assert samples[0].anchor == 3
    assert len(samples[0].history) == 2


def test_series_too_short(dataset):
    short = dataset.slice(0, 8)
    with pytest.raises(SeriesTooShortError, match="needs at least 9"):
        make_windows(short, 5, 2, 2)
    assert len(make_windows(dataset.slice(0, 9), 5, 2, 2)) == 1


def test_scaled_windows(dataset):
    scaler = scaler_fit({"y": dataset.y, "temperature": dataset.temperature})
    samples = make_windows(dataset, 3, 1, 1, scaler=scaler)
    values = np.concatenate([s.history for s in samples])
    assert values.min() >= 0.0 and values.max() <= 1.0
    np.testing.assert_array_equal(samples[0].features[:, 1], dataset.weather[2:5])


# ── Split ─────────────────────────────────────────────

@pytest.mark.parametrize("count, sizes", [(10, (6, 2, 2)), (7, (4, 1, 2)), (5, (3, 1, 1)), (13, (8, 3, 2))])
def test_split_sizes(count, sizes):
    assert split_sizes(count) == sizes


def test_split_is_chronological(dataset):
    samples = make_windows(dataset, 4, 1, 1)
    train, test, validation = split_dataset(samples)
    assert len(train) + len(test) + len(validation) == len(samples)
    assert train[-1].anchor < validation[0].anchor
    assert validation[-1].anchor < test[0].anchor
    assert test[-1].anchor == samples[-1].anchor


def test_split_needs_five_samples():
    with pytest.raises(DataError):
        split_sizes(4)


def test_prepare_splits_fits_scaler_on_training_days(dataset):
    splits = prepare_splits(dataset, 4, 1, 2)
    last_day = splits.train[-1].anchor + 2
    assert splits.scaler.maxs["y"] == dataset.y[:last_day + 1].max()
    assert splits.scaler.mins["temperature"] == dataset.temperature[:last_day + 1].min()
    np.testing.assert_array_equal(splits.raw_test[0].history, dataset.y[splits.test[0].anchor - 3:splits.test[0].anchor + 1])


# ── Scaler ────────────────────────────────────────────

def test_scaler_round_trip():
    state = scaler_fit({"y": [10.0, 30.0, 17.0]})
    x = np.array([10.0, 17.0, 30.0])
    np.testing.assert_allclose(scaler_apply(state, "y", x), [0.0, 0.35, 1.0], atol=1e-15)
    np.testing.assert_allclose(scaler_invert(state, "y", scaler_apply(state, "y", x)), x, atol=1e-12)


def test_constant_column_scales_to_zero():
    state = scaler_fit({"y": [5.0, 5.0]})
    assert state.constant_columns == ["y"]
    np.testing.assert_array_equal(scaler_apply(state, "y", [5.0, 6.0]), 0.0)


def test_unfitted_column():
    state = scaler_fit({"y": [1.0, 2.0]})
    with pytest.raises(ScalerError):
        scaler_apply(state, "temperature", [1.0])


# ── Feature provider ──────────────────────────────────

def test_feature_provider(dataset):
    provide = dataset_feature_provider(dataset, 10, 2, default_schema())
    window = provide(1)
    assert window.shape == (5, 4)
    np.testing.assert_array_equal(window[:, 0], dataset.temperature[9:14])
    end = dataset_feature_provider(dataset, len(dataset) - 2, 1)
    with pytest.raises(MissingFeatureError, match="no features for day"):
        end(1)


def test_dataset_rejects_bad_columns(dataset):
    with pytest.raises(DataError):
        type(dataset)(dataset.dates, dataset.y[:-1], dataset.temperature, dataset.weather, dataset.holiday, dataset.week)
    frame = dataset.to_frame()
    assert list(frame.columns) == ["date", "y", "temperature", "weather", "holiday", "week"]
    assert isinstance(frame, pd.DataFrame)
