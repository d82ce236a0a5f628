# forecaster/data.py
# ─────────────────────────────────────────────────────
# Daily series ingestion, min-max scaling, sample windows
# and the chronological train/test/validation split.
#
# CSV format (UTF-8, comma separated):
#   date,y,temperature,weather,holiday,week
#   2016-06-01,1043,24.5,sunny,ordinary,2
# weather/holiday are vocabulary strings, week is 0=Monday … 6=Sunday.
# ─────────────────────────────────────────────────────

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd  # type: ignore[reportMissingImports]

from config import HOLIDAY_CARDINALITY, WEATHER_CARDINALITY, WEEK_CARDINALITY, load_vocabulary
from forecaster.errors import DataError, MissingFeatureError, ScalerError, SeriesTooShortError
from forecaster.hfr import FeatureSchema, default_schema
from forecaster.logs import get_logger

log = get_logger("data")

CSV_COLUMNS = ["date", "y", "temperature", "weather", "holiday", "week"]
SCALED_COLUMNS = ("y", "temperature")


# ── Dataset ───────────────────────────────────────────

@dataclass(frozen=True)
class SeriesDataset:
    dates:       np.ndarray   # datetime64[D]
    y:           np.ndarray
    temperature: np.ndarray
    weather:     np.ndarray   # int ids
    holiday:     np.ndarray
    week:        np.ndarray

    def __post_init__(self):
        length = len(self.dates)
        for name in CSV_COLUMNS[1:]:
            if len(getattr(self, name)) != length:
                raise DataError(f"column {name!r} has {len(getattr(self, name))} rows, expected {length}")
        if length > 1:
            steps = np.diff(self.dates).astype(np.int64)
            if np.any(steps != 1):
                i = int(np.argmax(steps != 1))
                raise DataError(f"dates must be consecutive days: {self.dates[i]} is followed by {self.dates[i + 1]}")
        for name, size in (("weather", WEATHER_CARDINALITY), ("holiday", HOLIDAY_CARDINALITY), ("week", WEEK_CARDINALITY)):
            ids = getattr(self, name)
            if np.any((ids < 0) | (ids >= size)):
                raise DataError(f"{name} ids must lie in 0..{size - 1}")
        if np.any(self.y < 0):
            raise DataError("y must be nonnegative")

    def __len__(self) -> int:
        return len(self.dates)

    def column(self, name: str) -> np.ndarray:
        if name not in CSV_COLUMNS[1:]:
            raise DataError(f"dataset has no feature column {name!r}")
        return np.asarray(getattr(self, name), dtype=np.float64)

    def feature_matrix(self, schema: FeatureSchema) -> np.ndarray:
        """[T, n] features in schema order; categoricals stay integer-valued."""
        return np.stack([self.column(f.name) for f in schema.features], axis=1)

    def slice(self, start: int, stop: int) -> "SeriesDataset":
        return SeriesDataset(*(getattr(self, name)[start:stop] for name in ("dates", *CSV_COLUMNS[1:])))

    def to_frame(self, vocab: Mapping[str, list[str]] | None = None) -> pd.DataFrame:
        vocab = vocab or load_vocabulary()
        return pd.DataFrame({
            "date":        pd.to_datetime(self.dates).strftime("%Y-%m-%d"),
            "y":           self.y,
            "temperature": self.temperature,
            "weather":     [vocab["weather"][i] for i in self.weather],
            "holiday":     [vocab["holiday"][i] for i in self.holiday],
            "week":        self.week,
        })


def _first_bad(mask: pd.Series) -> int | None:
    if not mask.any():
        return None
    return int(np.argmax(mask.to_numpy()))


def load_csv(path: str | Path, vocab: Mapping[str, list[str]] | None = None) -> SeriesDataset:
    """
    Read and validate a daily series. Every error names the 1-based data row.
    """
    path = Path(path)
    vocab = vocab or load_vocabulary()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise DataError(f"cannot read {path}: file not found") from e
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"cannot parse {path}: {e}") from e

    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise DataError(f"{path}: no data rows")
    frame = frame[CSV_COLUMNS].apply(lambda col: col.str.strip())

    dates = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    row = _first_bad(dates.isna())
    if row is not None:
        raise DataError(f"row {row + 1}: date is not YYYY-MM-DD: {frame['date'].iloc[row]!r}")

    numeric = {}
    for name in ("y", "temperature"):
        values = pd.to_numeric(frame[name], errors="coerce")
        row = _first_bad(values.isna() | ~np.isfinite(values.fillna(0.0)))
        if row is not None:
            raise DataError(f"row {row + 1}: {name} is not numeric: {frame[name].iloc[row]!r}")
        numeric[name] = values.to_numpy(dtype=np.float64)
    row = _first_bad(pd.Series(numeric["y"] < 0))
    if row is not None:
        raise DataError(f"row {row + 1}: y must be nonnegative, got {numeric['y'][row]:g}")

    categories = {}
    for name in ("weather", "holiday"):
        index = {word: i for i, word in enumerate(vocab[name])}
        ids = frame[name].map(index)
        row = _first_bad(ids.isna())
        if row is not None:
            raise DataError(f"row {row + 1}: unknown {name} {frame[name].iloc[row]!r}")
        categories[name] = ids.to_numpy(dtype=np.int64)

    week = pd.to_numeric(frame["week"], errors="coerce")
    row = _first_bad(week.isna() | (week % 1 != 0) | (week < 0) | (week >= WEEK_CARDINALITY))
    if row is not None:
        raise DataError(f"row {row + 1}: week must be an integer 0..6, got {frame['week'].iloc[row]!r}")
    week = week.to_numpy(dtype=np.int64)
    row = _first_bad(pd.Series(week != dates.dt.weekday.to_numpy()))
    if row is not None:
        raise DataError(f"row {row + 1}: week {week[row]} does not match date {frame['date'].iloc[row]}")

    days = dates.to_numpy().astype("datetime64[D]")
    dup = _first_bad(pd.Series(days).duplicated())
    if dup is not None:
        raise DataError(f"row {dup + 1}: duplicated date {frame['date'].iloc[dup]}")
    steps = np.diff(days).astype(np.int64)
    if np.any(steps != 1):
        i = int(np.argmax(steps != 1))
        kind = "gap in dates" if steps[i] > 1 else "dates out of order"
        raise DataError(f"row {i + 2}: {kind} between {days[i]} and {days[i + 1]}")

    dataset = SeriesDataset(days, numeric["y"], numeric["temperature"],
                            categories["weather"], categories["holiday"], week)
    log.debug(f"[data] loaded {len(dataset)} days from {path}")
    return dataset


def write_csv(dataset: SeriesDataset, path: str | Path, vocab: Mapping[str, list[str]] | None = None) -> None:
    dataset.to_frame(vocab).to_csv(path, index=False)


# ── Scaling ───────────────────────────────────────────

@dataclass
class ScalerState:
    mins: dict[str, float] = field(default_factory=dict)
    maxs: dict[str, float] = field(default_factory=dict)

    @property
    def constant_columns(self) -> list[str]:
        return [name for name in self.mins if self.maxs[name] == self.mins[name]]

    def _bounds(self, column: str) -> tuple[float, float]:
        if column not in self.mins:
            raise ScalerError(f"scaler has not been fitted for column {column!r}")
        return self.mins[column], self.maxs[column]

    def scale_window(self, schema: FeatureSchema, window: np.ndarray) -> np.ndarray:
        """Scale the numerical columns of a [..., n] feature array; categoricals pass through."""
        out = np.array(window, dtype=np.float64)
        for i, spec in enumerate(schema.features):
            if spec.kind == "numerical":
                out[..., i] = scaler_apply(self, spec.name, out[..., i])
        return out


def scaler_fit(columns: Mapping[str, Sequence[float]]) -> ScalerState:
    state = ScalerState()
    for name, values in columns.items():
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ScalerError(f"cannot fit scaler on empty column {name!r}")
        state.mins[name] = float(arr.min())
        state.maxs[name] = float(arr.max())
    for name in state.constant_columns:
        log.warning(f"[data] column {name!r} is constant; it scales to 0")
    return state


def scaler_apply(state: ScalerState, column: str, values) -> np.ndarray:
    lo, hi = state._bounds(column)
    arr = np.asarray(values, dtype=np.float64)
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def scaler_invert(state: ScalerState, column: str, values) -> np.ndarray:
    lo, hi = state._bounds(column)
    arr = np.asarray(values, dtype=np.float64)
    return arr * (hi - lo) + lo


# ── Samples ───────────────────────────────────────────

@dataclass(frozen=True)
class Sample:
    anchor:      int           # 0-based index of the last history day t
    anchor_date: np.datetime64
    history:     np.ndarray    # [h]
    features:    np.ndarray    # [k + 2l, n]: days t+1−l … t+k+l
    targets:     np.ndarray    # [k]
    half_window: int

    @property
    def target(self) -> float:
        return float(self.targets[0])

    @property
    def horizon(self) -> int:
        return len(self.targets)

    def window(self, step: int = 1) -> np.ndarray:
        """The 2l+1 days centred on target day t+step."""
        width = 2 * self.half_window + 1
        return self.features[step - 1:step - 1 + width]

    @property
    def feature_window(self) -> np.ndarray:
        return self.window(1)

    @property
    def target_dates(self) -> np.ndarray:
        return self.anchor_date + np.arange(1, self.horizon + 1)


def first_anchor(h: int, l: int) -> int:
    """0-based index of the first usable anchor day."""
    # history needs h days and the first window needs l days before t+1
    return max(h, l) - 1


def window_count(length: int, h: int, l: int, k: int = 1) -> int:
    return max(length - max(h, l) - l - k + 1, 0)


def make_windows(
    dataset: SeriesDataset,
    h:       int,
    l:       int,
    k:       int = 1,
    schema:  FeatureSchema | None = None,
    scaler:  ScalerState | None = None,
) -> list[Sample]:
    """
    One sample per anchor t with history y_{t−h+1..t}, targets
    y_{t+1..t+k} and features for days t+1−l … t+k+l.

    With a scaler, y and the numerical features come out scaled.
    """
    if h < 1 or l < 0 or k < 1:
        raise DataError(f"need h ≥ 1, l ≥ 0, k ≥ 1, got h={h}, l={l}, k={k}")
    schema = schema or default_schema()
    length = len(dataset)
    needed = max(h, l) + l + k
    if length < needed:
        raise SeriesTooShortError(f"series has {length} days; h={h}, l={l}, k={k} needs at least {needed}")

    y = dataset.column("y")
    features = dataset.feature_matrix(schema)
    if scaler is not None:
        y = scaler_apply(scaler, "y", y)
        features = scaler.scale_window(schema, features)

    samples = []
    for t in range(first_anchor(h, l), length - l - k):
        samples.append(Sample(
            anchor=t,
            anchor_date=dataset.dates[t],
            history=y[t - h + 1:t + 1].copy(),
            features=features[t + 1 - l:t + k + l + 1].copy(),
            targets=y[t + 1:t + k + 1].copy(),
            half_window=l,
        ))
    return samples


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_sizes(count: int) -> tuple[int, int, int]:
    if count < 5:
        raise DataError(f"need at least 5 samples to split, got {count}")
    train = _round_half_up(0.6 * count)
    test = _round_half_up(0.2 * count)
    return train, test, count - train - test


def split_dataset(samples: Sequence[Sample]) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """
    Contiguous chronological 60/20/20 split, returned as (train, test, validation).

    Time order is train, then validation, then test, so the test
    block is the most recent stretch of the series.
    """
    n_train, n_test, n_val = split_sizes(len(samples))
    train = list(samples[:n_train])
    validation = list(samples[n_train:n_train + n_val])
    test = list(samples[n_train + n_val:])
    return train, test, validation


# ── Prepared splits ───────────────────────────────────

@dataclass
class Splits:
    train:      list[Sample]
    test:       list[Sample]
    validation: list[Sample]
    scaler:     ScalerState
    raw_test:   list[Sample]


def prepare_splits(dataset: SeriesDataset, h: int, l: int, k: int, schema: FeatureSchema | None = None) -> Splits:
    """
    Window, split and scale. The scaler only sees days up to the last
    training target, so nothing from validation or test leaks into it.
    """
    raw = make_windows(dataset, h, l, k, schema)
    train, test, validation = split_dataset(raw)
    last_day = train[-1].anchor + train[-1].horizon
    scaler = scaler_fit({name: dataset.column(name)[:last_day + 1] for name in SCALED_COLUMNS})
    scaled = make_windows(dataset, h, l, k, schema, scaler)
    s_train, s_test, s_val = split_dataset(scaled)
    return Splits(s_train, s_test, s_val, scaler, test)


def dataset_feature_provider(
    dataset: SeriesDataset,
    anchor:  int,
    l:       int,
    schema:  FeatureSchema | None = None,
) -> Callable[[int], np.ndarray]:
    """
    Raw feature window for forecast step j of a rollout from anchor t:
    the 2l+1 days centred on t+j.
    """
    schema = schema or default_schema()
    features = dataset.feature_matrix(schema)

    def provide(step: int) -> np.ndarray:
        start, stop = anchor + step - l, anchor + step + l
        if start < 0 or stop >= len(dataset):
            day = start if start < 0 else stop
            raise MissingFeatureError(f"no features for day {dataset.dates[0] + day} (forecast step {step})")
        return features[start:stop + 1].copy()

    return provide
