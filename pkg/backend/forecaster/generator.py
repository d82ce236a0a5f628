# forecaster/generator.py
# ─────────────────────────────────────────────────────
# Synthetic daily parcel counts with known, planted effects:
#
#   y_t = base
#       + weekly[dow]
#       + temperature effect   (quadratic on weekends, tanh on workdays)
#       + weather effect       (rare classes hit hardest)
#       + holiday lead         (the days before a holiday feel it)
#       + holiday lag          (and the days after)
#       + AR(1) noise
#
# floored at 0 and rounded. The per-day terms are returned as an
# effect log so tests can check recovered couplings against truth.
# ─────────────────────────────────────────────────────

from __future__ import annotations

import datetime as dt

import numpy as np
import pandas as pd  # type: ignore[reportMissingImports]
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator  # type: ignore[reportMissingImports]

from config import (
    DEFAULT_SEED,
    HOLIDAY_CARDINALITY,
    WEATHER_CARDINALITY,
    WEEK_CARDINALITY,
    WEEKEND_DAYS,
    load_vocabulary,
    split_list,
    split_mapping,
)
from forecaster.data import SeriesDataset
from forecaster.logs import get_logger

log = get_logger("data")

EFFECT_COLUMNS = ["base", "weekly", "temperature", "weather", "holiday_lead", "holiday_lag", "noise"]

# Holiday ids follow the vocabulary order: ordinary, ecommerce, festival, statutory, special
DEFAULT_HOLIDAYS = {
    "01-01": "statutory", "05-01": "statutory", "10-01": "statutory", "10-02": "statutory", "10-03": "statutory",
    "06-18": "ecommerce", "11-11": "ecommerce", "12-12": "ecommerce",
    "02-05": "festival",  "06-09": "festival",  "09-15": "festival",  "12-25": "festival",
    "02-14": "special",   "03-08": "special",   "05-20": "special",
}

# Frequent weather classes barely move the count; rare ones move it a lot
DEFAULT_WEATHER_PROBS = [0.25, 0.20, 0.15, 0.10, 0.06, 0.03, 0.03, 0.05, 0.01, 0.03, 0.015, 0.005, 0.03, 0.03, 0.01]
DEFAULT_WEATHER_EFFECTS = [0, 0, -5, -20, -60, -150, -120, -40, -100, -50, -130, -250, -60, -30, -200]

_LIST_FIELDS = ("weekly", "weather_probs", "weather_effects", "holiday_effects", "holiday_lead", "holiday_lag")


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    length:            int           = Field(default=730, ge=1)
    start:             dt.date       = dt.date(2016, 1, 1)
    base:              float         = 1000.0
    weekly:            list[float]   = Field(default_factory=lambda: [40.0, 30.0, 20.0, 10.0, 0.0, -150.0, -200.0])

    temp_mean:         float         = 15.0
    temp_amplitude:    float         = 13.0
    temp_peak_day:     int           = Field(default=200, ge=1, le=366)
    temp_noise:        float         = Field(default=2.0, ge=0.0)
    temp_center:       float         = 20.0
    weekend_quadratic: float         = -0.8
    workday_scale:     float         = 40.0

    weather_probs:     list[float]   = Field(default_factory=lambda: list(DEFAULT_WEATHER_PROBS))
    weather_effects:   list[float]   = Field(default_factory=lambda: [float(v) for v in DEFAULT_WEATHER_EFFECTS])

    holidays:          dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_HOLIDAYS))
    holiday_effects:   list[float]   = Field(default_factory=lambda: [0.0, 300.0, 150.0, -350.0, 500.0])
    holiday_lead:      list[float]   = Field(default_factory=lambda: [1.0, 0.6, 0.3])   # j = 0, 1, 2 days ahead
    holiday_lag:       list[float]   = Field(default_factory=lambda: [0.5, 0.25, 0.1])  # j = 1, 2, 3 days after

    ar_coef:           float         = Field(default=0.5, gt=-1.0, lt=1.0)
    noise_scale:       float         = Field(default=25.0, ge=0.0)
    seed:              int           = DEFAULT_SEED

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def _parse_list(cls, value):
        if isinstance(value, str):
            return split_list(value)
        return value

    @field_validator("holidays", mode="before")
    @classmethod
    def _parse_holidays(cls, value):
        if isinstance(value, str):
            return split_mapping(value)
        return value

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.weekly) != WEEK_CARDINALITY:
            raise ValueError(f"weekly needs {WEEK_CARDINALITY} values, got {len(self.weekly)}")
        if len(self.weather_probs) != WEATHER_CARDINALITY or len(self.weather_effects) != WEATHER_CARDINALITY:
            raise ValueError(f"weather_probs and weather_effects need {WEATHER_CARDINALITY} values each")
        if any(p < 0 for p in self.weather_probs) or sum(self.weather_probs) <= 0:
            raise ValueError("weather_probs must be nonnegative with a positive sum")
        if len(self.holiday_effects) != HOLIDAY_CARDINALITY:
            raise ValueError(f"holiday_effects needs {HOLIDAY_CARDINALITY} values, got {len(self.holiday_effects)}")
        kernels = self.weekly + self.weather_effects + self.holiday_effects + self.holiday_lead + self.holiday_lag
        if not np.all(np.isfinite(kernels)):
            raise ValueError("effect values must be finite")
        vocab = load_vocabulary()["holiday"]
        for day, name in self.holidays.items():
            try:
                dt.datetime.strptime(f"2000-{day}", "%Y-%m-%d")
            except ValueError:
                raise ValueError(f"holiday date {day!r} is not MM-DD") from None
            if name not in vocab:
                raise ValueError(f"holiday {day} has unknown category {name!r}")
        return self


def _temperature(spec: GeneratorSpec, dates: pd.DatetimeIndex, rng: np.random.Generator) -> np.ndarray:
    season = np.cos(2 * np.pi * (dates.dayofyear.to_numpy() - spec.temp_peak_day) / 365.25)
    noise = spec.temp_noise * rng.standard_normal(len(dates))
    return np.clip(spec.temp_mean + spec.temp_amplitude * season + noise, -5.0, 40.0)


def _holiday_ids(spec: GeneratorSpec, dates: pd.DatetimeIndex) -> np.ndarray:
    vocab = load_vocabulary()["holiday"]
    index = {day: vocab.index(name) for day, name in spec.holidays.items()}
    return np.array([index.get(day, 0) for day in dates.strftime("%m-%d")], dtype=np.int64)


def temperature_effect(spec: GeneratorSpec, temperature: np.ndarray, week: np.ndarray) -> np.ndarray:
    offset = temperature - spec.temp_center
    weekend = np.isin(week, list(WEEKEND_DAYS))
    return np.where(
        weekend,
        spec.weekend_quadratic * offset ** 2,
        spec.workday_scale * np.tanh(offset / 10.0),
    )


def holiday_kernels(spec: GeneratorSpec, holiday: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lead: Σ_j lead_j·effect(t+j), j ≥ 0.  Lag: Σ_j lag_j·effect(t−j), j ≥ 1."""
    effect = np.asarray(spec.holiday_effects)[holiday]
    length = len(effect)
    lead, lag = np.zeros(length), np.zeros(length)
    for j, weight in enumerate(spec.holiday_lead):
        if j < length:
            lead[:length - j] += weight * effect[j:]
    for j, weight in enumerate(spec.holiday_lag, start=1):
        if j < length:
            lag[j:] += weight * effect[:length - j]
    return lead, lag


def ar_noise(spec: GeneratorSpec, rng: np.random.Generator, length: int) -> np.ndarray:
    shocks = spec.noise_scale * rng.standard_normal(length)
    noise = np.zeros(length)
    previous = 0.0
    for t in range(length):
        previous = spec.ar_coef * previous + shocks[t]
        noise[t] = previous
    return noise


def generate_synthetic(spec: GeneratorSpec) -> tuple[SeriesDataset, pd.DataFrame]:
    """
    Build the series and its effect log. Same spec, same output, bit for bit.

    Random draws happen in a fixed order (temperature noise, weather,
    AR shocks) from one generator seeded with spec.seed.
    """
    rng = np.random.default_rng(spec.seed)
    dates = pd.date_range(start=spec.start, periods=spec.length, freq="D")
    week = dates.dayofweek.to_numpy().astype(np.int64)

    temperature = _temperature(spec, dates, rng)
    probs = np.asarray(spec.weather_probs) / np.sum(spec.weather_probs)
    weather = rng.choice(WEATHER_CARDINALITY, size=spec.length, p=probs).astype(np.int64)
    holiday = _holiday_ids(spec, dates)
    noise = ar_noise(spec, rng, spec.length)

    lead, lag = holiday_kernels(spec, holiday)
    effects = pd.DataFrame({
        "base":         np.full(spec.length, spec.base),
        "weekly":       np.asarray(spec.weekly)[week],
        "temperature":  temperature_effect(spec, temperature, week),
        "weather":      np.asarray(spec.weather_effects)[weather],
        "holiday_lead": lead,
        "holiday_lag":  lag,
        "noise":        noise,
    }, index=dates)
    total = np.zeros(spec.length)
    for column in EFFECT_COLUMNS:
        total = total + effects[column].to_numpy()
    effects["total"] = total

    y = np.maximum(np.round(total), 0.0)
    dataset = SeriesDataset(
        dates=dates.to_numpy().astype("datetime64[D]"),
        y=y,
        temperature=temperature,
        weather=weather,
        holiday=holiday,
        week=week,
    )
    log.info(f"[data] generated {spec.length} days from {spec.start} (seed {spec.seed})")
    return dataset, effects
