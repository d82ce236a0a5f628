# forecaster/hfr.py
# ─────────────────────────────────────────────────────
# Heterogeneous feature representation.
#
# Every raw daily feature is mapped to its own hidden vector:
#   - categorical → one-hot row of a per-feature table (ψ)
#   - temperature → weekend quadratic branch or workday MLP (φ),
#                   switched by the companion week feature
#   - other numerical → MLP branch only
#
# A feature window [B, days, n] becomes one flat vector per
# batch row: day by day, feature by feature in schema order.
# ─────────────────────────────────────────────────────

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator  # type: ignore[reportMissingImports]

from config import HOLIDAY_CARDINALITY, WEATHER_CARDINALITY, WEEK_CARDINALITY, WEEKEND_DAYS
from forecaster import tensor as T
from forecaster.errors import DataError, DimensionError, MissingFeatureError
from forecaster.layers import MLPParams, init_mlp, mlp_forward
from forecaster.params import ParamStore
from forecaster.tensor import Node

DEFAULT_EMBEDDING_DIM = 4


# ── Schema ────────────────────────────────────────────

class FeatureSpec(BaseModel):
    name:             str                                  = Field(..., min_length=1)
    kind:             Literal["numerical", "categorical"]
    cardinality:      int | None                           = Field(default=None, ge=1)
    dim:              int                                  = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)
    temperature_like: bool                                 = False
    weekend_from:     str | None                           = None

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "categorical" and self.cardinality is None:
            raise ValueError(f"categorical feature {self.name!r} needs a cardinality")
        if self.kind == "numerical" and self.cardinality is not None:
            raise ValueError(f"numerical feature {self.name!r} cannot have a cardinality")
        if self.temperature_like and (self.kind != "numerical" or not self.weekend_from):
            raise ValueError(f"temperature-like feature {self.name!r} must be numerical with a week companion")
        return self


class FeatureSchema(BaseModel):
    features: list[FeatureSpec] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_features(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError(f"feature names must be unique, got {names}")
        temperature = [f for f in self.features if f.temperature_like]
        if len(temperature) > 1:
            raise ValueError("at most one feature may be temperature-like")
        for f in temperature:
            companion = next((g for g in self.features if g.name == f.weekend_from), None)
            if companion is None or companion.kind != "categorical" or companion.cardinality != WEEK_CARDINALITY:
                raise ValueError(
                    f"{f.name!r} gates on {f.weekend_from!r}, which must be a categorical feature with {WEEK_CARDINALITY} classes"
                )
        return self

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def hidden_per_day(self) -> int:
        """n′ = Σ e_i."""
        return sum(f.dim for f in self.features)

    @property
    def numerical(self) -> list[FeatureSpec]:
        return [f for f in self.features if f.kind == "numerical"]

    @property
    def categorical(self) -> list[FeatureSpec]:
        return [f for f in self.features if f.kind == "categorical"]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def names(self) -> list[str]:
        return [f.name for f in self.features]


def default_schema(dim: int = DEFAULT_EMBEDDING_DIM, dims: dict[str, int] | None = None) -> FeatureSchema:
    """temperature, weather, holiday, week: the four daily features of the dataset."""
    dims = dims or {}
    return FeatureSchema(features=[
        FeatureSpec(name="temperature", kind="numerical", dim=dims.get("temperature", dim),
                    temperature_like=True, weekend_from="week"),
        FeatureSpec(name="weather", kind="categorical", cardinality=WEATHER_CARDINALITY, dim=dims.get("weather", dim)),
        FeatureSpec(name="holiday", kind="categorical", cardinality=HOLIDAY_CARDINALITY, dim=dims.get("holiday", dim)),
        FeatureSpec(name="week",    kind="categorical", cardinality=WEEK_CARDINALITY,    dim=dims.get("week", dim)),
    ])


# ── Embeddings ────────────────────────────────────────

@dataclass
class CategoricalEmbedding:
    table: Node   # [cardinality, e]

    @property
    def cardinality(self) -> int:
        return self.table.shape[0]


@dataclass
class TemperatureEmbedding:
    w:       Node        # [e]
    b:       Node        # [e]
    v:       Node        # [e]
    c:       Node        # [e]
    workday: MLPParams   # 1 → hidden → e

    @property
    def dim(self) -> int:
        return self.w.shape[0]


@dataclass
class NumericalEmbedding:
    mlp: MLPParams


@dataclass
class HFREmbeddings:
    schema:   FeatureSchema
    features: dict[str, CategoricalEmbedding | TemperatureEmbedding | NumericalEmbedding] = field(default_factory=dict)


def init_hfr(store: ParamStore, schema: FeatureSchema, workday_hidden: int, rng: np.random.Generator) -> HFREmbeddings:
    hfr = HFREmbeddings(schema)
    for spec in schema.features:
        prefix = f"hfr.{spec.name}"
        if spec.kind == "categorical":
            hfr.features[spec.name] = CategoricalEmbedding(
                store.uniform(f"{prefix}.table", (spec.cardinality, spec.dim), spec.cardinality, rng)
            )
        elif spec.temperature_like:
            hfr.features[spec.name] = TemperatureEmbedding(
                w=store.uniform(f"{prefix}.weekend.w", (spec.dim,), 1, rng),
                b=store.uniform(f"{prefix}.weekend.b", (spec.dim,), 1, rng),
                v=store.uniform(f"{prefix}.weekend.v", (spec.dim,), 1, rng),
                c=store.uniform(f"{prefix}.weekend.c", (spec.dim,), 1, rng),
                workday=init_mlp(store, f"{prefix}.workday", 1, workday_hidden, spec.dim, rng),
            )
        else:
            hfr.features[spec.name] = NumericalEmbedding(
                init_mlp(store, f"{prefix}.mlp", 1, workday_hidden, spec.dim, rng)
            )
    return hfr


def _column(x) -> Node:
    if isinstance(x, Node):
        value = x
    else:
        value = T.constant(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    if value.value.ndim == 1:
        value = T.reshape(value, (value.shape[0], 1))
    if value.value.ndim != 2 or value.shape[1] != 1:
        raise DimensionError(f"numerical embedding expects [N] or [N, 1] input, got {value.shape}")
    return value


def embed_numerical(emb: TemperatureEmbedding, x, is_weekend) -> Node:
    """
    φ over N scaled temperatures at once → [N, e].

    Weekend rows take (W·x + b) ⊙ (V·x + c), a quadratic in x per
    component; workday rows take the MLP branch f(x).
    """
    xc = _column(x)
    n, e = xc.shape[0], emb.dim
    weekend = np.broadcast_to(np.asarray(is_weekend, dtype=bool), (n,))

    left = T.add(T.matmul(xc, T.reshape(emb.w, (1, e))), emb.b)
    right = T.add(T.matmul(xc, T.reshape(emb.v, (1, e))), emb.c)
    weekend_branch = T.mul(left, right)
    workday_branch = mlp_forward(emb.workday, xc)

    # both branches are on the tape; the mask picks one per row
    mask = np.repeat(weekend[:, None].astype(np.float64), e, axis=1)
    return T.add(T.mul(T.constant(mask), weekend_branch), T.mul(T.constant(1.0 - mask), workday_branch))


def embed_plain_numerical(emb: NumericalEmbedding, x) -> Node:
    return mlp_forward(emb.mlp, _column(x))


def _categories(values, cardinality: int, name: str = "category") -> np.ndarray:
    raw = np.atleast_1d(np.asarray(values, dtype=np.float64))
    ids = raw.astype(np.int64)
    if np.any(ids != raw) or np.any(ids < 0) or np.any(ids >= cardinality):
        bad = raw[(ids != raw) | (ids < 0) | (ids >= cardinality)][0]
        raise DataError(f"{name} {bad:g} outside 0..{cardinality - 1}")
    return ids


def one_hot(ids: np.ndarray, cardinality: int) -> np.ndarray:
    out = np.zeros((ids.shape[0], cardinality))
    out[np.arange(ids.shape[0]), ids] = 1.0
    return out


def embed_categorical(emb: CategoricalEmbedding, category, name: str = "category") -> Node:
    """ψ: one-hot(category)ᵀ · table. Accepts one id or a vector of N ids → [N, e]."""
    ids = _categories(category, emb.cardinality, name)
    return T.matmul(T.constant(one_hot(ids, emb.cardinality)), emb.table)


# ── Windows ───────────────────────────────────────────

def _as_windows(schema: FeatureSchema, window, days: int | None) -> np.ndarray:
    arr = np.asarray(window, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[2] != schema.n:
        raise DimensionError(f"feature window must be [days, {schema.n}] or [B, days, {schema.n}], got {arr.shape}")
    if days is not None and arr.shape[1] != days:
        raise DimensionError(f"feature window must cover {days} days, got {arr.shape[1]}")
    missing = np.argwhere(~np.isfinite(arr))
    if missing.size:
        _, day, col = missing[0]
        raise MissingFeatureError(f"window day {day}: feature {schema.features[col].name!r} is missing")
    return arr


def represent_window(hfr: HFREmbeddings, window, days: int | None = None) -> Node:
    """
    [B, days, n] raw (scaled) features → d: [B, days·n′].

    Layout is day-major: for each day oldest to newest, the feature
    embeddings in schema order.
    """
    schema = hfr.schema
    arr = _as_windows(schema, window, days)
    batch, width = arr.shape[0], arr.shape[1]
    rows = arr.reshape(batch * width, schema.n)

    parts = []
    for i, spec in enumerate(schema.features):
        emb = hfr.features[spec.name]
        column = rows[:, i]
        if isinstance(emb, CategoricalEmbedding):
            parts.append(embed_categorical(emb, column, spec.name))
        elif isinstance(emb, TemperatureEmbedding):
            week = _categories(rows[:, schema.index(spec.weekend_from)], WEEK_CARDINALITY, spec.weekend_from)
            parts.append(embed_numerical(emb, column, np.isin(week, list(WEEKEND_DAYS))))
        else:
            parts.append(embed_plain_numerical(emb, column))

    per_day = T.concat(parts, axis=1) if len(parts) > 1 else parts[0]
    return T.reshape(per_day, (batch, width * schema.hidden_per_day))


# ── Representation without HFR ────────────────────────
# Numerical features enter as their scaled value; every categorical
# feature indexes one shared table, offset by feature.

@dataclass
class PlainEmbedding:
    schema:  FeatureSchema
    table:   Node              # [Σ cardinality, e]
    offsets: dict[str, int]

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    @property
    def per_day(self) -> int:
        return len(self.schema.numerical) + len(self.schema.categorical) * self.dim


def init_plain(store: ParamStore, schema: FeatureSchema, dim: int, rng: np.random.Generator) -> PlainEmbedding:
    offsets, total = {}, 0
    for spec in schema.categorical:
        offsets[spec.name] = total
        total += spec.cardinality
    table = store.uniform("plain.table", (max(total, 1), dim), max(total, 1), rng)
    return PlainEmbedding(schema, table, offsets)


def represent_plain(plain: PlainEmbedding, window, days: int | None = None) -> Node:
    schema = plain.schema
    arr = _as_windows(schema, window, days)
    batch, width = arr.shape[0], arr.shape[1]
    rows = arr.reshape(batch * width, schema.n)
    rows_total = plain.table.shape[0]

    parts = []
    for i, spec in enumerate(schema.features):
        if spec.kind == "numerical":
            parts.append(T.constant(rows[:, i:i + 1]))
        else:
            ids = _categories(rows[:, i], spec.cardinality, spec.name) + plain.offsets[spec.name]
            parts.append(T.matmul(T.constant(one_hot(ids, rows_total)), plain.table))

    per_day = T.concat(parts, axis=1) if len(parts) > 1 else parts[0]
    return T.reshape(per_day, (batch, width * plain.per_day))


def raw_feature_width(schema: FeatureSchema) -> int:
    return sum(1 if f.kind == "numerical" else f.cardinality for f in schema.features)


def raw_feature_vector(schema: FeatureSchema, window, days: int | None = None) -> np.ndarray:
    """Scaled numericals and one-hot categoricals, flattened day-major → [B, days·width]."""
    arr = _as_windows(schema, window, days)
    batch, width = arr.shape[0], arr.shape[1]
    rows = arr.reshape(batch * width, schema.n)
    parts = []
    for i, spec in enumerate(schema.features):
        if spec.kind == "numerical":
            parts.append(rows[:, i:i + 1])
        else:
            parts.append(one_hot(_categories(rows[:, i], spec.cardinality, spec.name), spec.cardinality))
    return np.concatenate(parts, axis=1).reshape(batch, width * raw_feature_width(schema))
