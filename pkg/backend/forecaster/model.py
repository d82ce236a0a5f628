# forecaster/model.py
# ─────────────────────────────────────────────────────
# The full network and its ablation variants.
#
#   history y_{t−h+1..t} ──► encoder LSTM ──► H = (h^1 … h^h)
#   feature window x̃      ──► HFR ──► d
#   s_prev, H             ──► temporal attention ──► c_H
#   s_prev, d             ──► feature attention  ──► c_D
#   z = c_H ⊙ (W_z·c_D) ──► decoder LSTM ──► s ──► MLP ──► ŷ
#
# The decoder starts from the last encoder state. Training is
# single-step; multi-step forecasts re-apply the model to its
# own predictions.
# ─────────────────────────────────────────────────────

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator, model_validator  # type: ignore[reportMissingImports]

from config import split_mapping
from forecaster import tensor as T
from forecaster.attention import (
    FeatureAttentionParams,
    TemporalAttentionParams,
    feature_attention,
    init_feature,
    init_temporal,
    joint_fuse,
    temporal_attention,
    uniform_feature_context,
)
from forecaster.data import ScalerState, scaler_apply, scaler_invert
from forecaster.errors import DimensionError
from forecaster.hfr import (
    DEFAULT_EMBEDDING_DIM,
    FeatureSchema,
    HFREmbeddings,
    PlainEmbedding,
    default_schema,
    init_hfr,
    init_plain,
    raw_feature_vector,
    raw_feature_width,
    represent_plain,
    represent_window,
)
from forecaster.layers import (
    DropoutSpec,
    LSTMCellParams,
    MLPParams,
    dropout,
    fuse_lstm,
    init_lstm,
    init_mlp,
    lstm_step,
    mlp_predict,
)
from forecaster.params import ParamStore
from forecaster.tensor import Node

VARIANTS = ("full", "no_hfr", "no_jta", "no_both", "plain_seq2seq", "att_seq2seq")
Variant = Literal["full", "no_hfr", "no_jta", "no_both", "plain_seq2seq", "att_seq2seq"]

# which parts each variant carries
_TEMPORAL = {"full", "no_hfr", "att_seq2seq"}
_FEATURE_ATTENTION = {"full", "no_hfr"}
_HFR = {"full", "no_jta"}
_JOINT = {"full", "no_hfr", "no_jta"}


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    history:           int                             = Field(default=21, ge=1, validation_alias=AliasChoices("history", "h"))
    half_window:       int                             = Field(default=3, ge=0, validation_alias=AliasChoices("half_window", "l"))
    horizon:           int                             = Field(default=3, ge=1, validation_alias=AliasChoices("horizon", "k"))
    enc_hidden:        int                             = Field(default=16, ge=1)
    dec_hidden:        int | None                      = Field(default=None, ge=1)
    score_dim:         int | None                      = Field(default=None, ge=1)
    head_hidden:       int | None                      = Field(default=None, ge=1)
    embedding_dim:     int                             = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)
    embedding_dims:    dict[str, int]                  = Field(default_factory=dict)
    workday_hidden:    int                             = Field(default=8, ge=1)
    dropout:           float                           = Field(default=0.2, ge=0.0, lt=1.0)
    output_activation: Literal["identity", "sigmoid"]  = "identity"
    loss:              Literal["squared", "absolute"]  = "squared"
    variant:           Variant                         = "full"

    @field_validator("embedding_dims", mode="before")
    @classmethod
    def _parse_dims(cls, value):
        if isinstance(value, str):
            return split_mapping(value)
        return value

    @model_validator(mode="after")
    def _fill_defaults(self):
        if self.dec_hidden is None:
            self.dec_hidden = self.enc_hidden
        if self.dec_hidden != self.enc_hidden:
            raise ValueError(f"dec_hidden ({self.dec_hidden}) must equal enc_hidden ({self.enc_hidden})")
        if self.score_dim is None:
            self.score_dim = self.enc_hidden
        if self.head_hidden is None:
            self.head_hidden = self.enc_hidden
        unknown = set(self.embedding_dims) - set(default_schema().names())
        if unknown:
            raise ValueError(f"embedding_dims names unknown feature(s): {', '.join(sorted(unknown))}")
        if any(v < 1 for v in self.embedding_dims.values()):
            raise ValueError("embedding dims must be at least 1")
        return self

    @property
    def window(self) -> int:
        return 2 * self.half_window + 1

    def schema(self) -> FeatureSchema:
        return default_schema(self.embedding_dim, self.embedding_dims)

    def to_document(self) -> dict[str, object]:
        return self.model_dump()


@dataclass
class DeepExpressModel:
    config:   ModelConfig
    schema:   FeatureSchema
    params:   ParamStore
    encoder:  LSTMCellParams
    decoder:  LSTMCellParams
    head:     MLPParams
    temporal: TemporalAttentionParams | None = None
    feature:  FeatureAttentionParams | None = None
    hfr:      HFREmbeddings | None = None
    plain:    PlainEmbedding | None = None
    joint:    Node | None = None
    scaler:   ScalerState | None = None

    @property
    def variant(self) -> str:
        return self.config.variant


def feature_dim(config: ModelConfig, schema: FeatureSchema | None = None) -> int:
    """Length m of the per-sample feature vector the variant builds."""
    schema = schema or config.schema()
    if config.variant in _HFR:
        return config.window * schema.hidden_per_day
    if config.variant == "no_hfr":
        return config.window * (len(schema.numerical) + len(schema.categorical) * config.embedding_dim)
    if config.variant == "att_seq2seq":
        return config.window * raw_feature_width(schema)
    return 0


def _decoder_input(config: ModelConfig, schema: FeatureSchema) -> int:
    if config.variant == "plain_seq2seq":
        return 1
    if config.variant == "att_seq2seq":
        return config.enc_hidden + feature_dim(config, schema)
    return config.enc_hidden


def init_params(config: ModelConfig, seed: int) -> DeepExpressModel:
    """Deterministic for a given seed; every tensor lands in model.params."""
    rng = np.random.default_rng(seed)
    schema = config.schema()
    store = ParamStore()
    enc, dec, score = config.enc_hidden, config.dec_hidden, config.score_dim

    encoder = init_lstm(store, "encoder", 1, enc, rng)
    hfr = init_hfr(store, schema, config.workday_hidden, rng) if config.variant in _HFR else None
    plain = init_plain(store, schema, config.embedding_dim, rng) if config.variant == "no_hfr" else None
    temporal = init_temporal(store, enc, dec, score, rng) if config.variant in _TEMPORAL else None
    feature = init_feature(store, dec, score, rng) if config.variant in _FEATURE_ATTENTION else None
    joint = None
    if config.variant in _JOINT:
        m = feature_dim(config, schema)
        joint = store.uniform("joint.w_z", (enc, m), m, rng)
    decoder = init_lstm(store, "decoder", _decoder_input(config, schema), dec, rng)
    head = init_mlp(store, "head", dec, config.head_hidden, 1, rng,
                    output_activation=config.output_activation)

    return DeepExpressModel(
        config=config, schema=schema, params=store,
        encoder=encoder, decoder=decoder, head=head,
        temporal=temporal, feature=feature, hfr=hfr, plain=plain, joint=joint,
    )


# ── Forward pass ──────────────────────────────────────

@dataclass
class EncoderOutput:
    states:      Node         # [B, h, enc_hidden]
    last_hidden: Node         # [B, enc_hidden]
    last_cell:   Node         # [B, enc_hidden]
    inputs:      np.ndarray   # [B, h] scaled history


class StepOutput(NamedTuple):
    y:      Node              # [B]
    s_next: Node
    c_next: Node
    alpha:  Node | None
    beta:   Node | None


def _histories(model: DeepExpressModel, Y) -> np.ndarray:
    arr = np.asarray(Y, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None]
    if arr.ndim != 2 or arr.shape[1] != model.config.history:
        raise DimensionError(f"history must have length {model.config.history}, got shape {arr.shape}")
    return arr


def encode(model: DeepExpressModel, Y) -> EncoderOutput:
    """Unroll the encoder over the scaled history from a zero state. Y is [h] or [B, h]."""
    Y = _histories(model, Y)
    batch, hidden = Y.shape[0], model.encoder.hidden
    h = c = T.constant(np.zeros((batch, hidden)))
    fused = fuse_lstm(model.encoder)
    states = []
    for i in range(Y.shape[1]):
        h, c = lstm_step(model.encoder, T.constant(Y[:, i:i + 1]), h, c, fused)
        states.append(h)
    return EncoderOutput(T.stack(states, axis=1), h, c, Y)


def predict_one(
    model:  DeepExpressModel,
    enc:    EncoderOutput,
    s_prev: Node,
    c_prev: Node,
    window,
    train:  bool = False,
    rng:    np.random.Generator | None = None,
) -> StepOutput:
    """One decoder step. window is the scaled [2l+1, n] or [B, 2l+1, n] feature block."""
    config, variant = model.config, model.variant
    spec = DropoutSpec(config.dropout, "train" if train else "eval")
    alpha = beta = None

    if variant == "plain_seq2seq":
        z = T.constant(enc.inputs[:, -1:])
    elif variant == "no_both":
        z = enc.last_hidden
    else:
        if variant in _TEMPORAL:
            alpha, c_h = temporal_attention(model.temporal, s_prev, enc.states)
        else:
            c_h = enc.last_hidden
        if variant == "att_seq2seq":
            z = T.concat([c_h, T.constant(raw_feature_vector(model.schema, window, config.window))], axis=1)
        else:
            if variant in _HFR:
                d = represent_window(model.hfr, window, config.window)
            else:
                d = represent_plain(model.plain, window, config.window)
            if d.shape[0] != c_h.shape[0]:
                raise DimensionError(f"feature batch {d.shape[0]} does not match history batch {c_h.shape[0]}")
            if variant in _FEATURE_ATTENTION:
                beta, c_d = feature_attention(model.feature, s_prev, d)
            else:
                beta, c_d = uniform_feature_context(d)
            z = joint_fuse(c_h, c_d, model.joint)

    z = dropout(spec, z, rng)
    s_next, c_next = lstm_step(model.decoder, z, s_prev, c_prev)
    y = mlp_predict(model.head, s_next, spec, rng)
    return StepOutput(y, s_next, c_next, alpha, beta)


def forward(
    model:     DeepExpressModel,
    histories,
    windows,
    train:     bool = False,
    rng:       np.random.Generator | None = None,
) -> Node:
    """Scaled histories [B, h] and windows [B, 2l+1, n] → ŷ_{t+1} [B]."""
    enc = encode(model, histories)
    return predict_one(model, enc, enc.last_hidden, enc.last_cell, windows, train, rng).y


# ── Rollout ───────────────────────────────────────────

def rollout(
    model:          DeepExpressModel,
    histories,
    feature_blocks,
    k:              int,
    feedback:       np.ndarray | None = None,
) -> np.ndarray:
    """
    k-step recursive forecast in the scaled domain.

    feature_blocks is [B, k+2l, n]: the windows for steps 1..k
    overlap and step j uses rows j−1 … j−1+2l. Each prediction is
    appended to the history before the next step; pass feedback
    [B, k] to append those values instead.
    """
    work = _histories(model, histories).copy()
    blocks = np.asarray(feature_blocks, dtype=np.float64)
    if blocks.ndim == 2:
        blocks = blocks[None]
    width = model.config.window
    if blocks.shape[1] < k + width - 1:
        raise DimensionError(f"feature block covers {blocks.shape[1]} days, {k}-step rollout needs {k + width - 1}")

    out = np.zeros((work.shape[0], k))
    for j in range(k):
        y = forward(model, work[:, -model.config.history:], blocks[:, j:j + width]).value
        out[:, j] = y
        step = y if feedback is None else np.asarray(feedback, dtype=np.float64)[:, j]
        work = np.concatenate([work, step[:, None]], axis=1)
    return out


def predict_sequence(
    model:            DeepExpressModel,
    history,
    feature_provider: Callable[[int], np.ndarray],
    k:                int,
) -> np.ndarray:
    """
    Forecast k days in original units.

    history is the unscaled y series (at least h values, the last is
    day t); feature_provider(j) returns the raw 2l+1-day window
    centred on day t+j.
    """
    history = np.asarray(history, dtype=np.float64)
    h = model.config.history
    if history.ndim != 1 or len(history) < h:
        raise DimensionError(f"history must hold at least {h} values, got shape {history.shape}")
    scaler = model.scaler
    work = scaler_apply(scaler, "y", history[-h:]) if scaler else history[-h:].copy()

    out = []
    for j in range(1, k + 1):
        window = np.asarray(feature_provider(j), dtype=np.float64)
        if window.shape != (model.config.window, model.schema.n):
            raise DimensionError(
                f"feature provider returned {window.shape} for step {j}, expected {(model.config.window, model.schema.n)}"
            )
        if scaler:
            window = scaler.scale_window(model.schema, window)
        y = float(forward(model, work[-h:], window).value[0])
        out.append(y)
        work = np.append(work, y)

    out = np.array(out)
    return scaler_invert(scaler, "y", out) if scaler else out
