# forecaster/layers.py
# ─────────────────────────────────────────────────────
# Building blocks the network is composed from:
#   - the LSTM step g(·) used by encoder and decoder
#   - the MLP f(·) used as prediction head and as the
#     workday branch of the temperature embedding
#   - inverted dropout on non-recurrent connections
#
# All inputs carry a leading batch axis: x is [B, in].
# ─────────────────────────────────────────────────────

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from forecaster import tensor as T
from forecaster.errors import ConfigError, DimensionError
from forecaster.params import ParamStore
from forecaster.tensor import Node

GATES = ("input", "forget", "output", "candidate")


# ── LSTM ──────────────────────────────────────────────

@dataclass
class GateParams:
    input_weight:     Node   # [hidden, in]
    recurrent_weight: Node   # [hidden, hidden]
    bias:             Node   # [hidden]


@dataclass
class LSTMCellParams:
    gates: dict[str, GateParams]

    @property
    def hidden(self) -> int:
        return self.gates["input"].bias.shape[0]

    @property
    def input_size(self) -> int:
        return self.gates["input"].input_weight.shape[1]


def init_lstm(store: ParamStore, prefix: str, input_size: int, hidden: int, rng: np.random.Generator) -> LSTMCellParams:
    gates = {}
    for gate in GATES:
        gates[gate] = GateParams(
            input_weight=store.uniform(f"{prefix}.{gate}.input_weight", (hidden, input_size), input_size, rng),
            recurrent_weight=store.uniform(f"{prefix}.{gate}.recurrent_weight", (hidden, hidden), hidden, rng),
            bias=store.uniform(f"{prefix}.{gate}.bias", (hidden,), hidden, rng),
        )
    return LSTMCellParams(gates)


@dataclass
class FusedLSTM:
    input_t:     Node   # [in, 4·hidden]
    recurrent_t: Node   # [hidden, 4·hidden]
    bias:        Node   # [4·hidden]
    hidden:      int


def fuse_lstm(params: LSTMCellParams) -> FusedLSTM:
    """Stack the four gate blocks once so each step needs two matmuls."""
    blocks = [params.gates[g] for g in GATES]
    return FusedLSTM(
        input_t=T.transpose(T.concat([b.input_weight for b in blocks], axis=0)),
        recurrent_t=T.transpose(T.concat([b.recurrent_weight for b in blocks], axis=0)),
        bias=T.concat([b.bias for b in blocks], axis=0),
        hidden=params.hidden,
    )


def lstm_step(
    params: LSTMCellParams,
    x:      Node,
    h_prev: Node,
    c_prev: Node,
    fused:  FusedLSTM | None = None,
) -> tuple[Node, Node]:
    """
    One LSTM step: sigmoid input/forget/output gates, tanh candidate,
    c = f⊙c_prev + i⊙g, h = o⊙tanh(c).
    """
    hidden = params.hidden
    if x.value.ndim != 2 or x.shape[1] != params.input_size:
        raise DimensionError(f"lstm_step: input {x.shape} does not match input size {params.input_size}")
    if h_prev.shape != (x.shape[0], hidden) or c_prev.shape != h_prev.shape:
        raise DimensionError(
            f"lstm_step: state shapes {h_prev.shape}/{c_prev.shape} do not match ({x.shape[0]}, {hidden})"
        )
    fused = fused or fuse_lstm(params)

    pre = T.add(T.add(T.matmul(x, fused.input_t), T.matmul(h_prev, fused.recurrent_t)), fused.bias)
    i = T.sigmoid(T.take(pre, 0, hidden))
    f = T.sigmoid(T.take(pre, hidden, 2 * hidden))
    o = T.sigmoid(T.take(pre, 2 * hidden, 3 * hidden))
    g = T.tanh(T.take(pre, 3 * hidden, 4 * hidden))

    c = T.add(T.mul(f, c_prev), T.mul(i, g))
    h = T.mul(o, T.tanh(c))
    return h, c


# ── Dropout ───────────────────────────────────────────

@dataclass(frozen=True)
class DropoutSpec:
    rate: float = 0.2
    mode: Literal["train", "eval"] = "eval"

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {self.rate}")
        if self.mode not in ("train", "eval"):
            raise ConfigError(f"dropout mode must be 'train' or 'eval', got {self.mode!r}")


def dropout(spec: DropoutSpec | None, x: Node, rng: np.random.Generator | None) -> Node:
    """Inverted dropout. Eval mode and rate 0 return x itself."""
    if spec is None or spec.mode == "eval" or spec.rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in train mode needs a random generator")
    keep = (rng.random(x.shape) >= spec.rate).astype(np.float64) / (1.0 - spec.rate)
    return T.mul(x, T.constant(keep))


# ── MLP ───────────────────────────────────────────────

@dataclass
class MLPParams:
    w1:                Node   # [hidden, in]
    b1:                Node   # [hidden]
    w2:                Node   # [out, hidden]
    b2:                Node   # [out]
    output_activation: Literal["identity", "sigmoid"] = "identity"

    @property
    def input_size(self) -> int:
        return self.w1.shape[1]

    @property
    def output_size(self) -> int:
        return self.w2.shape[0]


def init_mlp(
    store:             ParamStore,
    prefix:            str,
    input_size:        int,
    hidden:            int,
    output_size:       int,
    rng:               np.random.Generator,
    output_activation: Literal["identity", "sigmoid"] = "identity",
) -> MLPParams:
    return MLPParams(
        w1=store.uniform(f"{prefix}.w1", (hidden, input_size), input_size, rng),
        b1=store.uniform(f"{prefix}.b1", (hidden,), input_size, rng),
        w2=store.uniform(f"{prefix}.w2", (output_size, hidden), hidden, rng),
        b2=store.uniform(f"{prefix}.b2", (output_size,), hidden, rng),
        output_activation=output_activation,
    )


def mlp_forward(
    params:  MLPParams,
    x:       Node,
    dropout_spec: DropoutSpec | None = None,
    rng:     np.random.Generator | None = None,
) -> Node:
    """[B, in] → [B, out]; dropout, when given, acts on the hidden layer."""
    if x.value.ndim != 2 or x.shape[1] != params.input_size:
        raise DimensionError(f"mlp: input {x.shape} does not match input size {params.input_size}")
    hidden = T.sigmoid(T.add(T.matmul(x, T.transpose(params.w1)), params.b1))
    hidden = dropout(dropout_spec, hidden, rng)
    out = T.add(T.matmul(hidden, T.transpose(params.w2)), params.b2)
    if params.output_activation == "sigmoid":
        out = T.sigmoid(out)
    return out


def mlp_predict(
    params:  MLPParams,
    s:       Node,
    dropout_spec: DropoutSpec | None = None,
    rng:     np.random.Generator | None = None,
) -> Node:
    """Prediction head: one scalar per batch row, shape [B]."""
    if params.output_size != 1:
        raise DimensionError(f"mlp_predict needs a single output, head has {params.output_size}")
    out = mlp_forward(params, s, dropout_spec, rng)
    return T.reshape(out, (out.shape[0],))
