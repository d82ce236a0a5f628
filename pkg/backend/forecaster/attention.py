# forecaster/attention.py
# Temporal attention over encoder states, feature attention over the
# flattened feature representation, and their joint fusion into the
# decoder input z.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from forecaster import tensor as T
from forecaster.errors import DimensionError
from forecaster.params import ParamStore
from forecaster.tensor import Node


@dataclass
class TemporalAttentionParams:
    v: Node   # [score]
    w: Node   # [score, dec_hidden]
    u: Node   # [score, enc_hidden]
    b: Node   # [score]

    @property
    def score_dim(self) -> int:
        return self.v.shape[0]


@dataclass
class FeatureAttentionParams:
    v: Node   # [score]
    w: Node   # [score, dec_hidden]
    u: Node   # [score]  maps one scalar component into score space
    b: Node   # [score]

    @property
    def score_dim(self) -> int:
        return self.v.shape[0]


def init_temporal(store: ParamStore, enc_hidden: int, dec_hidden: int, score_dim: int, rng) -> TemporalAttentionParams:
    return TemporalAttentionParams(
        v=store.uniform("temporal.v", (score_dim,), score_dim, rng),
        w=store.uniform("temporal.w", (score_dim, dec_hidden), dec_hidden, rng),
        u=store.uniform("temporal.u", (score_dim, enc_hidden), enc_hidden, rng),
        b=store.uniform("temporal.b", (score_dim,), enc_hidden, rng),
    )


def init_feature(store: ParamStore, dec_hidden: int, score_dim: int, rng) -> FeatureAttentionParams:
    return FeatureAttentionParams(
        v=store.uniform("feature.v", (score_dim,), score_dim, rng),
        w=store.uniform("feature.w", (score_dim, dec_hidden), dec_hidden, rng),
        u=store.uniform("feature.u", (score_dim,), 1, rng),
        b=store.uniform("feature.b", (score_dim,), dec_hidden, rng),
    )


def _query(w: Node, b: Node, s_prev: Node) -> Node:
    # W·s_prev + b for every batch row → [B, score]
    if s_prev.value.ndim != 2 or s_prev.shape[1] != w.shape[1]:
        raise DimensionError(f"attention: decoder state {s_prev.shape} does not match W {w.shape}")
    return T.add(T.matmul(s_prev, T.transpose(w)), b)


def _contract(pre: Node, v: Node) -> Node:
    # V · tanh(...) over the score axis: [B, m, score] → [B, m]
    batch, m, score = pre.shape
    return T.reshape(T.matmul(T.tanh(pre), T.reshape(v, (score, 1))), (batch, m))


def temporal_scores(params: TemporalAttentionParams, s_prev: Node, states: Node) -> Node:
    if states.value.ndim != 3 or states.shape[2] != params.u.shape[1]:
        raise DimensionError(f"temporal attention: states {states.shape} do not match U {params.u.shape}")
    batch, steps, _ = states.shape
    if steps < 1:
        raise DimensionError("temporal attention needs at least one encoder state")
    keys = T.matmul(states, T.transpose(params.u))                      # [B, h, score]
    query = T.expand(_query(params.w, params.b, s_prev), 1, steps)      # [B, h, score]
    return _contract(T.add(keys, query), params.v)


def temporal_attention(params: TemporalAttentionParams, s_prev: Node, states: Node) -> tuple[Node, Node]:
    """
    α_i = softmax_i(V·tanh(W·s_prev + U·h^i + b)),  c_H = Σ_i α_i h^i.

    states is [B, h, enc_hidden]; returns α [B, h] and c_H [B, enc_hidden].
    """
    alpha = T.softmax(temporal_scores(params, s_prev, states))
    batch, steps, hidden = states.shape
    context = T.matmul(T.reshape(alpha, (batch, 1, steps)), states)
    return alpha, T.reshape(context, (batch, hidden))


def feature_scores(params: FeatureAttentionParams, s_prev: Node, d: Node) -> Node:
    if d.value.ndim != 2:
        raise DimensionError(f"feature attention: d must be [B, m], got {d.shape}")
    batch, m = d.shape
    score = params.score_dim
    keys = T.matmul(T.reshape(d, (batch, m, 1)), T.reshape(params.u, (1, score)))   # [B, m, score]
    query = T.expand(_query(params.w, params.b, s_prev), 1, m)
    return _contract(T.add(keys, query), params.v)


def feature_attention(params: FeatureAttentionParams, s_prev: Node, d: Node) -> tuple[Node, Node]:
    """β_j = softmax_j(V·tanh(W·s_prev + U·d_j + b)),  c_D = β ⊙ d."""
    beta = T.softmax(feature_scores(params, s_prev, d))
    return beta, T.mul(beta, d)


def uniform_feature_context(d: Node) -> tuple[Node, Node]:
    # Ablation without feature attention: every component weighted 1/m.
    beta = T.constant(np.full(d.shape, 1.0 / d.shape[-1]))
    return beta, T.mul(beta, d)


def joint_fuse(c_h: Node, c_d: Node, w_z: Node) -> Node:
    """z = c_H ⊙ (W_z · c_D), with W_z [enc_hidden, m]."""
    if c_d.value.ndim != 2 or c_d.shape[1] != w_z.shape[1]:
        raise DimensionError(f"joint_fuse: c_D {c_d.shape} does not match W_z {w_z.shape}")
    projected = T.matmul(c_d, T.transpose(w_z))
    if projected.shape != c_h.shape:
        raise DimensionError(f"joint_fuse: c_H {c_h.shape} does not match projected c_D {projected.shape}")
    return T.mul(c_h, projected)
