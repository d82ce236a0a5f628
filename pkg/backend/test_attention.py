# test_attention.py
# Run: pytest test_attention.py

import numpy as np
import pytest

from forecaster import tensor as T
from forecaster.attention import (
    feature_attention,
    init_feature,
    init_temporal,
    joint_fuse,
    temporal_attention,
    uniform_feature_context,
)
from forecaster.errors import DimensionError
from forecaster.params import ParamStore


def _setup(rng, batch=2, steps=5, enc=4, dec=4, score=3, m=7):
    store = ParamStore()
    temporal = init_temporal(store, enc, dec, score, rng)
    feature = init_feature(store, dec, score, rng)
    s_prev = T.constant(rng.uniform(-1, 1, size=(batch, dec)))
    states = T.constant(rng.uniform(-1, 1, size=(batch, steps, enc)))
    d = T.constant(rng.uniform(-2, 2, size=(batch, m)))
    return store, temporal, feature, s_prev, states, d


def test_weights_are_normalised():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        batch, steps, m = rng.integers(1, 4), rng.integers(1, 9), rng.integers(1, 12)
        _, temporal, feature, s_prev, states, d = _setup(rng, batch, steps, m=m)
        alpha, _ = temporal_attention(temporal, s_prev, states)
        beta, _ = feature_attention(feature, s_prev, d)
        np.testing.assert_allclose(alpha.value.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(beta.value.sum(axis=1), 1.0, atol=1e-12)


def test_temporal_context_is_the_weighted_sum(rng):
    _, temporal, _, s_prev, states, _ = _setup(rng)
    alpha, c_h = temporal_attention(temporal, s_prev, states)
    for b in range(2):
        expected = sum(alpha.value[b, i] * states.value[b, i] for i in range(5))
        np.testing.assert_allclose(c_h.value[b], expected, atol=1e-12)


def test_temporal_scores_by_hand(rng):
    _, temporal, _, s_prev, states, _ = _setup(rng, batch=1)
    alpha, _ = temporal_attention(temporal, s_prev, states)
    v, w, u, b = (p.value for p in (temporal.v, temporal.w, temporal.u, temporal.b))
    scores = np.array([v @ np.tanh(w @ s_prev.value[0] + u @ h + b) for h in states.value[0]])
    expected = np.exp(scores - scores.max()) / np.exp(scores - scores.max()).sum()
    np.testing.assert_allclose(alpha.value[0], expected, atol=1e-12)


def test_feature_context_is_componentwise(rng):
    _, _, feature, s_prev, _, d = _setup(rng)
    beta, c_d = feature_attention(feature, s_prev, d)
    np.testing.assert_allclose(c_d.value, beta.value * d.value, atol=1e-12)


def test_single_state_gets_all_the_weight(rng):
    _, temporal, _, s_prev, states, _ = _setup(rng, steps=1)
    alpha, c_h = temporal_attention(temporal, s_prev, states)
    np.testing.assert_array_equal(alpha.value, 1.0)
    np.testing.assert_allclose(c_h.value, states.value[:, 0], atol=1e-15)


def test_zero_score_vector_is_uniform(rng):
    _, _, feature, s_prev, _, d = _setup(rng)
    feature.v.value[...] = 0.0
    beta, c_d = feature_attention(feature, s_prev, d)
    uniform_beta, uniform_c = uniform_feature_context(d)
    np.testing.assert_allclose(beta.value, uniform_beta.value, atol=1e-15)
    np.testing.assert_allclose(c_d.value, uniform_c.value, atol=1e-15)


def test_joint_fuse(rng):
    c_h = T.constant(rng.uniform(size=(2, 4)))
    c_d = T.constant(rng.uniform(size=(2, 7)))
    w_z = T.constant(rng.uniform(size=(4, 7)))
    z = joint_fuse(c_h, c_d, w_z)
    np.testing.assert_allclose(z.value, c_h.value * (c_d.value @ w_z.value.T), atol=1e-12)
    with pytest.raises(DimensionError):
        joint_fuse(c_h, c_d, T.constant(np.ones((4, 6))))
    with pytest.raises(DimensionError):
        joint_fuse(T.constant(np.ones((2, 3))), c_d, w_z)


def test_shape_errors(rng):
    _, temporal, feature, s_prev, states, d = _setup(rng)
    with pytest.raises(DimensionError):
        temporal_attention(temporal, s_prev, T.constant(np.ones((2, 5, 3))))
    with pytest.raises(DimensionError):
        feature_attention(feature, T.constant(np.ones((2, 2))), d)


def test_attention_gradients(rng):
    store, temporal, feature, s_prev, states, d = _setup(rng)
    w = T.constant(rng.uniform(0.5, 1.5, size=(2, 4)))
    w_z = T.constant(rng.uniform(-1, 1, size=(4, 7)))

    def loss():
        _, c_h = temporal_attention(temporal, s_prev, states)
        _, c_d = feature_attention(feature, s_prev, d)
        return T.total(T.mul(joint_fuse(c_h, c_d, w_z), w))

    report = T.check_parameter_gradients(loss, dict(store.items()))
    assert report.max_error < 1e-5, report


@pytest.mark.parametrize("seed", range(10))
def test_permuting_states_permutes_weights(seed):
    rng = np.random.default_rng(seed)
    _, temporal, feature, s_prev, states, d = _setup(rng, steps=6, m=8)
    alpha, c_h = temporal_attention(temporal, s_prev, states)
    order = rng.permutation(6)
    alpha_p, c_h_p = temporal_attention(temporal, s_prev, T.constant(states.value[:, order]))
    np.testing.assert_allclose(alpha_p.value, alpha.value[:, order], atol=1e-14)
    np.testing.assert_allclose(c_h_p.value, c_h.value, atol=1e-12)

    beta, c_d = feature_attention(feature, s_prev, d)
    order = rng.permutation(8)
    beta_p, c_d_p = feature_attention(feature, s_prev, T.constant(d.value[:, order]))
    np.testing.assert_allclose(beta_p.value, beta.value[:, order], atol=1e-14)
    np.testing.assert_allclose(c_d_p.value, c_d.value[:, order], atol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_softmax_ignores_a_shift(seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(0, 3, size=(3, 7))
    shift = rng.uniform(-50, 50)
    np.testing.assert_allclose(T.softmax(T.constant(scores + shift)).value,
                               T.softmax(T.constant(scores)).value, atol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_raising_a_score_raises_its_weight(seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(1, 6))
    i = int(rng.integers(0, 6))
    before = T.softmax(T.constant(scores)).value[0]
    scores[0, i] += rng.uniform(0.1, 2.0)
    after = T.softmax(T.constant(scores)).value[0]
    assert after[i] > before[i]
    others = np.arange(6) != i
    assert np.all(after[others] < before[others])
