# test_layers.py
# Run: pytest test_layers.py

import math

import numpy as np
import pytest

from forecaster import tensor as T
from forecaster.errors import ConfigError, DimensionError
from forecaster.layers import (
    GATES,
    DropoutSpec,
    dropout,
    init_lstm,
    init_mlp,
    lstm_step,
    mlp_forward,
    mlp_predict,
)
from forecaster.params import ParamStore


def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


# ── LSTM ──────────────────────────────────────────────

def test_lstm_matches_hand_evaluated_gates(rng):
    store = ParamStore()
    cell = init_lstm(store, "cell", 1, 1, rng)
    weights = {"input": (0.5, -0.3, 0.1), "forget": (0.2, 0.4, -0.2),
               "output": (-0.6, 0.7, 0.3), "candidate": (0.9, -0.1, 0.05)}
    for gate, (wx, wh, b) in weights.items():
        cell.gates[gate].input_weight.value[...] = wx
        cell.gates[gate].recurrent_weight.value[...] = wh
        cell.gates[gate].bias.value[...] = b

    x, h0, c0 = 0.8, -0.25, 0.4
    h, c = lstm_step(cell, T.constant([[x]]), T.constant([[h0]]), T.constant([[c0]]))

    pre = {g: wx * x + wh * h0 + b for g, (wx, wh, b) in weights.items()}
    i, f, o = _sig(pre["input"]), _sig(pre["forget"]), _sig(pre["output"])
    g = math.tanh(pre["candidate"])
    c_expected = f * c0 + i * g
    h_expected = o * math.tanh(c_expected)
    assert abs(c.value[0, 0] - c_expected) < 1e-12
    assert abs(h.value[0, 0] - h_expected) < 1e-12


def test_lstm_rejects_bad_shapes(rng):
    cell = init_lstm(ParamStore(), "cell", 2, 3, rng)
    zeros = T.constant(np.zeros((1, 3)))
    with pytest.raises(DimensionError):
        lstm_step(cell, T.constant(np.zeros((1, 3))), zeros, zeros)
    with pytest.raises(DimensionError):
        lstm_step(cell, T.constant(np.zeros((2, 2))), zeros, zeros)


def test_lstm_registers_every_gate(rng):
    store = ParamStore()
    init_lstm(store, "encoder", 1, 4, rng)
    assert len(store) == 3 * len(GATES)
    assert store["encoder.forget.recurrent_weight"].shape == (4, 4)


def test_lstm_gradients_match_finite_differences(rng):
    store = ParamStore()
    cell = init_lstm(store, "cell", 2, 3, rng)
    x = T.constant(rng.uniform(-1, 1, size=(2, 2)))
    h0 = T.constant(rng.uniform(-1, 1, size=(2, 3)))
    c0 = T.constant(rng.uniform(-1, 1, size=(2, 3)))
    w = T.constant(rng.uniform(0.5, 1.5, size=(2, 3)))

    def loss():
        h, c = lstm_step(cell, x, h0, c0)
        return T.total(T.mul(T.add(h, c), w))

    report = T.check_parameter_gradients(loss, dict(store.items()))
    assert report.max_error < 1e-6, report


# ── MLP ───────────────────────────────────────────────

def test_mlp_matches_hand_evaluation(rng):
    store = ParamStore()
    mlp = init_mlp(store, "head", 1, 1, 1, rng)
    mlp.w1.value[...] = 0.7
    mlp.b1.value[...] = -0.2
    mlp.w2.value[...] = 1.3
    mlp.b2.value[...] = 0.05
    y = mlp_predict(mlp, T.constant([[0.4]]))
    expected = 1.3 * _sig(0.7 * 0.4 - 0.2) + 0.05
    assert y.shape == (1,)
    assert abs(y.value[0] - expected) < 1e-12


def test_mlp_sigmoid_output_is_bounded(rng):
    mlp = init_mlp(ParamStore(), "head", 3, 4, 1, rng, output_activation="sigmoid")
    y = mlp_predict(mlp, T.constant(rng.uniform(-5, 5, size=(6, 3)))).value
    assert np.all((y > 0) & (y < 1))


def test_mlp_predict_needs_single_output(rng):
    mlp = init_mlp(ParamStore(), "wide", 2, 3, 2, rng)
    assert mlp_forward(mlp, T.constant(np.zeros((4, 2)))).shape == (4, 2)
    with pytest.raises(DimensionError):
        mlp_predict(mlp, T.constant(np.zeros((4, 2))))


def test_zero_parameters_give_zero_prediction(rng):
    store = ParamStore()
    mlp = init_mlp(store, "head", 3, 2, 1, rng)
    mlp.w2.value[...] = 0.0
    mlp.b2.value[...] = 0.0
    assert mlp_predict(mlp, T.constant(rng.uniform(size=(2, 3)))).value.tolist() == [0.0, 0.0]


# ── Dropout ───────────────────────────────────────────

def test_dropout_eval_is_identity(rng):
    x = T.constant(np.ones((4, 5)))
    assert dropout(DropoutSpec(0.5, "eval"), x, rng) is x
    assert dropout(DropoutSpec(0.0, "train"), x, rng) is x


def test_dropout_train_keeps_expectation():
    x = T.constant(np.ones((200, 200)))
    y = dropout(DropoutSpec(0.2, "train"), x, np.random.default_rng(0)).value
    kept = y[y > 0]
    np.testing.assert_allclose(kept, 1.25)
    assert abs(y.mean() - 1.0) < 0.02


def test_dropout_rejects_bad_specs():
    with pytest.raises(ConfigError):
        DropoutSpec(1.0)
    with pytest.raises(ConfigError):
        DropoutSpec(0.1, "sometimes")
    with pytest.raises(ConfigError):
        dropout(DropoutSpec(0.1, "train"), T.constant(np.ones(3)), None)
