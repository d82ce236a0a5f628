# test_checkpoint.py
# Run: pytest test_checkpoint.py

import numpy as np
import pytest

from forecaster.checkpoint import HEADER, checkpoint_load, checkpoint_save, dumps, loads
from forecaster.data import scaler_fit
from forecaster.errors import CheckpointError
from forecaster.model import ModelConfig, forward, init_params


@pytest.fixture
def model():
    cfg = ModelConfig(h=4, l=1, k=2, enc_hidden=3, embedding_dim=2, embedding_dims="weather:3", workday_hidden=2)
    net = init_params(cfg, 21)
    net.scaler = scaler_fit({"y": [812.0, 1530.0], "temperature": [-3.2, 35.5]})
    return net


def _inputs():
    rng = np.random.default_rng(0)
    window = np.array([[0.3, 4, 0, 5], [0.6, 1, 2, 6], [0.1, 0, 0, 0]], dtype=np.float64)
    return rng.uniform(size=(1, 4)), window[None]


def test_reload_reproduces_forward_exactly(model, tmp_path):
    path = tmp_path / "model.ckpt"
    checkpoint_save(model, path)
    back = checkpoint_load(path)
    history, window = _inputs()
    assert forward(back, history, window).value[0] == forward(model, history, window).value[0]
    for name, p in model.params.items():
        np.testing.assert_array_equal(back.params[name].value, p.value)


def test_config_and_scaler_survive(model):
    back = loads(dumps(model))
    assert back.config == model.config
    assert back.config.embedding_dims == {"weather": 3}
    assert back.scaler.mins == model.scaler.mins
    assert back.scaler.maxs == model.scaler.maxs


def test_checkpoint_layout(model):
    text = dumps(model)
    lines = text.splitlines()
    assert lines[0] == HEADER
    assert lines[1] == "[config]"
    assert lines[-1] == "[end]"
    assert "[param joint.w_z]" in lines


def test_truncated_checkpoint(model):
    text = dumps(model)
    with pytest.raises(CheckpointError, match="truncated"):
        loads(text[: len(text) // 2])


def test_wrong_header(model):
    text = dumps(model).replace(HEADER, "deepexpress-checkpoint 99", 1)
    with pytest.raises(CheckpointError, match="expected header"):
        loads(text)


def test_shape_mismatch(model):
    text = dumps(model).replace("[param head.b2]\nshape = 1", "[param head.b2]\nshape = 2", 1)
    with pytest.raises(CheckpointError, match="head.b2"):
        loads(text)


def test_missing_parameter(model):
    lines = dumps(model).splitlines()
    start = lines.index("[param head.b2]")
    text = "\n".join(lines[:start] + lines[start + 3:]) + "\n"
    with pytest.raises(CheckpointError, match="missing parameter 'head.b2'"):
        loads(text)


def test_expected_config_mismatch(model):
    with pytest.raises(CheckpointError, match="enc_hidden"):
        loads(dumps(model), expected=model.config.model_copy(update={"enc_hidden": 4}))


def test_unreadable_file(tmp_path):
    with pytest.raises(CheckpointError, match="cannot read"):
        checkpoint_load(tmp_path / "absent.ckpt")
