# forecaster/checkpoint.py
# ─────────────────────────────────────────────────────
# Text checkpoints:
#
#   deepexpress-checkpoint 1
#   [config]
#   history = 21
#   ...
#   [scaler]
#   y = 0 2143
#   [param encoder.input.input_weight]
#   shape = 16 1
#   values = 0.12345678901234567 ...
#   [end]
#
# Values use 17 significant digits, which round-trips fp64
# exactly, so a reloaded model reproduces forward outputs bit
# for bit.
# ─────────────────────────────────────────────────────

from __future__ import annotations

from pathlib import Path

import numpy as np

from config import build_settings, dump_kv, parse_kv
from forecaster.data import ScalerState
from forecaster.errors import CheckpointError, ConfigError
from forecaster.logs import get_logger
from forecaster.model import DeepExpressModel, ModelConfig, init_params

log = get_logger("checkpoint")

FORMAT_VERSION = 1
HEADER = f"deepexpress-checkpoint {FORMAT_VERSION}"


def _format(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in values.ravel())


def dumps(model: DeepExpressModel) -> str:
    lines = [HEADER, "[config]", dump_kv(model.config.to_document()).rstrip("\n")]
    if model.scaler is not None:
        lines.append("[scaler]")
        for name in model.scaler.mins:
            lines.append(f"{name} = {format(model.scaler.mins[name], '.17g')} {format(model.scaler.maxs[name], '.17g')}")
    for name, p in model.params.items():
        lines.append(f"[param {name}]")
        lines.append("shape = " + " ".join(str(d) for d in p.shape))
        lines.append("values = " + _format(p.value))
    lines.append("[end]")
    return "\n".join(lines) + "\n"


def checkpoint_save(model: DeepExpressModel, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps(model), encoding="utf-8")
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e.strerror or e}") from e
    log.info(f"[checkpoint] saved {len(model.params)} tensors to {path}")


def _sections(text: str, source: str) -> dict[str, list[str]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        found = lines[0].strip() if lines else "<empty>"
        raise CheckpointError(f"{source}: expected header {HEADER!r}, found {found!r}")
    if lines[-1].strip() != "[end]":
        raise CheckpointError(f"{source}: checkpoint is truncated (no [end] marker)")

    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(lines[1:-1], start=2):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise CheckpointError(f"{source}:{lineno}: section [{current}] appears twice")
            sections[current] = []
        elif current is None:
            if line:
                raise CheckpointError(f"{source}:{lineno}: content before the first section")
        else:
            sections[current].append(raw)
    if "config" not in sections:
        raise CheckpointError(f"{source}: no [config] section")
    return sections


def _numbers(raw: str, source: str, what: str) -> list[float]:
    try:
        return [float(v) for v in raw.split()]
    except ValueError:
        raise CheckpointError(f"{source}: {what} holds a non-numeric value") from None


def _kv(lines: list[str], source: str) -> dict[str, str]:
    try:
        return parse_kv("\n".join(lines), source)
    except ConfigError as e:
        raise CheckpointError(f"malformed checkpoint: {e}") from e


def _config_mismatch(stored: ModelConfig, expected: ModelConfig) -> str | None:
    ours, theirs = stored.model_dump(), expected.model_dump()
    for key in ours:
        if ours[key] != theirs[key]:
            return f"{key} is {ours[key]!r} in the checkpoint but {theirs[key]!r} was requested"
    return None


def loads(text: str, expected: ModelConfig | None = None, source: str = "<checkpoint>") -> DeepExpressModel:
    sections = _sections(text, source)
    try:
        config = build_settings(ModelConfig, parse_kv("\n".join(sections.pop("config")), source), source)
    except ConfigError as e:
        raise CheckpointError(f"invalid config in checkpoint: {e}") from e
    if expected is not None:
        mismatch = _config_mismatch(config, expected)
        if mismatch:
            raise CheckpointError(f"{source}: config mismatch: {mismatch}")

    model = init_params(config, seed=0)

    scaler_lines = sections.pop("scaler", None)
    if scaler_lines is not None:
        scaler = ScalerState()
        for name, raw in _kv(scaler_lines, source).items():
            bounds = _numbers(raw, source, f"scaler {name}")
            if len(bounds) != 2:
                raise CheckpointError(f"{source}: scaler {name} needs 'min max'")
            scaler.mins[name], scaler.maxs[name] = bounds
        model.scaler = scaler

    stored = {}
    for section, body in sections.items():
        if not section.startswith("param "):
            raise CheckpointError(f"{source}: unknown section [{section}]")
        stored[section[len("param "):].strip()] = _kv(body, source)

    for name, p in model.params.items():
        if name not in stored:
            raise CheckpointError(f"{source}: missing parameter {name!r}")
        entry = stored.pop(name)
        if "shape" not in entry or "values" not in entry:
            raise CheckpointError(f"{source}: parameter {name!r} needs shape and values")
        shape = tuple(int(d) for d in _numbers(entry["shape"], source, f"{name} shape"))
        if shape != p.shape:
            raise CheckpointError(f"{source}: parameter {name!r} has shape {shape}, model expects {p.shape}")
        values = _numbers(entry["values"], source, f"{name} values")
        if len(values) != p.value.size:
            raise CheckpointError(f"{source}: parameter {name!r} has {len(values)} values, expected {p.value.size}")
        p.value[...] = np.array(values, dtype=np.float64).reshape(shape)
    if stored:
        raise CheckpointError(f"{source}: unexpected parameter(s) {', '.join(sorted(stored))}")
    return model


def checkpoint_load(path: str | Path, expected: ModelConfig | None = None) -> DeepExpressModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e.strerror or e}") from e
    model = loads(text, expected, str(path))
    log.debug(f"[checkpoint] loaded {len(model.params)} tensors from {path}")
    return model
