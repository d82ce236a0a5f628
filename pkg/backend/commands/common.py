# commands/common.py
# Shared pieces for the CLI commands: error translation,
# run-config documents and the rich console.

import functools
from pathlib import Path

import click  # type: ignore[reportMissingImports]
from rich.console import Console  # type: ignore[reportMissingImports]

from config import build_settings, load_kv_file, split_list
from forecaster.errors import ConfigError, DeepExpressError
from forecaster.model import ModelConfig
from forecaster.training import TrainConfig

console = Console()


def handle_errors(command):
    """Turn any toolkit error into a one-line message and exit code 1."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except DeepExpressError as e:
            raise click.ClickException(str(e)) from None
        except OSError as e:
            raise click.ClickException(f"{e.filename or ''}: {e.strerror or e}".lstrip(": ")) from None
    return wrapper


def _model_keys() -> set[str]:
    keys = set(ModelConfig.model_fields)
    keys.update({"h", "l", "k"})
    return keys


def split_run_config(values: dict[str, str], source: str = "<config>") -> tuple[ModelConfig, TrainConfig]:
    """
    One document configures both the network and its training.
    `loss` belongs to both; any other key must belong to one of them.
    """
    model_keys, train_keys = _model_keys(), set(TrainConfig.model_fields)
    unknown = sorted(k for k in values if k not in model_keys and k not in train_keys)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
    model = build_settings(ModelConfig, {k: v for k, v in values.items() if k in model_keys}, source)
    training = build_settings(TrainConfig, {k: v for k, v in values.items() if k in train_keys}, source)
    return model, training


def load_run_config(path: str | Path | None) -> tuple[ModelConfig, TrainConfig]:
    if path is None:
        return ModelConfig(), TrainConfig()
    return split_run_config(load_kv_file(path), str(path))


def parse_seeds(value: str) -> list[int]:
    try:
        seeds = [int(s) for s in split_list(value)]
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {value!r}") from None
    if not seeds:
        raise ConfigError("seeds list is empty")
    return seeds
