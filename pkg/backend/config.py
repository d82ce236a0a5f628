# config.py
# ─────────────────────────────────────────────────────
# Central configuration for the DeepExpress toolkit.
# Environment settings, config-document parsing and the
# categorical vocabularies are all loaded here.
# Every other module imports its settings from this file.
# ─────────────────────────────────────────────────────

import os
from pathlib import Path
from typing import TypeVar

from dotenv import load_dotenv  # type: ignore[reportMissingImports]
from pydantic import BaseModel, ValidationError  # type: ignore[reportMissingImports]

from forecaster.errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)

# Load variables from backend/.env into os.environ
# This must run before any os.getenv() calls
load_dotenv()

BACKEND_DIR = Path(__file__).resolve().parent

# ── Reproducibility ───────────────────────────────────
# Default seed for generators, initialisation and shuffling
# when a command does not pass one explicitly
DEFAULT_SEED = int(os.getenv("DEEPEXPRESS_SEED", "7"))

# Ablation and evaluation average over these five runs
DEFAULT_SEEDS = [7, 11, 13, 17, 19]

# ── Logging ───────────────────────────────────────────
LOG_LEVEL = os.getenv("DEEPEXPRESS_LOG_LEVEL", "INFO").upper()

# ── Vocabularies ──────────────────────────────────────
# Weather (15 classes) and holiday (5 classes) strings used by the CSV format
VOCAB_FILE = Path(os.getenv("DEEPEXPRESS_VOCAB_FILE", str(BACKEND_DIR / "vocab.conf")))

# ── Tests ─────────────────────────────────────────────
# The synthetic ablation and horizon reproductions take minutes,
# so they only run when this is switched on
SLOW_TESTS = os.getenv("DEEPEXPRESS_SLOW_TESTS", "0") in ("1", "true", "yes")

# ── App settings ──────────────────────────────────────
ENVIRONMENT = os.getenv("ENVIRONMENT", "development")

WEATHER_CARDINALITY = 15
HOLIDAY_CARDINALITY = 5
WEEK_CARDINALITY = 7

# Monday = 0 … Sunday = 6, matching datetime.weekday()
WEEKEND_DAYS = frozenset({5, 6})


# ── Config documents ──────────────────────────────────
# Plain `key = value` lines. `#` starts a comment, blank lines
# are skipped, list values are written comma-separated.
def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def load_kv_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror or e}") from e
    return parse_kv(text, source=str(path))


def dump_kv(values: dict[str, object]) -> str:
    lines = []
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        elif isinstance(value, dict):
            value = ", ".join(f"{k}:{v}" for k, v in value.items())
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def split_mapping(value: str) -> dict[str, str]:
    """`a:1, b:2` → {"a": "1", "b": "2"}"""
    pairs = {}
    for item in split_list(value):
        if ":" not in item:
            raise ConfigError(f"expected 'name:value', got {item!r}")
        name, raw = (part.strip() for part in item.split(":", 1))
        pairs[name] = raw
    return pairs


def build_settings(model_cls: type[ModelT], values: dict, source: str = "<config>") -> ModelT:
    """
    Validate a parsed config document against a pydantic model.
    The first failing field becomes a one-line ConfigError.
    """
    try:
        return model_cls.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or model_cls.__name__
        raise ConfigError(f"{source}: {where}: {first['msg']}") from None


# ── Vocabularies ──────────────────────────────────────
def load_vocabulary(path: str | Path | None = None) -> dict[str, list[str]]:
    """
    Load the weather and holiday vocabularies.

    The file is a config document with one comma-separated list per
    categorical feature. List position is the category id, so the
    order in the file is part of the data format.
    """
    values = load_kv_file(path or VOCAB_FILE)
    expected = {"weather": WEATHER_CARDINALITY, "holiday": HOLIDAY_CARDINALITY}
    vocab: dict[str, list[str]] = {}
    for name, size in expected.items():
        if name not in values:
            raise ConfigError(f"vocabulary file is missing the {name!r} list")
        words = split_list(values[name])
        if len(words) != size:
            raise ConfigError(f"vocabulary {name!r} must have {size} entries, found {len(words)}")
        if len(set(words)) != len(words):
            raise ConfigError(f"vocabulary {name!r} has duplicate entries")
        vocab[name] = words
    return vocab


# ── Safety check ──────────────────────────────────────
# Warns immediately on a broken setup instead of failing later
def validate_config() -> list[str]:
    warnings = []
    if not VOCAB_FILE.exists():
        warnings.append(f"vocabulary file not found: {VOCAB_FILE}")
    if LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        warnings.append(f"unknown DEEPEXPRESS_LOG_LEVEL {LOG_LEVEL!r}, falling back to INFO")
    return warnings
