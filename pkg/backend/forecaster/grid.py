# forecaster/grid.py
# ─────────────────────────────────────────────────────
# Grid search over h, l, k, hidden units, batch size and epochs.
#
# Each cell re-windows the data for its (h, l, k), trains from
# the same seed and is scored by validation RMSE over its k-step
# rollout. A cell that cannot run (series too short, training
# diverged) is kept in the table with the reason instead of
# stopping the search.
# ─────────────────────────────────────────────────────

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal

import pandas as pd  # type: ignore[reportMissingImports]
from pydantic import BaseModel, ConfigDict, Field, field_validator  # type: ignore[reportMissingImports]
from tqdm import tqdm  # type: ignore[reportMissingImports]

from config import DEFAULT_SEED, build_settings, split_list
from forecaster.data import SeriesDataset, prepare_splits
from forecaster.errors import ConfigError, DataError, DeepExpressError
from forecaster.logs import get_logger
from forecaster.metrics import evaluate_model
from forecaster.model import ModelConfig, init_params
from forecaster.training import TrainConfig, train

log = get_logger("grid")

# grid key → (which config, field name)
AXES = {
    "history":     ("model", "history"),
    "half_window": ("model", "half_window"),
    "horizon":     ("model", "horizon"),
    "enc_hidden":  ("model", "enc_hidden"),
    "batch_size":  ("train", "batch_size"),
    "epochs":      ("train", "epochs"),
}
_ALIASES = {"h": "history", "l": "half_window", "k": "horizon", "hidden": "enc_hidden"}


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    history:     list[int] | None       = None
    half_window: list[int] | None       = None
    horizon:     list[int] | None       = None
    enc_hidden:  list[int] | None       = None
    batch_size:  list[int] | None       = None
    epochs:      list[int] | None       = None
    metric:      Literal["val_rmse"]    = "val_rmse"
    seed:        int                    = DEFAULT_SEED

    @field_validator(*AXES, mode="before")
    @classmethod
    def _parse_list(cls, value):
        if isinstance(value, str):
            return split_list(value)
        if isinstance(value, int):
            return [value]
        return value

    @field_validator(*AXES)
    @classmethod
    def _nonempty(cls, value):
        if value is not None and not value:
            raise ValueError("candidate list must not be empty")
        return value

    @staticmethod
    def canonical_keys(values: dict[str, str]) -> dict[str, str]:
        """Accept the short names h, l, k and hidden in grid documents."""
        return {_ALIASES.get(key, key): value for key, value in values.items()}

    def axes(self, model: ModelConfig, training: TrainConfig) -> dict[str, list[int]]:
        out = {}
        for name, (which, attr) in AXES.items():
            values = getattr(self, name)
            if values is None:
                values = [getattr(model if which == "model" else training, attr)]
            out[name] = list(values)
        return out


@dataclass
class GridRow:
    index:    int
    params:   dict[str, int]
    val_rmse: float = math.nan
    val_mae:  float = math.nan
    status:   Literal["ok", "skipped", "failed"] = "ok"
    reason:   str = ""
    history:  list[float] = field(default_factory=list)


def _cell_configs(params: dict[str, int], model: ModelConfig, training: TrainConfig, seed: int):
    model_updates = {attr: params[name] for name, (which, attr) in AXES.items() if which == "model"}
    train_updates = {attr: params[name] for name, (which, attr) in AXES.items() if which == "train"}
    train_updates["seed"] = seed
    return (
        build_settings(ModelConfig, {**model.model_dump(), **model_updates}, "grid cell"),
        build_settings(TrainConfig, {**training.model_dump(), **train_updates}, "grid cell"),
    )


def run_cell(index: int, params: dict[str, int], dataset: SeriesDataset, model: ModelConfig,
             training: TrainConfig, seed: int) -> GridRow:
    row = GridRow(index, params)
    try:
        model_cfg, train_cfg = _cell_configs(params, model, training, seed)
        splits = prepare_splits(dataset, model_cfg.history, model_cfg.half_window, model_cfg.horizon)
    except (ConfigError, DataError) as e:
        row.status, row.reason = "skipped", str(e)
        return row
    try:
        net = init_params(model_cfg, seed)
        net.scaler = splits.scaler
        result = train(net, splits.train, splits.validation, train_cfg, quiet=True)
        report = evaluate_model(net, splits.validation, model_cfg.horizon)
    except DeepExpressError as e:
        row.status, row.reason = "failed", str(e)
        return row
    row.val_rmse, row.val_mae, row.history = report.rmse, report.mae, result.val_losses
    return row


def _rank(row: GridRow) -> tuple:
    return (row.status != "ok", row.val_rmse if row.status == "ok" else math.inf, row.index)


def grid_search(
    grid:     GridSpec,
    dataset:  SeriesDataset,
    model:    ModelConfig | None = None,
    training: TrainConfig | None = None,
    progress: bool = False,
) -> list[GridRow]:
    """Every cell of the Cartesian product, best validation RMSE first, skipped cells last."""
    model = model or ModelConfig()
    training = training or TrainConfig()
    axes = grid.axes(model, training)
    names = list(axes)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*axes.values())]

    rows = []
    for index, params in enumerate(tqdm(cells, desc="grid", disable=not progress)):
        row = run_cell(index, params, dataset, model, training, grid.seed)
        if row.status == "ok":
            log.info(f"[grid] cell {index + 1}/{len(cells)} {params} val_rmse={row.val_rmse:.5f}")
        else:
            log.warning(f"[grid] cell {index + 1}/{len(cells)} {params} {row.status}: {row.reason}")
        rows.append(row)
    return sorted(rows, key=_rank)


def one_at_a_time_grid(model: ModelConfig, name: str, values: list[int], seed: int = DEFAULT_SEED) -> GridSpec:
    """Vary one of h, l, k (or another axis) with everything else at the base config."""
    name = _ALIASES.get(name, name)
    if name not in AXES:
        raise ConfigError(f"unknown grid axis {name!r}; expected one of {', '.join(AXES)}")
    which, attr = AXES[name]
    if which == "model":
        for value in values:
            build_settings(ModelConfig, {**model.model_dump(), attr: value}, f"sweep {name}")
    return GridSpec.model_validate({name: values, "seed": seed})


def grid_frame(rows: list[GridRow]) -> pd.DataFrame:
    return pd.DataFrame([
        {**row.params, "val_rmse": row.val_rmse, "val_mae": row.val_mae, "status": row.status, "reason": row.reason}
        for row in rows
    ])
