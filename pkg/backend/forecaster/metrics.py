# forecaster/metrics.py
# RMSE / MAE, evaluation reports and their text + CSV rendering.

from __future__ import annotations

import io
import math
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd  # type: ignore[reportMissingImports]
from pydantic import BaseModel, Field  # type: ignore[reportMissingImports]
from rich.console import Console  # type: ignore[reportMissingImports]
from rich.table import Table  # type: ignore[reportMissingImports]

from forecaster.data import Sample, ScalerState, scaler_invert
from forecaster.errors import MetricError
from forecaster.model import DeepExpressModel, rollout


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.ravel(np.asarray(y, dtype=np.float64))
    y_hat = np.ravel(np.asarray(y_hat, dtype=np.float64))
    if y.shape != y_hat.shape:
        raise MetricError(f"length mismatch: {y.shape[0]} targets vs {y_hat.shape[0]} predictions")
    if y.size == 0:
        raise MetricError("cannot score an empty set")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y_hat))):
        raise MetricError("metric inputs must be finite")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return math.sqrt(math.fsum((y - y_hat) ** 2) / y.size)


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return math.fsum(np.abs(y - y_hat)) / y.size


# ── Reports ───────────────────────────────────────────

class EvalReport(BaseModel):
    name:               str
    samples:            int                 = 0
    horizon:            int                 = 1
    seeds:              list[int]           = Field(default_factory=list)
    rmse:               float               = math.nan
    mae:                float               = math.nan
    rmse_unscaled:      float               = math.nan
    mae_unscaled:       float               = math.nan
    step_rmse:          list[float]         = Field(default_factory=list)
    step_mae:           list[float]         = Field(default_factory=list)
    seed_rmse:          list[float]         = Field(default_factory=list)
    seed_mae:           list[float]         = Field(default_factory=list)
    config:             dict[str, object]   = Field(default_factory=dict)
    failed_seeds:       dict[int, str]      = Field(default_factory=dict)
    error:              str | None          = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _check_power_mean(name: str, r: float, m: float) -> None:
    if r < 0 or m < 0 or r < m * (1 - 1e-12) - 1e-15:
        raise MetricError(f"{name}: rmse {r} < mae {m}")


def score_predictions(
    name:     str,
    truth,
    pred,
    scaler:   ScalerState | None = None,
    seed:     int | None = None,
    config:   dict | None = None,
) -> EvalReport:
    """truth/pred are scaled [N, k] arrays; unscaled metrics use the scaler inverse."""
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.ndim == 1:
        truth, pred = truth[:, None], pred.reshape(-1, 1)
    if truth.shape != pred.shape:
        raise MetricError(f"truth {truth.shape} and predictions {pred.shape} differ")

    report = EvalReport(
        name=name,
        samples=truth.shape[0],
        horizon=truth.shape[1],
        seeds=[] if seed is None else [seed],
        rmse=rmse(truth, pred),
        mae=mae(truth, pred),
        step_rmse=[rmse(truth[:, j], pred[:, j]) for j in range(truth.shape[1])],
        step_mae=[mae(truth[:, j], pred[:, j]) for j in range(truth.shape[1])],
        config=config or {},
    )
    if scaler is not None:
        report.rmse_unscaled = rmse(scaler_invert(scaler, "y", truth), scaler_invert(scaler, "y", pred))
        report.mae_unscaled = mae(scaler_invert(scaler, "y", truth), scaler_invert(scaler, "y", pred))
        _check_power_mean(name, report.rmse_unscaled, report.mae_unscaled)
    _check_power_mean(name, report.rmse, report.mae)
    for r, m in zip(report.step_rmse, report.step_mae):
        _check_power_mean(name, r, m)
    report.seed_rmse, report.seed_mae = [report.rmse], [report.mae]
    return report


def combine_reports(name: str, runs: Sequence[EvalReport]) -> EvalReport:
    """Average per-seed runs of one model; per-seed values stay in seed_rmse/seed_mae."""
    if not runs:
        raise MetricError(f"{name}: no runs to combine")

    def avg(values) -> float:
        return math.fsum(values) / len(values)

    first = runs[0]
    return EvalReport(
        name=name,
        samples=first.samples,
        horizon=first.horizon,
        seeds=[s for r in runs for s in r.seeds],
        rmse=avg([r.rmse for r in runs]),
        mae=avg([r.mae for r in runs]),
        rmse_unscaled=avg([r.rmse_unscaled for r in runs]),
        mae_unscaled=avg([r.mae_unscaled for r in runs]),
        step_rmse=[avg(col) for col in zip(*(r.step_rmse for r in runs))],
        step_mae=[avg(col) for col in zip(*(r.step_mae for r in runs))],
        seed_rmse=[r.rmse for r in runs],
        seed_mae=[r.mae for r in runs],
        config=first.config,
    )


def sample_targets(samples: Sequence[Sample], k: int) -> np.ndarray:
    return np.stack([s.targets[:k] for s in samples])


def predict_samples(model: DeepExpressModel, samples: Sequence[Sample], k: int, batch_size: int = 256) -> np.ndarray:
    """Scaled k-step rollouts for every sample → [N, k]."""
    out = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        histories = np.stack([s.history for s in chunk])
        blocks = np.stack([s.features for s in chunk])
        out.append(rollout(model, histories, blocks, k))
    return np.concatenate(out, axis=0)


def evaluate_model(
    model:   DeepExpressModel,
    samples: Sequence[Sample],
    k:       int | None = None,
    name:    str | None = None,
    seed:    int | None = None,
) -> EvalReport:
    if not samples:
        raise MetricError("no samples to evaluate")
    k = k or samples[0].horizon
    if k > samples[0].horizon:
        raise MetricError(f"samples carry {samples[0].horizon} targets, cannot score a {k}-step horizon")
    pred = predict_samples(model, samples, k)
    return score_predictions(
        name or model.variant, sample_targets(samples, k), pred,
        scaler=model.scaler, seed=seed, config=model.config.to_document(),
    )


# ── Rendering ─────────────────────────────────────────

def _fmt(value: float) -> str:
    return "—" if value is None or math.isnan(value) else f"{value:.4f}"


def _failed_note(report: EvalReport) -> str:
    if not report.failed_seeds:
        return ""
    return "failed seeds: " + ", ".join(str(s) for s in report.failed_seeds)


def report_table(reports: Sequence[EvalReport], title: str = "Evaluation") -> Table:
    table = Table(title=title)
    for column in ("model", "samples", "RMSE", "MAE", "RMSE (units)", "MAE (units)", "per-step RMSE", "seeds", "note"):
        table.add_column(column, justify="left" if column in ("model", "note") else "right")
    for r in reports:
        table.add_row(
            r.name,
            str(r.samples),
            _fmt(r.rmse),
            _fmt(r.mae),
            _fmt(r.rmse_unscaled),
            _fmt(r.mae_unscaled),
            " ".join(_fmt(v) for v in r.step_rmse),
            ",".join(str(s) for s in r.seeds),
            r.error or _failed_note(r),
        )
    return table


def reports_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = []
    for r in reports:
        row = {
            "model": r.name, "samples": r.samples, "horizon": r.horizon,
            "rmse": r.rmse, "mae": r.mae,
            "rmse_unscaled": r.rmse_unscaled, "mae_unscaled": r.mae_unscaled,
            "seeds": " ".join(str(s) for s in r.seeds),
            "seed_rmse": " ".join(format(v, ".17g") for v in r.seed_rmse),
            "seed_mae": " ".join(format(v, ".17g") for v in r.seed_mae),
            "error": r.error or "",
            "failed_seeds": " ".join(str(s) for s in r.failed_seeds),
        }
        for j, (sr, sm) in enumerate(zip(r.step_rmse, r.step_mae), start=1):
            row[f"rmse_step{j}"], row[f"mae_step{j}"] = sr, sm
        rows.append(row)
    return pd.DataFrame(rows)


def render_text(table: Table, width: int = 160) -> str:
    console = Console(file=io.StringIO(), width=width, record=True)
    console.print(table)
    return console.export_text()


def write_report(reports: Sequence[EvalReport], path: str | Path, title: str = "Evaluation") -> Path:
    """Aligned text table at path, machine-readable CSV next to it. Returns the CSV path."""
    path = Path(path)
    path.write_text(render_text(report_table(reports, title)), encoding="utf-8")
    csv_path = path.with_suffix(".csv") if path.suffix != ".csv" else path.with_name(path.stem + ".table.csv")
    reports_frame(reports).to_csv(csv_path, index=False)
    return csv_path
