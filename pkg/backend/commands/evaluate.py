# commands/evaluate.py
# predict, evaluate and ablate: everything that scores or uses a trained model.

import numpy as np
import pandas as pd  # type: ignore[reportMissingImports]
import click  # type: ignore[reportMissingImports]

from commands.common import console, handle_errors, load_run_config, parse_seeds
from config import DEFAULT_SEEDS, split_list
from forecaster.ablation import DEFAULT_VARIANTS, run_ablation
from forecaster.baselines import predict_seasonal
from forecaster.checkpoint import checkpoint_load
from forecaster.data import dataset_feature_provider, load_csv, make_windows, split_dataset
from forecaster.errors import DataError
from forecaster.metrics import evaluate_model, report_table, sample_targets, score_predictions, write_report
from forecaster.model import predict_sequence


def _origin_index(dataset, origin: str | None, h: int, l: int, k: int) -> int:
    """Anchor day t: the given date, or the latest day whose k-step rollout still has features."""
    latest = len(dataset) - 1 - k - l
    if origin is None:
        t = latest
    else:
        try:
            day = np.datetime64(pd.Timestamp(origin).date(), "D")
        except ValueError:
            raise DataError(f"--origin {origin!r} is not a date") from None
        matches = np.flatnonzero(dataset.dates == day)
        if not len(matches):
            raise DataError(f"--origin {origin} is outside the series")
        t = int(matches[0])
    if t < h - 1:
        raise DataError(f"origin needs {h} days of history, only {t + 1} available")
    if t > latest:
        raise DataError(f"origin {dataset.dates[t]} leaves no features for a {k}-day forecast (half window {l})")
    return t


@click.command("predict")
@click.option("--ckpt", "ckpt_path", type=click.Path(dir_okay=False), required=True, help="Trained checkpoint.")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--horizon", "k", type=click.IntRange(min=1), required=True, help="Days to forecast.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Forecast CSV.")
@click.option("--origin", default=None, help="Last observed day (YYYY-MM-DD). Defaults to the latest usable day.")
@handle_errors
def predict_command(ckpt_path, data_path, k, out_path, origin):
    model = checkpoint_load(ckpt_path)
    dataset = load_csv(data_path)
    h, l = model.config.history, model.config.half_window
    t = _origin_index(dataset, origin, h, l, k)

    provider = dataset_feature_provider(dataset, t, l, model.schema)
    pred = predict_sequence(model, dataset.y[:t + 1], provider, k)

    frame = pd.DataFrame({
        "date":   pd.to_datetime(dataset.dates[t + 1:t + k + 1]).strftime("%Y-%m-%d"),
        "y_true": dataset.y[t + 1:t + k + 1],
        "y_pred": pred,
    })
    frame.to_csv(out_path, index=False)
    console.print(f"{k}-day forecast from {dataset.dates[t]} → [green]{out_path}[/green]")


@click.command("evaluate")
@click.option("--ckpt", "ckpt_path", type=click.Path(dir_okay=False), required=True, help="Trained checkpoint.")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True, help="Report file.")
@handle_errors
def evaluate_command(ckpt_path, data_path, report_path):
    model = checkpoint_load(ckpt_path)
    cfg = model.config
    samples = make_windows(load_csv(data_path), cfg.history, cfg.half_window, cfg.horizon, model.schema, model.scaler)
    _, test, _ = split_dataset(samples)

    reports = [
        evaluate_model(model, test, cfg.horizon, name=f"{cfg.variant} (test)"),
        score_predictions("seasonal_naive (test)", sample_targets(test, cfg.horizon),
                          predict_seasonal(test, cfg.horizon), scaler=model.scaler),
    ]
    csv_path = write_report(reports, report_path, title=f"Test evaluation, {len(test)} samples")
    console.print(report_table(reports, "Test evaluation"))
    console.print(f"report → [green]{report_path}[/green], [green]{csv_path}[/green]")


@click.command("ablate")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Base model + training document.")
@click.option("--seeds", default=",".join(map(str, DEFAULT_SEEDS)), show_default=True,
              help="Comma-separated seeds; metrics are averaged over them.")
@click.option("--variants", default=",".join(DEFAULT_VARIANTS), show_default=True,
              help="Comma-separated variants and baselines to run.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True, help="Report file.")
@handle_errors
def ablate_command(data_path, config_path, seeds, variants, report_path):
    model_cfg, train_cfg = load_run_config(config_path)
    reports = run_ablation(
        load_csv(data_path), model_cfg, train_cfg,
        seeds=parse_seeds(seeds), variants=split_list(variants), progress=True,
    )
    csv_path = write_report(reports, report_path, title="Ablation (test split, mean over seeds)")
    console.print(report_table(reports, "Ablation"))
    for report in reports:
        if not report.ok:
            console.print(f"[red]{report.name} failed:[/red] {report.error}")
    console.print(f"report → [green]{report_path}[/green], [green]{csv_path}[/green]")
