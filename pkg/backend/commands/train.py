# commands/train.py
# train, grid-search and sweep: everything that fits parameters.

from pathlib import Path

import click  # type: ignore[reportMissingImports]
from rich.table import Table  # type: ignore[reportMissingImports]

from commands.common import console, handle_errors, load_run_config
from config import DEFAULT_SEED, build_settings, load_kv_file, split_list
from forecaster.checkpoint import checkpoint_save
from forecaster.data import load_csv, prepare_splits
from forecaster.errors import ConfigError
from forecaster.grid import GridRow, GridSpec, grid_frame, grid_search, one_at_a_time_grid
from forecaster.metrics import evaluate_model, render_text
from forecaster.model import init_params
from forecaster.training import train


@click.command("train")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Model + training document (key = value).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Checkpoint to write.")
@click.option("--seed", type=int, default=None, help="Overrides the seed in the config.")
@handle_errors
def train_command(data_path, config_path, out_path, seed):
    model_cfg, train_cfg = load_run_config(config_path)
    if seed is not None:
        train_cfg = train_cfg.model_copy(update={"seed": seed})

    dataset = load_csv(data_path)
    splits = prepare_splits(dataset, model_cfg.history, model_cfg.half_window, model_cfg.horizon)
    console.print(f"[bold]{model_cfg.variant}[/bold] on {len(splits.train)} train / "
                  f"{len(splits.validation)} val / {len(splits.test)} test samples")

    model = init_params(model_cfg, train_cfg.seed)
    model.scaler = splits.scaler
    result = train(model, splits.train, splits.validation, train_cfg)
    checkpoint_save(model, out_path)

    report = evaluate_model(model, splits.validation, model_cfg.horizon, name="validation")
    console.print(f"best epoch {result.best_epoch}, val loss {result.best_val_loss:.6f}, "
                  f"val RMSE {report.rmse:.4f} (scaled) → [green]{out_path}[/green]")


def _grid_table(rows: list[GridRow], title: str) -> Table:
    table = Table(title=title)
    names = list(rows[0].params) if rows else []
    for name in names:
        table.add_column(name, justify="right")
    for column in ("val RMSE", "val MAE", "status"):
        table.add_column(column, justify="right" if column != "status" else "left")
    for row in rows:
        status = row.status if row.status == "ok" else f"{row.status}: {row.reason}"
        metrics = [f"{row.val_rmse:.4f}", f"{row.val_mae:.4f}"] if row.status == "ok" else ["—", "—"]
        table.add_row(*(str(row.params[n]) for n in names), *metrics, status)
    return table


def _write_grid(rows: list[GridRow], report_path: str, title: str) -> None:
    table = _grid_table(rows, title)
    console.print(table)
    path = Path(report_path)
    path.write_text(render_text(table), encoding="utf-8")
    csv_path = path.with_suffix(".csv") if path.suffix != ".csv" else path.with_name(path.stem + ".table.csv")
    grid_frame(rows).to_csv(csv_path, index=False)
    console.print(f"report → [green]{path}[/green], [green]{csv_path}[/green]")


@click.command("grid-search")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--grid", "grid_path", type=click.Path(dir_okay=False), required=True,
              help="Grid document: comma-separated candidates for h, l, k, hidden, batch_size, epochs.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Base model + training document.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True, help="Report file.")
@handle_errors
def grid_search_command(data_path, grid_path, config_path, report_path):
    model_cfg, train_cfg = load_run_config(config_path)
    grid = build_settings(GridSpec, GridSpec.canonical_keys(load_kv_file(grid_path)), grid_path)
    rows = grid_search(grid, load_csv(data_path), model_cfg, train_cfg, progress=True)
    _write_grid(rows, report_path, "Grid search")


@click.command("sweep")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True, help="Series CSV.")
@click.option("--param", "param", required=True, help="Axis to vary: h, l, k, hidden, batch_size or epochs.")
@click.option("--values", "values", required=True, help="Comma-separated candidate values.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Base model + training document.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True, help="Report file.")
@handle_errors
def sweep_command(data_path, param, values, config_path, seed, report_path):
    model_cfg, train_cfg = load_run_config(config_path)
    try:
        candidates = [int(v) for v in split_list(values)]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated integers, got {values!r}") from None
    grid = one_at_a_time_grid(model_cfg, param, candidates, seed)
    rows = grid_search(grid, load_csv(data_path), model_cfg, train_cfg, progress=True)
    rows.sort(key=lambda row: row.index)
    _write_grid(rows, report_path, f"Sweep over {param}")
