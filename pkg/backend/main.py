# main.py
# ─────────────────────────────────────────────────────
# Entry point for the DeepExpress command line.
# Creates the click group and registers every command.
# Run with: python main.py --help
# ─────────────────────────────────────────────────────

import click  # type: ignore[reportMissingImports]

from commands.data import gen_data
from commands.evaluate import ablate_command, evaluate_command, predict_command
from commands.train import grid_search_command, sweep_command, train_command
from config import ENVIRONMENT, validate_config
from forecaster.logs import get_logger

log = get_logger("cli")


# ── Group ─────────────────────────────────────────────
# Runs before every subcommand; a broken setup is reported
# up front instead of failing halfway through a run.
@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option("1.0.0", prog_name="deepexpress")
def cli():
    """DeepExpress: daily demand forecasting with feature embeddings and joint attention."""
    for warning in validate_config():
        log.warning(f"[config] {warning}")
    log.debug(f"[config] environment: {ENVIRONMENT}")


# ── Commands ──────────────────────────────────────────
cli.add_command(gen_data)
cli.add_command(train_command)
cli.add_command(predict_command)
cli.add_command(evaluate_command)
cli.add_command(grid_search_command)
cli.add_command(sweep_command)
cli.add_command(ablate_command)


# ── Start ─────────────────────────────────────────────
if __name__ == "__main__":
    cli()
