# commands/data.py
# gen-data: write a synthetic series (and optionally its effect log) to CSV.

import click  # type: ignore[reportMissingImports]

from commands.common import console, handle_errors
from config import build_settings, load_kv_file
from forecaster.data import write_csv
from forecaster.generator import GeneratorSpec, generate_synthetic


@click.command("gen-data")
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), default=None,
              help="Generator spec document (key = value). Defaults apply when omitted.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Output CSV.")
@click.option("--seed", type=int, default=None, help="Overrides the seed in the spec.")
@click.option("--effects", "effects_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the per-day effect log here.")
@handle_errors
def gen_data(spec_path, out_path, seed, effects_path):
    values = load_kv_file(spec_path) if spec_path else {}
    if seed is not None:
        values["seed"] = seed
    spec = build_settings(GeneratorSpec, values, spec_path or "gen-data")

    dataset, effects = generate_synthetic(spec)
    write_csv(dataset, out_path)
    if effects_path:
        effects.to_csv(effects_path, index_label="date", date_format="%Y-%m-%d")

    console.print(f"[green]wrote {len(dataset)} days[/green] to {out_path} "
                  f"(y range {dataset.y.min():.0f}–{dataset.y.max():.0f}, seed {spec.seed})")
