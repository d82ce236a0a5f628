# forecaster/ablation.py
# ─────────────────────────────────────────────────────
# Trains and scores every requested variant over a list of
# seeds on one shared split, then averages per variant.
#
#   full, no_hfr, no_jta, no_both      network ablations
#   plain_seq2seq, att_seq2seq         encoder-decoder references
#   seasonal_naive, linear_ar          classical floors
#
# A seed that fails is recorded against its variant and the
# surviving seeds are averaged. A variant with no surviving
# seed is reported with its first error.
# ─────────────────────────────────────────────────────

from __future__ import annotations

from typing import Sequence

from tqdm import tqdm  # type: ignore[reportMissingImports]

from config import DEFAULT_SEEDS
from forecaster.baselines import baseline_linear_ar, predict_ar, predict_seasonal
from forecaster.data import SeriesDataset, Splits, prepare_splits
from forecaster.errors import ConfigError, DeepExpressError
from forecaster.logs import get_logger
from forecaster.metrics import EvalReport, combine_reports, evaluate_model, sample_targets, score_predictions
from forecaster.model import VARIANTS, ModelConfig, init_params
from forecaster.training import TrainConfig, train

log = get_logger("ablation")

BASELINES = ("seasonal_naive", "linear_ar")
DEFAULT_VARIANTS = VARIANTS + BASELINES
AR_ORDER = 7


def _neural_run(variant: str, seed: int, splits: Splits, model: ModelConfig, training: TrainConfig) -> EvalReport:
    config = model.model_copy(update={"variant": variant})
    net = init_params(config, seed)
    net.scaler = splits.scaler
    train(net, splits.train, splits.validation, training.model_copy(update={"seed": seed}), quiet=True)
    return evaluate_model(net, splits.test, config.horizon, name=variant, seed=seed)


def _baseline_run(variant: str, splits: Splits, k: int) -> EvalReport:
    if variant == "seasonal_naive":
        pred = predict_seasonal(splits.test, k)
    else:
        pred = predict_ar(baseline_linear_ar(splits.train, min(AR_ORDER, len(splits.train[0].history))), splits.test, k)
    return score_predictions(variant, sample_targets(splits.test, k), pred, scaler=splits.scaler)


def run_ablation(
    dataset:  SeriesDataset,
    model:    ModelConfig | None = None,
    training: TrainConfig | None = None,
    seeds:    Sequence[int] = DEFAULT_SEEDS,
    variants: Sequence[str] = DEFAULT_VARIANTS,
    progress: bool = False,
) -> list[EvalReport]:
    """One averaged report per requested variant, in request order."""
    model = model or ModelConfig()
    training = training or TrainConfig()
    unknown = [v for v in variants if v not in DEFAULT_VARIANTS]
    if unknown:
        raise ConfigError(f"unknown variant(s): {', '.join(unknown)}")
    if not seeds:
        raise ConfigError("ablation needs at least one seed")

    splits = prepare_splits(dataset, model.history, model.half_window, model.horizon)
    log.info(
        f"[ablation] {len(splits.train)} train / {len(splits.validation)} val / {len(splits.test)} test samples, "
        f"{len(variants)} variants × {len(seeds)} seeds"
    )

    runs = [(v, s) for v in variants for s in seeds]
    per_variant: dict[str, list[EvalReport]] = {v: [] for v in variants}
    failures: dict[str, dict[int, str]] = {v: {} for v in variants}
    baseline_cache: dict[str, EvalReport | DeepExpressError] = {}

    for variant, seed in tqdm(runs, desc="ablation", disable=not progress):
        try:
            if variant in BASELINES:
                if variant not in baseline_cache:
                    try:
                        baseline_cache[variant] = _baseline_run(variant, splits, model.horizon)
                    except DeepExpressError as e:
                        baseline_cache[variant] = e
                cached = baseline_cache[variant]
                if isinstance(cached, DeepExpressError):
                    raise cached
                run = cached.model_copy(update={"seeds": [seed]})
            else:
                run = _neural_run(variant, seed, splits, model, training)
        except DeepExpressError as e:
            failures[variant][seed] = str(e)
            log.warning(f"[ablation] {variant} seed {seed} failed: {e}")
            continue
        per_variant[variant].append(run)
        log.info(f"[ablation] {variant} seed {seed} rmse={run.rmse:.5f} mae={run.mae:.5f}")

    reports = []
    for variant in variants:
        failed = failures[variant]
        if not per_variant[variant]:
            first = next(iter(failed.values()))
            reports.append(EvalReport(name=variant, seeds=list(seeds), error=first, failed_seeds=failed))
            continue
        report = combine_reports(variant, per_variant[variant])
        if failed:
            log.warning(f"[ablation] {variant}: averaged {len(per_variant[variant])} of {len(seeds)} seeds")
            report = report.model_copy(update={"failed_seeds": failed})
        reports.append(report)
    return reports
