# forecaster/training.py
# ─────────────────────────────────────────────────────
# Loss, Adam and the mini-batch training loop.
#
# Per epoch: shuffle the training samples with a seeded order,
# run forward (dropout on) → loss → backward → adam_step →
# zero grads for every batch, then score the validation split.
# The parameters with the best validation loss are restored at
# the end, so the returned model is never worse on validation
# than the last epoch.
# ─────────────────────────────────────────────────────

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field  # type: ignore[reportMissingImports]

from config import DEFAULT_SEED
from forecaster import tensor as T
from forecaster.data import Sample
from forecaster.errors import DataError, DimensionError, GradientError, NonFiniteError, TrainingDivergedError
from forecaster.logs import get_logger
from forecaster.model import DeepExpressModel, forward
from forecaster.params import ParamStore
from forecaster.tensor import Node

log = get_logger("train")


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs:        int                            = Field(default=30, ge=1)
    batch_size:    int                            = Field(default=64, ge=1)
    learning_rate: float                          = Field(default=1e-3, ge=0.0)
    beta1:         float                          = Field(default=0.9, ge=0.0, lt=1.0)
    beta2:         float                          = Field(default=0.999, ge=0.0, lt=1.0)
    eps:           float                          = Field(default=1e-8, gt=0.0)
    loss:          Literal["squared", "absolute"] | None = None  # None: the model's loss kind
    seed:          int                            = DEFAULT_SEED
    patience:      int | None                     = Field(default=None, ge=1)


# ── Loss ──────────────────────────────────────────────

def loss(pred: Node, target, kind: str = "squared") -> Node:
    """(1/B)Σ(ŷ−y)² or (1/B)Σ|ŷ−y| as a scalar node."""
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if pred.value.ndim != 1 or pred.shape != target.shape:
        raise DimensionError(f"loss: predictions {pred.shape} and targets {target.shape} differ")
    if pred.shape[0] < 1:
        raise DimensionError("loss: empty batch")
    diff = T.sub(pred, T.constant(target))
    if kind == "squared":
        return T.mean(T.mul(diff, diff))
    if kind == "absolute":
        return T.mean(T.absolute(diff))
    raise ValueError(f"unknown loss kind {kind!r}")


# ── Adam ──────────────────────────────────────────────

@dataclass
class AdamState:
    m:    dict[str, np.ndarray] = field(default_factory=dict)
    v:    dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(state: AdamState, params: ParamStore, config: TrainConfig) -> None:
    """Bias-corrected Adam, in place, one parameter at a time."""
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise GradientError(f"no gradient for parameter(s): {', '.join(missing)}")

    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m, v = np.zeros_like(p.value), np.zeros_like(p.value)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        p.value -= config.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + config.eps)


# ── Training loop ─────────────────────────────────────

@dataclass
class EpochRecord:
    epoch:      int
    train_loss: float
    val_loss:   float
    best:       bool


@dataclass
class TrainResult:
    model:         DeepExpressModel
    history:       list[EpochRecord]
    best_epoch:    int
    best_val_loss: float
    stopped_early: bool = False

    @property
    def train_losses(self) -> list[float]:
        return [r.train_loss for r in self.history]

    @property
    def val_losses(self) -> list[float]:
        return [r.val_loss for r in self.history]


def batch_arrays(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(histories [B, h], windows [B, 2l+1, n], targets [B]) for single-step training."""
    return (
        np.stack([s.history for s in samples]),
        np.stack([s.feature_window for s in samples]),
        np.array([s.target for s in samples]),
    )


def evaluate_loss(model: DeepExpressModel, samples: Sequence[Sample], kind: str = "squared", batch_size: int = 256) -> float:
    """Mean per-sample loss with dropout off."""
    if not samples:
        raise DataError("cannot evaluate loss on an empty split")
    parts = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        histories, windows, targets = batch_arrays(chunk)
        parts.append(float(loss(forward(model, histories, windows), targets, kind).value) * len(chunk))
    return math.fsum(parts) / len(samples)


def train(
    model:   DeepExpressModel,
    train_samples: Sequence[Sample],
    val_samples:   Sequence[Sample],
    config:  TrainConfig,
    quiet:   bool = False,
) -> TrainResult:
    if not train_samples or not val_samples:
        raise DataError(f"training needs nonempty splits, got {len(train_samples)} train / {len(val_samples)} val")

    kind = config.loss or model.config.loss
    params = model.params
    shuffle_rng = np.random.default_rng([config.seed, 0])
    dropout_rng = np.random.default_rng([config.seed, 1])
    adam = AdamState()
    params.zero_grad()

    best_snapshot = params.snapshot()
    best_val, best_epoch = math.inf, 0
    history: list[EpochRecord] = []
    stale = 0
    stopped_early = False
    n = len(train_samples)

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        parts = []
        for index, start in enumerate(range(0, n, config.batch_size), start=1):
            batch = [train_samples[i] for i in order[start:start + config.batch_size]]
            histories, windows, targets = batch_arrays(batch)
            try:
                pred = forward(model, histories, windows, train=True, rng=dropout_rng)
                batch_loss = loss(pred, targets, kind)
                T.backward(batch_loss)
                adam_step(adam, params, config)
            except NonFiniteError as e:
                raise TrainingDivergedError(f"epoch {epoch}, batch {index}: {e}") from e
            finally:
                params.zero_grad()
            if not np.all([np.all(np.isfinite(p.value)) for p in params.values()]):
                raise TrainingDivergedError(f"epoch {epoch}, batch {index}: parameters became non-finite")
            parts.append(float(batch_loss.value) * len(batch))

        train_loss = math.fsum(parts) / n
        try:
            val_loss = evaluate_loss(model, val_samples, kind)
        except NonFiniteError as e:
            raise TrainingDivergedError(f"epoch {epoch}, validation: {e}") from e

        improved = val_loss < best_val
        if improved:
            best_val, best_epoch, stale = val_loss, epoch, 0
            best_snapshot = params.snapshot()
        else:
            stale += 1
        history.append(EpochRecord(epoch, train_loss, val_loss, improved))
        if not quiet:
            marker = " *" if improved else ""
            log.info(f"[train] epoch {epoch}/{config.epochs} train={train_loss:.6f} val={val_loss:.6f}{marker}")

        if config.patience is not None and stale >= config.patience:
            stopped_early = True
            log.info(f"[train] no validation improvement for {stale} epochs, stopping at epoch {epoch}")
            break

    params.restore(best_snapshot)
    return TrainResult(model, history, best_epoch, best_val, stopped_early)
