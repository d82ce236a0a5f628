# forecaster/baselines.py
# Classical sanity floors the network has to beat:
# seasonal naive and least-squares linear autoregression.

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from forecaster.data import Sample
from forecaster.errors import DataError
from forecaster.logs import get_logger

log = get_logger("baseline")

RIDGE = 1e-8


def baseline_seasonal_naive(history, k: int, period: int = 7) -> np.ndarray:
    """ŷ_{t+j} = y_{t+j−period}, reusing forecasts once j > period."""
    work = list(np.asarray(history, dtype=np.float64))
    if len(work) < period:
        raise DataError(f"seasonal naive needs at least {period} history values, got {len(work)}")
    for _ in range(k):
        work.append(work[-period])
    return np.array(work[-k:]) if k else np.zeros(0)


@dataclass
class LinearAR:
    coef:      np.ndarray   # coef[j] multiplies y_{t−j}
    intercept: float
    damped:    bool = False

    @property
    def order(self) -> int:
        return len(self.coef)

    def step(self, history) -> float:
        recent = np.asarray(history, dtype=np.float64)[::-1][:self.order]
        return float(self.intercept + recent @ self.coef)

    def forecast(self, history, k: int) -> np.ndarray:
        work = list(np.asarray(history, dtype=np.float64))
        if len(work) < self.order:
            raise DataError(f"AR({self.order}) needs {self.order} history values, got {len(work)}")
        out = []
        for _ in range(k):
            y = self.step(work)
            out.append(y)
            work.append(y)
        return np.array(out)


def _design(series: Sequence[tuple[np.ndarray, float]], order: int, intercept: bool) -> tuple[np.ndarray, np.ndarray]:
    rows, targets = [], []
    for history, target in series:
        lags = np.asarray(history, dtype=np.float64)[::-1][:order]
        rows.append(np.append(lags, 1.0) if intercept else lags)
        targets.append(target)
    return np.array(rows), np.array(targets)


def fit_linear_ar(pairs: Sequence[tuple[np.ndarray, float]], order: int, intercept: bool = True) -> LinearAR:
    """
    Ordinary least squares on (history, next value) pairs via the normal
    equations. A singular system is logged and solved with a tiny ridge.
    """
    if order < 1:
        raise DataError(f"AR order must be at least 1, got {order}")
    if len(pairs) <= order:
        raise DataError(f"AR({order}) needs more than {order} samples, got {len(pairs)}")
    if any(len(h) < order for h, _ in pairs):
        raise DataError(f"every history must hold at least {order} values")

    X, y = _design(pairs, order, intercept)
    gram, rhs = X.T @ X, X.T @ y
    damped = np.linalg.matrix_rank(gram) < gram.shape[0]
    if not damped:
        try:
            w = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            damped = True
    if damped:
        log.warning(f"[baseline] singular normal equations for AR({order}); fitting with ridge {RIDGE:g}")
        w = np.linalg.solve(gram + RIDGE * np.eye(gram.shape[0]), rhs)
    coef, icpt = (w[:-1], float(w[-1])) if intercept else (w, 0.0)
    return LinearAR(coef, icpt, damped)


def baseline_linear_ar(train_samples: Sequence[Sample], order: int, intercept: bool = True) -> LinearAR:
    return fit_linear_ar([(s.history, s.target) for s in train_samples], order, intercept)


def series_pairs(series, order: int) -> list[tuple[np.ndarray, float]]:
    """Lagged pairs from one raw series, for fitting outside the sample pipeline."""
    y = np.asarray(series, dtype=np.float64)
    return [(y[t - order:t], float(y[t])) for t in range(order, len(y))]


def predict_seasonal(samples: Sequence[Sample], k: int, period: int = 7) -> np.ndarray:
    return np.stack([baseline_seasonal_naive(s.history, k, period) for s in samples])


def predict_ar(model: LinearAR, samples: Sequence[Sample], k: int) -> np.ndarray:
    return np.stack([model.forecast(s.history, k) for s in samples])
