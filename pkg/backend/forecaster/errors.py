# forecaster/errors.py
# Every failure the toolkit raises on purpose derives from
# DeepExpressError, so the CLI can turn any of them into a
# single-line message and a nonzero exit code.


class DeepExpressError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(DeepExpressError):
    """Operand shapes do not fit the primitive."""


class NonFiniteError(DeepExpressError):
    """A primitive produced NaN or Inf."""


class GradientError(DeepExpressError):
    """Backward was called on a non-scalar, or a gradient is missing."""


class ConfigError(DeepExpressError):
    """A configuration document or model is invalid."""


class DataError(DeepExpressError):
    """A dataset failed validation during ingestion or construction."""


class MissingFeatureError(DataError):
    """A feature window needs a day the source does not have."""


class SeriesTooShortError(DataError):
    """The series cannot produce a single sample for the requested shape."""


class ScalerError(DeepExpressError):
    """The scaler was used before it was fitted."""


class TrainingDivergedError(DeepExpressError):
    """The loss became non-finite during training."""


class CheckpointError(DeepExpressError):
    """A checkpoint could not be read or does not match the request."""


class MetricError(DeepExpressError):
    """Metric inputs are malformed or a metric invariant was violated."""
