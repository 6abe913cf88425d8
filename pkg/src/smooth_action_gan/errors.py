"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Tensor, parameter, label or dataset dimensions do not agree."""


class NonFiniteError(FloatingPointError):
    """A value, intermediate, gradient or loss became NaN or infinite."""


class RecordError(RuntimeError):
    """A computation record was consumed or cannot be replayed."""


class DatasetFormatError(ValueError):
    """A dataset file is malformed.

    Attributes:
        line: 1-based line number of the offending line, if known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(ValueError):
    """A checkpoint file is truncated, corrupt, or has an unsupported version."""


class ConfigError(ValueError):
    """Configuration contains unknown keys or invalid values."""


class TrainingDivergedError(RuntimeError):
    """A training loss became non-finite.

    Attributes:
        iteration: Iteration at which the divergence was detected.
        losses: Loss components observed at that iteration.
    """

    def __init__(self, iteration: int, losses: dict[str, float]):
        self.iteration = iteration
        self.losses = dict(losses)
        detail = ", ".join(f"{name}={value!r}" for name, value in self.losses.items())
        super().__init__(f"Training diverged at iteration {iteration}: {detail}")
