"""Skeleton-sequence data model."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from ..errors import ShapeError

LABEL_TOLERANCE = 1e-6

# One action-pose: a length-d vector of finite coordinates.
ActionPose = npt.NDArray[np.float64]


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} must contain only finite values")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ActionSequence:
    """T frames of d-dimensional poses (T >= 2)."""

    frames: np.ndarray

    def __post_init__(self):
        frames = _frozen_array(self.frames, 2, "frames")
        if frames.shape[0] < 2:
            raise ShapeError(f"An action sequence needs at least 2 frames, got {frames.shape[0]}")
        if frames.shape[1] < 1:
            raise ShapeError("Poses must have at least one coordinate")
        object.__setattr__(self, "frames", frames)

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def pose(self, t: int) -> ActionPose:
        """Pose at 0-based frame index ``t``."""
        return self.frames[t]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActionSequence):
            return NotImplemented
        return np.array_equal(self.frames, other.frames)

    def __hash__(self) -> int:
        return hash(self.frames.tobytes())


@dataclass(frozen=True)
class LabelDistribution:
    """Probability vector over C classes; one-hot for real labels."""

    weights: tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if not weights:
            raise ShapeError("A label distribution needs at least one class")
        if any(not np.isfinite(w) or w < 0 for w in weights):
            raise ValueError(f"Label weights must be finite and non-negative: {weights}")
        if abs(sum(weights) - 1.0) > LABEL_TOLERANCE:
            raise ValueError(f"Label weights must sum to 1 within {LABEL_TOLERANCE}, got {sum(weights)}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def one_hot(cls, index: int, num_classes: int) -> "LabelDistribution":
        if not 0 <= index < num_classes:
            raise ValueError(f"Class index {index} out of range for {num_classes} classes")
        return cls(tuple(1.0 if i == index else 0.0 for i in range(num_classes)))

    @property
    def num_classes(self) -> int:
        return len(self.weights)

    @property
    def is_one_hot(self) -> bool:
        return sum(1 for w in self.weights if w == 1.0) == 1

    def argmax(self) -> int:
        return int(np.argmax(self.weights))

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.float64)


class Record(NamedTuple):
    """A labelled sequence."""

    sequence: ActionSequence
    label: LabelDistribution


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Per-dimension mean and scale used by ``normalize``."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = _frozen_array(self.mean, 1, "mean")
        scale = _frozen_array(self.scale, 1, "scale")
        if mean.shape != scale.shape:
            raise ShapeError(f"mean {mean.shape} and scale {scale.shape} differ")
        if np.any(scale <= 0):
            raise ValueError("Normalization scale must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalizationStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.scale, other.scale)

    def __hash__(self) -> int:
        return hash((self.mean.tobytes(), self.scale.tobytes()))


@dataclass(frozen=True)
class Dataset:
    """Labelled skeleton sequences sharing class count C and pose dimension d.

    Attributes:
        records: The (sequence, label) pairs.
        num_classes: Class count C.
        dim: Pose dimension d.
        names: Optional class names (length C when present).
        stats: Normalization statistics if the poses are normalized.
    """

    records: tuple[Record, ...]
    num_classes: int
    dim: int
    names: tuple[str, ...] = ()
    stats: NormalizationStats | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(Record(*r) for r in self.records))
        object.__setattr__(self, "names", tuple(self.names))
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.names and len(self.names) != self.num_classes:
            raise ShapeError(f"{len(self.names)} class names for {self.num_classes} classes")
        if self.stats is not None and self.stats.dim != self.dim:
            raise ShapeError(f"Normalization stats have dimension {self.stats.dim}, expected {self.dim}")
        for i, (sequence, label) in enumerate(self.records):
            if sequence.dim != self.dim:
                raise ShapeError(f"Record {i} has pose dimension {sequence.dim}, expected {self.dim}")
            if label.num_classes != self.num_classes:
                raise ShapeError(f"Record {i} label has {label.num_classes} classes, expected {self.num_classes}")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def is_one_hot(self) -> bool:
        return all(r.label.is_one_hot for r in self.records)

    def class_indices(self) -> np.ndarray:
        """Argmax class of every record."""
        return np.array([r.label.argmax() for r in self.records], dtype=np.int64)

    def by_class(self, label: int) -> list[Record]:
        return [r for r in self.records if r.label.argmax() == label]

    def with_records(self, records: Iterable[Record], stats: NormalizationStats | None = None) -> "Dataset":
        return Dataset(
            records=tuple(records),
            num_classes=self.num_classes,
            dim=self.dim,
            names=self.names,
            stats=stats if stats is not None else self.stats,
        )

    def sequences(self, indices: Sequence[int] | None = None) -> np.ndarray:
        """Stack sequences into an array of shape (n, T, d); lengths must agree."""
        chosen = self.records if indices is None else [self.records[i] for i in indices]
        lengths = {r.sequence.length for r in chosen}
        if len(lengths) > 1:
            raise ShapeError(f"Sequences have different lengths {sorted(lengths)}; resample first")
        return np.stack([r.sequence.frames for r in chosen])

    def labels(self, indices: Sequence[int] | None = None) -> np.ndarray:
        """Label matrix of shape (n, C)."""
        chosen = self.records if indices is None else [self.records[i] for i in indices]
        return np.stack([r.label.as_array() for r in chosen])
