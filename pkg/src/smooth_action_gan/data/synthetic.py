"""Synthetic harmonic skeleton corpus."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..numerics import make_rng
from ..numerics.rng import RngLike
from .types import ActionSequence, Dataset, LabelDistribution, Record

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassSpec:
    """Harmonic motion parameters of one class.

    Joint j of a pose moves on a circle of radius ``amplitude``:
    x = A sin(2*pi*f*t/T + phase + j*pi/J), y = A cos(same angle).

    Attributes:
        frequency: Cycles per sequence.
        phase: Phase offset in radians.
        amplitude: Circle radius.
        name: Class name written to the dataset header.
    """

    frequency: float
    phase: float
    amplitude: float
    name: str = ""

    def __post_init__(self):
        for field_name in ("frequency", "phase", "amplitude"):
            if not math.isfinite(getattr(self, field_name)):
                raise ValueError(f"ClassSpec.{field_name} must be finite")
        if self.frequency <= 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")
        if self.amplitude <= 0:
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")


def default_class_specs(num_classes: int) -> list[ClassSpec]:
    """Well-separated specs: distinct frequencies, phases and radii per class."""
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    return [
        ClassSpec(
            frequency=float(k + 1),
            phase=2.0 * math.pi * k / num_classes,
            amplitude=0.5 + 0.5 * (k + 1) / num_classes,
            name=f"class_{k}",
        )
        for k in range(num_classes)
    ]


def harmonic_trajectory(spec: ClassSpec, length: int, dim: int) -> np.ndarray:
    """Noise-free (T, d) trajectory of a class."""
    joints = dim // 2
    t = np.arange(length, dtype=np.float64)[:, None]
    j = np.arange(joints, dtype=np.float64)[None, :]
    angle = 2.0 * math.pi * spec.frequency * t / length + spec.phase + j * math.pi / joints
    frames = np.empty((length, dim), dtype=np.float64)
    frames[:, 0::2] = spec.amplitude * np.sin(angle)
    frames[:, 1::2] = spec.amplitude * np.cos(angle)
    return frames


def synthesize_dataset(
    class_specs: Sequence[ClassSpec],
    per_class: int,
    length: int,
    dim: int,
    noise_scale: float,
    seed: RngLike,
) -> Dataset:
    """
    Build a labelled corpus of harmonic joint trajectories.

    Each sequence is its class trajectory plus i.i.d. standard Gaussian
    jitter multiplied by ``noise_scale``; records are ordered by class.

    Args:
        class_specs: One spec per class.
        per_class: Sequences per class.
        length: Frames per sequence T (>= 2).
        dim: Pose dimension d (even: coordinates come in x/y pairs).
        noise_scale: Jitter standard deviation (>= 0).
        seed: Seed or generator.

    Returns:
        Dataset with one-hot labels.

    Raises:
        ValueError: If any argument is invalid.
    """
    if not class_specs:
        raise ValueError("At least one class spec is required")
    if per_class < 0:
        raise ValueError(f"per_class must be >= 0, got {per_class}")
    if length < 2:
        raise ValueError(f"Sequence length must be >= 2, got {length}")
    if dim < 2 or dim % 2:
        raise ValueError(f"dim must be a positive even number (x/y pairs), got {dim}")
    if not noise_scale >= 0:
        raise ValueError(f"noise_scale must be >= 0, got {noise_scale}")

    rng = make_rng(seed)
    num_classes = len(class_specs)
    records = []
    for label, spec in enumerate(class_specs):
        base = harmonic_trajectory(spec, length, dim)
        one_hot = LabelDistribution.one_hot(label, num_classes)
        for _ in range(per_class):
            jitter = rng.standard_normal((length, dim))
            records.append(Record(ActionSequence(base + noise_scale * jitter), one_hot))

    logger.debug(f"Synthesized {len(records)} sequences ({num_classes} classes, T={length}, d={dim})")
    return Dataset(
        records=tuple(records),
        num_classes=num_classes,
        dim=dim,
        names=tuple(spec.name or f"class_{k}" for k, spec in enumerate(class_specs)),
    )
