"""Evaluation report: generate samples, score them and serialize to JSON."""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..data.transforms import resample_sequence
from ..data.types import ActionSequence, Dataset, LabelDistribution, Record
from ..errors import NonFiniteError, ShapeError
from ..models import ClassifierParams, GeneratorParams, generate_batch
from ..numerics import make_rng
from ..numerics.rng import RngLike
from .metrics import classification_accuracy, diversity_std, mean_latent_step_norm
from .mmd import KernelConfig, mmd_avg, mmd_seq, reference_length

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    """Quantities reported for one model against a real test set.

    Attributes:
        mmd_avg: Frame-wise MMD averaged over frames and classes.
        mmd_seq: Whole-sequence MMD averaged over classes.
        accuracy: Model classifier accuracy per class on the real test set.
        generated_accuracy: Model classifier accuracy on generated sequences.
        baseline_accuracy: Real-data-only classifier accuracy on generated sequences.
        diversity: diversity_std of generated sequences per class.
        real_diversity: diversity_std of real sequences per class.
        latent_step_norm: Mean ||h_t - h_{t-1}|| of the generated latents.
        metadata: Seeds, sample counts and similar bookkeeping.
    """

    mmd_avg: float
    mmd_seq: float
    accuracy: dict[str, float] = field(default_factory=dict)
    generated_accuracy: dict[str, float] = field(default_factory=dict)
    baseline_accuracy: dict[str, float] = field(default_factory=dict)
    diversity: dict[str, float] = field(default_factory=dict)
    real_diversity: dict[str, float] = field(default_factory=dict)
    latent_step_norm: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = [self.mmd_avg, self.mmd_seq]
        for group in (self.accuracy, self.generated_accuracy, self.baseline_accuracy,
                      self.diversity, self.real_diversity):
            values.extend(group.values())
        if self.latent_step_norm is not None:
            values.append(self.latent_step_norm)
        if not all(math.isfinite(v) for v in values):
            raise NonFiniteError("Evaluation produced a non-finite value")
        for group in (self.accuracy, self.generated_accuracy, self.baseline_accuracy):
            if any(not 0.0 <= v <= 1.0 for v in group.values()):
                raise ValueError("Accuracies must lie in [0, 1]")

    @staticmethod
    def _mean(group: dict[str, float]) -> float | None:
        return float(np.mean(list(group.values()))) if group else None

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["mean_accuracy"] = self._mean(self.accuracy)
        data["mean_generated_accuracy"] = self._mean(self.generated_accuracy)
        data["mean_baseline_accuracy"] = self._mean(self.baseline_accuracy)
        return data

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, allow_nan=False)
        logger.info(f"Wrote evaluation report to {path}")


def class_sets(dataset: Dataset) -> dict[int, list[np.ndarray]]:
    """Sequences of each class as a list of (T, d) arrays."""
    classes = dataset.class_indices()
    return {
        label: [dataset.records[i].sequence.frames for i in np.flatnonzero(classes == label)]
        for label in range(dataset.num_classes)
    }


def generate_class_sets(
    generator: GeneratorParams, num_classes: int, per_class: int, length: int, seed: RngLike
) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    """``per_class`` one-hot conditioned samples per class: (poses, latents) by class."""
    rng = make_rng(seed)
    poses, latents = {}, {}
    for label in range(num_classes):
        labels = np.repeat(np.eye(num_classes)[label][None], per_class, axis=0)
        poses[label], latents[label] = generate_batch(generator, labels, length, rng)
        poses[label] = poses[label].astype(np.float64)
    return poses, latents


def _keyed(values: dict[int, float]) -> dict[str, float]:
    return {str(k): float(v) for k, v in values.items()}


def build_report(
    generated: dict[int, Any],
    test: Dataset,
    classifier: ClassifierParams | None = None,
    baseline: ClassifierParams | None = None,
    latents: dict[int, np.ndarray] | None = None,
    grid: KernelConfig | None = None,
    seed: RngLike = 0,
    per_class_cap: int = 100,
    metadata: dict[str, Any] | None = None,
) -> EvalReport:
    """
    Score generated sequences against a real test set.

    Args:
        generated: Class index -> generated sequences.
        test: Real held-out sequences.
        classifier: Model classifier; adds real and generated accuracies.
        baseline: Real-only classifier; adds its accuracy on generated data.
        latents: Generated latents by class; adds the latent step norm.
        grid: Bandwidth grid for the MMDs.
        seed: Seed of accuracy subsampling.
        per_class_cap: Records per class used for accuracy.
        metadata: Extra bookkeeping copied into the report.

    Raises:
        ShapeError: If the class counts differ.
    """
    if sorted(generated) != list(range(test.num_classes)):
        raise ShapeError(f"Generated classes {sorted(generated)} do not match the test set's {test.num_classes}")
    real = class_sets(test)
    length = reference_length(real)

    generated_ds = _as_dataset(generated, test)
    accuracy: dict[str, float] = {}
    generated_accuracy: dict[str, float] = {}
    baseline_accuracy: dict[str, float] = {}
    if classifier is not None:
        accuracy = _keyed(classification_accuracy(classifier, test, per_class_cap, seed).per_class)
        generated_accuracy = _keyed(classification_accuracy(classifier, generated_ds, per_class_cap, seed).per_class)
    if baseline is not None:
        baseline_accuracy = _keyed(classification_accuracy(baseline, generated_ds, per_class_cap, seed).per_class)

    step_norm = None
    if latents is not None:
        step_norm = mean_latent_step_norm(np.concatenate([latents[k] for k in sorted(latents)], axis=0))

    report = EvalReport(
        mmd_avg=mmd_avg(generated, real, grid, length=length),
        mmd_seq=mmd_seq(generated, real, grid, length=length),
        accuracy=accuracy,
        generated_accuracy=generated_accuracy,
        baseline_accuracy=baseline_accuracy,
        diversity=_keyed({k: _diversity(v, length) for k, v in generated.items()}),
        real_diversity=_keyed({k: _diversity(v, length) for k, v in real.items()}),
        latent_step_norm=step_norm,
        metadata={
            "reference_length": length,
            "generated_per_class": {str(k): len(v) for k, v in generated.items()},
            "real_per_class": {str(k): len(v) for k, v in real.items()},
            **(metadata or {}),
        },
    )
    logger.info(f"MMD_avg={report.mmd_avg:.5f} MMD_seq={report.mmd_seq:.5f}")
    return report


def _diversity(sequences, length: int) -> float:
    items = [s if len(s) == length else resample_sequence(s, length) for s in sequences]
    return diversity_std(np.stack(items)) if len(items) >= 2 else 0.0


def _as_dataset(generated: dict[int, Any], like: Dataset) -> Dataset:
    records = [
        Record(ActionSequence(np.asarray(s, dtype=np.float64)), LabelDistribution.one_hot(label, like.num_classes))
        for label in sorted(generated)
        for s in generated[label]
    ]
    return like.with_records(records)
