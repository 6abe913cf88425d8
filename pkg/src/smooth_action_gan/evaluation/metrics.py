"""Accuracy, diversity, latent smoothness and class-mixing statistics."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from ..data.transforms import resample_sequence
from ..data.types import Dataset
from ..models import ClassifierParams, GeneratorParams, generate_batch, mix_labels, predict_probabilities
from ..numerics import make_rng, restore_rng, rng_state
from ..numerics.rng import RngLike

Predictor = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AccuracyResult:
    """Per-class and class-averaged argmax accuracy."""

    per_class: dict[int, float]
    counts: dict[int, int]

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.per_class.values())))


def _predictor(classifier: ClassifierParams | Predictor) -> Predictor:
    if isinstance(classifier, ClassifierParams):
        return lambda sequences: predict_probabilities(classifier, sequences)
    return classifier


def classification_accuracy(
    classifier: ClassifierParams | Predictor,
    dataset: Dataset,
    per_class_cap: int = 100,
    seed: RngLike = 0,
) -> AccuracyResult:
    """
    Argmax accuracy per class on at most ``per_class_cap`` sampled records.

    Args:
        classifier: Classifier weights, or a function mapping an (n, T, d)
            array to (n, C) scores.
        dataset: Labelled sequences.
        per_class_cap: Records drawn without replacement from larger classes.
        seed: Seed of the subsampling.

    Raises:
        ValueError: If some class has no records.
    """
    predict = _predictor(classifier)
    rng = make_rng(seed)
    classes = dataset.class_indices()
    per_class: dict[int, float] = {}
    counts: dict[int, int] = {}
    for label in range(dataset.num_classes):
        members = np.flatnonzero(classes == label)
        if len(members) == 0:
            raise ValueError(f"Class {label} has no records to evaluate")
        if len(members) > per_class_cap:
            members = np.sort(rng.choice(members, size=per_class_cap, replace=False))
        frames = [dataset.records[i].sequence.frames for i in members]
        length = max(f.shape[0] for f in frames)
        batch = np.stack([f if f.shape[0] == length else resample_sequence(f, length) for f in frames])
        predicted = np.argmax(predict(batch), axis=1)
        per_class[label] = float(np.mean(predicted == label))
        counts[label] = len(members)
    return AccuracyResult(per_class=per_class, counts=counts)


def diversity_std(sequences) -> float:
    """
    Population standard deviation of the distances to the mean sequence.

    Args:
        sequences: Array of shape (n, T, d) or a list of equal-shape (T, d) arrays.

    Raises:
        ValueError: If fewer than 2 sequences are given.
    """
    stack = np.asarray(sequences, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 2:
        raise ValueError("diversity_std needs at least 2 sequences of equal shape")
    centre = stack.mean(axis=0)
    distances = np.linalg.norm((stack - centre).reshape(stack.shape[0], -1), axis=1)
    return float(np.std(distances))


def mean_latent_step_norm(latents) -> float:
    """Mean of ||h_t - h_{t-1}|| over sequences and t >= 2 for an (n, T, L) array."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim == 2:
        latents = latents[None]
    if latents.ndim != 3 or latents.shape[1] < 2:
        raise ValueError(f"Expected latents of shape (n, T>=2, L), got {latents.shape}")
    return float(np.mean(np.linalg.norm(np.diff(latents, axis=1), axis=2)))


def _pair_label(num_classes: int, a: int, b: int, p: float) -> np.ndarray:
    weights = np.zeros(num_classes)
    weights[a] += p
    weights[b] += 1.0 - p
    return mix_labels(weights).as_array()


def mixing_sweep(
    params: GeneratorParams,
    a: int,
    b: int,
    proportions: Sequence[float],
    count: int,
    length: int,
    seed: RngLike,
) -> dict[float, np.ndarray]:
    """
    Mean latent trajectory (T, L) for each mixing proportion p of class a vs b.

    Every proportion reuses the same noise, so trajectories differ only
    through the label.
    """
    for p in proportions:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Mixing proportion must be in [0, 1], got {p}")
    start = rng_state(make_rng(seed))
    sweep = {}
    for p in proportions:
        rng = restore_rng(start)
        labels = np.repeat(_pair_label(params.num_classes, a, b, p)[None], count, axis=0)
        _, latents = generate_batch(params, labels, length, rng)
        sweep[float(p)] = latents.mean(axis=0)
    return sweep


@dataclass(frozen=True)
class InterpolationDistances:
    """Flattened Euclidean distances between mean latent trajectories."""

    mixed_to_a: float
    mixed_to_b: float
    a_to_b: float

    @property
    def interpolates(self) -> bool:
        """The mixed trajectory is closer to each pure class than they are to each other."""
        return self.mixed_to_a < self.a_to_b and self.mixed_to_b < self.a_to_b


def interpolation_distances(
    params: GeneratorParams,
    a: int,
    b: int,
    count: int = 50,
    length: int = 16,
    seed: RngLike = 0,
    proportion: float = 0.5,
) -> InterpolationDistances:
    sweep = mixing_sweep(params, a, b, (1.0, proportion, 0.0), count, length, seed)
    pure_a, mixed, pure_b = sweep[1.0], sweep[float(proportion)], sweep[0.0]
    return InterpolationDistances(
        mixed_to_a=float(np.linalg.norm(mixed - pure_a)),
        mixed_to_b=float(np.linalg.norm(mixed - pure_b)),
        a_to_b=float(np.linalg.norm(pure_a - pure_b)),
    )
