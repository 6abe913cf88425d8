"""Splitting, normalization, batching and resampling."""

import numpy as np

from ..numerics import make_rng
from ..numerics.rng import RngLike
from .types import ActionPose, ActionSequence, Dataset, NormalizationStats, Record

SCALE_FLOOR = 1e-6


def split_dataset(dataset: Dataset, train_fraction: float, seed: RngLike) -> tuple[Dataset, Dataset]:
    """
    Stratified split into disjoint train and test sets.

    Within each class a seeded permutation picks ``round(fraction * n)``
    training records (at least one on each side); both halves keep the
    original record order.

    Raises:
        ValueError: If the fraction is outside (0, 1) or a class has fewer
            than 2 records.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = make_rng(seed)
    classes = dataset.class_indices()

    train_idx: list[int] = []
    for label in range(dataset.num_classes):
        members = np.flatnonzero(classes == label)
        if len(members) < 2:
            raise ValueError(f"Class {label} has {len(members)} record(s); at least 2 are needed to split")
        n_train = min(max(int(round(train_fraction * len(members))), 1), len(members) - 1)
        train_idx.extend(rng.permutation(members)[:n_train].tolist())

    chosen = set(train_idx)
    train = [r for i, r in enumerate(dataset.records) if i in chosen]
    test = [r for i, r in enumerate(dataset.records) if i not in chosen]
    return dataset.with_records(train), dataset.with_records(test)


def compute_stats(dataset: Dataset) -> NormalizationStats:
    """Per-dimension mean and max(std, 1e-6) over every frame of every record."""
    if len(dataset) == 0:
        raise ValueError("Cannot compute normalization statistics of an empty dataset")
    frames = np.concatenate([r.sequence.frames for r in dataset.records], axis=0)
    return NormalizationStats(
        mean=frames.mean(axis=0),
        scale=np.maximum(frames.std(axis=0), SCALE_FLOOR),
    )


def normalize(dataset: Dataset, stats: NormalizationStats | None = None) -> tuple[Dataset, NormalizationStats]:
    """
    Standardize every dimension to zero mean and unit scale.

    Args:
        dataset: Un-normalized dataset.
        stats: Statistics to apply (e.g. the training set's); computed from
            ``dataset`` when omitted.

    Returns:
        Tuple of (normalized dataset carrying ``stats``, stats).

    Raises:
        ValueError: If the dataset is empty or already normalized.
    """
    if dataset.stats is not None:
        raise ValueError("Dataset is already normalized")
    if stats is None:
        stats = compute_stats(dataset)
    records = [
        Record(ActionSequence((r.sequence.frames - stats.mean) / stats.scale), r.label)
        for r in dataset.records
    ]
    return dataset.with_records(records, stats=stats), stats


def denormalize(poses: ActionPose | np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Map normalized poses (any leading shape, last axis d) back to data units."""
    return np.asarray(poses, dtype=np.float64) * stats.scale + stats.mean


def minibatch(dataset: Dataset, m: int, seed: RngLike) -> list[Record]:
    """
    Draw ``m`` records uniformly with replacement.

    Raises:
        ValueError: If ``m`` < 1 or the dataset is empty.
    """
    if m < 1:
        raise ValueError(f"Batch size must be >= 1, got {m}")
    if len(dataset) == 0:
        raise ValueError("Cannot sample a minibatch from an empty dataset")
    indices = make_rng(seed).integers(0, len(dataset), size=m)
    return [dataset.records[i] for i in indices]


def resample_sequence(frames: np.ndarray, length: int) -> np.ndarray:
    """Linearly resample a (T, d) sequence to ``length`` frames over the same time span."""
    frames = np.asarray(frames, dtype=np.float64)
    if length < 2:
        raise ValueError(f"Target length must be >= 2, got {length}")
    if frames.shape[0] == length:
        return frames.copy()
    source = np.linspace(0.0, 1.0, frames.shape[0])
    target = np.linspace(0.0, 1.0, length)
    return np.stack([np.interp(target, source, frames[:, i]) for i in range(frames.shape[1])], axis=1)
