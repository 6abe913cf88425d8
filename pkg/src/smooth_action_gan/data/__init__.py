"""Skeleton-sequence data model, file format, synthetic corpus and batching."""

from .io import load_dataset, save_dataset, write_trajectory_csv
from .synthetic import ClassSpec, default_class_specs, harmonic_trajectory, synthesize_dataset
from .transforms import compute_stats, denormalize, minibatch, normalize, resample_sequence, split_dataset
from .types import ActionPose, ActionSequence, Dataset, LabelDistribution, NormalizationStats, Record

__all__ = [
    "load_dataset",
    "save_dataset",
    "write_trajectory_csv",
    "ClassSpec",
    "default_class_specs",
    "harmonic_trajectory",
    "synthesize_dataset",
    "compute_stats",
    "denormalize",
    "minibatch",
    "normalize",
    "resample_sequence",
    "split_dataset",
    "ActionPose",
    "ActionSequence",
    "Dataset",
    "LabelDistribution",
    "NormalizationStats",
    "Record",
]
