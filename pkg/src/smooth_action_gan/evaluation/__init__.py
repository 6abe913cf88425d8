"""MMD, accuracy, diversity and mixing statistics."""

from .metrics import (
    AccuracyResult,
    InterpolationDistances,
    classification_accuracy,
    diversity_std,
    interpolation_distances,
    mean_latent_step_norm,
    mixing_sweep,
)
from .mmd import DEFAULT_BANDWIDTHS, KernelConfig, mmd_avg, mmd_max, mmd_seq, mmd_u_squared
from .report import EvalReport, build_report, class_sets, generate_class_sets

__all__ = [
    "AccuracyResult",
    "InterpolationDistances",
    "classification_accuracy",
    "diversity_std",
    "interpolation_distances",
    "mean_latent_step_norm",
    "mixing_sweep",
    "DEFAULT_BANDWIDTHS",
    "KernelConfig",
    "mmd_avg",
    "mmd_max",
    "mmd_seq",
    "mmd_u_squared",
    "EvalReport",
    "build_report",
    "class_sets",
    "generate_class_sets",
]
