"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from smooth_action_gan.config import TrainingConfig
from smooth_action_gan.data import (
    ActionSequence,
    Dataset,
    LabelDistribution,
    Record,
    default_class_specs,
    normalize,
    synthesize_dataset,
)
from smooth_action_gan.models import init_generator


@pytest.fixture
def tiny_config():
    """Toy-sized hyperparameters that train in milliseconds."""
    return TrainingConfig(
        noise_dim=3,
        latent_dim=2,
        lstm_hidden=5,
        decoder_hidden=6,
        encoder_hidden=4,
        dense_width=6,
        iterations=3,
        batch_size=4,
        sequence_length=5,
        pretrain_iterations=3,
        pretrain_batch_size=8,
        critic_hidden=5,
        log_interval=1,
    )


@pytest.fixture
def tiny_config64(tiny_config):
    """The toy configuration at 64-bit precision."""
    return TrainingConfig.from_dict({**tiny_config.to_dict(), "precision": "float64", "ablations": ()})


@pytest.fixture
def synthetic_dataset():
    """Three harmonic classes, 6 sequences each, T = 5, d = 4."""
    return synthesize_dataset(default_class_specs(3), per_class=6, length=5, dim=4, noise_scale=0.05, seed=7)


@pytest.fixture
def normalized_dataset(synthetic_dataset):
    """The synthetic corpus with per-dimension normalization applied."""
    dataset, _ = normalize(synthetic_dataset)
    return dataset


@pytest.fixture
def tiny_generator():
    """A 64-bit generator for C = 3, d = 4."""
    return init_generator(
        np.random.default_rng(0),
        num_classes=3,
        pose_dim=4,
        noise_dim=3,
        latent_dim=2,
        lstm_hidden=5,
        decoder_hidden=6,
        dtype=np.float64,
    )


@pytest.fixture
def two_record_dataset():
    """Hand-written dataset with one hard and one soft label."""
    return Dataset(
        records=(
            Record(ActionSequence(np.arange(6, dtype=float).reshape(3, 2)), LabelDistribution.one_hot(0, 2)),
            Record(ActionSequence(np.ones((2, 2))), LabelDistribution((0.25, 0.75))),
        ),
        num_classes=2,
        dim=2,
        names=("walk", "wave"),
    )
