"""Classifier trained on real data only, used to score generated sequences."""

import logging

import numpy as np

from ..config import TrainingConfig
from ..data.transforms import resample_sequence
from ..data.types import Dataset
from ..errors import NonFiniteError, TrainingDivergedError
from ..models import ClassifierParams, classify, frames_to_steps, init_classifier
from ..numerics import AdamState, Tape, Tensor, adam_step, cross_entropy, make_rng, ops
from ..numerics.rng import RngLike

logger = logging.getLogger(__name__)


def train_baseline_classifier(
    dataset: Dataset,
    config: TrainingConfig,
    iterations: int | None = None,
    seed: RngLike | None = None,
) -> ClassifierParams:
    """
    Fit a fresh classifier by minibatch cross-entropy on real sequences.

    The encoder sizes, batch size, sequence length and precision come from
    ``config``; the learning rate is ``lr_pretrain``.

    Args:
        dataset: One-hot labelled real data.
        config: Hyperparameters.
        iterations: Adam steps (default ``config.iterations``).
        seed: Defaults to ``config.seed``.

    Raises:
        ValueError: If the dataset is empty.
        TrainingDivergedError: If the loss becomes non-finite.
    """
    if len(dataset) == 0:
        raise ValueError("Cannot train a classifier on an empty dataset")
    rng = make_rng(config.seed if seed is None else seed)
    dtype = config.dtype
    iterations = config.iterations if iterations is None else iterations
    T = config.sequence_length

    sequences = np.stack([resample_sequence(r.sequence.frames, T) for r in dataset.records])
    labels = dataset.labels()
    classifier = init_classifier(
        rng, dataset.dim, dataset.num_classes, config.encoder_hidden, config.dense_width, dtype
    )
    opt = AdamState.for_params(classifier.named_parameters(), config.lr_pretrain)

    logger.info(f"Training baseline classifier for {iterations} iterations on {len(dataset)} sequences")
    loss_value = 0.0
    for iteration in range(1, iterations + 1):
        idx = rng.integers(0, len(sequences), size=config.batch_size)
        frames = frames_to_steps(sequences[idx], dtype=dtype)
        target = Tensor(labels[idx], dtype=dtype)
        params = classifier.named_parameters()
        try:
            with Tape() as tape:
                tape.watch(params)
                loss = ops.mean(cross_entropy(classify(classifier, frames), target))
            grads = tape.gradient(loss, params)
            new_params, opt = adam_step(params, grads, opt)
        except NonFiniteError as e:
            raise TrainingDivergedError(iteration, {"loss_cls": loss_value}) from e
        classifier = classifier.with_parameters(new_params)
        loss_value = loss.item()
        if config.log_interval and iteration % config.log_interval == 0:
            logger.info(f"baseline iter {iteration}: cross-entropy={loss_value:.5f}")
    return classifier
