"""Alternating bi-directional adversarial training.

Each iteration runs K discriminator ascent steps on

    mean log D(x, y_real) + mean log(1 - D(G(xi, y), y)),    y ~ uniform

followed by one joint generator/classifier descent step on

    mean log(1 - D(G(xi, y), y)) + Omega + gamma * (H(C(x), y) + H(C(G(xi, y)), y))

where y are the minibatch labels. ``y_real`` is C(x) or the dataset label
depending on ``real_label_source``.
"""

import csv
import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..config import TrainingConfig
from ..data.transforms import minibatch, resample_sequence
from ..data.types import ActionSequence, Dataset, Record
from ..errors import NonFiniteError, ShapeError, TrainingDivergedError
from ..models import classify, discriminate, frames_to_steps, rollout_and_decode, smoothness_penalty
from ..models.generator import NoiseSequence
from ..numerics import Tape, Tensor, adam_step, cross_entropy, ops, restore_rng
from .checkpoint import CheckpointManager
from .state import ModelState, init_model_state

logger = logging.getLogger(__name__)


class TrainingBatch(NamedTuple):
    """Real sequences (m, T, d) with their one-hot labels (m, C)."""

    sequences: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[Record]) -> "TrainingBatch":
        """Stack equal-length records drawn by :func:`minibatch`."""
        return cls(
            np.stack([r.sequence.frames for r in records]),
            np.stack([r.label.as_array() for r in records]),
        )


@dataclass(frozen=True)
class LossBreakdown:
    """Weighted generator-side terms; they sum to the descended total."""

    adversarial: float
    smoothness: float
    classification: float
    cycle: float

    @property
    def total(self) -> float:
        return self.adversarial + self.smoothness + self.classification + self.cycle


@dataclass(frozen=True)
class LogEntry:
    iteration: int
    loss_D: float
    loss_adv_G: float
    loss_smooth: float
    loss_cls_real: float
    loss_cycle: float


LOG_COLUMNS = tuple(f.name for f in fields(LogEntry))


class TrainingLog:
    """Per-iteration loss components, written as CSV."""

    def __init__(self, entries: list[LogEntry] | None = None):
        self.entries: list[LogEntry] = list(entries or [])

    def append(self, entry: LogEntry) -> None:
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def column(self, name: str) -> list[float]:
        return [getattr(e, name) for e in self.entries]

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=LOG_COLUMNS)
            writer.writeheader()
            for entry in self.entries:
                writer.writerow({k: (v if k == "iteration" else repr(v)) for k, v in asdict(entry).items()})

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainingLog":
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        return cls(
            [
                LogEntry(int(row["iteration"]), *(float(row[c]) for c in LOG_COLUMNS[1:]))
                for row in rows
            ]
        )


def _check_finite(iteration: int, losses: dict[str, float]) -> None:
    if not all(np.isfinite(v) for v in losses.values()):
        logger.error(f"Non-finite loss at iteration {iteration}: {losses}")
        raise TrainingDivergedError(iteration, losses)


def discriminator_objective(
    state: ModelState,
    batch: TrainingBatch,
    noise: NoiseSequence,
    fake_labels: np.ndarray,
    config: TrainingConfig,
) -> Tensor:
    """mean log D(x, y_real) + mean log(1 - D(G(xi, y), y)) as a tape-differentiable scalar."""
    dtype = state.generator.dtype
    real = frames_to_steps(batch.sequences, dtype=dtype)
    if config.real_label_source == "classifier":
        real_pair = classify(state.classifier, real)
    else:
        real_pair = Tensor(batch.labels, dtype=dtype)
    y_fake = Tensor(fake_labels, dtype=dtype)
    fake, _ = rollout_and_decode(state.generator, noise, y_fake)
    real_term = ops.mean(ops.log(discriminate(state.discriminator, real, real_pair)))
    fake_term = ops.mean(ops.log(ops.sub(1.0, discriminate(state.discriminator, fake, y_fake))))
    return ops.add(real_term, fake_term)


def discriminator_step(
    state: ModelState,
    batch: TrainingBatch,
    noise: NoiseSequence,
    fake_labels: np.ndarray,
    config: TrainingConfig,
) -> tuple[ModelState, float]:
    """
    One Adam ascent step of the discriminator; theta and phi are untouched.

    Args:
        state: Current networks.
        batch: Real minibatch.
        noise: Noise for the generated half of the batch.
        fake_labels: Labels conditioning the generated sequences, shape (m, C).
        config: Uses ``real_label_source``.

    Returns:
        Tuple of (updated state, objective value before the step).
    """
    params = state.discriminator.named_parameters()
    with Tape() as tape:
        tape.watch(params)
        objective = discriminator_objective(state, batch, noise, fake_labels, config)
    grads = tape.gradient(objective, params)
    ascent = {name: -g for name, g in grads.items()}
    new_params, opt = adam_step(params, ascent, state.discriminator_opt)
    return state.with_discriminator(state.discriminator.with_parameters(new_params), opt), objective.item()


class GeneratorTerms(NamedTuple):
    """Weighted generator-side loss tensors; ``cycle`` is None when the term is off."""

    adversarial: Tensor
    smoothness: Tensor
    classification: Tensor
    cycle: Tensor | None

    @property
    def total(self) -> Tensor:
        total = ops.add(ops.add(self.adversarial, self.smoothness), self.classification)
        return total if self.cycle is None else ops.add(total, self.cycle)


def generator_classifier_objective(
    state: ModelState,
    batch: TrainingBatch,
    noise: NoiseSequence,
    config: TrainingConfig,
) -> GeneratorTerms:
    """Generator/classifier loss terms with fakes conditioned on the minibatch labels."""
    dtype = state.generator.dtype
    real = frames_to_steps(batch.sequences, dtype=dtype)
    y = Tensor(batch.labels, dtype=dtype)
    poses, trajectory = rollout_and_decode(state.generator, noise, y)
    adversarial = ops.mean(ops.log(ops.sub(1.0, discriminate(state.discriminator, poses, y))))
    smoothness = smoothness_penalty(trajectory.latents, poses, config.sigma1, config.sigma2)
    classification = ops.scale(ops.mean(cross_entropy(classify(state.classifier, real), y)), config.gamma)
    cycle = None
    if config.cycle:
        cycle = ops.scale(ops.mean(cross_entropy(classify(state.classifier, poses), y)), config.gamma)
    return GeneratorTerms(adversarial, smoothness, classification, cycle)


def generator_classifier_step(
    state: ModelState,
    batch: TrainingBatch,
    noise: NoiseSequence,
    config: TrainingConfig,
) -> tuple[ModelState, LossBreakdown]:
    """
    One joint Adam descent step of the generator and classifier; psi is untouched.

    Generated sequences are conditioned on the minibatch labels.

    Returns:
        Tuple of (updated state, weighted loss components before the step).
    """
    gen_params = state.generator.named_parameters()
    cls_params = state.classifier.named_parameters()

    with Tape() as tape:
        tape.watch(gen_params, cls_params)
        terms = generator_classifier_objective(state, batch, noise, config)
        total = terms.total

    grads = tape.gradient(total, {**{f"g/{k}": v for k, v in gen_params.items()},
                                  **{f"c/{k}": v for k, v in cls_params.items()}})
    new_gen, gen_opt = adam_step(gen_params, {k: grads[f"g/{k}"] for k in gen_params}, state.generator_opt)
    new_cls, cls_opt = adam_step(cls_params, {k: grads[f"c/{k}"] for k in cls_params}, state.classifier_opt)

    breakdown = LossBreakdown(
        adversarial=terms.adversarial.item(),
        smoothness=terms.smoothness.item(),
        classification=terms.classification.item(),
        cycle=0.0 if terms.cycle is None else terms.cycle.item(),
    )
    state = state.with_generator(state.generator.with_parameters(new_gen), gen_opt)
    state = state.with_classifier(state.classifier.with_parameters(new_cls), cls_opt)
    return state, breakdown


class BiGanTrainer:
    """Runs the alternating training loop over a dataset.

    Owns the resampled real sequences and the optional checkpoint manager;
    every random draw comes from the stream stored in the state, so a run
    resumed from a checkpoint continues exactly where it stopped.
    """

    def __init__(
        self,
        dataset: Dataset,
        config: TrainingConfig,
        checkpoints: CheckpointManager | None = None,
    ):
        """
        Initialize the trainer.

        Args:
            dataset: One-hot labelled training data.
            config: Hyperparameters.
            checkpoints: Periodic checkpoint writer, if any.

        Raises:
            ValueError: If the dataset is empty or has soft labels.
        """
        if len(dataset) == 0:
            raise ValueError("Cannot train on an empty dataset")
        if not dataset.is_one_hot:
            raise ValueError("Training data must have one-hot labels")
        self.dataset = dataset
        self.config = config
        self.checkpoints = checkpoints
        T = config.sequence_length
        self._resampled = dataset.with_records(
            r if r.sequence.length == T else Record(ActionSequence(resample_sequence(r.sequence.frames, T)), r.label)
            for r in dataset.records
        )

    def _check_state(self, state: ModelState) -> None:
        if state.num_classes != self.dataset.num_classes or state.pose_dim != self.dataset.dim:
            raise ShapeError(
                f"Model is for C={state.num_classes}, d={state.pose_dim}; "
                f"dataset has C={self.dataset.num_classes}, d={self.dataset.dim}"
            )

    def _sample_batch(self, rng: np.random.Generator) -> TrainingBatch:
        return TrainingBatch.from_records(minibatch(self._resampled, self.config.batch_size, rng))

    def _noise(self, state: ModelState, rng: np.random.Generator) -> NoiseSequence:
        return NoiseSequence.sample(
            self.config.sequence_length,
            self.config.batch_size,
            state.generator.noise_dim,
            rng,
            dtype=state.generator.dtype,
        )

    def step(self, state: ModelState) -> tuple[ModelState, LogEntry]:
        """Run one outer iteration: K discriminator steps, then one generator/classifier step."""
        config = self.config
        rng = restore_rng(state.rng_state)
        iteration = state.iteration + 1
        C = self.dataset.num_classes

        d_losses = []
        try:
            for _ in range(config.disc_steps):
                batch = self._sample_batch(rng)
                fake_labels = np.eye(C)[rng.integers(0, C, size=config.batch_size)]
                state, loss_d = discriminator_step(state, batch, self._noise(state, rng), fake_labels, config)
                d_losses.append(loss_d)
            batch = self._sample_batch(rng)
            state, breakdown = generator_classifier_step(state, batch, self._noise(state, rng), config)
        except NonFiniteError as e:
            logger.error(f"Training diverged at iteration {iteration}: {e}")
            raise TrainingDivergedError(iteration, {"loss_D": d_losses[-1] if d_losses else float("nan")}) from e

        entry = LogEntry(
            iteration=iteration,
            loss_D=float(np.mean(d_losses)),
            loss_adv_G=breakdown.adversarial,
            loss_smooth=breakdown.smoothness,
            loss_cls_real=breakdown.classification,
            loss_cycle=breakdown.cycle,
        )
        _check_finite(iteration, {k: v for k, v in asdict(entry).items() if k != "iteration"})
        return state.advance(rng), entry

    def run(self, state: ModelState, iterations: int | None = None) -> tuple[ModelState, TrainingLog]:
        """
        Train for ``iterations`` (default ``config.iterations``) outer steps.

        Returns:
            Tuple of (final state, log of this call's iterations).
        """
        self._check_state(state)
        iterations = self.config.iterations if iterations is None else iterations
        log = TrainingLog()
        logger.info(
            f"Training for {iterations} iterations from iteration {state.iteration} "
            f"(m={self.config.batch_size}, K={self.config.disc_steps}, T={self.config.sequence_length})"
        )
        for _ in range(iterations):
            state, entry = self.step(state)
            log.append(entry)
            message = (
                f"iter {entry.iteration}: D={entry.loss_D:.5f} adv={entry.loss_adv_G:.5f} "
                f"smooth={entry.loss_smooth:.5f} cls={entry.loss_cls_real:.5f} cycle={entry.loss_cycle:.5f}"
            )
            if self.config.log_interval and entry.iteration % self.config.log_interval == 0:
                logger.info(message)
            else:
                logger.debug(message)
            if self.checkpoints is not None:
                self.checkpoints.maybe_save(state)
        return state, log


def train(
    dataset: Dataset,
    config: TrainingConfig,
    state: ModelState | None = None,
    checkpoints: CheckpointManager | None = None,
) -> tuple[ModelState, TrainingLog]:
    """
    Train the generator, classifier and discriminator.

    Args:
        dataset: One-hot labelled training data.
        config: Hyperparameters; ``config.iterations`` outer steps are run.
        state: Starting point (e.g. carrying a pretrained decoder, or a
            resumed checkpoint). A fresh state seeded with ``config.seed``
            is created when omitted, which skips decoder pretraining.
        checkpoints: Periodic checkpoint writer.

    Returns:
        Tuple of (final state, training log).
    """
    if state is None:
        logger.warning("No initial state given; training starts without a pretrained decoder")
        state = init_model_state(
            config, dataset.num_classes, dataset.dim, stats=dataset.stats, class_names=dataset.names
        )
    return BiGanTrainer(dataset, config, checkpoints).run(state)
