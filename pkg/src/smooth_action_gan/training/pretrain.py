"""WGAN-GP pretraining of the shared frame-wise decoder.

Frames are pooled across sequences and treated as i.i.d. samples. The
decoder maps a standard Gaussian latent and a uniformly drawn class label to
a pose; an auxiliary MLP critic is trained against it and thrown away
afterwards. Critic and decoder alternate Adam steps on

    critic:  mean D(fake) - mean D(real) + lambda * penalty
    decoder: -mean D(fake)
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, replace

import numpy as np

from ..config import TrainingConfig
from ..data.types import Dataset
from ..errors import NonFiniteError, ShapeError, TrainingDivergedError
from ..interfaces import FrameCritic
from ..models import decode_frame, init_decoder
from ..models.layers import Params, dense, init_dense, prefixed, unprefixed
from ..numerics import AdamState, Tape, Tensor, adam_step, make_rng, ops
from ..numerics.rng import RngLike

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MlpFrameCritic(FrameCritic):
    """Conditional frame critic: tanh(tanh([x, y] W1 + b1) W2 + b2) w3 + b3."""

    tensors: Mapping[str, Tensor]
    pose_dim: int

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.tensors)

    def with_parameters(self, params: Mapping[str, Tensor]) -> "MlpFrameCritic":
        return replace(self, tensors={**self.tensors, **params})

    def _inputs(self, frames: Tensor, labels: Tensor | None) -> Tensor:
        if frames.ndim != 2 or frames.shape[1] != self.pose_dim:
            raise ShapeError(f"Frames have shape {frames.shape}, expected (m, {self.pose_dim})")
        if labels is None:
            return frames
        return ops.concat([frames, labels], axis=1)

    def _hidden(self, frames: Tensor, labels: Tensor | None) -> tuple[Tensor, Tensor]:
        z = self._inputs(frames, labels)
        a1 = ops.tanh(dense(unprefixed("l1", self.tensors), z))
        a2 = ops.tanh(dense(unprefixed("l2", self.tensors), a1))
        return a1, a2

    def score(self, frames: Tensor, labels: Tensor | None = None) -> Tensor:
        _, a2 = self._hidden(frames, labels)
        return dense(unprefixed("l3", self.tensors), a2)

    def input_gradient(self, frames: Tensor, labels: Tensor | None = None) -> Tensor:
        a1, a2 = self._hidden(frames, labels)
        delta2 = ops.mul(ops.sub(1.0, ops.mul(a2, a2)), ops.transpose(self.tensors["l3.W"]))
        delta1 = ops.mul(
            ops.matmul(delta2, ops.transpose(self.tensors["l2.W"])),
            ops.sub(1.0, ops.mul(a1, a1)),
        )
        grad = ops.matmul(delta1, ops.transpose(self.tensors["l1.W"]))
        if labels is None:
            return grad
        return ops.slice_(grad, 0, self.pose_dim, axis=1)


def init_frame_critic(
    rng: np.random.Generator, pose_dim: int, num_classes: int, hidden: int, dtype=np.float32
) -> MlpFrameCritic:
    tensors: Params = {}
    tensors.update(prefixed("l1", init_dense(rng, pose_dim + num_classes, hidden, dtype)))
    tensors.update(prefixed("l2", init_dense(rng, hidden, hidden, dtype)))
    tensors.update(prefixed("l3", init_dense(rng, hidden, 1, dtype)))
    return MlpFrameCritic(tensors=tensors, pose_dim=pose_dim)


def gradient_penalty(critic: FrameCritic, frames: Tensor, labels: Tensor | None = None) -> Tensor:
    """
    Mean over frames of (||d critic / d x||_2 - 1)^2.

    Args:
        critic: Frame critic.
        frames: Batch of shape (m, d) at which the input gradient is taken.
        labels: Optional conditioning labels of shape (m, C).

    Returns:
        Scalar tensor, differentiable w.r.t. the critic's parameters.

    Raises:
        ShapeError: If the batch is not a non-empty (m, d) matrix.
    """
    if frames.ndim != 2:
        raise ShapeError(f"Gradient penalty expects an (m, d) batch, got {frames.shape}")
    grad = critic.input_gradient(frames, labels)
    norms = ops.sqrt(ops.sum_(ops.mul(grad, grad), axis=1))
    gap = ops.sub(norms, 1.0)
    return ops.mean(ops.mul(gap, gap))


def critic_objective(
    critic: FrameCritic,
    real: Tensor,
    real_labels: Tensor,
    fake: Tensor,
    fake_labels: Tensor,
    penalty_at: Tensor,
    gp_weight: float,
) -> Tensor:
    """mean D(fake) - mean D(real) + gp_weight * penalty at ``penalty_at`` (minimized by the critic)."""
    wasserstein = ops.sub(ops.mean(critic.score(fake, fake_labels)), ops.mean(critic.score(real, real_labels)))
    return ops.add(wasserstein, ops.scale(gradient_penalty(critic, penalty_at, real_labels), gp_weight))


def decoder_objective(decoder: Mapping[str, Tensor], critic: FrameCritic, h: Tensor, labels: Tensor) -> Tensor:
    """-mean D(Dec(h, y), y), minimized by the decoder."""
    return ops.scale(ops.mean(critic.score(decode_frame(decoder, h, labels), labels)), -1.0)


def _one_hot(indices: np.ndarray, num_classes: int) -> np.ndarray:
    return np.eye(num_classes)[indices]


def _pool_frames(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    frames = np.concatenate([r.sequence.frames for r in dataset.records], axis=0)
    labels = np.concatenate(
        [np.repeat(r.label.as_array()[None], r.sequence.length, axis=0) for r in dataset.records], axis=0
    )
    return frames, labels


def pretrain_decoder(
    dataset: Dataset,
    config: TrainingConfig,
    seed: RngLike | None = None,
    decoder: Mapping[str, Tensor] | None = None,
) -> Params:
    """
    Pretrain decoder weights theta_2 with the conditional WGAN-GP objective.

    The decoder is drawn first from the seeded stream, then the critic, so
    with 0 iterations the result equals ``init_decoder(make_rng(seed), ...)``.

    Args:
        dataset: Real sequences; every frame is a sample.
        config: Uses the ``pretrain_*`` fields, ``lr_pretrain``,
            ``gp_weight``, ``penalty_mode``, ``latent_dim``,
            ``decoder_hidden`` and ``precision``.
        seed: Defaults to ``config.seed``.
        decoder: Starting weights instead of a fresh initialization.

    Returns:
        Decoder weights keyed ``0.W``, ``0.b``, ... .

    Raises:
        ValueError: If the dataset is empty.
        TrainingDivergedError: If a loss or gradient becomes non-finite.
    """
    if len(dataset) == 0:
        raise ValueError("Cannot pretrain the decoder on an empty dataset")

    rng = make_rng(config.seed if seed is None else seed)
    dtype = config.dtype
    C, d, L = dataset.num_classes, dataset.dim, config.latent_dim
    if decoder is None:
        decoder = init_decoder(rng, L, C, d, config.decoder_hidden, dtype)
    decoder = dict(decoder)
    critic = init_frame_critic(rng, d, C, config.critic_hidden, dtype)
    decoder_opt = AdamState.for_params(decoder, config.lr_pretrain)
    critic_opt = AdamState.for_params(critic.named_parameters(), config.lr_pretrain)

    pool, pool_labels = _pool_frames(dataset)
    m = config.pretrain_batch_size
    logger.info(
        f"Pretraining decoder on {pool.shape[0]} frames for {config.pretrain_iterations} iterations "
        f"(penalty at {config.penalty_mode} frames, lambda={config.gp_weight})"
    )

    def fake_inputs() -> tuple[Tensor, Tensor]:
        h = Tensor(rng.standard_normal((m, L)), dtype=dtype)
        y = Tensor(_one_hot(rng.integers(0, C, size=m), C), dtype=dtype)
        return h, y

    critic_loss = decoder_loss = 0.0
    for iteration in range(1, config.pretrain_iterations + 1):
        try:
            for _ in range(config.pretrain_critic_steps):
                idx = rng.integers(0, pool.shape[0], size=m)
                real = Tensor(pool[idx], dtype=dtype)
                real_labels = Tensor(pool_labels[idx], dtype=dtype)
                h, fake_labels = fake_inputs()
                fake = decode_frame(decoder, h, fake_labels)
                if config.penalty_mode == "interpolate":
                    eps = Tensor(rng.uniform(0.0, 1.0, size=(m, 1)), dtype=dtype)
                    at = ops.add(ops.mul(eps, real), ops.mul(ops.sub(1.0, eps), fake))
                else:
                    at = real

                params = critic.named_parameters()
                with Tape() as tape:
                    tape.watch(params)
                    loss = critic_objective(critic, real, real_labels, fake, fake_labels, at, config.gp_weight)
                grads = tape.gradient(loss, params)
                new_params, critic_opt = adam_step(params, grads, critic_opt)
                critic = critic.with_parameters(new_params)
                critic_loss = loss.item()

            h, fake_labels = fake_inputs()
            with Tape() as tape:
                tape.watch(decoder)
                loss = decoder_objective(decoder, critic, h, fake_labels)
            grads = tape.gradient(loss, decoder)
            decoder, decoder_opt = adam_step(decoder, grads, decoder_opt)
            decoder_loss = loss.item()
        except NonFiniteError as e:
            losses = {"critic": critic_loss, "decoder": decoder_loss}
            logger.error(f"Pretraining diverged at iteration {iteration}: {e}")
            raise TrainingDivergedError(iteration, losses) from e

        if config.log_interval and iteration % config.log_interval == 0:
            logger.info(f"pretrain iter {iteration}: critic={critic_loss:.5f} decoder={decoder_loss:.5f}")
        else:
            logger.debug(f"pretrain iter {iteration}: critic={critic_loss:.5f} decoder={decoder_loss:.5f}")

    return decoder
