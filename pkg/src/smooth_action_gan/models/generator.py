"""Stochastic action-sequence generator.

A single-layer LSTM reads (noise_t, label) at every step; a linear head maps
each hidden state to a residual v_t, and the latent trajectory is the running
sum h_t = h_{t-1} + v_t with h_0 = 0. A shared frame-wise MLP decoder maps
every (h_t, label) pair to a pose.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..data.types import ActionSequence, LabelDistribution
from ..errors import ShapeError
from ..interfaces import ParameterSet
from ..numerics import Tensor, make_rng, ops
from ..numerics.rng import RngLike
from .layers import Params, dense, init_dense, init_lstm, lstm_unroll, prefixed, unprefixed

logger = logging.getLogger(__name__)

DEFAULT_NOISE_DIM = 16
DEFAULT_LATENT_DIM = 6
DEFAULT_LSTM_HIDDEN = 256
DEFAULT_DECODER_HIDDEN = 512


@dataclass(frozen=True)
class GeneratorParams(ParameterSet):
    """Latent LSTM (``lstm.*``, ``head.*``) and shared decoder (``decoder.*``) weights.

    Attributes:
        tensors: Every trainable tensor by dotted name.
        num_classes: Class count C of the conditioning label.
        residual: Accumulate head outputs into latents; when False the head
            output is the latent itself.
    """

    tensors: Mapping[str, Tensor]
    num_classes: int
    residual: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tensors", dict(self.tensors))
        for name in ("lstm.W", "lstm.b", "head.W", "head.b", "decoder.0.W"):
            if name not in self.tensors:
                raise ShapeError(f"Generator parameters lack '{name}'")
        if self.noise_dim < 1:
            raise ShapeError(f"LSTM input width {self.lstm_input_dim} leaves no room for noise with C={self.num_classes}")
        if self.tensors["head.W"].shape[0] != self.tensors["lstm.W"].shape[1] // 4:
            raise ShapeError("Latent head does not match the LSTM hidden size")
        if self.decoder_input_dim != self.latent_dim + self.num_classes:
            raise ShapeError(
                f"Decoder input width {self.decoder_input_dim} != latent {self.latent_dim} + classes {self.num_classes}"
            )

    @property
    def lstm_input_dim(self) -> int:
        return self.tensors["lstm.W"].shape[0] - self.tensors["lstm.W"].shape[1] // 4

    @property
    def noise_dim(self) -> int:
        return self.lstm_input_dim - self.num_classes

    @property
    def latent_dim(self) -> int:
        return self.tensors["head.W"].shape[1]

    @property
    def decoder_input_dim(self) -> int:
        return self.tensors["decoder.0.W"].shape[0]

    @property
    def pose_dim(self) -> int:
        return self.decoder()[f"{decoder_depth(self.decoder()) - 1}.W"].shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["lstm.W"].dtype

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.tensors)

    def with_parameters(self, params: Mapping[str, Tensor]) -> "GeneratorParams":
        merged = dict(self.tensors)
        for name, tensor in params.items():
            if name not in merged:
                raise ShapeError(f"Unknown generator parameter '{name}'")
            if tensor.shape != merged[name].shape:
                raise ShapeError(f"Parameter '{name}' has shape {tensor.shape}, expected {merged[name].shape}")
            merged[name] = tensor
        return replace(self, tensors=merged)

    def latent_parameters(self) -> Params:
        """theta_1: LSTM and residual head."""
        return {k: v for k, v in self.tensors.items() if not k.startswith("decoder.")}

    def decoder(self) -> Params:
        """theta_2 with the ``decoder.`` prefix stripped."""
        return unprefixed("decoder", self.tensors)

    def with_decoder(self, decoder: Mapping[str, Tensor]) -> "GeneratorParams":
        return self.with_parameters(prefixed("decoder", decoder))


def decoder_depth(decoder: Mapping[str, Tensor]) -> int:
    return len({name.split(".")[0] for name in decoder})


def init_decoder(
    rng: np.random.Generator,
    latent_dim: int,
    num_classes: int,
    pose_dim: int,
    hidden_dim: int = DEFAULT_DECODER_HIDDEN,
    dtype=np.float32,
) -> Params:
    """Two relu hidden layers and a linear output, keyed ``0.*``, ``1.*``, ``2.*``."""
    widths = [latent_dim + num_classes, hidden_dim, hidden_dim, pose_dim]
    params: Params = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        params.update(prefixed(str(i), init_dense(rng, fan_in, fan_out, dtype)))
    return params


def init_generator(
    rng: RngLike,
    num_classes: int,
    pose_dim: int,
    noise_dim: int = DEFAULT_NOISE_DIM,
    latent_dim: int = DEFAULT_LATENT_DIM,
    lstm_hidden: int = DEFAULT_LSTM_HIDDEN,
    decoder_hidden: int = DEFAULT_DECODER_HIDDEN,
    residual: bool = True,
    dtype=np.float32,
) -> GeneratorParams:
    rng = make_rng(rng)
    tensors: Params = {}
    tensors.update(prefixed("lstm", init_lstm(rng, noise_dim + num_classes, lstm_hidden, dtype)))
    tensors.update(prefixed("head", init_dense(rng, lstm_hidden, latent_dim, dtype)))
    tensors.update(prefixed("decoder", init_decoder(rng, latent_dim, num_classes, pose_dim, decoder_hidden, dtype)))
    return GeneratorParams(tensors=tensors, num_classes=num_classes, residual=residual)


@dataclass(frozen=True)
class NoiseSequence:
    """Independent standard Gaussian inputs xi_1..xi_T, each of shape (m, noise_dim)."""

    steps: tuple[Tensor, ...]

    @classmethod
    def sample(cls, length: int, batch: int, noise_dim: int, rng: RngLike, dtype=np.float32) -> "NoiseSequence":
        if length < 2:
            raise ShapeError(f"Sequences need at least 2 frames, got T={length}")
        draws = make_rng(rng).standard_normal((length, batch, noise_dim))
        return cls(steps=tuple(Tensor(step, dtype=dtype) for step in draws))

    @property
    def length(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class LatentTrajectory:
    """Residuals v_1..v_T and latents h_1..h_T, each a tensor of shape (m, L).

    In residual mode ``latents[t]`` equals ``latents[t-1] + residuals[t]``
    exactly, with ``latents[0] == residuals[0]``; in direct mode both hold the
    head outputs. Read as a transition recurrence h_{t+1} = h_t + v_t for
    t = 1..T-1, the steps are :meth:`transitions`, so h_T - h_1 is their sum.
    """

    residuals: tuple[Tensor, ...]
    latents: tuple[Tensor, ...]

    @property
    def length(self) -> int:
        return len(self.latents)

    def latent_array(self) -> np.ndarray:
        """Latents as an array of shape (m, T, L)."""
        return np.stack([h.value for h in self.latents], axis=1)

    def residual_array(self) -> np.ndarray:
        return np.stack([v.value for v in self.residuals], axis=1)

    def transitions(self) -> np.ndarray:
        """Steps between consecutive latents, shape (m, T - 1, L).

        In residual mode these are the residuals after the first.
        """
        latents = self.latent_array()
        return latents[:, 1:] - latents[:, :-1]


def label_matrix(labels: LabelDistribution | Sequence[LabelDistribution] | np.ndarray, dtype=np.float32) -> Tensor:
    """Stack labels into an (m, C) tensor."""
    if isinstance(labels, LabelDistribution):
        labels = [labels]
    if isinstance(labels, np.ndarray):
        array = np.atleast_2d(labels)
    else:
        array = np.stack([label.as_array() for label in labels])
    return Tensor(array, dtype=dtype)


def latent_rollout(params: GeneratorParams, noise: NoiseSequence, labels: Tensor) -> LatentTrajectory:
    """
    Unroll the latent LSTM over a noise sequence.

    Args:
        params: Generator weights (only theta_1 is used).
        noise: T >= 2 noise steps of shape (m, noise_dim).
        labels: Conditioning labels of shape (m, C).

    Returns:
        The latent trajectory, differentiable w.r.t. theta_1.

    Raises:
        ShapeError: If the noise or label widths disagree with the LSTM input.
    """
    if noise.length < 2:
        raise ShapeError(f"Sequences need at least 2 frames, got T={noise.length}")
    if labels.ndim != 2 or labels.shape[1] != params.num_classes:
        raise ShapeError(f"Labels have shape {labels.shape}, expected (m, {params.num_classes})")
    for step in noise.steps:
        if step.shape != (labels.shape[0], params.noise_dim):
            raise ShapeError(f"Noise step has shape {step.shape}, expected ({labels.shape[0]}, {params.noise_dim})")

    lstm = unprefixed("lstm", params.tensors)
    head = unprefixed("head", params.tensors)
    hidden = lstm_unroll(lstm, [ops.concat([xi, labels], axis=1) for xi in noise.steps])
    residuals = [dense(head, h) for h in hidden]
    if not params.residual:
        return LatentTrajectory(residuals=tuple(residuals), latents=tuple(residuals))

    latents = [residuals[0]]
    for v in residuals[1:]:
        latents.append(ops.add(latents[-1], v))
    return LatentTrajectory(residuals=tuple(residuals), latents=tuple(latents))


def decode_frame(decoder: Mapping[str, Tensor], latent: Tensor, labels: Tensor) -> Tensor:
    """Map latents (m, L) and labels (m, C) to poses (m, d)."""
    if latent.ndim != 2 or labels.ndim != 2 or latent.shape[0] != labels.shape[0]:
        raise ShapeError(f"Latent {latent.shape} and labels {labels.shape} must be (m, L) and (m, C)")
    x = ops.concat([latent, labels], axis=1)
    depth = decoder_depth(decoder)
    for i in range(depth):
        x = dense(unprefixed(str(i), decoder), x)
        if i < depth - 1:
            x = ops.relu(x)
    return x


def decode_sequence(decoder: Mapping[str, Tensor], latents: Sequence[Tensor], labels: Tensor) -> list[Tensor]:
    """Decode every frame in one pass; returns T poses of shape (m, d)."""
    m = labels.shape[0]
    stacked = ops.concat(list(latents), axis=0)
    tiled = ops.concat([labels] * len(latents), axis=0)
    poses = decode_frame(decoder, stacked, tiled)
    return [ops.slice_(poses, t * m, (t + 1) * m, axis=0) for t in range(len(latents))]


def rollout_and_decode(
    params: GeneratorParams, noise: NoiseSequence, labels: Tensor
) -> tuple[list[Tensor], LatentTrajectory]:
    """G(xi, y): poses as T tensors of shape (m, d) plus the latent trajectory."""
    trajectory = latent_rollout(params, noise, labels)
    return decode_sequence(params.decoder(), trajectory.latents, labels), trajectory


def generate_batch(
    params: GeneratorParams, labels: np.ndarray, length: int, seed: RngLike
) -> tuple[np.ndarray, np.ndarray]:
    """
    Sample one sequence per label row.

    Args:
        params: Generator weights.
        labels: Array of shape (m, C).
        length: Frames per sequence T >= 2.
        seed: Seed or generator for the noise.

    Returns:
        Tuple of (poses (m, T, d), latents (m, T, L)).
    """
    labels_t = label_matrix(np.asarray(labels), dtype=params.dtype)
    noise = NoiseSequence.sample(length, labels_t.shape[0], params.noise_dim, seed, dtype=params.dtype)
    poses, trajectory = rollout_and_decode(params, noise, labels_t)
    return np.stack([p.value for p in poses], axis=1), trajectory.latent_array()


def generate_sequence(
    params: GeneratorParams, label: LabelDistribution, length: int, seed: RngLike
) -> tuple[ActionSequence, LatentTrajectory]:
    """Sample a single sequence of ``length`` frames conditioned on ``label``."""
    if label.num_classes != params.num_classes:
        raise ShapeError(f"Label has {label.num_classes} classes, generator expects {params.num_classes}")
    labels_t = label_matrix(label, dtype=params.dtype)
    noise = NoiseSequence.sample(length, 1, params.noise_dim, seed, dtype=params.dtype)
    poses, trajectory = rollout_and_decode(params, noise, labels_t)
    frames = np.concatenate([p.value for p in poses], axis=0)
    return ActionSequence(frames), trajectory


def smoothness_penalty(
    latents: Sequence[Tensor], poses: Sequence[Tensor], sigma1: float, sigma2: float
) -> Tensor:
    """
    Sum over t >= 2 of sigma1 * ||h_t - h_{t-1}||^2 + sigma2 * ||x_t - x_{t-1}||^2.

    Each element of ``latents``/``poses`` is one frame, either a vector or an
    (m, .) batch; for batches the per-sequence penalty is averaged over m.

    Raises:
        ShapeError: If the sequences have different lengths.
        ValueError: If T < 2 or a weight is negative.
    """
    if len(latents) != len(poses):
        raise ShapeError(f"{len(latents)} latent frames but {len(poses)} pose frames")
    if len(latents) < 2:
        raise ValueError("Smoothness needs at least 2 frames")
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError(f"Smoothness weights must be >= 0, got {sigma1}, {sigma2}")

    batch = latents[0].shape[0] if latents[0].ndim == 2 else 1
    terms = []
    for t in range(1, len(latents)):
        dh = ops.sub(latents[t], latents[t - 1])
        dx = ops.sub(poses[t], poses[t - 1])
        terms.append(ops.scale(ops.sq_norm(dh), sigma1 / batch))
        terms.append(ops.scale(ops.sq_norm(dx), sigma2 / batch))
    total = terms[0]
    for term in terms[1:]:
        total = ops.add(total, term)
    return total


def mix_labels(weights: Sequence[float]) -> LabelDistribution:
    """
    Normalize non-negative class weights into a soft label.

    Raises:
        ValueError: If a weight is negative or non-finite, or all are zero.
    """
    values = np.asarray(weights, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("Mixing weights must be a non-empty list")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError(f"Mixing weights must be finite and non-negative, got {list(weights)}")
    total = values.sum()
    if total == 0:
        raise ValueError("Mixing weights must not all be zero")
    return LabelDistribution(tuple(values / total))
