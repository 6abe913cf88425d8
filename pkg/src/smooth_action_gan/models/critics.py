"""Bidirectional-LSTM sequence classifier and discriminator."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..data.types import ActionSequence, LabelDistribution
from ..errors import ShapeError
from ..interfaces import ParameterSet
from ..numerics import Tensor, make_rng, ops
from ..numerics.rng import RngLike
from .layers import Params, dense, init_dense, init_lstm, lstm_unroll, prefixed, unprefixed

DEFAULT_ENCODER_HIDDEN = 256
DEFAULT_DENSE_WIDTH = 1024
PROBABILITY_CLAMP = 1e-6


@dataclass(frozen=True)
class BiLstmEncoderParams(ParameterSet):
    """Forward/backward LSTMs (``fwd.*``, ``bwd.*``), a relu layer (``dense.*``) and an output layer (``out.*``)."""

    tensors: Mapping[str, Tensor]

    def __post_init__(self):
        object.__setattr__(self, "tensors", dict(self.tensors))
        for name in ("fwd.W", "bwd.W", "dense.W", "out.W"):
            if name not in self.tensors:
                raise ShapeError(f"Encoder parameters lack '{name}'")
        if self.tensors["dense.W"].shape[0] != 2 * self.hidden_dim:
            raise ShapeError("Dense layer width does not match the concatenated LSTM states")

    @property
    def input_dim(self) -> int:
        W = self.tensors["fwd.W"]
        return W.shape[0] - W.shape[1] // 4

    @property
    def hidden_dim(self) -> int:
        return self.tensors["fwd.W"].shape[1] // 4

    @property
    def output_dim(self) -> int:
        return self.tensors["out.W"].shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["fwd.W"].dtype

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.tensors)

    def with_parameters(self, params: Mapping[str, Tensor]) -> "BiLstmEncoderParams":
        merged = dict(self.tensors)
        for name, tensor in params.items():
            if name not in merged or tensor.shape != merged[name].shape:
                raise ShapeError(f"Parameter '{name}' does not match the encoder layout")
            merged[name] = tensor
        return replace(self, tensors=merged)


@dataclass(frozen=True)
class ClassifierParams(BiLstmEncoderParams):
    """phi: encoder over poses with C output logits."""

    @property
    def num_classes(self) -> int:
        return self.output_dim


@dataclass(frozen=True)
class DiscriminatorParams(BiLstmEncoderParams):
    """psi: encoder over label-augmented poses with a single output logit."""

    num_classes: int = 1

    @property
    def pose_dim(self) -> int:
        return self.input_dim - self.num_classes


def _init_encoder(rng: np.random.Generator, input_dim: int, output_dim: int, hidden: int, width: int, dtype) -> Params:
    tensors: Params = {}
    tensors.update(prefixed("fwd", init_lstm(rng, input_dim, hidden, dtype)))
    tensors.update(prefixed("bwd", init_lstm(rng, input_dim, hidden, dtype)))
    tensors.update(prefixed("dense", init_dense(rng, 2 * hidden, width, dtype)))
    tensors.update(prefixed("out", init_dense(rng, width, output_dim, dtype)))
    return tensors


def init_classifier(
    rng: RngLike,
    pose_dim: int,
    num_classes: int,
    hidden_dim: int = DEFAULT_ENCODER_HIDDEN,
    dense_width: int = DEFAULT_DENSE_WIDTH,
    dtype=np.float32,
) -> ClassifierParams:
    tensors = _init_encoder(make_rng(rng), pose_dim, num_classes, hidden_dim, dense_width, dtype)
    return ClassifierParams(tensors=tensors)


def init_discriminator(
    rng: RngLike,
    pose_dim: int,
    num_classes: int,
    hidden_dim: int = DEFAULT_ENCODER_HIDDEN,
    dense_width: int = DEFAULT_DENSE_WIDTH,
    dtype=np.float32,
) -> DiscriminatorParams:
    tensors = _init_encoder(make_rng(rng), pose_dim + num_classes, 1, hidden_dim, dense_width, dtype)
    return DiscriminatorParams(tensors=tensors, num_classes=num_classes)


def frames_to_steps(sequences: np.ndarray, dtype=np.float32) -> list[Tensor]:
    """Split an (m, T, d) array into T tensors of shape (m, d)."""
    sequences = np.asarray(sequences)
    if sequences.ndim != 3:
        raise ShapeError(f"Expected an (m, T, d) array, got shape {sequences.shape}")
    return [Tensor(sequences[:, t, :], dtype=dtype) for t in range(sequences.shape[1])]


def bilstm_encode(params: BiLstmEncoderParams, frames: Sequence[Tensor]) -> Tensor:
    """
    Encode T frames of shape (m, input_dim) into codes of shape (m, dense_width).

    The code is relu(dense([h_fwd_T, h_bwd_T])), where h_bwd_T is the backward
    LSTM's state after reading the reversed sequence.
    """
    if not frames:
        raise ShapeError("Cannot encode an empty sequence")
    if frames[0].shape[-1] != params.input_dim:
        raise ShapeError(f"Frames have width {frames[0].shape[-1]}, encoder expects {params.input_dim}")
    forward_state = lstm_unroll(unprefixed("fwd", params.tensors), list(frames))[-1]
    backward_state = lstm_unroll(unprefixed("bwd", params.tensors), list(frames)[::-1])[-1]
    joined = ops.concat([forward_state, backward_state], axis=1)
    return ops.relu(dense(unprefixed("dense", params.tensors), joined))


def classify(params: ClassifierParams, frames: Sequence[Tensor]) -> Tensor:
    """Class probabilities of shape (m, C)."""
    logits = dense(unprefixed("out", params.tensors), bilstm_encode(params, frames))
    return ops.softmax_(logits, axis=-1)


def discriminate(params: DiscriminatorParams, frames: Sequence[Tensor], labels: Tensor) -> Tensor:
    """
    Probability that (sequence, label) is a real pair, shape (m,).

    The label is appended to every frame before encoding; the sigmoid output
    is clamped to [1e-6, 1 - 1e-6].
    """
    if labels.ndim != 2 or labels.shape[1] != params.num_classes:
        raise ShapeError(f"Labels have shape {labels.shape}, expected (m, {params.num_classes})")
    augmented = [ops.concat([x, labels], axis=1) for x in frames]
    logit = dense(unprefixed("out", params.tensors), bilstm_encode(params, augmented))
    probability = ops.clip(ops.sigmoid(logit), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    return ops.reshape(probability, (labels.shape[0],))


def classify_sequence(params: ClassifierParams, sequence: ActionSequence) -> LabelDistribution:
    """Predicted distribution for a single sequence."""
    probs = classify(params, frames_to_steps(sequence.frames[None], dtype=params.dtype)).value[0]
    probs = np.asarray(probs, dtype=np.float64)
    return LabelDistribution(tuple(probs / probs.sum()))


def predict_probabilities(params: ClassifierParams, sequences: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Class probabilities for an (n, T, d) array, evaluated in chunks."""
    sequences = np.asarray(sequences)
    chunks = [
        classify(params, frames_to_steps(sequences[i : i + batch_size], dtype=params.dtype)).value
        for i in range(0, sequences.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0).astype(np.float64)
