"""Generator, classifier and discriminator networks."""

from .critics import (
    BiLstmEncoderParams,
    ClassifierParams,
    DiscriminatorParams,
    bilstm_encode,
    classify,
    classify_sequence,
    discriminate,
    frames_to_steps,
    init_classifier,
    init_discriminator,
    predict_probabilities,
)
from .generator import (
    GeneratorParams,
    LatentTrajectory,
    NoiseSequence,
    decode_frame,
    decode_sequence,
    generate_batch,
    generate_sequence,
    init_decoder,
    init_generator,
    label_matrix,
    latent_rollout,
    mix_labels,
    rollout_and_decode,
    smoothness_penalty,
)

__all__ = [
    "BiLstmEncoderParams",
    "ClassifierParams",
    "DiscriminatorParams",
    "bilstm_encode",
    "classify",
    "classify_sequence",
    "discriminate",
    "frames_to_steps",
    "init_classifier",
    "init_discriminator",
    "predict_probabilities",
    "GeneratorParams",
    "LatentTrajectory",
    "NoiseSequence",
    "decode_frame",
    "decode_sequence",
    "generate_batch",
    "generate_sequence",
    "init_decoder",
    "init_generator",
    "label_matrix",
    "latent_rollout",
    "mix_labels",
    "rollout_and_decode",
    "smoothness_penalty",
]
