"""Decoder pretraining, the bi-GAN loop, checkpoints and model state."""

from .baseline import train_baseline_classifier
from .bigan import (
    BiGanTrainer,
    GeneratorTerms,
    LogEntry,
    LossBreakdown,
    TrainingBatch,
    TrainingLog,
    discriminator_objective,
    discriminator_step,
    generator_classifier_objective,
    generator_classifier_step,
    train,
)
from .checkpoint import CheckpointManager, load_checkpoint, save_checkpoint
from .pretrain import (
    MlpFrameCritic,
    critic_objective,
    decoder_objective,
    gradient_penalty,
    init_frame_critic,
    pretrain_decoder,
)
from .state import ModelState, init_model_state, states_equal

__all__ = [
    "train_baseline_classifier",
    "BiGanTrainer",
    "GeneratorTerms",
    "LogEntry",
    "LossBreakdown",
    "TrainingBatch",
    "TrainingLog",
    "discriminator_objective",
    "discriminator_step",
    "generator_classifier_objective",
    "generator_classifier_step",
    "train",
    "CheckpointManager",
    "load_checkpoint",
    "save_checkpoint",
    "MlpFrameCritic",
    "critic_objective",
    "decoder_objective",
    "gradient_penalty",
    "init_frame_critic",
    "pretrain_decoder",
    "ModelState",
    "init_model_state",
    "states_equal",
]
