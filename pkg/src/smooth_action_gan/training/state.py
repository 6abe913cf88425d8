"""Immutable snapshot of every network, optimizer and counter of a run."""

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..config import TrainingConfig
from ..data.types import NormalizationStats
from ..models import (
    ClassifierParams,
    DiscriminatorParams,
    GeneratorParams,
    init_classifier,
    init_discriminator,
    init_generator,
)
from ..numerics import AdamState, Tensor, make_rng, rng_state
from ..numerics.rng import RngLike


@dataclass(frozen=True)
class ModelState:
    """Networks theta, phi, psi with their Adam states (immutable)."""

    generator: GeneratorParams
    classifier: ClassifierParams
    discriminator: DiscriminatorParams
    generator_opt: AdamState
    classifier_opt: AdamState
    discriminator_opt: AdamState
    config: TrainingConfig = field(default_factory=TrainingConfig)
    iteration: int = 0
    rng_state: dict[str, Any] = field(default_factory=dict)
    stats: NormalizationStats | None = None
    class_names: tuple[str, ...] = ()

    @property
    def num_classes(self) -> int:
        return self.generator.num_classes

    @property
    def pose_dim(self) -> int:
        return self.generator.pose_dim

    def with_generator(self, generator: GeneratorParams, opt: AdamState) -> "ModelState":
        return replace(self, generator=generator, generator_opt=opt)

    def with_classifier(self, classifier: ClassifierParams, opt: AdamState) -> "ModelState":
        return replace(self, classifier=classifier, classifier_opt=opt)

    def with_discriminator(self, discriminator: DiscriminatorParams, opt: AdamState) -> "ModelState":
        return replace(self, discriminator=discriminator, discriminator_opt=opt)

    def advance(self, rng: np.random.Generator) -> "ModelState":
        """Count one finished iteration and remember where the random stream is."""
        return replace(self, iteration=self.iteration + 1, rng_state=rng_state(rng))

    def flat_arrays(self) -> dict[str, np.ndarray]:
        """Every parameter and optimizer moment keyed by a unique path."""
        arrays: dict[str, np.ndarray] = {}
        networks = {
            "generator": (self.generator, self.generator_opt),
            "classifier": (self.classifier, self.classifier_opt),
            "discriminator": (self.discriminator, self.discriminator_opt),
        }
        for net, (params, opt) in networks.items():
            for name, tensor in params.named_parameters().items():
                arrays[f"{net}/{name}"] = tensor.value
            for name, moment in opt.first_moment.items():
                arrays[f"opt/{net}/m/{name}"] = moment
            for name, moment in opt.second_moment.items():
                arrays[f"opt/{net}/v/{name}"] = moment
        return arrays


def init_model_state(
    config: TrainingConfig,
    num_classes: int,
    pose_dim: int,
    seed: RngLike | None = None,
    decoder: Mapping[str, Tensor] | None = None,
    stats: NormalizationStats | None = None,
    class_names: tuple[str, ...] = (),
) -> ModelState:
    """
    Fresh networks and optimizers for a run.

    Initialization consumes the run's random stream, and training continues
    from where initialization left it.

    Args:
        config: Hyperparameters.
        num_classes: Class count C.
        pose_dim: Pose dimension d.
        seed: Defaults to ``config.seed``.
        decoder: Pretrained decoder weights replacing the random ones.
        stats: Normalization statistics of the training data.
        class_names: Optional class names.
    """
    rng = make_rng(config.seed if seed is None else seed)
    dtype = config.dtype
    generator = init_generator(
        rng,
        num_classes,
        pose_dim,
        noise_dim=config.noise_dim,
        latent_dim=config.latent_dim,
        lstm_hidden=config.lstm_hidden,
        decoder_hidden=config.decoder_hidden,
        residual=config.residual,
        dtype=dtype,
    )
    if decoder is not None:
        generator = generator.with_decoder(
            {name: Tensor(t.value, dtype=dtype) for name, t in decoder.items()}
        )
    classifier = init_classifier(rng, pose_dim, num_classes, config.encoder_hidden, config.dense_width, dtype)
    discriminator = init_discriminator(rng, pose_dim, num_classes, config.encoder_hidden, config.dense_width, dtype)

    return ModelState(
        generator=generator,
        classifier=classifier,
        discriminator=discriminator,
        generator_opt=AdamState.for_params(generator.named_parameters(), config.lr_main),
        classifier_opt=AdamState.for_params(classifier.named_parameters(), config.lr_main),
        discriminator_opt=AdamState.for_params(discriminator.named_parameters(), config.lr_main),
        config=config,
        iteration=0,
        rng_state=rng_state(rng),
        stats=stats,
        class_names=tuple(class_names),
    )


def states_equal(a: ModelState, b: ModelState) -> bool:
    """Bitwise equality of parameters, moments, counters and random state."""
    arrays_a, arrays_b = a.flat_arrays(), b.flat_arrays()
    if arrays_a.keys() != arrays_b.keys():
        return False
    if any(
        arrays_a[k].dtype != arrays_b[k].dtype or not np.array_equal(arrays_a[k], arrays_b[k])
        for k in arrays_a
    ):
        return False
    opts = [(a.generator_opt, b.generator_opt), (a.classifier_opt, b.classifier_opt),
            (a.discriminator_opt, b.discriminator_opt)]
    if any((x.step, x.lr, x.beta1, x.beta2, x.eps) != (y.step, y.lr, y.beta1, y.beta2, y.eps) for x, y in opts):
        return False
    return (
        a.iteration == b.iteration
        and a.rng_state == b.rng_state
        and a.config == b.config
        and a.stats == b.stats
        and a.class_names == b.class_names
        and a.generator.residual == b.generator.residual
    )
