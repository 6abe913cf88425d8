"""Configuration handling for Smooth Action GAN."""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigError

PRECISIONS = {"float32": np.float32, "float64": np.float64}
PENALTY_MODES = ("real", "interpolate")
REAL_LABEL_SOURCES = ("classifier", "data")
ABLATIONS = ("full", "no-smoothness", "latent-only", "action-only", "no-cycle", "direct-latent")


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of pretraining and bi-GAN training.

    Attributes:
        noise_dim: Width of each noise step xi_t.
        latent_dim: Width of the latent frames h_t.
        lstm_hidden: Hidden size of the generator LSTM.
        decoder_hidden: Width of the decoder's two hidden layers.
        encoder_hidden: Hidden size of each classifier/discriminator LSTM.
        dense_width: Width of the encoder's relu layer.
        residual: Accumulate residuals into latents (False: direct latents).
        precision: "float32" or "float64".
        iterations: Outer training iterations.
        batch_size: Minibatch size m.
        disc_steps: Discriminator steps K per generator step.
        sequence_length: Frames per generated training sequence T.
        lr_main: Adam learning rate of the bi-GAN networks.
        gamma: Weight of the real-pair and cycle cross-entropies.
        sigma1: Latent smoothness weight.
        sigma2: Pose smoothness weight.
        cycle: Include the cycle-consistency term on generated pairs.
        real_label_source: Label paired with real data in the discriminator
            update, "classifier" (C(x)) or "data" (dataset label).
        seed: Seed of every random draw of the run.
        checkpoint_interval: Iterations between checkpoints (0: final only).
        log_interval: Iterations between INFO log lines.
        pretrain_iterations: Decoder pretraining iterations.
        pretrain_batch_size: Real frames per pretraining step.
        lr_pretrain: Adam learning rate of decoder pretraining.
        gp_weight: Gradient penalty weight lambda.
        penalty_mode: Penalty at "real" frames or at random "interpolate"s.
        pretrain_critic_steps: Critic updates per decoder update.
        critic_hidden: Width of the pretraining critic's hidden layers.
        ablations: Presets applied to this configuration, in order.
    """

    noise_dim: int = 16
    latent_dim: int = 6
    lstm_hidden: int = 256
    decoder_hidden: int = 512
    encoder_hidden: int = 256
    dense_width: int = 1024
    residual: bool = True
    precision: str = "float32"

    iterations: int = 2000
    batch_size: int = 32
    disc_steps: int = 1
    sequence_length: int = 16
    lr_main: float = 1e-4
    gamma: float = 0.1
    sigma1: float = 0.05
    sigma2: float = 5e-5
    cycle: bool = True
    real_label_source: str = "classifier"
    seed: int = 0
    checkpoint_interval: int = 0
    log_interval: int = 100

    pretrain_iterations: int = 2000
    pretrain_batch_size: int = 64
    lr_pretrain: float = 1e-3
    gp_weight: float = 10.0
    penalty_mode: str = "real"
    pretrain_critic_steps: int = 1
    critic_hidden: int = 128

    ablations: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ablations", tuple(self.ablations))
        for name in ("noise_dim", "latent_dim", "lstm_hidden", "decoder_hidden", "encoder_hidden", "dense_width",
                     "batch_size", "disc_steps", "pretrain_batch_size", "pretrain_critic_steps", "critic_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("iterations", "pretrain_iterations", "checkpoint_interval", "log_interval"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("gamma", "sigma1", "sigma2", "gp_weight"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("lr_main", "lr_pretrain"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.sequence_length < 2:
            raise ConfigError(f"sequence_length must be >= 2, got {self.sequence_length}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}, got {self.precision!r}")
        if self.penalty_mode not in PENALTY_MODES:
            raise ConfigError(f"penalty_mode must be one of {PENALTY_MODES}, got {self.penalty_mode!r}")
        if self.real_label_source not in REAL_LABEL_SOURCES:
            raise ConfigError(f"real_label_source must be one of {REAL_LABEL_SOURCES}, got {self.real_label_source!r}")
        unknown = [a for a in self.ablations if a not in ABLATIONS]
        if unknown:
            raise ConfigError(f"Unknown ablation(s) {unknown}; choose from {ABLATIONS}")

    @property
    def dtype(self) -> type:
        return PRECISIONS[self.precision]

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["ablations"] = list(self.ablations)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrainingConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown training config key(s): {unknown}")
        return cls(**data)


def apply_ablation(config: TrainingConfig, *names: str) -> TrainingConfig:
    """
    Apply ablation presets in order.

    ``no-smoothness`` zeroes both smoothness weights, ``latent-only`` keeps
    only the latent one, ``action-only`` keeps only the pose one,
    ``no-cycle`` drops the generated-pair cross-entropy and
    ``direct-latent`` disables residual accumulation.

    Raises:
        ConfigError: If a preset name is unknown.
    """
    for name in names:
        if name == "full":
            pass
        elif name == "no-smoothness":
            config = replace(config, sigma1=0.0, sigma2=0.0)
        elif name == "latent-only":
            config = replace(config, sigma2=0.0)
        elif name == "action-only":
            config = replace(config, sigma1=0.0)
        elif name == "no-cycle":
            config = replace(config, cycle=False)
        elif name == "direct-latent":
            config = replace(config, residual=False)
        else:
            raise ConfigError(f"Unknown ablation {name!r}; choose from {ABLATIONS}")
        config = replace(config, ablations=config.ablations + (name,))
    return config


@dataclass(frozen=True)
class RunConfig:
    """Training hyperparameters plus the file locations of a run.

    Attributes:
        training: Hyperparameters.
        dataset: Training dataset file.
        test_dataset: Held-out dataset file for evaluation.
        checkpoint: Checkpoint file written by pretrain/train.
        output_dir: Directory for generated files and reports.
        log: Training log CSV (defaults next to the checkpoint).
    """

    training: TrainingConfig = field(default_factory=TrainingConfig)
    dataset: str | None = None
    test_dataset: str | None = None
    checkpoint: str | None = None
    output_dir: str = "runs"
    log: str | None = None

    def get_output_path(self) -> Path:
        return Path(self.output_dir).expanduser()


# Section keys in the config file -> TrainingConfig fields.
SECTION_FIELDS: dict[str, dict[str, str]] = {
    "model": {
        "noise_dim": "noise_dim",
        "latent_dim": "latent_dim",
        "lstm_hidden": "lstm_hidden",
        "decoder_hidden": "decoder_hidden",
        "encoder_hidden": "encoder_hidden",
        "dense_width": "dense_width",
        "residual": "residual",
        "precision": "precision",
    },
    "training": {
        "iterations": "iterations",
        "batch_size": "batch_size",
        "disc_steps": "disc_steps",
        "sequence_length": "sequence_length",
        "lr": "lr_main",
        "gamma": "gamma",
        "sigma1": "sigma1",
        "sigma2": "sigma2",
        "cycle": "cycle",
        "real_label_source": "real_label_source",
        "seed": "seed",
        "checkpoint_interval": "checkpoint_interval",
        "log_interval": "log_interval",
    },
    "pretrain": {
        "iterations": "pretrain_iterations",
        "batch_size": "pretrain_batch_size",
        "lr": "lr_pretrain",
        "gp_weight": "gp_weight",
        "penalty_mode": "penalty_mode",
        "critic_steps": "pretrain_critic_steps",
        "critic_hidden": "critic_hidden",
    },
}
PATH_KEYS = ("dataset", "test_dataset", "checkpoint", "output_dir", "log")


def _section(data: dict[str, Any], name: str) -> dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Config section '{name}' must be a mapping")
    return section


def load_config(path: str | Path) -> RunConfig:
    """
    Load configuration from a YAML or JSON file.

    Args:
        path: Path to the configuration file.

    Returns:
        RunConfig with loaded values; missing keys keep their defaults.

    Raises:
        FileNotFoundError: If config file doesn't exist.
        ConfigError: If a section or key is unknown or a value is invalid.
    """
    config_path = Path(path)

    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    with open(config_path) as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"Top level of {path} must be a mapping")

    unknown_sections = sorted(set(data) - set(SECTION_FIELDS) - {"ablation", "paths"})
    if unknown_sections:
        raise ConfigError(f"Unknown config section(s): {unknown_sections}")

    values: dict[str, Any] = {}
    for section_name, mapping in SECTION_FIELDS.items():
        section = _section(data, section_name)
        unknown = sorted(set(section) - set(mapping))
        if unknown:
            raise ConfigError(f"Unknown key(s) in '{section_name}': {unknown}")
        for key, value in section.items():
            values[mapping[key]] = value

    try:
        training = TrainingConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from None

    ablation = data.get("ablation") or []
    if isinstance(ablation, str):
        ablation = [ablation]
    if not isinstance(ablation, list):
        raise ConfigError("'ablation' must be a preset name or a list of names")
    training = apply_ablation(training, *ablation)

    paths = _section(data, "paths")
    unknown = sorted(set(paths) - set(PATH_KEYS))
    if unknown:
        raise ConfigError(f"Unknown key(s) in 'paths': {unknown}")

    return RunConfig(
        training=training,
        dataset=paths.get("dataset", RunConfig.dataset),
        test_dataset=paths.get("test_dataset", RunConfig.test_dataset),
        checkpoint=paths.get("checkpoint", RunConfig.checkpoint),
        output_dir=paths.get("output_dir", RunConfig.output_dir),
        log=paths.get("log", RunConfig.log),
    )
