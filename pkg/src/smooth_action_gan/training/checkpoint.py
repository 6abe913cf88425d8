"""Checkpoint files: a numpy ``.npz`` archive of named arrays plus JSON metadata."""

import json
import logging
import os
import zipfile
from pathlib import Path
from typing import Any

import numpy as np

from ..config import TrainingConfig
from ..data.types import NormalizationStats
from ..errors import CheckpointError
from ..models import ClassifierParams, DiscriminatorParams, GeneratorParams
from ..numerics import AdamState, Tensor
from .state import ModelState

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
METADATA_KEY = "__metadata__"
NETWORKS = ("generator", "classifier", "discriminator")


def _adam_meta(state: AdamState) -> dict[str, Any]:
    return {"lr": state.lr, "beta1": state.beta1, "beta2": state.beta2, "eps": state.eps, "step": state.step}


def save_checkpoint(state: ModelState, path: str | Path) -> Path:
    """
    Write ``state`` so that :func:`load_checkpoint` restores it exactly.

    The file is written to a temporary sibling and renamed into place, so an
    interrupted write never replaces a good checkpoint.

    Returns:
        The checkpoint path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    metadata = {
        "version": CHECKPOINT_VERSION,
        "config": state.config.to_dict(),
        "iteration": state.iteration,
        "rng_state": state.rng_state,
        "num_classes": state.num_classes,
        "residual": state.generator.residual,
        "class_names": list(state.class_names),
        "optimizers": {
            "generator": _adam_meta(state.generator_opt),
            "classifier": _adam_meta(state.classifier_opt),
            "discriminator": _adam_meta(state.discriminator_opt),
        },
        "normalization": None
        if state.stats is None
        else {"mean": state.stats.mean.tolist(), "scale": state.stats.scale.tolist()},
    }
    arrays = state.flat_arrays()
    arrays[METADATA_KEY] = np.array(json.dumps(metadata))

    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as f:
            np.savez(f, **arrays)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    logger.info(f"Saved checkpoint at iteration {state.iteration} to {path}")
    return path


def _split(arrays: dict[str, np.ndarray], prefix: str) -> dict[str, Tensor]:
    start = len(prefix)
    return {k[start:]: Tensor(v, dtype=v.dtype) for k, v in arrays.items() if k.startswith(prefix)}


def _moments(arrays: dict[str, np.ndarray], prefix: str) -> dict[str, np.ndarray]:
    start = len(prefix)
    return {k[start:]: v for k, v in arrays.items() if k.startswith(prefix)}


def _restore_adam(meta: dict[str, Any], arrays: dict[str, np.ndarray], net: str) -> AdamState:
    return AdamState(
        lr=meta["lr"],
        beta1=meta["beta1"],
        beta2=meta["beta2"],
        eps=meta["eps"],
        step=meta["step"],
        first_moment=_moments(arrays, f"opt/{net}/m/"),
        second_moment=_moments(arrays, f"opt/{net}/v/"),
    )


def load_checkpoint(path: str | Path) -> ModelState:
    """
    Restore a ModelState written by :func:`save_checkpoint`.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        CheckpointError: If the file is truncated, corrupt or of another version.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (zipfile.BadZipFile, ValueError, OSError, EOFError, KeyError) as e:
        raise CheckpointError(f"Corrupt or truncated checkpoint {path}: {e}") from None

    if METADATA_KEY not in arrays:
        raise CheckpointError(f"Checkpoint {path} has no metadata")
    try:
        metadata = json.loads(str(arrays.pop(METADATA_KEY)))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint {path} has unreadable metadata: {e}") from None
    if metadata.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Checkpoint {path} has version {metadata.get('version')!r}, expected {CHECKPOINT_VERSION}"
        )

    try:
        stats = metadata["normalization"]
        optimizers = metadata["optimizers"]
        state = ModelState(
            generator=GeneratorParams(
                tensors=_split(arrays, "generator/"),
                num_classes=metadata["num_classes"],
                residual=metadata["residual"],
            ),
            classifier=ClassifierParams(tensors=_split(arrays, "classifier/")),
            discriminator=DiscriminatorParams(
                tensors=_split(arrays, "discriminator/"), num_classes=metadata["num_classes"]
            ),
            generator_opt=_restore_adam(optimizers["generator"], arrays, "generator"),
            classifier_opt=_restore_adam(optimizers["classifier"], arrays, "classifier"),
            discriminator_opt=_restore_adam(optimizers["discriminator"], arrays, "discriminator"),
            config=TrainingConfig.from_dict(metadata["config"]),
            iteration=metadata["iteration"],
            rng_state=metadata["rng_state"],
            stats=None if stats is None else NormalizationStats(mean=stats["mean"], scale=stats["scale"]),
            class_names=tuple(metadata["class_names"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Checkpoint {path} is incomplete: {e}") from None

    logger.info(f"Loaded checkpoint at iteration {state.iteration} from {path}")
    return state


class CheckpointManager:
    """Writes a run's checkpoint every ``interval`` iterations.

    The newest state always goes to ``path``; with ``keep_history`` each
    save is also copied to ``<stem>_iter<N>.npz`` beside it.
    """

    def __init__(self, path: str | Path, interval: int = 0, keep_history: bool = False):
        """
        Initialize the manager.

        Args:
            path: Checkpoint file of the run.
            interval: Iterations between periodic saves (0 disables them).
            keep_history: Also keep one file per periodic save.
        """
        self.path = Path(path)
        self._interval = interval
        self._keep_history = keep_history
        self._saved: list[Path] = []

    def due(self, iteration: int) -> bool:
        return self._interval > 0 and iteration > 0 and iteration % self._interval == 0

    def maybe_save(self, state: ModelState) -> bool:
        """Save if ``state.iteration`` falls on the interval."""
        if not self.due(state.iteration):
            return False
        self.save(state)
        if self._keep_history:
            history = self.path.with_name(f"{self.path.stem}_iter{state.iteration}{self.path.suffix}")
            save_checkpoint(state, history)
            self._saved.append(history)
        return True

    def save(self, state: ModelState) -> Path:
        return save_checkpoint(state, self.path)

    def load(self) -> ModelState:
        return load_checkpoint(self.path)

    def exists(self) -> bool:
        return self.path.exists()

    def history(self) -> list[Path]:
        """Per-iteration files written so far."""
        return list(self._saved)
