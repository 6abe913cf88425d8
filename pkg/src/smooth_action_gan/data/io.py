"""JSON Lines dataset files and trajectory CSV export.

File layout: line 1 is a header object
``{"version": 1, "classes": C, "dim": d, "names": [...]}`` with an optional
``"normalization": {"mean": [...], "scale": [...]}``; every further line is
``{"label": <int or list of C floats>, "frames": [[f64 x d] x T]}``.
Floats are written with ``repr`` precision, so files round-trip exactly.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import DatasetFormatError
from .types import ActionSequence, Dataset, LabelDistribution, NormalizationStats, Record

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _parse_header(line: str) -> dict[str, Any]:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"header is not valid JSON ({e.msg})", line=1) from None
    if not isinstance(header, dict):
        raise DatasetFormatError("header must be a JSON object", line=1)
    if header.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported version {header.get('version')!r}", line=1)
    for key in ("classes", "dim"):
        value = header.get(key)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise DatasetFormatError(f"header '{key}' must be a positive integer", line=1)
    names = header.get("names", [])
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise DatasetFormatError("header 'names' must be a list of strings", line=1)
    if names and len(names) != header["classes"]:
        raise DatasetFormatError(f"{len(names)} names for {header['classes']} classes", line=1)
    return header


def _parse_stats(header: dict[str, Any], dim: int) -> NormalizationStats | None:
    raw = header.get("normalization")
    if raw is None:
        return None
    try:
        stats = NormalizationStats(mean=raw["mean"], scale=raw["scale"])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"invalid normalization block: {e}", line=1) from None
    if stats.dim != dim:
        raise DatasetFormatError(f"normalization has dimension {stats.dim}, expected {dim}", line=1)
    return stats


def _parse_label(raw: Any, num_classes: int, line: int) -> LabelDistribution:
    if isinstance(raw, bool):
        raise DatasetFormatError("label must be an integer or a list of weights", line=line)
    if isinstance(raw, int):
        if not 0 <= raw < num_classes:
            raise DatasetFormatError(f"label {raw} out of range [0, {num_classes})", line=line)
        return LabelDistribution.one_hot(raw, num_classes)
    if isinstance(raw, list):
        if len(raw) != num_classes:
            raise DatasetFormatError(f"label has {len(raw)} weights, expected {num_classes}", line=line)
        try:
            return LabelDistribution(tuple(raw))
        except (TypeError, ValueError) as e:
            raise DatasetFormatError(f"invalid label weights: {e}", line=line) from None
    raise DatasetFormatError("label must be an integer or a list of weights", line=line)


def _parse_frames(raw: Any, dim: int, line: int) -> ActionSequence:
    if not isinstance(raw, list) or not all(isinstance(f, list) for f in raw):
        raise DatasetFormatError("frames must be a list of lists", line=line)
    lengths = {len(f) for f in raw}
    if len(lengths) > 1:
        raise DatasetFormatError(f"frames have unequal lengths {sorted(lengths)}", line=line)
    if lengths and lengths != {dim}:
        raise DatasetFormatError(f"frames have dimension {lengths.pop()}, expected {dim}", line=line)
    try:
        return ActionSequence(np.array(raw, dtype=np.float64))
    except (TypeError, ValueError) as e:
        raise DatasetFormatError(f"invalid frames: {e}", line=line) from None


def load_dataset(path: str | Path) -> Dataset:
    """
    Load and validate a dataset file.

    Args:
        path: Path to a JSON Lines dataset.

    Returns:
        The validated Dataset (possibly with 0 records).

    Raises:
        FileNotFoundError: If the file doesn't exist.
        DatasetFormatError: On any parse or validation failure, naming the line.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")

    with open(path, "rb") as f:
        raw_lines = f.read().splitlines()
    lines = []
    for number, raw in enumerate(raw_lines, start=1):
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise DatasetFormatError(f"not valid UTF-8 ({e.reason})", line=number) from None

    if not lines or not lines[0].strip():
        raise DatasetFormatError("missing header", line=1)
    header = _parse_header(lines[0])
    num_classes, dim = header["classes"], header["dim"]
    stats = _parse_stats(header, dim)

    records = []
    for number, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"invalid JSON ({e.msg})", line=number) from None
        if not isinstance(obj, dict) or "label" not in obj or "frames" not in obj:
            raise DatasetFormatError("record must be an object with 'label' and 'frames'", line=number)
        label = _parse_label(obj["label"], num_classes, number)
        sequence = _parse_frames(obj["frames"], dim, number)
        records.append(Record(sequence, label))

    logger.info(f"Loaded {len(records)} records from {path} (C={num_classes}, d={dim})")
    return Dataset(
        records=tuple(records),
        num_classes=num_classes,
        dim=dim,
        names=tuple(header.get("names", [])),
        stats=stats,
    )


def _label_to_json(label: LabelDistribution) -> int | list[float]:
    if label.is_one_hot:
        return label.argmax()
    return list(label.weights)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """
    Write a dataset so that ``load_dataset`` returns an equal Dataset.

    One-hot labels are written as class indices, soft labels as weight lists.

    Args:
        dataset: Dataset to write.
        path: Destination file (parent directories are created).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "classes": dataset.num_classes,
        "dim": dataset.dim,
        "names": list(dataset.names),
    }
    if dataset.stats is not None:
        header["normalization"] = {
            "mean": dataset.stats.mean.tolist(),
            "scale": dataset.stats.scale.tolist(),
        }

    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, allow_nan=False) + "\n")
        for sequence, label in dataset.records:
            line = {"label": _label_to_json(label), "frames": sequence.frames.tolist()}
            f.write(json.dumps(line, allow_nan=False) + "\n")

    logger.info(f"Wrote {len(dataset)} records to {path}")


def write_trajectory_csv(frames: np.ndarray, path: str | Path) -> None:
    """Write one sequence as CSV with columns t, c0..c{d-1} (one row per frame)."""
    frames = np.asarray(frames, dtype=np.float64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["t"] + [f"c{i}" for i in range(frames.shape[1])])
        for t, pose in enumerate(frames):
            writer.writerow([t] + [repr(float(v)) for v in pose])
