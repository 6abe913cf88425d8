"""Stick-figure rendering of 2D skeleton sequences as SVG strips."""

import json
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .data.io import write_trajectory_csv
from .data.transforms import denormalize
from .data.types import Dataset
from .errors import ShapeError

logger = logging.getLogger(__name__)

Bone = tuple[int, int]


def load_topology(path: str | Path) -> tuple[int | None, list[Bone]]:
    """
    Read a skeleton topology file.

    The file holds either a JSON array of [i, j] joint-index pairs or an
    object ``{"joints": J, "bones": [[i, j], ...]}``.

    Returns:
        Tuple of (declared joint count or None, bones).

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the content is not a list of index pairs.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Topology file not found: {path}")
    with open(path, encoding="utf-8") as f:
        data = json.load(f)

    joints = None
    if isinstance(data, dict):
        joints = data.get("joints")
        data = data.get("bones", [])
    if not isinstance(data, list) or not all(
        isinstance(b, list) and len(b) == 2 and all(isinstance(i, int) and not isinstance(i, bool) for i in b)
        for b in data
    ):
        raise ValueError(f"{path}: bones must be a list of [i, j] integer pairs")
    return joints, [(int(a), int(b)) for a, b in data]


class SkeletonRenderer:
    """Lays out one stick figure per frame, left to right, in fixed-size cells."""

    def __init__(self, cell_size: float = 100.0, margin: float = 8.0, joint_radius: float = 2.0):
        self.cell_size = cell_size
        self.margin = margin
        self.joint_radius = joint_radius

    def _check(self, frames: np.ndarray, bones: Sequence[Bone], joints: int | None) -> int:
        if frames.ndim != 2 or frames.shape[1] % 2:
            raise ShapeError(f"Poses must hold x/y pairs, got dimension {frames.shape[-1]}")
        count = frames.shape[1] // 2
        if joints is not None and joints != count:
            raise ShapeError(f"Pose dimension {frames.shape[1]} is not 2 x {joints} joints")
        for a, b in bones:
            if not (0 <= a < count and 0 <= b < count):
                raise ValueError(f"Bone ({a}, {b}) references a joint outside [0, {count})")
        return count

    def render(self, frames: np.ndarray, bones: Sequence[Bone], joints: int | None = None) -> str:
        """
        Render a (T, 2J) sequence as an SVG document.

        Each frame is a ``<g>`` holding one ``<line>`` per bone and one
        ``<circle>`` per joint; all frames share the sequence's coordinate
        range so motion is comparable across the strip.

        Raises:
            ShapeError: If the dimension is not 2 x joints.
            ValueError: If a bone index is out of range.
        """
        frames = np.asarray(frames, dtype=np.float64)
        count = self._check(frames, bones, joints)
        xs, ys = frames[:, 0::2], frames[:, 1::2]
        x_lo, y_lo = xs.min(), ys.min()
        span = max(xs.max() - x_lo, ys.max() - y_lo, 1e-9)
        inner = self.cell_size - 2 * self.margin
        scale = inner / span

        width = self.cell_size * len(frames)
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{self.cell_size:.1f}" '
            f'viewBox="0 0 {width:.1f} {self.cell_size:.1f}">'
        ]
        for t, pose in enumerate(frames):
            px = t * self.cell_size + self.margin + (pose[0::2] - x_lo) * scale
            py = self.cell_size - self.margin - (pose[1::2] - y_lo) * scale
            parts.append(f'<g id="frame-{t}">')
            for a, b in bones:
                parts.append(
                    f'<line x1="{px[a]:.2f}" y1="{py[a]:.2f}" x2="{px[b]:.2f}" y2="{py[b]:.2f}" '
                    f'stroke="black" stroke-width="1.5"/>'
                )
            for j in range(count):
                parts.append(f'<circle cx="{px[j]:.2f}" cy="{py[j]:.2f}" r="{self.joint_radius}" fill="black"/>')
            parts.append("</g>")
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def render_dataset(
    dataset: Dataset,
    bones: Sequence[Bone],
    output_dir: str | Path,
    joints: int | None = None,
    limit: int | None = None,
    renderer: SkeletonRenderer | None = None,
) -> list[Path]:
    """
    Write ``sequence_<i>.svg`` and ``sequence_<i>.csv`` for each record.

    Normalized datasets are mapped back to data units first.

    Returns:
        Paths of the written files.
    """
    renderer = renderer or SkeletonRenderer()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    records = dataset.records if limit is None else dataset.records[:limit]
    written = []
    for i, (sequence, _) in enumerate(records):
        frames = sequence.frames if dataset.stats is None else denormalize(sequence.frames, dataset.stats)
        svg_path = output_dir / f"sequence_{i}.svg"
        svg_path.write_text(renderer.render(frames, bones, joints), encoding="utf-8")
        csv_path = output_dir / f"sequence_{i}.csv"
        write_trajectory_csv(frames, csv_path)
        written.extend([svg_path, csv_path])
    logger.info(f"Rendered {len(records)} sequences to {output_dir}")
    return written
