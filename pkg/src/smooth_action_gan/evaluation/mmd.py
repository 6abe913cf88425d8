"""Unbiased maximum mean discrepancy with a Gaussian kernel.

k(x, y) = exp(-||x - y||^2 / (2 sigma^2)). Kernel sums use ``math.fsum``
so the estimate does not depend on the order of the points.
"""

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..data.transforms import resample_sequence
from ..errors import ShapeError

DEFAULT_BANDWIDTHS: tuple[float, ...] = tuple(10.0**k for k in range(-4, 10))

ClassSets = Mapping[int, np.ndarray | Sequence[np.ndarray]]


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth grid searched by :func:`mmd_max`."""

    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS

    def __post_init__(self):
        bandwidths = tuple(float(b) for b in self.bandwidths)
        if not bandwidths:
            raise ValueError("Bandwidth grid must not be empty")
        if any(not math.isfinite(b) or b <= 0 for b in bandwidths):
            raise ValueError(f"Bandwidths must be positive and finite, got {bandwidths}")
        object.__setattr__(self, "bandwidths", bandwidths)


def _as_points(name: str, points) -> np.ndarray:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2:
        raise ShapeError(f"{name} must be a set of vectors, got shape {array.shape}")
    if array.shape[0] < 2:
        raise ValueError(f"{name} needs at least 2 points, got {array.shape[0]}")
    return array


def _off_diagonal_mean(kernel: np.ndarray) -> float:
    n = kernel.shape[0]
    return math.fsum(kernel[~np.eye(n, dtype=bool)]) / (n * (n - 1))


def _mmd_from_distances(dxx: np.ndarray, dyy: np.ndarray, dxy: np.ndarray, bandwidth: float) -> float:
    scale = -0.5 / (bandwidth * bandwidth)
    kxx = _off_diagonal_mean(np.exp(scale * dxx))
    kyy = _off_diagonal_mean(np.exp(scale * dyy))
    kxy = math.fsum(np.exp(scale * dxy).ravel()) / dxy.size
    return (kxx + kyy) - 2.0 * kxy


def _distances(X, Y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = _as_points("X", X)
    Y = _as_points("Y", Y)
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"Point sets have dimensions {X.shape[1]} and {Y.shape[1]}")
    return cdist(X, X, "sqeuclidean"), cdist(Y, Y, "sqeuclidean"), cdist(X, Y, "sqeuclidean")


def mmd_u_squared(X, Y, bandwidth: float) -> float:
    """
    Unbiased squared MMD between point sets X (m, k) and Y (n, k).

    May be negative. Symmetric in (X, Y).

    Raises:
        ValueError: If either set has fewer than 2 points or the bandwidth
            is not positive.
        ShapeError: If the point dimensions differ.
    """
    if not bandwidth > 0:
        raise ValueError(f"Bandwidth must be > 0, got {bandwidth}")
    return _mmd_from_distances(*_distances(X, Y), float(bandwidth))


def _grid(grid: KernelConfig | Sequence[float] | None) -> tuple[float, ...]:
    if grid is None:
        return DEFAULT_BANDWIDTHS
    if isinstance(grid, KernelConfig):
        return grid.bandwidths
    return KernelConfig(tuple(grid)).bandwidths


def mmd_max(X, Y, grid: KernelConfig | Sequence[float] | None = None) -> float:
    """
    Largest sqrt(max(MMD_u^2, 0)) over the bandwidth grid.

    Args:
        X: First point set.
        Y: Second point set.
        grid: Bandwidths; defaults to 10^-4 .. 10^9.

    Raises:
        ValueError: If the grid is empty.
    """
    bandwidths = _grid(grid)
    dxx, dyy, dxy = _distances(X, Y)
    return max(math.sqrt(max(_mmd_from_distances(dxx, dyy, dxy, b), 0.0)) for b in bandwidths)


def _stack_class(name: str, sequences, length: int) -> np.ndarray:
    if isinstance(sequences, np.ndarray) and sequences.ndim == 3:
        items = list(sequences)
    else:
        items = [np.asarray(s, dtype=np.float64) for s in sequences]
    if not items:
        raise ValueError(f"{name} is empty")
    return np.stack([s if s.shape[0] == length else resample_sequence(s, length) for s in items])


def _paired_classes(generated: ClassSets, real: ClassSets) -> list[int]:
    if set(generated) != set(real):
        raise ValueError(f"Class mismatch: generated {sorted(generated)} vs real {sorted(real)}")
    if not real:
        raise ValueError("No classes to compare")
    return sorted(real)


def reference_length(real: ClassSets) -> int:
    """Longest real sequence; every set is resampled to it."""
    return max(len(s) for seqs in real.values() for s in seqs)


def mmd_avg(
    generated: ClassSets,
    real: ClassSets,
    grid: KernelConfig | Sequence[float] | None = None,
    length: int | None = None,
) -> float:
    """
    Frame-wise MMD averaged over frame index and class.

    For class j and frame i, :func:`mmd_max` compares the i-th frames of the
    generated and real sequences of that class.

    Args:
        generated: Class index -> sequences (an (n, T, d) array or a list of (T_i, d)).
        real: Same layout; both sides need the same classes.
        grid: Bandwidth grid.
        length: Common length to resample to (default: longest real sequence).

    Raises:
        ValueError: On class mismatch or a class with fewer than 2 sequences.
    """
    classes = _paired_classes(generated, real)
    length = reference_length(real) if length is None else length
    per_frame = []
    for j in classes:
        gen = _stack_class(f"generated class {j}", generated[j], length)
        ref = _stack_class(f"real class {j}", real[j], length)
        per_frame.extend(mmd_max(gen[:, i, :], ref[:, i, :], grid) for i in range(length))
    return math.fsum(per_frame) / len(per_frame)


def mmd_seq(
    generated: ClassSets,
    real: ClassSets,
    grid: KernelConfig | Sequence[float] | None = None,
    length: int | None = None,
) -> float:
    """Whole-sequence MMD on flattened (T * d) vectors, averaged over classes."""
    classes = _paired_classes(generated, real)
    length = reference_length(real) if length is None else length
    values = []
    for j in classes:
        gen = _stack_class(f"generated class {j}", generated[j], length)
        ref = _stack_class(f"real class {j}", real[j], length)
        values.append(mmd_max(gen.reshape(len(gen), -1), ref.reshape(len(ref), -1), grid))
    return math.fsum(values) / len(values)
