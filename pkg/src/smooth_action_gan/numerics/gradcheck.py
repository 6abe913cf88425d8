"""Finite-difference gradients for checking the tape."""

from collections.abc import Callable

import numpy as np

from ..errors import NonFiniteError


def finite_difference_gradient(
    fn: Callable[[np.ndarray], float],
    point: np.ndarray,
    step: float = 1e-5,
) -> np.ndarray:
    """Central-difference estimate of the gradient of a scalar function.

    Computes (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate i.

    Args:
        fn: Pure scalar function of an array shaped like ``point``.
        point: Where to evaluate the gradient.
        step: Difference step h.

    Returns:
        Gradient estimate with the shape of ``point`` (64-bit).

    Raises:
        ValueError: If ``step`` is not positive.
        NonFiniteError: If any evaluation is non-finite.
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    x = np.array(point, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        original = x.flat[i]
        x.flat[i] = original + step
        f_plus = float(fn(x.copy()))
        x.flat[i] = original - step
        f_minus = float(fn(x.copy()))
        x.flat[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteError(f"Non-finite function value while differencing coordinate {i}")
        grad.flat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-10) -> float:
    """||a - n|| / max(||a|| + ||n||, floor)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), floor)
    return float(np.linalg.norm(analytic - numeric)) / denom
