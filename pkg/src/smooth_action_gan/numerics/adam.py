"""Adam optimizer with bias-corrected moments."""

from collections.abc import Mapping
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NonFiniteError, ShapeError
from .tensor import Tensor


@dataclass(frozen=True)
class AdamState:
    """Per-parameter moments and the shared step counter.

    Attributes:
        lr: Learning rate.
        beta1: Decay rate of the first moment.
        beta2: Decay rate of the second moment.
        eps: Denominator guard.
        step: Number of updates applied so far.
        first_moment: Mapping from parameter name to first-moment array.
        second_moment: Mapping from parameter name to second-moment array.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor], lr: float, **kwargs) -> "AdamState":
        """Zero moments shaped like ``params``."""
        return cls(
            lr=lr,
            first_moment={k: np.zeros(p.shape, dtype=p.dtype) for k, p in params.items()},
            second_moment={k: np.zeros(p.shape, dtype=p.dtype) for k, p in params.items()},
            **kwargs,
        )


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, Tensor], AdamState]:
    """Apply one Adam update.

    Args:
        params: Current parameters by name.
        grads: Gradients by name; every parameter needs one.
        state: Optimizer state; moments are created lazily for new names.

    Returns:
        Tuple of (new parameters, new state). Inputs are not modified.

    Raises:
        ShapeError: If a gradient or moment does not match its parameter.
        NonFiniteError: If any gradient is non-finite.
    """
    if state.step < 0:
        raise ValueError(f"Adam step counter must be >= 0, got {state.step}")
    step = state.step + 1
    bc1 = 1.0 - state.beta1**step
    bc2 = 1.0 - state.beta2**step

    new_params: dict[str, Tensor] = {}
    first: dict[str, np.ndarray] = {}
    second: dict[str, np.ndarray] = {}
    for name, param in params.items():
        if name not in grads:
            raise ShapeError(f"Missing gradient for parameter '{name}'")
        g = np.asarray(grads[name], dtype=param.dtype)
        if g.shape != param.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {g.shape}, expected {param.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"Non-finite gradient for parameter '{name}'")

        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None or v is None:
            m = np.zeros_like(param.value)
            v = np.zeros_like(param.value)
        if m.shape != param.shape or v.shape != param.shape:
            raise ShapeError(f"Adam moments for '{name}' do not match parameter shape {param.shape}")

        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        update = (state.lr / bc1) * m / (np.sqrt(v / bc2) + state.eps)

        first[name] = m
        second[name] = v
        new_params[name] = Tensor(param.value - update, dtype=param.dtype)

    return new_params, replace(state, step=step, first_moment=first, second_moment=second)
