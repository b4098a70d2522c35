"""Input validation helpers shared by the estimator facade and the config layer."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import ExponentialModel, GaussianModel, SignalModel

__all__ = [
    "check_probability",
    "check_positive",
    "check_ordering",
    "as_model_sequence",
    "as_signal_matrix",
]


def check_probability(value: float, name: str, *, interior: bool = False) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    if interior and not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite real, got {value!r}")
    return value


def check_ordering(ordering: Sequence[int], n_agents: int) -> tuple[int, ...]:
    order = tuple(int(i) for i in ordering)
    if sorted(order) != list(range(n_agents)):
        raise ValueError(f"ordering {order!r} is not a permutation of 0..{n_agents - 1}")
    return order


def as_model_sequence(models) -> tuple[SignalModel, ...]:
    models = tuple(models)
    if not models:
        raise ValueError("need at least one agent model")
    for i, m in enumerate(models):
        if not isinstance(m, (GaussianModel, ExponentialModel)):
            raise TypeError(
                f"agent {i}: expected a signal model, got {type(m).__name__}"
            )
    return models


def as_signal_matrix(X, n_agents: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_agents:
        raise ValueError(
            f"expected a (n_samples, {n_agents}) signal matrix, got shape {X.shape}"
        )
    if np.isnan(X).any():
        raise ValueError("signal matrix contains NaN")
    return X
