"""
metrics.py

Evaluation metrics shared by all fusion methods. Every metric compares an
estimated distribution against the one-hot vector of the true type.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import rel_entr

EPSILON_KL = 1e-6
EPSILON_MSE = 1e-12

METRIC_NAMES = ("rmse", "nmse_db", "kl")

Vector = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class MetricSample:
    """
    Metric values of one method at one step.

    Attributes:
        time (int): Step.
        method (str): Fusion method name.
        rmse (float): Root mean squared error.
        nmse_db (float): Normalized MSE in decibels.
        kl (float): KL divergence of the estimate from the truth.
    """

    time: int
    method: str
    rmse: float
    nmse_db: float
    kl: float

    def value(self, metric: str) -> float:
        if metric not in METRIC_NAMES:
            raise KeyError(f"Unknown metric '{metric}'. Available: {list(METRIC_NAMES)}")
        return getattr(self, metric)


def _pair(est: Vector, truth: Vector):
    x = np.asarray(est, dtype=np.float64).reshape(-1)
    y = np.asarray(truth, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"Length mismatch: {x.size} vs {y.size}")
    return x, y


def rmse(est: Vector, truth: Vector) -> float:
    """||est - truth|| / sqrt(m)."""
    x, y = _pair(est, truth)
    return float(np.linalg.norm(x - y) / np.sqrt(x.size))


def nmse_db(est: Vector, truth: Vector, epsilon: float = EPSILON_MSE) -> float:
    """10 log10(MSE / var(truth)), with the MSE floored at epsilon."""
    x, y = _pair(est, truth)
    if np.count_nonzero(y) != 1 or not np.isclose(y.max(), 1.0):
        raise ValueError(f"truth must be one-hot, got {y.tolist()}")
    mse = max(float(np.mean((x - y) ** 2)), epsilon)
    variance = float(np.mean(y ** 2) - np.mean(y) ** 2)
    return float(10.0 * np.log10(mse / variance))


def _smooth(v: np.ndarray, epsilon: float) -> np.ndarray:
    v = v + epsilon
    return v / v.sum()


def kl_divergence(est: Vector, truth: Vector, epsilon: float = EPSILON_KL) -> float:
    """D(est || truth) after adding epsilon to both sides and renormalizing."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x, y = _pair(est, truth)
    divergence = float(rel_entr(_smooth(x, epsilon), _smooth(y, epsilon)).sum())
    return max(divergence, 0.0)


def evaluate(est: Vector, truth: Vector, method: str, time: int) -> MetricSample:
    return MetricSample(
        time=time,
        method=method,
        rmse=rmse(est, truth),
        nmse_db=nmse_db(est, truth),
        kl=kl_divergence(est, truth),
    )
