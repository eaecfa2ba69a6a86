"""Sign-invariant error measures and success predicates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ErrorReport", "dist_to_signs", "relative_error", "success_threshold", "evaluate"]

NOISELESS_THRESHOLD = 1e-5


@dataclass(frozen=True)
class ErrorReport:
    dist: float
    rel_error: float
    success: bool
    threshold: float


def dist_to_signs(x: np.ndarray, truth: np.ndarray) -> float:
    """``min(||x - truth||, ||x + truth||)``."""
    x = np.asarray(x, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if x.shape != truth.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {truth.shape}")
    return min(float(np.linalg.norm(x - truth)), float(np.linalg.norm(x + truth)))


def relative_error(x: np.ndarray, truth: np.ndarray) -> float:
    return dist_to_signs(x, truth) / float(np.linalg.norm(truth))


def success_threshold(eps: np.ndarray, m: int, sigma: float) -> float:
    """``2||eps|| / sqrt(m sigma)``, floored at 1e-5 for noiseless data."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    norm = float(np.linalg.norm(eps))
    if norm == 0.0:
        return NOISELESS_THRESHOLD
    return 2.0 * norm / math.sqrt(m * sigma)


def evaluate(x: np.ndarray, truth: np.ndarray, threshold: float) -> ErrorReport:
    d = dist_to_signs(x, truth)
    rel = d / float(np.linalg.norm(truth))
    return ErrorReport(dist=d, rel_error=rel, success=rel < threshold, threshold=threshold)
