"""Quartic entropy ``psi(x) = ||x||^4/4 + ||x||^2/2`` and its Bregman geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EntropyEval",
    "psi",
    "grad_psi",
    "entropy",
    "mirror_scale",
    "grad_psi_star",
    "bregman_psi",
    "theta_bound",
]

_TINY = 1e-300


@dataclass(frozen=True)
class EntropyEval:
    value: float
    gradient: np.ndarray


def psi(x: np.ndarray) -> float:
    s = float(np.dot(x, x))
    return 0.25 * s * s + 0.5 * s


def grad_psi(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (float(np.dot(x, x)) + 1.0) * x


def entropy(x: np.ndarray) -> EntropyEval:
    x = np.asarray(x, dtype=float)
    s = float(np.dot(x, x))
    return EntropyEval(value=0.25 * s * s + 0.5 * s, gradient=(s + 1.0) * x)


def mirror_scale(s: float) -> float:
    """Positive root ``t`` of ``s t^3 + t - 1 = 0`` for ``s >= 0``.

    Uses the hyperbolic form of Cardano's formula, which has no cancellation
    for either small or large ``s``, followed by one Newton step.
    """
    if s < _TINY:
        return 1.0
    w = 1.5 * math.sqrt(3.0 * s)
    t = 2.0 / math.sqrt(3.0 * s) * math.sinh(math.asinh(w) / 3.0)
    # p(t) is increasing and convex on t > 0, so the polish cannot overshoot badly.
    t -= (s * t * t * t + t - 1.0) / (3.0 * s * t * t + 1.0)
    return t


def grad_psi_star(z: np.ndarray) -> np.ndarray:
    """Inverse mirror map: the unique ``x`` with ``grad_psi(x) = z``."""
    z = np.asarray(z, dtype=float)
    return mirror_scale(float(np.dot(z, z))) * z


def bregman_psi(x: np.ndarray, z: np.ndarray) -> float:
    """``D_psi(x, z) = psi(x) - psi(z) - <grad psi(z), x - z>``.

    Evaluated as ``(||z||^2 + 1) ||x - z||^2 / 2 + (||x||^2 - ||z||^2)^2 / 4``,
    which is algebraically equal and free of cancellation when ``x`` is close to ``z``.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {z.shape}")
    d = x - z
    gap = float(np.dot(d, x + z))  # ||x||^2 - ||z||^2
    return 0.5 * (float(np.dot(z, z)) + 1.0) * float(np.dot(d, d)) + 0.25 * gap * gap


def theta_bound(radius: float, anchor_norm: float) -> float:
    """Upper curvature constant of ``psi`` on a ball of ``radius`` around a point of norm ``anchor_norm``.

    On that ball ``D_psi(x, z) <= theta/2 * ||x - z||^2``.
    """
    return 6.0 * (anchor_norm**2 + radius**2) + 1.0
