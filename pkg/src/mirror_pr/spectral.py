"""Spectral initialization by power iteration on ``Y = (1/m) sum_r y[r] a_r a_r^T``."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sensing import MeasurementSet

__all__ = ["SpectralResult", "power_iteration", "spectral_init", "DEFAULT_POWER_ITERS"]

logger = logging.getLogger(__name__)

DEFAULT_POWER_ITERS = 200


@dataclass(frozen=True)
class SpectralResult:
    x0: np.ndarray
    eigenvalue: float
    scale: float
    power_iters_used: int
    clamped: int = 0  # number of negative intensities zeroed inside Y


def power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray], n: int, iters: int, seed: int
) -> tuple[np.ndarray, float]:
    """Top eigenpair of a symmetric PSD operator.

    Returns a unit vector ``v`` and the Rayleigh quotient ``v^T matvec(v)``.
    The start vector is Gaussian, drawn from ``seed``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = matvec(v)
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("matvec produced non-finite values")
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v lies in the null space; nothing to amplify.
            return v, 0.0
        v = w / nw
    return v, float(np.dot(v, matvec(v)))


def spectral_init(M: MeasurementSet, power_iters: int = DEFAULT_POWER_ITERS, seed: int = 0) -> SpectralResult:
    """Leading eigenvector of ``Y`` rescaled to ``||x0||^2 = n sum(y) / sum ||a_r||^2``.

    ``Y`` is applied matrix-free through the sensing operator. Negative
    intensities are treated as zero inside ``Y`` (but not in the scale).
    """
    E = M.ensemble
    row_total = float(np.sum(E.row_sq_norms()))
    if row_total == 0.0:
        raise ValueError("sum of squared row norms is zero")
    y = M.y
    clamped = int(np.count_nonzero(y < 0))
    if clamped:
        logger.warning("clamping %d negative intensities to zero in Y", clamped)
        y = np.maximum(y, 0.0)

    def matvec(v):
        return E.adjoint(y * E.forward(v)) / M.m

    v, eig = power_iteration(matvec, M.n, power_iters, seed)
    scale = math.sqrt(max(M.n * float(np.sum(M.y)) / row_total, 0.0))
    x0 = scale * v
    return SpectralResult(x0=x0, eigenvalue=eig, scale=scale, power_iters_used=power_iters, clamped=clamped)
