"""Noise-aware least-squares objective on intensities.

    f(x) = 1/(4m) * sum_r (y[r] - |(Ax)[r]|^2)^2

together with its derivatives, its Bregman divergence, and the closed-form
expectations of ``f``, ``grad f`` and ``hess f`` under i.i.d. standard
Gaussian sensing vectors (used as analytic oracles).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sensing import MeasurementSet, SensingEnsemble, intensity

__all__ = [
    "ExpectedModel",
    "f_value",
    "f_gradient",
    "f_value_and_gradient",
    "f_hessian",
    "hessian_vector",
    "bregman_f",
    "ObjectiveState",
    "objective_state",
    "bregman_f_from_state",
    "expected_f",
    "expected_grad",
    "expected_hessian",
    "crude_smoothness_bound",
    "DENSE_HESSIAN_MAX_N",
]

DENSE_HESSIAN_MAX_N = 512


def _check(M: MeasurementSet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (M.n,):
        raise ValueError(f"expected a vector of length {M.n}, got shape {x.shape}")
    return x


def f_value(M: MeasurementSet, x: np.ndarray) -> float:
    x = _check(M, x)
    r = intensity(M.ensemble.forward(x)) - M.y
    return float(np.dot(r, r)) / (4.0 * M.m)


def f_value_and_gradient(M: MeasurementSet, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Both ``f(x)`` and ``grad f(x)`` from a single forward transform."""
    x = _check(M, x)
    z = M.ensemble.forward(x)
    r = intensity(z) - M.y
    value = float(np.dot(r, r)) / (4.0 * M.m)
    return value, M.ensemble.adjoint(r * z) / M.m


def f_gradient(M: MeasurementSet, x: np.ndarray) -> np.ndarray:
    """``(1/m) Re A^*[(|Ax|^2 - y) * Ax]``."""
    return f_value_and_gradient(M, x)[1]


def hessian_vector(M: MeasurementSet, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``hess f(x) @ v`` without forming the Hessian."""
    x = _check(M, x)
    v = _check(M, v)
    E = M.ensemble
    z = E.forward(x)
    w = E.forward(v)
    r = intensity(z) - M.y
    if np.iscomplexobj(z):
        dr = 2.0 * (z.real * w.real + z.imag * w.imag)
    else:
        dr = 2.0 * z * w
    return E.adjoint(r * w + dr * z) / M.m


def f_hessian(M: MeasurementSet, x: np.ndarray) -> np.ndarray:
    """Dense ``hess f(x) = (1/m) sum_r (3|<a_r,x>|^2 - y[r]) a_r a_r^T`` (Gaussian rows).

    CDP ensembles are assembled column by column from :func:`hessian_vector`.
    Limited to ``n <= 512``.
    """
    x = _check(M, x)
    if M.n > DENSE_HESSIAN_MAX_N:
        raise ValueError(f"dense Hessian limited to n <= {DENSE_HESSIAN_MAX_N}; use hessian_vector")
    E = M.ensemble
    if E.kind == "gaussian":
        A = E.matrix
        z = A @ x
        w = 3.0 * z * z - M.y
        H = (A.T * w) @ A / M.m
    else:
        H = np.column_stack([hessian_vector(M, x, e) for e in np.eye(M.n)])
    return 0.5 * (H + H.T)


@dataclass(frozen=True, eq=False)
class ObjectiveState:
    """``f``, ``grad f`` and the intermediates ``z = Ax``, ``r = |z|^2 - y`` at one point."""

    x: np.ndarray
    value: float
    gradient: np.ndarray
    z: np.ndarray
    r: np.ndarray


def objective_state(M: MeasurementSet, x: np.ndarray) -> ObjectiveState:
    x = _check(M, x)
    z = M.ensemble.forward(x)
    r = intensity(z) - M.y
    return ObjectiveState(
        x=x,
        value=float(np.dot(r, r)) / (4.0 * M.m),
        gradient=M.ensemble.adjoint(r * z) / M.m,
        z=z,
        r=r,
    )


def bregman_f_from_state(M: MeasurementSet, state: ObjectiveState, delta: np.ndarray) -> float:
    """``D_f(x + delta, x)`` given the state at ``x``.

    With ``w = A delta`` and ``q = 2 Re(conj(z) w) + |w|^2`` (the change in
    ``|Ax|^2``), ``D_f = (1/4m) sum(2 r |w|^2 + q^2)`` exactly, so tiny steps
    near a minimizer do not drown in cancellation.
    """
    w = M.ensemble.forward(delta)
    w2 = intensity(w)
    if np.iscomplexobj(w):
        q = 2.0 * (state.z.real * w.real + state.z.imag * w.imag) + w2
    else:
        q = 2.0 * state.z * w + w2
    return (2.0 * float(np.dot(state.r, w2)) + float(np.dot(q, q))) / (4.0 * M.m)


def bregman_f(M: MeasurementSet, x: np.ndarray, z: np.ndarray) -> float:
    """``D_f(x, z) = f(x) - f(z) - <grad f(z), x - z>``; may be negative."""
    x = _check(M, x)
    return bregman_f_from_state(M, objective_state(M, z), x - np.asarray(z, dtype=float))


@dataclass(frozen=True)
class ExpectedModel:
    """Parameters of ``E[f]`` over Gaussian sensing vectors, noise held fixed."""

    truth: np.ndarray
    noise_mean: float = 0.0
    noise_sq_norm_over_m: float = 0.0

    def __post_init__(self):
        if self.noise_mean < 0:
            raise ValueError("noise_mean must be nonnegative")

    @classmethod
    def from_measurements(cls, M: MeasurementSet) -> "ExpectedModel":
        if M.truth is None:
            raise ValueError("measurement set carries no ground truth")
        eps = np.zeros(M.m) if M.noise is None else M.noise
        return cls(
            truth=M.truth,
            noise_mean=float(eps.mean()),
            noise_sq_norm_over_m=float(np.dot(eps, eps)) / M.m,
        )


def expected_f(model: ExpectedModel, x: np.ndarray, noise_sq_norm_over_m: Optional[float] = None) -> float:
    """``E[f(x)]``; the constant ``||eps||^2/(4m)`` may be overridden from a measurement set."""
    xb = np.asarray(model.truth, dtype=float)
    x = np.asarray(x, dtype=float)
    nx = float(np.dot(x, x))
    nb = float(np.dot(xb, xb))
    c = float(np.dot(xb, x))
    e2 = model.noise_sq_norm_over_m if noise_sq_norm_over_m is None else noise_sq_norm_over_m
    return (
        0.75 * (nx * nx + nb * nb)
        - 0.5 * nb * nx
        - c * c
        + 0.25 * e2
        - 0.5 * model.noise_mean * (nx - nb)
    )


def expected_grad(model: ExpectedModel, x: np.ndarray) -> np.ndarray:
    xb = np.asarray(model.truth, dtype=float)
    x = np.asarray(x, dtype=float)
    nx = float(np.dot(x, x))
    nb = float(np.dot(xb, xb))
    return (3.0 * nx - nb - model.noise_mean) * x - 2.0 * float(np.dot(xb, x)) * xb


def expected_hessian(model: ExpectedModel, x: np.ndarray) -> np.ndarray:
    xb = np.asarray(model.truth, dtype=float)
    x = np.asarray(x, dtype=float)
    nx = float(np.dot(x, x))
    nb = float(np.dot(xb, xb))
    H = 6.0 * np.outer(x, x) - 2.0 * np.outer(xb, xb)
    H[np.diag_indices_from(H)] += 3.0 * nx - nb - model.noise_mean
    return H


def crude_smoothness_bound(E: SensingEnsemble, eps_inf: float) -> float:
    """Global relative-smoothness constant ``(1/m) sum_r ||a_r||^2 (3||a_r||^2 + eps_inf)``."""
    r2 = E.row_sq_norms()
    return float(np.sum(r2 * (3.0 * r2 + eps_inf))) / E.m
