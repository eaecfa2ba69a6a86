"""Mirror descent (Bregman gradient) for the intensity objective, and a Wirtinger-flow baseline."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .bregman import bregman_psi, grad_psi, grad_psi_star
from .metrics import relative_error
from .objective import ObjectiveState, bregman_f_from_state, objective_state
from .sensing import MeasurementSet

__all__ = [
    "ConstantStep",
    "Backtracking",
    "SolverConfig",
    "SolverTrace",
    "StopReason",
    "NumericalAbort",
    "MAX_BACKTRACKS",
    "mirror_step",
    "mirror_descent",
    "wirtinger_flow",
    "random_init",
    "default_step",
]

MAX_BACKTRACKS = 200
WF_TAU0 = 330.0


class NumericalAbort(RuntimeError):
    """Raised when an iteration produces non-finite values or backtracking runs away."""


class StopReason(str, enum.Enum):
    MAX_ITERS = "max_iters"
    GRAD_TOL = "grad_tol"


@dataclass(frozen=True)
class ConstantStep:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class Backtracking:
    L0: float = 1.0
    kappa: float = 0.01
    xi: float = 0.9

    def __post_init__(self):
        if not self.L0 > 0:
            raise ValueError("L0 must be positive")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        if not 0.0 < self.xi <= 1.0:
            raise ValueError("xi must lie in (0, 1]")


StepPolicy = Union[ConstantStep, Backtracking]


@dataclass(frozen=True)
class SolverConfig:
    step: StepPolicy = field(default_factory=Backtracking)
    max_iters: int = 1000
    grad_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class SolverTrace:
    """Per-iteration history. Index 0 of the per-iteration lists is the initial point.

    ``L_history[k]`` is the constant the accepted step ``k-1 -> k`` was tested
    against (``gamma = (1 - kappa) / L``); NaN for fixed-step methods.
    """

    iterates: list = field(default_factory=list)
    iterate_indices: list = field(default_factory=list)
    f_values: list = field(default_factory=list)
    rel_errors: list = field(default_factory=list)
    L_history: list = field(default_factory=list)
    backtrack_counts: list = field(default_factory=list)
    final: Optional[np.ndarray] = None
    iterations_run: int = 0
    stop_reason: StopReason = StopReason.MAX_ITERS


def default_step(noise_mean: float, curvature: float = 3.0, factor: float = 0.99) -> float:
    """Constant step ``factor / (curvature + noise_mean)`` used in the experiments."""
    return factor / (curvature + noise_mean)


def random_init(n: int, seed: int, radius: float = 1.0) -> np.ndarray:
    """Uniform draw on the sphere of the given radius."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    return radius * v / np.linalg.norm(v)


def mirror_step(x: np.ndarray, gamma: float, grad: np.ndarray) -> np.ndarray:
    """``grad_psi_star(grad_psi(x) - gamma * grad)``."""
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if x.shape != grad.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {grad.shape}")
    return grad_psi_star(grad_psi(x) - gamma * grad)


def _evaluate(M: MeasurementSet, x: np.ndarray, k: int) -> ObjectiveState:
    with np.errstate(over="ignore", invalid="ignore"):
        st = objective_state(M, x)
    if not (math.isfinite(st.value) and np.all(np.isfinite(st.gradient))):
        raise NumericalAbort(f"non-finite objective or gradient at iteration {k} (f={st.value})")
    return st


class _Recorder:
    def __init__(self, M: MeasurementSet, config: SolverConfig):
        self.truth = M.truth
        self.every = config.record_every
        self.trace = SolverTrace()

    def push(self, k: int, x: np.ndarray, f: float, L: float, backtracks: int):
        t = self.trace
        t.f_values.append(f)
        t.L_history.append(L)
        t.backtrack_counts.append(backtracks)
        if self.truth is not None:
            t.rel_errors.append(relative_error(x, self.truth))
        if k % self.every == 0:
            t.iterates.append(x.copy())
            t.iterate_indices.append(k)

    def finish(self, k: int, x: np.ndarray, reason: StopReason) -> SolverTrace:
        t = self.trace
        if not t.iterate_indices or t.iterate_indices[-1] != k:
            t.iterates.append(x.copy())
            t.iterate_indices.append(k)
        t.final = x.copy()
        t.iterations_run = k
        t.stop_reason = reason
        return t


def mirror_descent(M: MeasurementSet, x0: np.ndarray, config: SolverConfig | None = None) -> SolverTrace:
    """Mirror descent with the quartic entropy.

    With :class:`Backtracking`, each outer iteration repeats
    ``gamma = (1 - kappa) / L``, ``x+ = mirror_step(x, gamma, grad f(x))``,
    ``L <- L / xi`` until ``D_f(x+, x) <= xi * L * D_psi(x+, x)``, then sets
    ``L <- xi * L`` for the next iteration.
    """
    config = config or SolverConfig()
    x = np.array(x0, dtype=float)
    if x.shape != (M.n,):
        raise ValueError(f"x0 must have length {M.n}, got shape {x.shape}")
    rec = _Recorder(M, config)
    st = _evaluate(M, x, 0)
    rec.push(0, x, st.value, math.nan, 0)

    policy = config.step
    L = policy.L0 if isinstance(policy, Backtracking) else math.nan
    reason = StopReason.MAX_ITERS
    k = 0
    while k < config.max_iters:
        g = st.gradient
        if float(np.linalg.norm(g)) <= config.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        if isinstance(policy, ConstantStep):
            x_new = mirror_step(x, policy.gamma, g)
            bound, fails = math.nan, 0
        else:
            fails = 0
            while True:
                if fails >= MAX_BACKTRACKS:
                    raise NumericalAbort(
                        f"backtracking exceeded {MAX_BACKTRACKS} trials at iteration {k} (L={L:.3e})"
                    )
                gamma = (1.0 - policy.kappa) / L
                x_new = mirror_step(x, gamma, g)
                L = L / policy.xi
                bound = policy.xi * L
                with np.errstate(over="ignore", invalid="ignore"):
                    d_f = bregman_f_from_state(M, st, x_new - x)
                if d_f <= bound * bregman_psi(x_new, x):
                    break
                fails += 1
            L = policy.xi * L
        st = _evaluate(M, x_new, k + 1)
        x = x_new
        k += 1
        rec.push(k, x, st.value, bound, fails)
    return rec.finish(k, x, reason)


def wirtinger_flow(
    M: MeasurementSet,
    x0: np.ndarray,
    config: SolverConfig | None = None,
    mu: float = 0.1,
    mu_max: Optional[float] = None,
) -> SolverTrace:
    """Gradient descent ``x <- x - (mu_k / ||x0||^2) grad f(x)``.

    ``mu_k = mu`` by default; with ``mu_max`` set, the warm-up schedule
    ``mu_k = min(1 - exp(-k / 330), mu_max)`` is used instead. The step
    policy in ``config`` is ignored.
    """
    config = config or SolverConfig()
    x = np.array(x0, dtype=float)
    if x.shape != (M.n,):
        raise ValueError(f"x0 must have length {M.n}, got shape {x.shape}")
    scale = float(np.dot(x, x))
    if scale == 0.0:
        raise ValueError("Wirtinger flow needs a nonzero initial point")
    rec = _Recorder(M, config)
    st = _evaluate(M, x, 0)
    rec.push(0, x, st.value, math.nan, 0)
    reason = StopReason.MAX_ITERS
    k = 0
    while k < config.max_iters:
        if float(np.linalg.norm(st.gradient)) <= config.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        step = mu if mu_max is None else min(1.0 - math.exp(-(k + 1) / WF_TAU0), mu_max)
        x = x - (step / scale) * st.gradient
        st = _evaluate(M, x, k + 1)
        k += 1
        rec.push(k, x, st.value, math.nan, 0)
    return rec.finish(k, x, reason)
