"""Sensing ensembles for real phase retrieval.

Two measurement models are supported:

* ``gaussian``: a dense ``m x n`` matrix with i.i.d. standard normal entries.
* ``cdp``: coded diffraction patterns, i.e. ``P`` ternary masks followed by an
  unnormalized DFT. Measurement ``(p, j)`` is
  ``sum_l x[l] d_p[l] exp(-2i pi j l / n)`` and blocks are stored mask-major,
  so ``m = n * P``.

All randomness comes from :func:`numpy.random.default_rng` seeded explicitly;
:func:`derive_seed` splits one experiment seed into independent substreams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

__all__ = [
    "SensingEnsemble",
    "NoiseSpec",
    "MeasurementSet",
    "derive_seed",
    "gaussian_ensemble",
    "cdp_ensemble",
    "intensity",
    "apply",
    "adjoint_apply",
    "make_noise",
    "measure",
]

# Spawn-key tags for per-purpose substreams.
STREAM_ENSEMBLE = 0
STREAM_NOISE = 1
STREAM_INIT = 2
STREAM_TRUTH = 3


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a 64-bit child seed from ``seed`` and a tuple of integer keys."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class SensingEnsemble:
    """Measurement operator ``A`` (rows ``a_r``)."""

    kind: Literal["gaussian", "cdp"]
    n: int
    m: int
    seed: int
    matrix: Optional[np.ndarray] = None  # gaussian: (m, n)
    masks: Optional[np.ndarray] = None  # cdp: (P, n), entries in {-1, 0, 1}

    @property
    def n_masks(self) -> int:
        if self.kind != "cdp":
            raise AttributeError("n_masks is only defined for CDP ensembles")
        return self.masks.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """``A x``; real for Gaussian ensembles, complex for CDP."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {x.shape}")
        if self.kind == "gaussian":
            return self.matrix @ x
        return np.fft.fft(self.masks * x, axis=1).ravel()

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        """Real part of ``A^* v``."""
        v = np.asarray(v)
        if v.shape != (self.m,):
            raise ValueError(f"expected a vector of length {self.m}, got shape {v.shape}")
        if self.kind == "gaussian":
            out = self.matrix.T @ v
            return out.real if np.iscomplexobj(out) else out
        blocks = v.reshape(self.masks.shape)
        # F^* w = n * ifft(w) for the unnormalized forward DFT F.
        back = self.n * np.fft.ifft(blocks, axis=1)
        return np.sum(self.masks * back.real, axis=0)

    def row_sq_norms(self) -> np.ndarray:
        """``||a_r||^2`` for every row, in measurement order."""
        if self.kind == "gaussian":
            return np.einsum("ij,ij->i", self.matrix, self.matrix)
        # |exp(.)| = 1, so each row of block p has norm^2 = ||d_p||^2.
        per_mask = np.sum(self.masks**2, axis=1).astype(float)
        return np.repeat(per_mask, self.n)

    def to_dense(self) -> np.ndarray:
        """Materialize ``A`` as an ``(m, n)`` array. Intended for small tests."""
        if self.kind == "gaussian":
            return self.matrix.copy()
        idx = np.arange(self.n)
        dft = np.exp(-2j * np.pi * np.outer(idx, idx) / self.n)
        return np.concatenate([dft * d[None, :] for d in self.masks], axis=0)


def gaussian_ensemble(n: int, m: int, seed: int) -> SensingEnsemble:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, n))
    return SensingEnsemble(kind="gaussian", n=n, m=m, seed=seed, matrix=matrix)


def cdp_ensemble(n: int, P: int, seed: int) -> SensingEnsemble:
    """``P`` masks with entries -1, 0, 1 drawn with probabilities 1/4, 1/2, 1/4."""
    if n < 1 or P < 1:
        raise ValueError("n and P must be positive")
    rng = np.random.default_rng(seed)
    masks = rng.choice(np.array([-1.0, 0.0, 1.0]), size=(P, n), p=[0.25, 0.5, 0.25])
    return SensingEnsemble(kind="cdp", n=n, m=n * P, seed=seed, masks=masks)


def intensity(z: np.ndarray) -> np.ndarray:
    """``|z|^2`` elementwise, without the square root of ``np.abs``."""
    if np.iscomplexobj(z):
        return z.real**2 + z.imag**2
    return z * z


def apply(E: SensingEnsemble, x: np.ndarray) -> np.ndarray:
    """``A x`` as a complex vector of length ``m``."""
    return E.forward(x).astype(complex, copy=False)


def adjoint_apply(E: SensingEnsemble, v: np.ndarray) -> np.ndarray:
    return E.adjoint(v)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive intensity noise.

    ``uniform_nonneg`` draws ``U[0, 2*target_mean]``. ``uniform_symmetric``
    draws ``U[-half_width, half_width]`` and shifts the sample so that its
    empirical mean is exactly ``target_mean``; ``half_width`` defaults to
    ``target_mean``.
    """

    model: Literal["none", "uniform_nonneg", "uniform_symmetric"] = "uniform_nonneg"
    target_mean: float = 0.0
    seed: int = 0
    half_width: Optional[float] = None

    def __post_init__(self):
        if self.model not in ("none", "uniform_nonneg", "uniform_symmetric"):
            raise ValueError(f"unknown noise model {self.model!r}")
        if self.target_mean < 0:
            raise ValueError("target_mean must be nonnegative")


def make_noise(spec: NoiseSpec, m: int) -> np.ndarray:
    if spec.model == "none" or (spec.model == "uniform_nonneg" and spec.target_mean == 0):
        return np.zeros(m)
    rng = np.random.default_rng(spec.seed)
    if spec.model == "uniform_nonneg":
        return rng.uniform(0.0, 2.0 * spec.target_mean, size=m)
    c = spec.target_mean if spec.half_width is None else spec.half_width
    eps = rng.uniform(-c, c, size=m)
    return eps - eps.mean() + spec.target_mean


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Observed intensities ``y`` with optional ground truth for scoring."""

    y: np.ndarray
    ensemble: SensingEnsemble
    truth: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.ensemble.n

    @property
    def m(self) -> int:
        return self.ensemble.m


def measure(E: SensingEnsemble, truth: np.ndarray, noise: NoiseSpec | None = None) -> MeasurementSet:
    """``y[r] = |(A truth)[r]|^2 + eps[r]``."""
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (E.n,):
        raise ValueError(f"truth must have length {E.n}, got shape {truth.shape}")
    eps = make_noise(noise or NoiseSpec(model="none"), E.m)
    y = intensity(E.forward(truth)) + eps
    return MeasurementSet(y=y, ensemble=E, truth=truth.copy(), noise=eps)
