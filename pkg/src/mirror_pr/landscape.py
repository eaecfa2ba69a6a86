"""Landscape of the expected objective under Gaussian sensing.

Everything here is evaluated in closed form on ``E[f]`` (noise fixed, sensing
vectors averaged out), plus a Monte-Carlo probe of how far the sampled
Hessian strays from its expectation.

Constants follow the usual parametrization: ``lam`` in ``(1/(9 sqrt 2), 1)``
trades the radius of the strong-convexity ball against its modulus,
``varrho`` is the tolerated relative Hessian deviation and ``kappa`` the
step-size safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import theta_bound
from .metrics import dist_to_signs
from .objective import ExpectedModel, expected_grad, expected_hessian, f_hessian
from .sensing import MeasurementSet

__all__ = [
    "LAMBDA_MIN",
    "DEFAULT_LAMBDA",
    "DEFAULT_VARRHO",
    "DEFAULT_KAPPA",
    "SnrReport",
    "LandscapeParams",
    "CriticalCatalogue",
    "CoveringReport",
    "snr_check",
    "convergence_params",
    "critical_catalogue",
    "classify_region",
    "verify_covering",
    "region_masks",
    "dist_argmin_bound",
    "hessian_deviation",
]

LAMBDA_MIN = 1.0 / (9.0 * math.sqrt(2.0))
# (1 - lam) sqrt(lam) is maximal at lam = 1/3, which gives the loosest noise bound.
DEFAULT_LAMBDA = 1.0 / 3.0
DEFAULT_VARRHO = 0.01
DEFAULT_KAPPA = 0.01

R1, R2X, R2H, R3 = "R1", "R2x", "R2h", "R3"


def _check_lambda(lam: float) -> None:
    if not LAMBDA_MIN < lam < 1.0:
        raise ValueError(f"lambda must lie in ({LAMBDA_MIN:.6f}, 1), got {lam}")


@dataclass(frozen=True)
class SnrReport:
    lam: float
    eps_mean: float
    eps_inf: float
    c_s_actual: float
    c_s_limit: float
    mean_ok: bool
    inf_ok: bool

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.inf_ok

    def as_lines(self) -> list[str]:
        return [
            f"lambda={self.lam!r}",
            f"eps_mean={self.eps_mean!r}",
            f"eps_inf={self.eps_inf!r}",
            f"c_s_actual={self.c_s_actual!r}",
            f"c_s_limit={self.c_s_limit!r}",
            f"mean_ok={str(self.mean_ok).lower()}",
            f"inf_ok={str(self.inf_ok).lower()}",
            f"pass={str(self.passed).lower()}",
        ]


def snr_check(truth: np.ndarray, eps: np.ndarray, lam: float = DEFAULT_LAMBDA) -> SnrReport:
    """Check the small-noise condition on the empirical noise mean and sup-norm.

    Requires ``0 <= mean(eps) < lam * mu`` and
    ``||eps||_inf / mu < (1 - lam) ||truth|| sqrt(lam mu - mean(eps)) / (2 sqrt(6) mu)``
    with ``mu = min(||truth||^2, 1)``.
    """
    _check_lambda(lam)
    truth = np.asarray(truth, dtype=float)
    eps = np.asarray(eps, dtype=float)
    nb = float(np.linalg.norm(truth))
    mu = min(nb * nb, 1.0)
    eps_mean = float(eps.mean()) if eps.size else 0.0
    eps_inf = float(np.max(np.abs(eps))) if eps.size else 0.0
    gap = lam * mu - eps_mean
    c_lim = (1.0 - lam) * nb * math.sqrt(gap) / (2.0 * math.sqrt(6.0) * mu) if gap > 0 else 0.0
    c_act = eps_inf / mu
    return SnrReport(
        lam=lam,
        eps_mean=eps_mean,
        eps_inf=eps_inf,
        c_s_actual=c_act,
        c_s_limit=c_lim,
        mean_ok=0.0 <= eps_mean < lam * mu,
        inf_ok=c_act < c_lim,
    )


@dataclass(frozen=True)
class LandscapeParams:
    sigma: float  # relative strong convexity modulus near the signs
    rho: float  # radius of that ball
    r: float  # admissible initialization radius
    L: float  # relative smoothness constant
    nu: float  # linear rate factor
    varsigma: float  # radius of the noise floor around the signs
    theta_rho: float  # curvature bound of psi on the rho-ball

    @property
    def gamma(self) -> float:
        """Step size ``(1 - kappa) / L`` implied by ``nu = gamma * sigma``."""
        return self.nu / self.sigma


def convergence_params(
    truth: np.ndarray,
    eps: np.ndarray,
    lam: float = DEFAULT_LAMBDA,
    varrho: float = DEFAULT_VARRHO,
    kappa: float = DEFAULT_KAPPA,
    m: int | None = None,
) -> LandscapeParams:
    """Rate and radius constants for mirror descent on Gaussian data.

    ``c_s`` in the noise-floor radius is taken at the top of its admissible
    range, i.e. the ``c_s_limit`` of :func:`snr_check`.
    """
    truth = np.asarray(truth, dtype=float)
    eps = np.asarray(eps, dtype=float)
    m = eps.size if m is None else m
    report = snr_check(truth, eps, lam)
    if not report.passed:
        raise ValueError(f"noise assumption fails: {report}")
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    nb = float(np.linalg.norm(truth))
    mu = min(nb * nb, 1.0)
    spread = max(nb * nb / 3.0 + report.eps_inf, 1.0)
    base = lam * mu - report.eps_mean
    if not 0.0 < varrho < base / (2.0 * spread):
        raise ValueError(f"varrho must lie in (0, {base / (2.0 * spread):.6g}), got {varrho}")

    sigma = base - varrho * spread
    L = 3.0 + report.eps_mean + varrho * spread
    rho = (1.0 - lam) * nb / math.sqrt(3.0)
    eps_sq = float(np.dot(eps, eps))
    theta_rho = theta_bound(rho, nb)
    r2 = (rho * rho - 4.0 * eps_sq / (m * sigma)) / max(theta_rho, 1.0)
    if r2 <= 0:
        raise ValueError("initialization radius is empty (noise too large for these constants)")
    varsigma = 2.0 * math.sqrt(2.0) * math.sqrt(eps_sq) / math.sqrt(m * (report.c_s_limit * mu - report.eps_mean))
    return LandscapeParams(
        sigma=sigma,
        rho=rho,
        r=math.sqrt(r2),
        L=L,
        nu=(1.0 - kappa) * sigma / L,
        varsigma=varsigma,
        theta_rho=theta_rho,
    )


@dataclass(frozen=True)
class CriticalCatalogue:
    """Critical points of ``E[f]``: the origin, two minimizers and a sphere of saddles."""

    origin: np.ndarray
    minimizers: tuple
    saddle_radius_sq: float
    truth: np.ndarray

    def sample_saddle(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform point on the saddle sphere ``{x : <x, truth> = 0, ||x||^2 = radius^2}``."""
        u = rng.standard_normal(self.truth.size)
        t = self.truth / np.linalg.norm(self.truth)
        u -= np.dot(u, t) * t
        return math.sqrt(self.saddle_radius_sq) * u / np.linalg.norm(u)

    def dist_to_saddles(self, x: np.ndarray) -> float:
        t = self.truth / np.linalg.norm(self.truth)
        along = float(np.dot(x, t))
        perp = float(np.linalg.norm(x - along * t))
        return math.hypot(along, perp - math.sqrt(self.saddle_radius_sq))


def critical_catalogue(truth: np.ndarray, eps_mean: float = 0.0) -> CriticalCatalogue:
    truth = np.asarray(truth, dtype=float)
    nb2 = float(np.dot(truth, truth))
    if nb2 == 0.0:
        raise ValueError("truth must be nonzero")
    if eps_mean < 0:
        raise ValueError("eps_mean must be nonnegative")
    beta = math.sqrt(1.0 + eps_mean / (3.0 * nb2))
    return CriticalCatalogue(
        origin=np.zeros_like(truth),
        minimizers=(beta * truth, -beta * truth),
        saddle_radius_sq=(nb2 + eps_mean) / 3.0,
        truth=truth.copy(),
    )


def _descent_direction(x: np.ndarray, truth: np.ndarray) -> np.ndarray:
    # Unit vector from the nearest sign of truth towards x; e_1 when x sits on a sign.
    s = 1.0 if np.linalg.norm(x - truth) <= np.linalg.norm(x + truth) else -1.0
    d = x - s * truth
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        e = np.zeros_like(x)
        e[0] = 1.0
        return e
    return d / nd


def classify_region(x: np.ndarray, truth: np.ndarray, eps_mean: float = 0.0, lam: float = DEFAULT_LAMBDA) -> set:
    """Which of the regions R1, R2x, R2h, R3 contain ``x``.

    R1: negative curvature along ``truth``; R2x: gradient pushes outward;
    R2h: gradient points away from the nearest sign (moderate norms only);
    R3: within ``rho`` of the signs.
    """
    _check_lambda(lam)
    x = np.asarray(x, dtype=float)
    truth = np.asarray(truth, dtype=float)
    model = ExpectedModel(truth=truth, noise_mean=eps_mean)
    nb2 = float(np.dot(truth, truth))
    nb = math.sqrt(nb2)
    nx2 = float(np.dot(x, x))
    nx = math.sqrt(nx2)
    g = expected_grad(model, x)
    H = expected_hessian(model, x)
    dist = dist_to_signs(x, truth)
    rho = (1.0 - lam) * nb / math.sqrt(3.0)

    out = set()
    if float(truth @ H @ truth) <= -nx2 * nb2 / 100.0 - nb2 * nb2 / 50.0:
        out.add(R1)
    if dist <= rho:
        out.add(R3)
    if float(np.dot(x, g)) >= nx2 * nb2 / 500.0 + nx2 * nx2 / 100.0:
        out.add(R2X)
    d = _descent_direction(x, truth)
    if (
        float(np.dot(d, g)) >= nx * nb2 / 250.0
        and 0.55 * nb <= nx <= nb
        and dist >= nb / 3.0
    ):
        out.add(R2H)
    return out


def region_masks(X: np.ndarray, truth: np.ndarray, eps_mean: float = 0.0, lam: float = DEFAULT_LAMBDA) -> dict:
    """Vectorized :func:`classify_region` over the rows of ``X``; maps region name to a boolean array."""
    _check_lambda(lam)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    truth = np.asarray(truth, dtype=float)
    nb2 = float(np.dot(truth, truth))
    nb = math.sqrt(nb2)
    nx2 = np.einsum("ij,ij->i", X, X)
    nx = np.sqrt(nx2)
    c = X @ truth
    shift = 3.0 * nx2 - nb2 - eps_mean
    # <truth, E[hess f](x) truth>, <x, E[grad f](x)> and <x - s truth, E[grad f](x)>
    curv = 6.0 * c * c + shift * nb2 - 2.0 * nb2 * nb2
    radial = shift * nx2 - 2.0 * c * c
    s = np.where(c >= 0.0, 1.0, -1.0)
    dist = np.linalg.norm(X - s[:, None] * truth[None, :], axis=1)
    outward = shift * (nx2 - s * c) - 2.0 * c * (c - s * nb2)
    rho = (1.0 - lam) * nb / math.sqrt(3.0)
    safe = np.where(dist > 0.0, dist, 1.0)
    return {
        R1: curv <= -nx2 * nb2 / 100.0 - nb2 * nb2 / 50.0,
        R2X: radial >= nx2 * nb2 / 500.0 + nx2 * nx2 / 100.0,
        R2H: (outward / safe >= nx * nb2 / 250.0) & (nx >= 0.55 * nb) & (nx <= nb) & (dist >= nb / 3.0),
        R3: dist <= rho,
    }


@dataclass(frozen=True)
class CoveringReport:
    uncovered_count: int
    samples_checked: int
    uncovered: list


def verify_covering(
    truth: np.ndarray,
    eps_mean: float = 0.0,
    lam: float = DEFAULT_LAMBDA,
    n_samples: int = 100_000,
    seed: int = 0,
) -> CoveringReport:
    """Sample the ball ``||x|| <= 2||truth||`` and count points in none of the four regions.

    Radii are uniform on ``[0, 2||truth||]``; the cosine with ``truth`` is
    uniform on ``[-1, 1]`` so that every alignment is probed evenly in any
    dimension. The remaining direction is uniform on the orthogonal sphere.
    """
    truth = np.asarray(truth, dtype=float)
    nb = float(np.linalg.norm(truth))
    if nb == 0.0:
        raise ValueError("truth must be nonzero")
    if eps_mean > nb * nb * LAMBDA_MIN:
        raise ValueError("eps_mean exceeds ||truth||^2 / (9 sqrt 2)")
    n = truth.size
    rng = np.random.default_rng(seed)
    t = truth / nb
    radii = rng.uniform(0.0, 2.0 * nb, n_samples)
    cosines = rng.uniform(-1.0, 1.0, n_samples)
    perp = rng.standard_normal((n_samples, n))
    perp -= np.outer(perp @ t, t)
    norms = np.linalg.norm(perp, axis=1)
    norms[norms == 0.0] = 1.0
    perp /= norms[:, None]
    sines = np.sqrt(1.0 - cosines**2)
    X = radii[:, None] * (cosines[:, None] * t[None, :] + sines[:, None] * perp)

    masks = region_masks(X, truth, eps_mean, lam)
    bad = ~(masks[R1] | masks[R2X] | masks[R2H] | masks[R3])
    return CoveringReport(
        uncovered_count=int(bad.sum()),
        samples_checked=n_samples,
        uncovered=[X[i].copy() for i in np.flatnonzero(bad)[:10]],
    )


def dist_argmin_bound(eps: np.ndarray, truth: np.ndarray, m: int | None = None) -> float:
    """``8 ||eps|| / (sqrt(m) ||truth||)``: distance of minimizers of ``f`` from the signs."""
    eps = np.asarray(eps, dtype=float)
    nb = float(np.linalg.norm(truth))
    if nb == 0.0:
        raise ValueError("truth must be nonzero")
    m = eps.size if m is None else m
    return 8.0 * float(np.linalg.norm(eps)) / (math.sqrt(m) * nb)


def hessian_deviation(M: MeasurementSet, points: np.ndarray) -> float:
    """Largest normalized spectral-norm gap between the sampled and expected Hessians.

    Each point contributes ``||hess f(x) - E[hess f(x)]||_2 / (||x||^2 + ||truth||^2/3 + ||eps||_inf)``.
    """
    model = ExpectedModel.from_measurements(M)
    eps_inf = 0.0 if M.noise is None else float(np.max(np.abs(M.noise)))
    nb2 = float(np.dot(M.truth, M.truth))
    worst = 0.0
    for x in np.atleast_2d(points):
        gap = f_hessian(M, x) - expected_hessian(model, x)
        dev = float(np.max(np.abs(np.linalg.eigvalsh(gap))))
        worst = max(worst, dev / (float(np.dot(x, x)) + nb2 / 3.0 + eps_inf))
    return worst
