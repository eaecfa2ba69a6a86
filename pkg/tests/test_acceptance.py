"""End-to-end acceptance suite.

Each test records one PASS/FAIL line through the ``criterion`` fixture; the
lines are printed in the terminal summary. Wall-clock budgets count as part
of each criterion.
"""

import math
import time

import numpy as np
import pytest

from mirror_pr import (
    Backtracking,
    ConstantStep,
    ExpectedModel,
    NoiseSpec,
    SolverConfig,
    bregman_f,
    bregman_psi,
    cdp_ensemble,
    critical_catalogue,
    default_step,
    dist_argmin_bound,
    dist_to_signs,
    expected_f,
    expected_grad,
    expected_hessian,
    f_gradient,
    f_hessian,
    f_value,
    gaussian_ensemble,
    grad_psi,
    grad_psi_star,
    measure,
    mirror_descent,
    random_init,
    relative_error,
    snr_check,
    spectral_init,
    success_threshold,
    verify_covering,
)
from mirror_pr.cli.config import parse_config
from mirror_pr.cli.experiments import (
    default_m,
    hessian_concentration,
    make_instance,
    run_cdpimage,
    run_phasediagram,
    success_sigma,
)

pytestmark = pytest.mark.acceptance


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def _fd_gradient(fun, x, h):
    # Five-point stencil: exact for quartics up to roundoff.
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (-fun(x + 2 * e) + 8 * fun(x + e) - 8 * fun(x - e) + fun(x - 2 * e)) / (12 * h)
    return g


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def test_ac01_objective_identity(criterion):
    worst = 0.0
    with Clock() as clock:
        for seed in range(100):
            rng = np.random.default_rng(seed)
            n, m = int(rng.integers(2, 33)), int(rng.integers(64, 513))
            E = gaussian_ensemble(n, m, seed)
            M = measure(E, random_init(n, seed + 1, radius=rng.uniform(0.5, 2)), NoiseSpec("uniform_nonneg", 10 ** rng.uniform(-3, -1), seed + 2))
            exact = float(np.dot(M.noise, M.noise)) / (4 * m)
            worst = max(worst, abs(f_value(M, M.truth) - exact) / exact)
    passed = worst <= 1e-12 and clock.seconds < 1
    criterion(1, "objective at truth equals ||eps||^2/(4m)", passed, f"max rel {worst:.2e}, {clock.seconds:.2f}s")
    assert passed


def test_ac02_mirror_map_bijection(criterion):
    rng = np.random.default_rng(2)
    with Clock() as clock:
        worst = 0.0
        for r in np.logspace(-6, 3, 1000):
            x = rng.standard_normal(int(rng.integers(1, 65)))
            x *= r / np.linalg.norm(x)
            worst = max(worst, float(np.linalg.norm(grad_psi_star(grad_psi(x)) - x)) / r)
    passed = worst <= 1e-10 and clock.seconds < 1
    criterion(2, "mirror map round trip", passed, f"max rel {worst:.2e}, {clock.seconds:.2f}s")
    assert passed


def test_ac03_derivatives_match_finite_differences(criterion):
    worst_f, worst_e = 0.0, 0.0
    with Clock() as clock:
        for seed in range(200):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 9))
            E = gaussian_ensemble(n, 8 * n, seed) if seed % 2 else cdp_ensemble(n, 4, seed)
            M = measure(E, random_init(n, seed + 1), NoiseSpec("uniform_nonneg", 1e-2, seed + 2))
            model = ExpectedModel.from_measurements(M)
            x = rng.standard_normal(n) * rng.uniform(0.2, 2)
            h = 1e-3
            worst_f = max(
                worst_f,
                _rel(f_gradient(M, x), _fd_gradient(lambda v: f_value(M, v), x, h)),
                _rel(f_hessian(M, x), np.array([_fd_gradient(lambda v: f_gradient(M, v)[i], x, h) for i in range(n)])),
            )
            worst_e = max(
                worst_e,
                _rel(expected_grad(model, x), _fd_gradient(lambda v: expected_f(model, v), x, h)),
                _rel(expected_hessian(model, x), np.array([_fd_gradient(lambda v: expected_grad(model, v)[i], x, h) for i in range(n)])),
            )
    passed = worst_f <= 1e-5 and worst_e <= 1e-8 and clock.seconds < 5
    criterion(3, "gradients and Hessians match finite differences", passed, f"finite-sample {worst_f:.1e}, expected {worst_e:.1e}, {clock.seconds:.2f}s")
    assert passed


def test_ac04_monotone_descent_and_backtracking(criterion):
    violations, steps = 0, 0
    with Clock() as clock:
        for seed in range(50):
            n = 16
            E = gaussian_ensemble(n, 8 * n, seed) if seed < 25 else cdp_ensemble(n, 8, seed)
            M = measure(E, random_init(n, seed + 1), NoiseSpec("uniform_nonneg", 1e-3, seed + 2))
            trace = mirror_descent(M, random_init(n, seed + 3), SolverConfig(step=Backtracking(), max_iters=100))
            for k in range(1, len(trace.iterates)):
                x_prev, x_next = trace.iterates[k - 1], trace.iterates[k]
                steps += 1
                descent = trace.f_values[k] <= trace.f_values[k - 1] + 1e-12
                inequality = bregman_f(M, x_next, x_prev) <= trace.L_history[k] * bregman_psi(x_next, x_prev) + 1e-12
                violations += not (descent and inequality)
    passed = violations == 0 and steps > 0 and clock.seconds < 30
    criterion(4, "monotone descent with backtracking inequality", passed, f"{violations} violations in {steps} steps, {clock.seconds:.1f}s")
    assert passed


def _decay_r2(rel):
    """R^2 of a log-linear fit over the segment before ``rel`` reaches twice its final floor."""
    rel = np.asarray(rel)
    floor = rel[-1]
    end = int(np.argmax(rel <= 2 * floor))
    y = np.log(rel[: end + 1])
    k = np.arange(y.size)
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (slope * k + intercept)
    return 1 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum()), slope, end


def test_ac05_reconstruction_1d(criterion):
    n, eps_mean = 128, 1e-5
    gamma = default_step(eps_mean)
    with Clock() as clock:
        m = default_m(n, "random")
        hits = 0
        for seed in range(20):
            M = make_instance(n, m, 5000 + seed, noise_mean=eps_mean)
            thr = success_threshold(M.noise, m, success_sigma(M))
            trace = mirror_descent(M, random_init(n, 7000 + seed), SolverConfig(step=ConstantStep(gamma), max_iters=5000, record_every=5000))
            hits += relative_error(trace.final, M.truth) <= 10 * thr
        m_s = default_m(n, "spectral")
        r2s = []
        for seed in range(5):
            M = make_instance(n, m_s, 6000 + seed, noise_mean=eps_mean)
            trace = mirror_descent(M, spectral_init(M, seed=seed).x0, SolverConfig(step=ConstantStep(gamma), max_iters=1000, record_every=1000))
            r2, slope, _ = _decay_r2(trace.rel_errors)
            r2s.append(r2 if slope < 0 else -math.inf)
    passed = hits >= 18 and min(r2s) >= 0.95 and clock.seconds < 180
    criterion(5, "1D reconstruction, random and spectral init", passed, f"{hits}/20 within 10x threshold at m={m}, min R^2 {min(r2s):.4f} at m={m_s}, {clock.seconds:.1f}s")
    assert passed


def test_ac06_expected_critical_points(criterion):
    worst_grad, signature_ok = 0.0, True
    with Clock() as clock:
        for seed in range(8):
            rng = np.random.default_rng(seed)
            truth = random_init(8, seed, radius=rng.uniform(0.5, 2))
            nb2 = float(truth @ truth)
            for eps_mean in (0.0, 5e-3):
                model = ExpectedModel(truth, eps_mean)
                cat = critical_catalogue(truth, eps_mean)
                saddles = [cat.sample_saddle(rng) for _ in range(50)]
                for x in [cat.origin, *cat.minimizers, *saddles]:
                    worst_grad = max(worst_grad, float(np.linalg.norm(expected_grad(model, x))))
                signature_ok &= bool(np.linalg.eigvalsh(expected_hessian(model, cat.origin)).max() < 0)
                for x in cat.minimizers:
                    signature_ok &= bool(np.linalg.eigvalsh(expected_hessian(model, x)).min() >= 2 * nb2 * (1 - 1e-12))
                for x in saddles:
                    w = np.linalg.eigvalsh(expected_hessian(model, x))
                    signature_ok &= bool(w.min() < 0 < w.max())
    passed = worst_grad <= 1e-10 and signature_ok and clock.seconds < 5
    criterion(6, "expected-landscape critical points", passed, f"max |grad| {worst_grad:.1e}, signatures {'ok' if signature_ok else 'wrong'}, {clock.seconds:.2f}s")
    assert passed


def test_ac07_covering(criterion):
    uncovered = 0
    with Clock() as clock:
        for n in (2, 8):
            for eps_mean in (0.0, 5e-3):
                report = verify_covering(random_init(n, n), eps_mean, n_samples=100_000, seed=n)
                uncovered += report.uncovered_count
    passed = uncovered == 0 and clock.seconds < 30
    criterion(7, "regions cover the ball of radius 2||truth||", passed, f"{uncovered} uncovered of 400000, {clock.seconds:.2f}s")
    assert passed


def test_ac08_hessian_concentration(criterion):
    n = 32
    with Clock() as clock:
        low = hessian_concentration(n, 10 * n, trials=20, points=4, seed=8)
        high = hessian_concentration(n, 100 * n, trials=20, points=4, seed=8)
    passed = high <= 0.5 * low and clock.seconds < 60
    criterion(8, "Hessian deviation shrinks with m", passed, f"m=10n {low:.3f}, m=100n {high:.3f}, ratio {high / low:.3f}, {clock.seconds:.1f}s")
    assert passed


def test_ac09_noise_floor(criterion):
    n, m = 64, 40 * 64
    hits = 0
    with Clock() as clock:
        for seed in range(20):
            M = make_instance(n, m, 9000 + seed, noise_mean=1e-3)
            x0 = spectral_init(M, seed=seed).x0
            trace = mirror_descent(M, x0, SolverConfig(step=ConstantStep(default_step(1e-3)), max_iters=3000, record_every=3000))
            hits += dist_to_signs(trace.final, M.truth) <= dist_argmin_bound(M.noise, M.truth)
    passed = hits >= 18 and clock.seconds < 120
    criterion(9, "final iterates sit within the noise-floor bound", passed, f"{hits}/20, {clock.seconds:.1f}s")
    assert passed


def _monotone(counts, slack=1):
    return all(b >= a - slack for a, b in zip(counts, counts[1:]))


def test_ac10_phase_transition_ordering(criterion, tmp_path):
    cfg = parse_config("[grid]\nn_grid = 32\nm_over_n_grid = 2, 3, 4, 5, 6, 7, 8\n", "phasediagram")
    with Clock() as clock:
        cells = run_phasediagram(cfg, str(tmp_path), emit=lambda s: None)
    table = {}
    for c in cells:
        table.setdefault(c.algorithm, []).append((c.m, c.successes))
    series = {a: [s for _, s in sorted(v)] for a, v in table.items()}
    monotone = all(_monotone(s) for s in series.values())
    ordered = all(a >= b - 2 for a, b in zip(series["md-spectral"], series["wf-spectral"]))
    passed = monotone and ordered and all(c.trials == 20 for c in cells) and clock.seconds < 300
    detail = "; ".join(f"{a} {s}" for a, s in series.items()) + f", {clock.seconds:.1f}s"
    criterion(10, "phase transition is monotone and MD-spectral keeps up with WF", passed, detail)
    assert passed


def test_ac11_cdp_image(criterion, tmp_path):
    cfg = parse_config("[image]\nsize = 64\nP = 30\n[noise]\nmean = 1e-5\n[solver]\nmax_iters = 1000\n", "cdpimage")
    with Clock() as clock:
        summary = run_cdpimage(cfg, str(tmp_path), emit=lambda s: None)
    passed = summary["rel_error"] <= 5e-2 and summary["iterations"] == 1000 and clock.seconds < 120
    criterion(11, "CDP image recovery", passed, f"rel_error {summary['rel_error']:.2e}, {clock.seconds:.1f}s")
    assert passed


def test_ac12_snr_limit(criterion):
    with Clock() as clock:
        report = snr_check(random_init(16, 0), np.zeros(100), lam=1 / 3)
    expected = 1 / (9 * math.sqrt(2))
    passed = abs(report.c_s_limit - expected) <= 1e-12 and clock.seconds < 1
    criterion(12, "small-noise constant at unit truth", passed, f"c_s_limit {report.c_s_limit!r} vs {expected!r}")
    assert passed
