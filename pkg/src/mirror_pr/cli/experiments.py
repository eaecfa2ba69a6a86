"""Experiment runners behind the ``mirror-pr`` command.

Every random draw is derived from the run seed with :func:`derive_seed`, so a
given config reproduces its outputs byte for byte. Instance seeds depend only
on ``(seed, n, m, trial)``; algorithm-specific randomness adds the algorithm
index on top, so all algorithms in a phase-diagram cell see the same data.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..landscape import (
    DEFAULT_LAMBDA,
    critical_catalogue,
    hessian_deviation,
    snr_check,
    verify_covering,
)
from ..metrics import relative_error, success_threshold
from ..objective import ExpectedModel, expected_grad
from ..sensing import (
    MeasurementSet,
    NoiseSpec,
    STREAM_ENSEMBLE,
    STREAM_INIT,
    STREAM_NOISE,
    STREAM_TRUTH,
    cdp_ensemble,
    derive_seed,
    gaussian_ensemble,
    measure,
)
from ..solver import (
    Backtracking,
    ConstantStep,
    NumericalAbort,
    SolverConfig,
    SolverTrace,
    default_step,
    mirror_descent,
    random_init,
    wirtinger_flow,
)
from ..spectral import spectral_init
from .config import ALGORITHMS, ExperimentConfig
from .pgm import read_pgm, synthetic_image, write_pgm

__all__ = [
    "TRACE_HEADER",
    "GRID_HEADER",
    "PhaseDiagramCell",
    "default_m",
    "make_instance",
    "success_sigma",
    "write_trace_csv",
    "hessian_concentration",
    "run_reconstruct1d",
    "run_phasediagram",
    "run_cdpimage",
    "run_landscape_verify",
    "run_check_assumption",
    "RUNNERS",
]

TRACE_HEADER = "iter,f,rel_error,L_k,backtracks"
GRID_HEADER = "algorithm,n,m,trials,successes,median_rel_error"

Emit = Callable[[str], None]


def _g(v: float) -> str:
    return "%.17g" % v


def default_m(n: int, init: str) -> int:
    """``ceil(n ln^2 n)`` for random starts, ``ceil(5 n ln n)`` for spectral ones; at least ``2n``."""
    if init == "spectral":
        m = math.ceil(5 * n * math.log(n))
    else:
        m = math.ceil(n * math.log(n) ** 2)
    return max(m, 2 * n)


def make_instance(
    n: int,
    m: int,
    instance_seed: int,
    noise_model: str = "uniform_nonneg",
    noise_mean: float = 0.0,
    half_width: float | None = None,
    truth_norm: float = 1.0,
) -> MeasurementSet:
    """Gaussian instance with a truth drawn uniformly on the sphere of radius ``truth_norm``."""
    truth = random_init(n, derive_seed(instance_seed, STREAM_TRUTH), radius=truth_norm)
    E = gaussian_ensemble(n, m, derive_seed(instance_seed, STREAM_ENSEMBLE))
    noise = NoiseSpec(
        model=noise_model,
        target_mean=noise_mean,
        seed=derive_seed(instance_seed, STREAM_NOISE),
        half_width=half_width,
    )
    return measure(E, truth, noise)


def success_sigma(M: MeasurementSet, lam: float = DEFAULT_LAMBDA) -> float:
    """``lam * min(||truth||^2, 1) - mean(eps)``; the ``varrho -> 0`` limit of the strong-convexity modulus."""
    mu = min(float(np.dot(M.truth, M.truth)), 1.0)
    sigma = lam * mu - float(M.noise.mean())
    return sigma if sigma > 0 else lam * mu


def _noise_kwargs(cfg: ExperimentConfig) -> dict:
    return dict(noise_model=cfg["noise.model"], noise_mean=cfg["noise.mean"], half_width=cfg["noise.half_width"])


def _solver_config(cfg: ExperimentConfig, curvature: float, record_every: int | None = None) -> SolverConfig:
    if cfg["solver.step"] == "backtracking":
        step = Backtracking(L0=cfg["solver.L0"], kappa=cfg["solver.kappa"], xi=cfg["solver.xi"])
    else:
        gamma = cfg["solver.gamma"]
        step = ConstantStep(default_step(cfg["noise.mean"], curvature) if gamma is None else gamma)
    return SolverConfig(
        step=step,
        max_iters=cfg["solver.max_iters"],
        grad_tol=cfg["solver.grad_tol"],
        record_every=record_every or cfg["solver.record_every"],
    )


def _initial_point(M: MeasurementSet, init: str, seed: int, power_iters: int) -> np.ndarray:
    if init == "spectral":
        return spectral_init(M, power_iters=power_iters, seed=seed).x0
    return random_init(M.n, seed)


def write_trace_csv(path: str, trace: SolverTrace) -> None:
    rows = [TRACE_HEADER]
    rel = trace.rel_errors or [math.nan] * len(trace.f_values)
    for k, (f, r, L, b) in enumerate(zip(trace.f_values, rel, trace.L_history, trace.backtrack_counts)):
        rows.append(f"{k},{_g(f)},{_g(r)},{_g(L)},{b}")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(rows) + "\n")


# reconstruct1d


def run_reconstruct1d(cfg: ExperimentConfig, out_dir: str, emit: Emit = print) -> dict:
    n = cfg["problem.n"]
    init = cfg["problem.init"]
    m = cfg["problem.m"] or default_m(n, init)
    seed = cfg["run.seed"]
    os.makedirs(out_dir, exist_ok=True)
    summary = ["trial,final_rel_error,threshold,success"]
    finals = []
    for trial in range(cfg["run.trials"]):
        inst = derive_seed(seed, n, m, trial)
        M = make_instance(n, m, inst, truth_norm=cfg["problem.truth_norm"], **_noise_kwargs(cfg))
        x0 = _initial_point(M, init, derive_seed(inst, STREAM_INIT, 0), cfg["problem.power_iters"])
        trace = mirror_descent(M, x0, _solver_config(cfg, curvature=3.0))
        write_trace_csv(os.path.join(out_dir, f"trace_{trial:03d}.csv"), trace)
        thr = success_threshold(M.noise, m, success_sigma(M))
        rel = trace.rel_errors[-1]
        finals.append(rel)
        summary.append(f"{trial},{_g(rel)},{_g(thr)},{int(rel < thr)}")
        emit(f"trial={trial} n={n} m={m} iterations={trace.iterations_run} rel_error={rel!r}")
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(summary) + "\n")
    return {"n": n, "m": m, "final_rel_errors": finals}


# phasediagram


@dataclass(frozen=True)
class PhaseDiagramCell:
    algorithm: str
    n: int
    m: int
    trials: int
    successes: int
    median_rel_error: float

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    def csv_row(self) -> str:
        return f"{self.algorithm},{self.n},{self.m},{self.trials},{self.successes},{_g(self.median_rel_error)}"


@dataclass(frozen=True)
class _TrialTask:
    seed: int
    n: int
    m: int
    trial: int
    algorithms: tuple
    noise: tuple  # (model, mean, half_width)
    max_iters: int
    step: object
    wf_mu: float
    power_iters: int


def _run_trial(task: _TrialTask) -> list[tuple[str, float, float]]:
    """All algorithms on one instance; returns ``(algorithm, rel_error, threshold)`` triples."""
    inst = derive_seed(task.seed, task.n, task.m, task.trial)
    model, mean, hw = task.noise
    M = make_instance(task.n, task.m, inst, noise_model=model, noise_mean=mean, half_width=hw)
    thr = success_threshold(M.noise, task.m, success_sigma(M))
    scfg = SolverConfig(step=task.step, max_iters=task.max_iters, record_every=max(task.max_iters, 1))
    out = []
    for name in task.algorithms:
        init_seed = derive_seed(inst, STREAM_INIT, ALGORITHMS.index(name))
        x0 = _initial_point(M, "random" if name == "md-random" else "spectral", init_seed, task.power_iters)
        try:
            if name == "wf-spectral":
                trace = wirtinger_flow(M, x0, scfg, mu=task.wf_mu)
            else:
                trace = mirror_descent(M, x0, scfg)
            rel = relative_error(trace.final, M.truth)
        except NumericalAbort:
            # A divergent run is a failed recovery, not a broken experiment.
            rel = math.inf
        out.append((name, rel, thr))
    return out


def phase_diagram_cells(
    tasks: list[_TrialTask], workers: int = 1
) -> list[PhaseDiagramCell]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, tasks, chunksize=4))
    else:
        results = [_run_trial(t) for t in tasks]
    groups: dict[tuple, list] = {}
    for task, res in zip(tasks, results):
        for name, rel, thr in res:
            groups.setdefault((task.n, task.m, name), []).append((rel, thr))
    cells = []
    for (n, m, name), vals in sorted(groups.items()):
        rels = np.array([v[0] for v in vals])
        succ = sum(1 for rel, thr in vals if rel < thr)
        cells.append(PhaseDiagramCell(name, n, m, len(vals), succ, float(np.median(rels))))
    return cells


def run_phasediagram(cfg: ExperimentConfig, out_dir: str, emit: Emit = print) -> list[PhaseDiagramCell]:
    algorithms = tuple(cfg["grid.algorithms"])
    if cfg["solver.step"] == "constant":
        gamma = cfg["solver.gamma"]
        step = ConstantStep(default_step(cfg["noise.mean"]) if gamma is None else gamma)
    else:
        step = Backtracking(L0=cfg["solver.L0"], kappa=cfg["solver.kappa"], xi=cfg["solver.xi"])
    tasks = []
    for n in cfg["grid.n_grid"]:
        for ratio in cfg["grid.m_over_n_grid"]:
            m = max(1, int(round(ratio * n)))
            for trial in range(cfg["run.trials"]):
                tasks.append(
                    _TrialTask(
                        seed=cfg["run.seed"],
                        n=n,
                        m=m,
                        trial=trial,
                        algorithms=algorithms,
                        noise=(cfg["noise.model"], cfg["noise.mean"], cfg["noise.half_width"]),
                        max_iters=cfg["solver.max_iters"],
                        step=step,
                        wf_mu=cfg["solver.wf_mu"],
                        power_iters=cfg["problem.power_iters"],
                    )
                )
    cells = phase_diagram_cells(tasks, cfg["run.workers"])
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "phasediagram.csv"), "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join([GRID_HEADER] + [c.csv_row() for c in cells]) + "\n")
    for c in cells:
        emit(f"algorithm={c.algorithm} n={c.n} m={c.m} successes={c.successes}/{c.trials}")
    return cells


# cdpimage


def run_cdpimage(cfg: ExperimentConfig, out_dir: str, emit: Emit = print) -> dict:
    path = cfg["image.path"]
    if path is None:
        image, maxval = synthetic_image(cfg["image.size"]), 255
    else:
        image, maxval = read_pgm(path)
    seed = cfg["run.seed"]
    x = image.ravel().astype(float)
    scale = float(np.linalg.norm(x))
    if scale == 0.0:
        raise ValueError("input image is identically zero")
    truth = x / scale
    n, P = x.size, cfg["image.P"]
    E = cdp_ensemble(n, P, derive_seed(seed, STREAM_ENSEMBLE))
    noise = NoiseSpec(
        model=cfg["noise.model"],
        target_mean=cfg["noise.mean"],
        seed=derive_seed(seed, STREAM_NOISE),
        half_width=cfg["noise.half_width"],
    )
    M = measure(E, truth, noise)
    x0 = _initial_point(M, cfg["problem.init"], derive_seed(seed, STREAM_INIT), cfg["problem.power_iters"])
    trace = mirror_descent(M, x0, _solver_config(cfg, curvature=2.0, record_every=max(cfg["solver.max_iters"], 1)))
    rec = trace.final
    if rec.sum() < 0:
        rec = -rec  # pixels are nonnegative, which fixes the global sign
    rel = relative_error(rec, truth)
    os.makedirs(out_dir, exist_ok=True)
    write_pgm(os.path.join(out_dir, "recovered.pgm"), (rec * scale).reshape(image.shape), maxval)
    write_trace_csv(os.path.join(out_dir, "trace.csv"), trace)
    summary = {
        "height": image.shape[0],
        "width": image.shape[1],
        "masks": P,
        "m": M.m,
        "iterations": trace.iterations_run,
        "rel_error": rel,
        "noise_mean": float(M.noise.mean()),
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    emit(f"rel_error={rel!r}")
    emit(f"iterations={trace.iterations_run}")
    return summary


# landscape-verify


def hessian_concentration(
    n: int,
    m: int,
    trials: int,
    points: int,
    seed: int,
    noise_model: str = "uniform_nonneg",
    noise_mean: float = 0.0,
    half_width: float | None = None,
) -> float:
    """Median over trials of :func:`hessian_deviation` at ``points`` random x with ``||x|| <= 2``."""
    devs = []
    for trial in range(trials):
        inst = derive_seed(seed, n, m, trial)
        M = make_instance(n, m, inst, noise_model=noise_model, noise_mean=noise_mean, half_width=half_width)
        rng = np.random.default_rng(derive_seed(inst, STREAM_INIT))
        dirs = rng.standard_normal((points, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        X = rng.uniform(0.0, 2.0, size=(points, 1)) * dirs
        devs.append(hessian_deviation(M, X))
    return float(np.median(devs))


def _write_report(out_dir: str, name: str, lines: list[str], emit: Emit) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        emit(line)


def run_landscape_verify(cfg: ExperimentConfig, out_dir: str, emit: Emit = print) -> dict:
    seed = cfg["run.seed"]
    n = cfg["landscape.n"]
    eps_mean = cfg["noise.mean"]
    truth = random_init(n, derive_seed(seed, STREAM_TRUTH), radius=cfg["problem.truth_norm"])
    cat = critical_catalogue(truth, eps_mean)
    model = ExpectedModel(truth=truth, noise_mean=eps_mean)
    rng = np.random.default_rng(derive_seed(seed, STREAM_INIT))
    pts = [cat.origin, *cat.minimizers] + [cat.sample_saddle(rng) for _ in range(50)]
    max_grad = max(float(np.linalg.norm(expected_grad(model, p))) for p in pts)
    cov = verify_covering(truth, eps_mean, cfg["landscape.lambda"], cfg["landscape.samples"], derive_seed(seed, 4))
    result = {
        "catalogue_max_grad_norm": max_grad,
        "uncovered_count": cov.uncovered_count,
        "samples_checked": cov.samples_checked,
    }
    hn = cfg["landscape.hessian_n"]
    for ratio in cfg["landscape.hessian_m_over_n"]:
        result[f"hessian_deviation_m{ratio * hn}"] = hessian_concentration(
            hn,
            ratio * hn,
            cfg["landscape.hessian_trials"],
            cfg["landscape.hessian_points"],
            seed,
            **_noise_kwargs(cfg),
        )
    _write_report(out_dir, "landscape.txt", [f"{k}={v!r}" for k, v in result.items()], emit)
    return result


# check-assumption


def run_check_assumption(cfg: ExperimentConfig, out_dir: str, emit: Emit = print) -> dict:
    seed = cfg["run.seed"]
    n = cfg["problem.n"]
    m = cfg["problem.m"] or default_m(n, "random")
    M = make_instance(n, m, derive_seed(seed, n, m, 0), truth_norm=cfg["problem.truth_norm"], **_noise_kwargs(cfg))
    report = snr_check(M.truth, M.noise, cfg["landscape.lambda"])
    _write_report(out_dir, "assumption.txt", [f"n={n}", f"m={m}"] + report.as_lines(), emit)
    return {"report": report}


RUNNERS = {
    "reconstruct1d": run_reconstruct1d,
    "phasediagram": run_phasediagram,
    "cdpimage": run_cdpimage,
    "landscape-verify": run_landscape_verify,
    "check-assumption": run_check_assumption,
}
