"""Plain-text experiment configuration.

Format::

    # comment
    [section]
    key = value

Every key must be known for its section; errors carry the offending line
number. Missing keys take experiment-specific defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

EXPERIMENTS = ("reconstruct1d", "phasediagram", "cdpimage", "landscape-verify", "check-assumption")
ALGORITHMS = ("md-random", "md-spectral", "wf-spectral")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


# Value parsers. Each takes the raw string and returns the typed value or raises ValueError.


def _int(s: str) -> int:
    return int(s, 10)


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _positive(parse: Callable) -> Callable:
    def inner(s):
        v = parse(s)
        if v <= 0:
            raise ValueError("must be positive")
        return v

    return inner


def _nonneg(parse: Callable) -> Callable:
    def inner(s):
        v = parse(s)
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    return inner


def _open_unit(s: str) -> float:
    v = _float(s)
    if not 0.0 < v < 1.0:
        raise ValueError("must lie in (0, 1)")
    return v


def _half_open_unit(s: str) -> float:
    v = _float(s)
    if not 0.0 < v <= 1.0:
        raise ValueError("must lie in (0, 1]")
    return v


def _or_auto(parse: Callable) -> Callable:
    def inner(s):
        return None if s == "auto" else parse(s)

    return inner


def _or_none(parse: Callable) -> Callable:
    def inner(s):
        return None if s == "none" else parse(s)

    return inner


def _choice(*options: str) -> Callable:
    def inner(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    return inner


def _list(parse: Callable) -> Callable:
    def inner(s):
        items = [p.strip() for p in s.split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return [parse(p) for p in items]

    return inner


def _str(s: str) -> str:
    if not s:
        raise ValueError("empty value")
    return s


_pos_int = _positive(_int)
_pos_float = _positive(_float)

SCHEMA: dict[str, dict[str, Callable]] = {
    "run": {
        "experiment": _choice(*EXPERIMENTS),
        "seed": _nonneg(_int),
        "output": _str,
        "trials": _pos_int,
        "workers": _pos_int,
    },
    "problem": {
        "n": _pos_int,
        "m": _or_auto(_pos_int),
        "init": _choice("random", "spectral"),
        "power_iters": _pos_int,
        "truth_norm": _pos_float,
    },
    "noise": {
        "model": _choice("none", "uniform_nonneg", "uniform_symmetric"),
        "mean": _nonneg(_float),
        "half_width": _or_none(_nonneg(_float)),
    },
    "solver": {
        "step": _choice("constant", "backtracking"),
        "gamma": _or_auto(_pos_float),
        "L0": _pos_float,
        "kappa": _open_unit,
        "xi": _half_open_unit,
        "max_iters": _nonneg(_int),
        "grad_tol": _nonneg(_float),
        "record_every": _pos_int,
        "wf_mu": _pos_float,
    },
    "grid": {
        "n_grid": _list(_pos_int),
        "m_over_n_grid": _list(_pos_float),
        "algorithms": _list(_choice(*ALGORITHMS)),
    },
    "image": {
        "path": _or_none(_str),
        "size": _pos_int,
        "P": _pos_int,
    },
    "landscape": {
        "n": _pos_int,
        "samples": _pos_int,
        "lambda": _pos_float,
        "varrho": _pos_float,
        "kappa": _open_unit,
        "hessian_n": _pos_int,
        "hessian_m_over_n": _list(_pos_int),
        "hessian_trials": _pos_int,
        "hessian_points": _pos_int,
    },
}

_COMMON = {
    "run": {"seed": 0, "output": "out", "trials": 1, "workers": 1},
    "problem": {"n": 128, "m": None, "init": "random", "power_iters": 200, "truth_norm": 1.0},
    "noise": {"model": "uniform_nonneg", "mean": 1e-5, "half_width": None},
    "solver": {
        "step": "constant",
        "gamma": None,
        "L0": 1.0,
        "kappa": 0.01,
        "xi": 0.9,
        "max_iters": 2000,
        "grad_tol": 0.0,
        "record_every": 1,
        "wf_mu": 0.1,
    },
    "grid": {
        "n_grid": [16, 24, 32, 40, 48, 56, 64],
        "m_over_n_grid": [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "algorithms": list(ALGORITHMS),
    },
    "image": {"path": None, "size": 64, "P": 30},
    "landscape": {
        "n": 2,
        "samples": 100_000,
        "lambda": 1.0 / 3.0,
        "varrho": 0.01,
        "kappa": 0.01,
        "hessian_n": 16,
        "hessian_m_over_n": [10, 100],
        "hessian_trials": 5,
        "hessian_points": 4,
    },
}

_PER_EXPERIMENT = {
    "reconstruct1d": {"solver": {"max_iters": 5000}},
    # A fixed 0.99/3 step can diverge from spectral starts when m is a small multiple of n.
    "phasediagram": {"run": {"trials": 20}, "solver": {"step": "backtracking"}},
    "cdpimage": {"solver": {"max_iters": 1000}},
    "landscape-verify": {"noise": {"mean": 0.0}},
    "check-assumption": {"problem": {"m": None}},
}


def defaults(experiment: str) -> dict[str, dict[str, Any]]:
    out = {sec: dict(vals) for sec, vals in _COMMON.items()}
    for sec, vals in _PER_EXPERIMENT.get(experiment, {}).items():
        out[sec].update(vals)
    return out


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict[str, dict[str, Any]]
    lines: dict[tuple[str, str], int] = field(default_factory=dict)
    source: str = "<config>"

    def __getitem__(self, key: str) -> Any:
        section, _, name = key.partition(".")
        return self.values[section][name]

    def set(self, key: str, value: Any) -> None:
        section, _, name = key.partition(".")
        self.values[section][name] = value

    def error(self, key: str, message: str) -> ConfigError:
        section, _, name = key.partition(".")
        return ConfigError(f"[{section}] {name}: {message}", self.lines.get((section, name)), self.source)


def parse_config(text: str, experiment: str, source: str = "<config>") -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}", None, source)
    values = defaults(experiment)
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno, source)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno, source)
        key, _, value = (p.strip() for p in line.partition("="))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, source)
        if (section, key) in lines:
            raise ConfigError(
                f"duplicate key {key!r} in [{section}] (first set on line {lines[section, key]})", lineno, source
            )
        try:
            values[section][key] = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {value!r}: {exc}", lineno, source) from None
        lines[section, key] = lineno

    cfg = ExperimentConfig(experiment=experiment, values=values, lines=lines, source=source)
    declared = values["run"].get("experiment")
    if declared is not None and declared != experiment:
        raise cfg.error("run.experiment", f"config is for {declared!r}, not {experiment!r}")
    values["run"]["experiment"] = experiment
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    lam = cfg["landscape.lambda"]
    if not 1.0 / (9.0 * math.sqrt(2.0)) < lam < 1.0:
        raise cfg.error("landscape.lambda", "must lie in (1/(9 sqrt 2), 1)")
    if cfg["noise.model"] == "none":
        cfg.set("noise.mean", 0.0)
    if cfg.experiment == "cdpimage" and cfg["problem.init"] == "random" and ("problem", "init") not in cfg.lines:
        cfg.set("problem.init", "spectral")


def load_config(path: str, experiment: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return parse_config(text, experiment, source=path)
