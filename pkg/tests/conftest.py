import numpy as np
import pytest

from mirror_pr import NoiseSpec, gaussian_ensemble, measure

_ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``criterion(number, title, passed, detail)``."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE[number] = (bool(passed), title, detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, title, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"AC{number:02d} {status} {title}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def unit_truth():
    def make(n, seed=0):
        v = np.random.default_rng(seed).standard_normal(n)
        return v / np.linalg.norm(v)

    return make


@pytest.fixture
def gaussian_problem(unit_truth):
    def make(n=8, m=64, seed=0, noise_mean=0.0):
        E = gaussian_ensemble(n, m, seed)
        return measure(E, unit_truth(n, seed + 1), NoiseSpec("uniform_nonneg", noise_mean, seed + 2))

    return make
