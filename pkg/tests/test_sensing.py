import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirror_pr import (
    NoiseSpec,
    SensingEnsemble,
    adjoint_apply,
    apply,
    cdp_ensemble,
    derive_seed,
    gaussian_ensemble,
    intensity,
    make_noise,
    measure,
)


def _single_row(a):
    a = np.asarray(a, dtype=float)[None, :]
    return SensingEnsemble(kind="gaussian", n=a.shape[1], m=1, seed=0, matrix=a)


def test_gaussian_deterministic():
    assert np.array_equal(gaussian_ensemble(2, 3, 7).matrix, gaussian_ensemble(2, 3, 7).matrix)
    assert gaussian_ensemble(2, 3, 7).matrix.shape == (3, 2)


def test_gaussian_row_norms_concentrate():
    E = gaussian_ensemble(128, 3014, 1)
    assert abs(E.row_sq_norms().mean() - 128) < 0.05 * 128


def test_gaussian_entry_variance():
    E = gaussian_ensemble(1, 10**6, 5)
    assert 0.99 <= E.matrix.var() <= 1.01


def test_cdp_shape():
    E = cdp_ensemble(4, 2, 0)
    assert E.masks.shape == (2, 4)
    assert set(np.unique(E.masks)) <= {-1.0, 0.0, 1.0}
    assert E.m == 8 and E.n_masks == 2


def test_cdp_zero_fraction():
    E = cdp_ensemble(1024, 8, 3)
    assert 0.47 <= np.mean(E.masks == 0) <= 0.53


def test_cdp_deterministic():
    assert np.array_equal(cdp_ensemble(16, 3, 9).masks, cdp_ensemble(16, 3, 9).masks)


@given(st.integers(1, 40), st.integers(1, 12))
def test_cdp_measurement_count(n, P):
    assert cdp_ensemble(n, P, 0).m == n * P


def test_apply_gaussian_dot():
    out = apply(_single_row([1, 2]), np.array([3.0, 4.0]))
    assert out.dtype == complex
    assert out[0] == 11


def test_apply_cdp_two_point_dft():
    E = SensingEnsemble(kind="cdp", n=2, m=2, seed=0, masks=np.array([[1.0, 1.0]]))
    assert np.allclose(apply(E, np.array([1.0, 0.0])), [1, 1])


def test_adjoint_single_row():
    assert np.array_equal(adjoint_apply(_single_row([1, 2]), np.array([1.0])), [1.0, 2.0])


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
def test_adjoint_of_zero(kind):
    E = gaussian_ensemble(5, 7, 0) if kind == "gaussian" else cdp_ensemble(5, 3, 0)
    assert np.array_equal(E.adjoint(np.zeros(E.m)), np.zeros(5))


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
def test_adjoint_identity(kind):
    rng = np.random.default_rng(11)
    E = gaussian_ensemble(12, 30, 1) if kind == "gaussian" else cdp_ensemble(12, 4, 1)
    for _ in range(100):
        x = rng.standard_normal(E.n)
        v = rng.standard_normal(E.m) + 1j * rng.standard_normal(E.m)
        lhs = np.vdot(apply(E, x), v).real
        rhs = float(np.dot(x, adjoint_apply(E, v)))
        assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_cdp_matches_dense_materialization():
    rng = np.random.default_rng(2)
    E = cdp_ensemble(8, 2, 4)
    A = E.to_dense()
    x = rng.standard_normal(8)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.allclose(E.forward(x), A @ x, atol=1e-12)
    assert np.allclose(E.adjoint(v), (A.conj().T @ v).real, atol=1e-12)
    assert np.allclose(E.row_sq_norms(), np.sum(np.abs(A) ** 2, axis=1))


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
def test_dimension_mismatch(kind):
    E = gaussian_ensemble(3, 5, 0) if kind == "gaussian" else cdp_ensemble(3, 2, 0)
    with pytest.raises(ValueError):
        E.forward(np.zeros(4))
    with pytest.raises(ValueError):
        E.adjoint(np.zeros(E.m + 1))
    with pytest.raises(ValueError):
        measure(E, np.zeros(2))


def test_measure_noiseless():
    E = gaussian_ensemble(6, 20, 2)
    x = np.arange(6.0)
    M = measure(E, x)
    assert np.array_equal(M.y, (E.matrix @ x) ** 2)
    assert np.all(M.y >= 0)


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
def test_measure_exact_identity(kind):
    E = gaussian_ensemble(6, 20, 2) if kind == "gaussian" else cdp_ensemble(6, 3, 2)
    x = np.linspace(-1, 1, 6)
    M = measure(E, x, NoiseSpec("uniform_nonneg", 0.1, 4))
    assert np.array_equal(M.y, intensity(E.forward(x)) + M.noise)
    assert np.allclose(M.y, np.abs(E.forward(x)) ** 2 + M.noise, rtol=1e-14, atol=0)


def test_uniform_nonneg_mean():
    eps = make_noise(NoiseSpec("uniform_nonneg", 1e-5, 3), 10**4)
    assert abs(eps.mean() - 1e-5) <= 0.2e-5
    assert eps.min() >= 0 and eps.max() <= 2e-5


@pytest.mark.parametrize("mean,half_width", [(0.0, 1.0), (1e-3, None), (0.2, 0.5)])
def test_uniform_symmetric_exact_mean(mean, half_width):
    eps = make_noise(NoiseSpec("uniform_symmetric", mean, 1, half_width), 5000)
    assert eps.mean() == pytest.approx(mean, abs=1e-15)


def test_measure_zero_truth_gives_noise():
    E = gaussian_ensemble(4, 50, 0)
    M = measure(E, np.zeros(4), NoiseSpec("uniform_nonneg", 0.5, 1))
    assert np.array_equal(M.y, M.noise)


def test_noise_reproducible():
    spec = NoiseSpec("uniform_nonneg", 0.3, 12)
    assert np.array_equal(make_noise(spec, 100), make_noise(spec, 100))


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("gaussian", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("uniform_nonneg", -1.0)


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.lists(st.integers(0, 1000), min_size=1, max_size=4))
def test_derive_seed_deterministic_and_key_sensitive(seed, keys):
    assert derive_seed(seed, *keys) == derive_seed(seed, *keys)
    assert derive_seed(seed, *keys) != derive_seed(seed, *keys, 0)
