"""GP regression against a dense-inverse oracle, plus factorization
maintenance and prior sampling checks."""

import numpy as np
import pytest

from stageopt.domain import make_uniform_grid
from stageopt.gp import (GPModel, grid_prior_covariance, sample_prior)
from stageopt.kernels import KernelSpec


def dense_posterior(prior_cov, obs_idx, obs_y, noise_variance):
    """Textbook posterior via an explicit matrix inverse (oracle path)."""
    idx = np.asarray(obs_idx, dtype=int)
    k_oo = prior_cov[np.ix_(idx, idx)] + noise_variance * np.eye(len(idx))
    k_og = prior_cov[idx, :]
    inv = np.linalg.inv(k_oo)
    mean = k_og.T @ inv @ np.asarray(obs_y)
    var = np.diag(prior_cov) - np.einsum("ij,jk,ki->i", k_og.T, inv, k_og)
    return mean, var


def test_prior_posterior_is_prior():
    dom = make_uniform_grid(1, 7)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.3, amplitude=2.0)
    gp = GPModel(dom, spec, noise_variance=0.01)
    mean, var = gp.posterior()
    assert np.all(mean == 0.0)
    assert np.allclose(var, 2.0)


def test_single_observation_closed_form():
    # One noisy observation of a 1-point "grid": standard conjugate update.
    dom = make_uniform_grid(1, 2)
    spec = KernelSpec(family="squared_exponential", length_scale=1.0,
                      amplitude=4.0)
    gp = GPModel(dom, spec, noise_variance=1.0)
    gp.add_observation(0, 2.0)
    mean, var = gp.posterior()
    # mu = k (k + s^2)^-1 y, var = k - k^2/(k + s^2) at the observed point.
    assert mean[0] == pytest.approx(4.0 / 5.0 * 2.0)
    assert var[0] == pytest.approx(4.0 - 16.0 / 5.0)


def test_matches_dense_oracle_incrementally():
    rng = np.random.default_rng(5)
    dom = make_uniform_grid(2, 6)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.25, amplitude=1.0)
    gp = GPModel(dom, spec, noise_variance=0.0025)
    idx, ys = [], []
    for k in range(70):  # crosses two refactorization boundaries
        i = int(rng.integers(dom.n))
        y = float(rng.normal())
        gp.add_observation(i, y)
        idx.append(i)
        ys.append(y)
        if k % 7 == 0:
            mean, var = gp.posterior()
            m2, v2 = dense_posterior(gp.prior_cov, idx, ys, 0.0025)
            assert np.max(np.abs(mean - m2)) < 1e-8
            assert np.max(np.abs(var - np.maximum(v2, 0.0))) < 1e-8


def test_posterior_query_subset():
    dom = make_uniform_grid(1, 5)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.3)
    gp = GPModel(dom, spec, noise_variance=0.01)
    gp.add_observation(2, 1.0)
    mean, var = gp.posterior()
    m_q, v_q = gp.posterior(query=[0, 2])
    assert m_q[1] == mean[2] and v_q[0] == var[0]


def test_posterior_cov_columns_match_single_column():
    rng = np.random.default_rng(9)
    dom = make_uniform_grid(2, 5)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.3)
    gp = GPModel(dom, spec, noise_variance=0.01)
    for _ in range(12):
        gp.add_observation(int(rng.integers(dom.n)), float(rng.normal()))
    cols = gp.posterior_cov_columns([3, 7, 11])
    for j, i in enumerate([3, 7, 11]):
        assert np.allclose(cols[:, j], gp.posterior_cov_column(i))
    # The diagonal of the posterior covariance is the posterior variance.
    _, var = gp.posterior()
    assert cols[3, 0] == pytest.approx(var[3], abs=1e-10)


def test_repeated_observations_shrink_variance():
    dom = make_uniform_grid(1, 3)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.5)
    gp = GPModel(dom, spec, noise_variance=0.01)
    prev = np.inf
    for _ in range(5):
        gp.add_observation(1, 0.3)
        var = gp.posterior()[1][1]
        assert var < prev
        prev = var


def test_rejects_negative_noise():
    dom = make_uniform_grid(1, 3)
    with pytest.raises(ValueError):
        GPModel(dom, KernelSpec(), noise_variance=-1.0)


def test_sample_prior_deterministic_and_spread():
    dom = make_uniform_grid(2, 10)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.2, amplitude=1.0)
    a = sample_prior(dom, spec, 42)
    b = sample_prior(dom, spec, 42)
    c = sample_prior(dom, spec, 43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_prior_marginal_variance():
    # Pointwise Monte Carlo check of the marginal prior variance.
    dom = make_uniform_grid(1, 8)
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.2, amplitude=0.5)
    rng = np.random.default_rng(1)
    draws = np.stack([sample_prior(dom, spec, rng) for _ in range(4000)])
    emp = draws.var(axis=0)
    assert np.all(np.abs(emp - 0.5) < 0.06)


def test_grid_prior_covariance_precomputed_shape_guard():
    dom = make_uniform_grid(1, 4)
    spec = KernelSpec(family="precomputed", table=np.eye(3))
    with pytest.raises(ValueError):
        grid_prior_covariance(dom, spec)
