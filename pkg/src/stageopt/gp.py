"""Exact GP regression on a fixed grid.

The model keeps a Cholesky factor of (K_obs + noise * I) that is extended by
a border (rank-1) update when a single observation is appended, with a full
refactorization every ``REFACTOR_EVERY`` appends to bound roundoff drift.
Posterior mean and variance over the whole grid are therefore O(t * N) per
append instead of O(t^3 + t^2 N) per query.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .domain import GridDomain
from .kernels import KernelSpec, kernel_matrix

REFACTOR_EVERY = 32
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


class ConditioningError(RuntimeError):
    """Factorization of (K + noise * I) failed even after jitter escalation."""


def grid_prior_covariance(domain: GridDomain, spec: KernelSpec) -> np.ndarray:
    """Full prior covariance matrix of the GP restricted to the grid."""
    if spec.family == "precomputed":
        if spec.table.shape != (domain.n, domain.n):
            raise ValueError("precomputed table does not match the domain")
        return np.asarray(spec.table, dtype=float)
    return kernel_matrix(spec, domain.points)


def _chol_with_jitter(mat: np.ndarray, amplitude: float) -> np.ndarray:
    for jitter in (0.0,) + tuple(j * amplitude for j in JITTER_LADDER):
        try:
            return cholesky(mat + jitter * np.eye(mat.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise ConditioningError("covariance factorization failed at all jitter levels")


class GPModel:
    """Zero-mean GP with fixed hyperparameters and noisy observations on a grid.

    Parameters
    ----------
    domain : GridDomain
    spec : KernelSpec
    noise_variance : float, >= 0
    prior_cov : optional precomputed grid prior covariance (shared across runs).
    """

    def __init__(self, domain: GridDomain, spec: KernelSpec,
                 noise_variance: float, prior_cov: Optional[np.ndarray] = None):
        if noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        self.domain = domain
        self.spec = spec
        self.noise_variance = float(noise_variance)
        self.prior_cov = (grid_prior_covariance(domain, spec)
                          if prior_cov is None else np.asarray(prior_cov, dtype=float))
        self._prior_var = np.diag(self.prior_cov).copy()
        self.obs_idx: list[int] = []
        self.obs_y: list[float] = []
        self._chol: Optional[np.ndarray] = None   # (t, t) lower factor
        self._v: Optional[np.ndarray] = None      # (t, N) = L^-1 K_obs,grid
        self._u: Optional[np.ndarray] = None      # (t,)   = L^-1 y
        self._appends_since_refactor = 0

    @property
    def n_obs(self) -> int:
        return len(self.obs_idx)

    def _refactor(self) -> None:
        idx = np.asarray(self.obs_idx, dtype=int)
        k_obs = self.prior_cov[np.ix_(idx, idx)] + self.noise_variance * np.eye(len(idx))
        self._chol = _chol_with_jitter(k_obs, self.spec.amplitude)
        self._v = solve_triangular(self._chol, self.prior_cov[idx, :], lower=True)
        self._u = solve_triangular(self._chol, np.asarray(self.obs_y), lower=True)
        self._appends_since_refactor = 0

    def add_observation(self, index: int, value: float) -> None:
        """Append one (grid index, noisy value) pair, extending the factor."""
        index = int(index)
        if self.n_obs == 0:
            self.obs_idx.append(index)
            self.obs_y.append(float(value))
            self._refactor()
            return
        if self._appends_since_refactor + 1 >= REFACTOR_EVERY:
            self.obs_idx.append(index)
            self.obs_y.append(float(value))
            self._refactor()
            return
        k_vec = self.prior_cov[np.asarray(self.obs_idx, dtype=int), index]
        k_self = self.prior_cov[index, index] + self.noise_variance
        c = solve_triangular(self._chol, k_vec, lower=True)
        d_sq = k_self - c @ c
        if d_sq <= 1e-12 * self.spec.amplitude:
            # Border update numerically unsafe; fall back to a full refactor.
            self.obs_idx.append(index)
            self.obs_y.append(float(value))
            self._refactor()
            return
        d = np.sqrt(d_sq)
        t = self.n_obs
        new_chol = np.zeros((t + 1, t + 1))
        new_chol[:t, :t] = self._chol
        new_chol[t, :t] = c
        new_chol[t, t] = d
        self._chol = new_chol
        v_new = (self.prior_cov[index, :] - c @ self._v) / d
        u_new = (float(value) - c @ self._u) / d
        self._v = np.vstack([self._v, v_new])
        self._u = np.append(self._u, u_new)
        self.obs_idx.append(index)
        self.obs_y.append(float(value))
        self._appends_since_refactor += 1

    def posterior(self, query: Optional[Sequence[int]] = None
                  ) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at the queried grid indices.

        With no argument, returns the full-grid posterior. Variances are
        clamped at zero on report.
        """
        if self.n_obs == 0:
            mean = np.zeros(self.domain.n)
            var = self._prior_var.copy()
        else:
            mean = self._v.T @ self._u
            var = self._prior_var - np.einsum("ij,ij->j", self._v, self._v)
        var = np.maximum(var, 0.0)
        if query is not None:
            q = np.asarray(query, dtype=int)
            return mean[q], var[q]
        return mean, var

    def posterior_cov_column(self, index: int) -> np.ndarray:
        """Posterior covariance between one grid point and every grid point."""
        col = self.prior_cov[:, index].copy()
        if self.n_obs:
            col -= self._v.T @ self._v[:, index]
        return col

    def posterior_cov_columns(self, indices: Sequence[int]) -> np.ndarray:
        """Posterior covariance columns for several grid points at once,
        shape (n, len(indices))."""
        idx = np.asarray(indices, dtype=int)
        cols = self.prior_cov[:, idx].copy()
        if self.n_obs:
            cols -= self._v.T @ self._v[:, idx]
        return cols


def sample_prior(domain: GridDomain, spec: KernelSpec, rng_seed) -> np.ndarray:
    """One exact joint sample of the zero-mean GP on the grid.

    Deterministic given ``rng_seed`` (accepts an int seed or a Generator).
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) \
        else np.random.default_rng(rng_seed)
    cov = grid_prior_covariance(domain, spec)
    chol = _chol_with_jitter(cov, spec.amplitude)
    return chol @ rng.standard_normal(domain.n)
