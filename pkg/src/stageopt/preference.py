"""Laplace-approximated pairwise-preference GP for dueling feedback.

Comparison outcomes between two grid points are Bernoulli with win
probability given by a link function of the latent utility difference
(logistic by default). The latent utility over the grid is estimated by
Newton iteration on the penalized log-likelihood; the posterior is the
Gaussian Laplace approximation at the mode.
"""

from __future__ import annotations

from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .domain import GridDomain
from .gp import ConditioningError, _chol_with_jitter, grid_prior_covariance
from .kernels import KernelSpec

MAX_NEWTON_ITER = 100
NEWTON_TOL = 1e-6


def logit_link(u, v):
    """Win probability of the first argument: (1 + exp(v - u))^-1."""
    return expit(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))


class PreferenceNonConvergence(RuntimeError):
    """Newton iteration failed to reach the mode within the iteration cap."""


class PreferenceGP:
    """Latent utility model over a grid, learned from pairwise duels.

    Duels are (candidate a, opponent b, outcome y) with y = 1 when a won.
    ``fit`` must be called after appending duels; posterior accessors use the
    most recent fit.
    """

    def __init__(self, domain: GridDomain, spec: KernelSpec,
                 link: Callable = logit_link,
                 prior_cov: Optional[np.ndarray] = None):
        self.domain = domain
        self.spec = spec
        self.link = link
        self.prior_cov = (grid_prior_covariance(domain, spec)
                          if prior_cov is None else np.asarray(prior_cov, dtype=float))
        self.duels: List[Tuple[int, int, int]] = []
        self._mode: Optional[np.ndarray] = None
        self._cov: Optional[np.ndarray] = None
        chol = _chol_with_jitter(self.prior_cov, spec.amplitude)
        inv_chol = np.linalg.inv(chol)
        self._prior_inv = inv_chol.T @ inv_chol

    @property
    def n_obs(self) -> int:
        return len(self.duels)

    def add_duel(self, winner_candidate: int, opponent: int, outcome: int) -> None:
        if outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")
        self.duels.append((int(winner_candidate), int(opponent), int(outcome)))

    def _loglik_grad_hess(self, f: np.ndarray):
        n = self.domain.n
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        for a, b, y in self.duels:
            p = float(expit(f[a] - f[b]))
            g = y - p
            grad[a] += g
            grad[b] -= g
            w = p * (1.0 - p)
            hess[a, a] += w
            hess[b, b] += w
            hess[a, b] -= w
            hess[b, a] -= w
        return grad, hess

    def fit(self) -> None:
        """Newton iteration for the latent mode plus the Laplace covariance."""
        if not self.duels:
            raise ValueError("at least one duel is required before fitting")
        f = self._mode.copy() if self._mode is not None else np.zeros(self.domain.n)
        for _ in range(MAX_NEWTON_ITER):
            grad, w = self._loglik_grad_hess(f)
            h = self._prior_inv + w
            try:
                step = np.linalg.solve(h, grad - self._prior_inv @ f)
            except np.linalg.LinAlgError as exc:
                raise ConditioningError("preference Hessian solve failed") from exc
            f = f + step
            if np.max(np.abs(step)) < NEWTON_TOL:
                break
        else:
            raise PreferenceNonConvergence(
                f"no convergence in {MAX_NEWTON_ITER} Newton iterations "
                f"({self.n_obs} duels)")
        _, w = self._loglik_grad_hess(f)
        self._mode = f
        self._cov = np.linalg.inv(self._prior_inv + w)

    def posterior(self, query=None) -> Tuple[np.ndarray, np.ndarray]:
        """Laplace posterior mean and variance (prior if never fit)."""
        if self._mode is None:
            mean = np.zeros(self.domain.n)
            var = np.diag(self.prior_cov).copy()
        else:
            mean = self._mode.copy()
            var = np.maximum(np.diag(self._cov), 0.0)
        if query is not None:
            q = np.asarray(query, dtype=int)
            return mean[q], var[q]
        return mean, var


def fit_preference(pgp: PreferenceGP) -> PreferenceGP:
    pgp.fit()
    return pgp
