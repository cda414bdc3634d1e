"""Covariance functions: squared-exponential, Matern with general smoothness,
and precomputed tables.

``amplitude`` is the prior variance k(x, x). ``length_scale`` may be a scalar
or one value per input dimension (automatic relevance scaling of distances).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma as gamma_fn, kv


@dataclass(frozen=True)
class KernelSpec:
    """Stationary kernel description.

    family: "squared_exponential", "matern", or "precomputed".
    nu: Matern smoothness (ignored otherwise).
    table: full kernel matrix for the "precomputed" family, indexed like the
    domain the spec is used with.
    """

    family: str = "matern"
    length_scale: Union[float, np.ndarray] = 0.2
    amplitude: float = 1.0
    nu: float = 1.2
    table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in ("squared_exponential", "matern", "precomputed"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if np.any(np.asarray(self.length_scale) <= 0):
            raise ValueError("length_scale must be positive")
        if self.family == "precomputed" and self.table is None:
            raise ValueError("precomputed kernel requires a table")


def _scaled_dists(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    ls = np.asarray(spec.length_scale, dtype=float)
    return cdist(a / ls, b / ls)


def matern_correlation(r: np.ndarray, nu: float) -> np.ndarray:
    """Matern correlation at scaled distance r (zero distance maps to 1)."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    zero = r <= 0.0
    out[zero] = 1.0
    if np.any(~zero):
        z = np.sqrt(2.0 * nu) * r[~zero]
        out[~zero] = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * (z ** nu) * kv(nu, z)
    return out


def kernel_eval(spec: KernelSpec, x, x_prime) -> float:
    """k(x, x'); k(x, x) equals the amplitude."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x_prime))):
        raise ValueError("coordinates must be finite")
    if x.shape != x_prime.shape:
        raise ValueError("points must share a dimension")
    if spec.family == "precomputed":
        raise ValueError("precomputed kernels are indexed, not evaluated at "
                         "coordinates; use kernel_matrix with indices")
    return float(kernel_matrix(spec, x[None, :], x_prime[None, :])[0, 0])


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: Optional[np.ndarray] = None,
                  indices_a=None, indices_b=None) -> np.ndarray:
    """Cross-covariance matrix between point arrays (or table indices)."""
    if spec.family == "precomputed":
        ia = np.arange(spec.table.shape[0]) if indices_a is None else np.asarray(indices_a)
        ib = ia if indices_b is None else np.asarray(indices_b)
        return spec.table[np.ix_(ia, ib)]
    if b is None:
        b = a
    r = _scaled_dists(spec, a, b)
    if spec.family == "squared_exponential":
        corr = np.exp(-0.5 * r ** 2)
    else:
        corr = matern_correlation(r, spec.nu)
    return spec.amplitude * corr
