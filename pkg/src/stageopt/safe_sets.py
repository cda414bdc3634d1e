"""Safe-set growth and expander identification.

Two variants are supported:

* ``lipschitz``: certification by Lipschitz continuity from points whose
  lower confidence bound clears the threshold (the default, and the one the
  theory covers).
* ``gp_only``: certification directly from the GP lower bounds, with
  expanders found by a hypothetical noiseless observation of a point's upper
  bound (a rank-1 posterior update per candidate).

The safe set is explicitly unioned with its predecessor in both variants, so
nestedness holds structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _core
from .confidence import ConfidenceState
from .domain import GridDomain
from .gp import GPModel

VARIANTS = ("lipschitz", "gp_only")


@dataclass
class SafetySpec:
    """Thresholds and Lipschitz constants, one per safety function."""

    thresholds: np.ndarray
    lipschitz: np.ndarray

    def __post_init__(self):
        self.thresholds = np.atleast_1d(np.asarray(self.thresholds, dtype=float))
        self.lipschitz = np.atleast_1d(np.asarray(self.lipschitz, dtype=float))
        if self.thresholds.shape != self.lipschitz.shape:
            raise ValueError("thresholds and lipschitz must align")
        if np.any(self.lipschitz < 0):
            raise ValueError("Lipschitz constants must be nonnegative")
        if not np.all(np.isfinite(self.thresholds)):
            raise ValueError("thresholds must be finite")

    @property
    def n_safety(self) -> int:
        return len(self.thresholds)


@dataclass
class SafeState:
    """Current safe mask, expander mask, and per-point enlargement counts."""

    safe: np.ndarray
    expanders: np.ndarray = field(default=None)
    expansion_counts: np.ndarray = field(default=None)
    variant: str = "lipschitz"

    def __post_init__(self):
        self.safe = np.asarray(self.safe, dtype=bool)
        if self.expanders is None:
            self.expanders = np.zeros_like(self.safe)
        if self.expansion_counts is None:
            self.expansion_counts = np.zeros(len(self.safe), dtype=np.int64)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


def expand_safe(state: SafeState, conf: ConfidenceState, spec: SafetySpec,
                domain: GridDomain,
                safety_gps: Optional[Sequence[GPModel]] = None) -> SafeState:
    """Grow the safe set one round from the current confidence bounds."""
    if not state.safe.any():
        raise ValueError("safe set must be nonempty")
    if state.variant == "lipschitz":
        new_safe = _core.lipschitz_expand(
            conf.lower[:spec.n_safety], domain.distances(),
            spec.lipschitz, spec.thresholds, state.safe)
    else:
        certified = np.all(conf.lower[:spec.n_safety] >= spec.thresholds[:, None],
                           axis=0)
        new_safe = state.safe | certified
    state.safe = new_safe
    return state


def compute_expanders(state: SafeState, conf: ConfidenceState, spec: SafetySpec,
                      domain: GridDomain,
                      safety_gps: Optional[Sequence[GPModel]] = None,
                      beta: Optional[float] = None,
                      count_all: bool = False) -> SafeState:
    """Identify expanders among the current safe points.

    The selection rule only needs membership, so counting stops at the first
    certified non-safe point unless ``count_all`` is set. The gp_only variant
    needs the safety GPs and the current beta for its hypothetical updates.
    """
    if state.variant == "lipschitz":
        counts = _core.expander_counts(
            conf.upper[:spec.n_safety], domain.distances(),
            spec.lipschitz, spec.thresholds, state.safe, count_all=count_all)
    else:
        if safety_gps is None or beta is None:
            raise ValueError("gp_only expanders need safety GPs and beta")
        counts = _gp_only_counts(state, conf, spec, safety_gps, beta, count_all)
    state.expansion_counts = counts
    state.expanders = state.safe & (counts > 0)
    return state


def _gp_only_counts(state: SafeState, conf: ConfidenceState, spec: SafetySpec,
                    safety_gps: Sequence[GPModel], beta: float,
                    count_all: bool) -> np.ndarray:
    n = len(state.safe)
    counts = np.zeros(n, dtype=np.int64)
    unsafe = ~state.safe
    if not unsafe.any():
        return counts
    cand = np.flatnonzero(state.safe)
    # ok[j, c]: after a hypothetical noiseless observation of u(x_c) at the
    # candidate x_c, does the non-safe point j clear every threshold?
    ok = np.broadcast_to(unsafe[:, None], (n, len(cand))).copy()
    for i, gp in enumerate(safety_gps):
        mu, var = gp.posterior()
        var_x = var[cand]
        cov = gp.posterior_cov_columns(cand)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(var_x > 0.0, cov / var_x, 0.0)
        hyp_mu = mu[:, None] + gain * (conf.upper[i, cand] - mu[cand])
        hyp_var = np.maximum(var[:, None] - gain * cov, 0.0)
        degenerate = var_x <= 0.0
        if degenerate.any():
            # A noiseless pseudo-observation at a fully resolved point adds
            # no information; the posterior is unchanged.
            hyp_mu[:, degenerate] = mu[:, None]
            hyp_var[:, degenerate] = var[:, None]
        hyp_lower = np.maximum(conf.lower[i][:, None],
                               hyp_mu - beta * np.sqrt(hyp_var))
        ok &= hyp_lower >= spec.thresholds[i]
        if not ok.any():
            break
    per_cand = ok.sum(axis=0) if count_all else ok.any(axis=0).astype(np.int64)
    counts[cand] = per_cand
    return counts
