"""Confidence machinery: the scaling schedule beta_t and running-intersection
intervals per monitored function.

Intervals only ever tighten: each update intersects the current interval with
the new posterior credible interval, which makes lower bounds monotonically
non-decreasing and upper bounds non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .domain import GridDomain

# Unbounded interval ends are represented by a finite sentinel so that
# arithmetic on bounds stays total. Two orders of magnitude above a unit
# amplitude by default; configurable per state.
DEFAULT_SENTINEL = 100.0

GammaSource = Union[float, Sequence[float], Callable[[int], float]]


@dataclass
class BetaSchedule:
    """Confidence scaling beta_t = B + sigma * sqrt(2 (gamma_{t-1} + 1 + log(1/delta))).

    ``gamma_source`` may be a constant, a table indexed by t (gamma_0 = 0 at
    index 0), or a callable t -> gamma_t.
    """

    B: float
    sigma: float
    delta: float
    gamma_source: GammaSource = 0.0

    def __post_init__(self):
        if self.B < 0:
            raise ValueError("B must be nonnegative")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    def gamma(self, t: int) -> float:
        src = self.gamma_source
        if callable(src):
            return float(src(t))
        if np.ndim(src) == 0:
            return float(src)
        table = np.asarray(src, dtype=float)
        # Beyond the precomputed horizon, hold the last value.
        return float(table[min(t, len(table) - 1)])


def compute_beta(schedule: BetaSchedule, t: int) -> float:
    """beta_t for iteration t >= 1, using gamma_{t-1} from the source."""
    if t < 1:
        raise ValueError("iteration index must be >= 1")
    gamma_prev = schedule.gamma(t - 1)
    return schedule.B + schedule.sigma * np.sqrt(
        2.0 * (gamma_prev + 1.0 + np.log(1.0 / schedule.delta)))


class ConfidenceState:
    """Per-point interval bounds for each safety function plus the utility.

    Rows 0..n_safety-1 hold the safety functions; the last row holds the
    utility. ``contradictions`` counts updates where the incoming credible
    interval was disjoint from the running interval (possible only under
    misspecification); such intervals collapse to their midpoint.
    """

    def __init__(self, n_points: int, n_safety: int,
                 sentinel: float = DEFAULT_SENTINEL):
        if sentinel <= 0:
            raise ValueError("sentinel must be positive")
        self.n_safety = n_safety
        self.sentinel = float(sentinel)
        n_fn = n_safety + 1
        self.lower = np.full((n_fn, n_points), -self.sentinel)
        self.upper = np.full((n_fn, n_points), self.sentinel)
        self.contradictions = 0

    @property
    def utility_row(self) -> int:
        return self.n_safety

    def width(self, fn_row: int) -> np.ndarray:
        return self.upper[fn_row] - self.lower[fn_row]

    def copy(self) -> "ConfidenceState":
        out = ConfidenceState(self.lower.shape[1], self.n_safety, self.sentinel)
        out.lower = self.lower.copy()
        out.upper = self.upper.copy()
        out.contradictions = self.contradictions
        return out


def init_confidence(domain: GridDomain, seed_set: np.ndarray,
                    thresholds: Sequence[float],
                    sentinel: float = DEFAULT_SENTINEL) -> ConfidenceState:
    """Initial intervals: [h_i, +inf) on seed points for each safety function,
    unbounded elsewhere and for the utility."""
    seed_set = np.asarray(seed_set, dtype=bool)
    if not seed_set.any():
        raise ValueError("seed set must be nonempty")
    thresholds = np.asarray(thresholds, dtype=float)
    state = ConfidenceState(domain.n, len(thresholds), sentinel)
    for i, h in enumerate(thresholds):
        state.lower[i, seed_set] = h
    return state


def intersect_update(state: ConfidenceState, fn_row: int, mu: np.ndarray,
                     sigma: np.ndarray, beta: float) -> ConfidenceState:
    """Intersect the running interval with mu +- beta * sigma at every point."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    new_lower = np.maximum(state.lower[fn_row], mu - beta * sigma)
    new_upper = np.minimum(state.upper[fn_row], mu + beta * sigma)
    bad = new_lower > new_upper
    if np.any(bad):
        mid = 0.5 * (new_lower[bad] + new_upper[bad])
        new_lower[bad] = mid
        new_upper[bad] = mid
        state.contradictions += int(np.count_nonzero(bad))
    state.lower[fn_row] = new_lower
    state.upper[fn_row] = new_upper
    return state


def replace_update(state: ConfidenceState, fn_row: int, mu: np.ndarray,
                   sigma: np.ndarray, beta: float) -> ConfidenceState:
    """Overwrite the interval with mu +- beta * sigma at every point.

    The per-step alternative to :func:`intersect_update`: intervals track the
    current posterior only, so they can widen again and never contradict.
    Trades the sequential-containment property for robustness when beta is
    calibrated aggressively (a collapsed running intersection can otherwise
    pin a point's bounds below the safety threshold for good).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    state.lower[fn_row] = mu - beta * sigma
    state.upper[fn_row] = mu + beta * sigma
    return state
