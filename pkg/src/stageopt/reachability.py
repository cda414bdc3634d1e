"""Brute-force ground-truth reachability oracle.

Deliberately naive: plain scans over (source point, candidate point) pairs
per safety function, independent of the algorithms' safe-set code paths, so
it can serve as a yardstick in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import GridDomain


@dataclass
class ReachabilityQuery:
    """True safety values, thresholds, Lipschitz constants, and slack."""

    domain: GridDomain
    safety_values: np.ndarray   # (n_safety, n_points) true g_i on the grid
    thresholds: np.ndarray
    lipschitz: np.ndarray
    epsilon: float = 0.0

    def __post_init__(self):
        self.safety_values = np.atleast_2d(np.asarray(self.safety_values, dtype=float))
        self.thresholds = np.atleast_1d(np.asarray(self.thresholds, dtype=float))
        self.lipschitz = np.atleast_1d(np.asarray(self.lipschitz, dtype=float))
        if self.safety_values.shape[1] != self.domain.n:
            raise ValueError("safety values must cover the domain")
        if self.epsilon < 0:
            raise ValueError("slack must be nonnegative")

    def validate_start(self, start: np.ndarray) -> None:
        start = np.asarray(start, dtype=bool)
        if not start.any():
            raise ValueError("start set must be nonempty")
        for g, h in zip(self.safety_values, self.thresholds):
            if np.any(g[start] < h):
                raise ValueError("start set contains an unsafe point")


def one_step_reach(q: ReachabilityQuery, current: np.ndarray) -> np.ndarray:
    """Exact evaluation of the one-step reachability operator on a set."""
    current = np.asarray(current, dtype=bool)
    dist = q.domain.distances()
    n = q.domain.n
    out = current.copy()
    sources = np.flatnonzero(current)
    for x in range(n):
        if out[x]:
            continue
        certified = True
        for g, h, lip in zip(q.safety_values, q.thresholds, q.lipschitz):
            found = False
            for s in sources:
                if g[s] - q.epsilon - lip * dist[s, x] >= h:
                    found = True
                    break
            if not found:
                certified = False
                break
        if certified:
            out[x] = True
    return out


def reach_T(q: ReachabilityQuery, start: np.ndarray, steps: int) -> np.ndarray:
    """steps-fold composition of the one-step operator."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    current = np.asarray(start, dtype=bool).copy()
    for _ in range(steps):
        current = one_step_reach(q, current)
    return current


def reach_closure(q: ReachabilityQuery, start: np.ndarray) -> np.ndarray:
    """Fixed point of the one-step operator; terminates within |D| rounds
    by monotonicity."""
    current = np.asarray(start, dtype=bool).copy()
    for _ in range(q.domain.n):
        nxt = one_step_reach(q, current)
        if np.array_equal(nxt, current):
            return nxt
        current = nxt
    return current
