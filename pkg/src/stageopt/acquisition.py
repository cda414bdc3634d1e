"""Point-selection rules.

Every rule is a pure function of posterior snapshots and a candidate mask.
Ties are broken deterministically: tied candidates are shuffled with the
given seed and the first one is taken, so repeated calls with identical
inputs select the same point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from .confidence import ConfidenceState

RULES = ("max_width", "ucb", "ei", "mpi", "cei")


class EmptyExpanderSet(Exception):
    """No expander is available; the caller decides whether to switch stages."""


class NoAdmissiblePoint(Exception):
    """No point clears the constrained-EI safety probability bar."""


@dataclass(frozen=True)
class AcquisitionChoice:
    index: int
    score: float
    rule: str
    tie_break_seed: int
    target_fn: Optional[int] = None


def _argmax_with_ties(scores: np.ndarray, candidates: np.ndarray,
                      seed: int) -> int:
    """Index (into the full grid) of the max score over candidate points."""
    cand_idx = np.flatnonzero(candidates)
    cand_scores = scores[cand_idx]
    best = np.max(cand_scores)
    tied = cand_idx[cand_scores == best]
    if len(tied) == 1:
        return int(tied[0])
    shuffled = np.random.default_rng(seed).permutation(tied)
    return int(shuffled[0])


def select_expansion(conf: ConfidenceState, expanders: np.ndarray,
                     n_safety: int, tie_break_seed: int = 0) -> AcquisitionChoice:
    """Widest safety interval over the expander set, maximized over points
    and safety functions jointly."""
    expanders = np.asarray(expanders, dtype=bool)
    if not expanders.any():
        raise EmptyExpanderSet("expander set is empty")
    widths = conf.upper[:n_safety] - conf.lower[:n_safety]
    per_point = widths.max(axis=0)
    idx = _argmax_with_ties(per_point, expanders, tie_break_seed)
    target = int(np.argmax(widths[:, idx]))
    return AcquisitionChoice(idx, float(per_point[idx]), "max_width",
                             tie_break_seed, target_fn=target)


def select_ucb(mu: np.ndarray, sigma: np.ndarray, safe: np.ndarray,
               beta: float, tie_break_seed: int = 0) -> AcquisitionChoice:
    safe = np.asarray(safe, dtype=bool)
    if not safe.any():
        raise ValueError("safe set is empty")
    scores = mu + beta * sigma
    idx = _argmax_with_ties(scores, safe, tie_break_seed)
    return AcquisitionChoice(idx, float(scores[idx]), "ucb", tie_break_seed)


def expected_improvement(mu: np.ndarray, sigma: np.ndarray,
                         incumbent: float) -> np.ndarray:
    """Closed-form EI of a Gaussian posterior over a known incumbent."""
    diff = mu - incumbent
    ei = np.maximum(diff, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = diff[pos] / sigma[pos]
        ei[pos] = diff[pos] * norm.cdf(z) + sigma[pos] * norm.pdf(z)
    return ei


def select_ei(mu: np.ndarray, sigma: np.ndarray, safe: np.ndarray,
              incumbent: float, tie_break_seed: int = 0) -> AcquisitionChoice:
    safe = np.asarray(safe, dtype=bool)
    if not safe.any():
        raise ValueError("safe set is empty")
    scores = expected_improvement(mu, sigma, incumbent)
    idx = _argmax_with_ties(scores, safe, tie_break_seed)
    return AcquisitionChoice(idx, float(scores[idx]), "ei", tie_break_seed)


def improvement_probability(mu: np.ndarray, sigma: np.ndarray,
                            incumbent: float, margin: float = 0.0) -> np.ndarray:
    diff = mu - incumbent - margin
    prob = (diff >= 0).astype(float)
    pos = sigma > 0
    if np.any(pos):
        prob[pos] = norm.cdf(diff[pos] / sigma[pos])
    return prob


def select_mpi(mu: np.ndarray, sigma: np.ndarray, safe: np.ndarray,
               incumbent: float, margin: float = 0.0,
               tie_break_seed: int = 0) -> AcquisitionChoice:
    safe = np.asarray(safe, dtype=bool)
    if not safe.any():
        raise ValueError("safe set is empty")
    scores = improvement_probability(mu, sigma, incumbent, margin)
    idx = _argmax_with_ties(scores, safe, tie_break_seed)
    return AcquisitionChoice(idx, float(scores[idx]), "mpi", tie_break_seed)


def safety_probability(safety_posteriors: Sequence[Tuple[np.ndarray, np.ndarray]],
                       thresholds: Sequence[float]) -> np.ndarray:
    """Product over constraints of Pr[g_i(x) >= h_i] under independent
    Gaussian posteriors."""
    prob = None
    for (mu, sigma), h in zip(safety_posteriors, thresholds):
        diff = mu - h
        p = (diff >= 0).astype(float)
        pos = sigma > 0
        if np.any(pos):
            p[pos] = norm.cdf(diff[pos] / sigma[pos])
        prob = p if prob is None else prob * p
    return prob


def select_cei(mu: np.ndarray, sigma: np.ndarray,
               safety_posteriors: Sequence[Tuple[np.ndarray, np.ndarray]],
               thresholds: Sequence[float], incumbent: float,
               p_min: float, tie_break_seed: int = 0) -> AcquisitionChoice:
    """Constrained EI: EI restricted to points whose safety probability
    product is at least 1 - p_min."""
    prob = safety_probability(safety_posteriors, thresholds)
    admissible = prob >= 1.0 - p_min
    if not admissible.any():
        raise NoAdmissiblePoint("no point clears the safety probability bar")
    scores = expected_improvement(mu, sigma, incumbent)
    idx = _argmax_with_ties(scores, admissible, tie_break_seed)
    return AcquisitionChoice(idx, float(scores[idx]), "cei", tie_break_seed)
