"""Full run drivers: the two-stage algorithm, its dueling-feedback variant,
the interleaved baseline, the constrained-EI baseline, and the
sample-complexity diagnostics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import acquisition as acq
from .confidence import (BetaSchedule, ConfidenceState, compute_beta,
                         init_confidence, intersect_update, replace_update)
from .gp import GPModel
from .info_gain import estimate_gamma
from .preference import PreferenceGP
from .safe_sets import SafeState, compute_expanders, expand_safe
from .synthetic import ProblemInstance, duel, observe

DEFAULT_B = 2.0
DEFAULT_DELTA = 0.1
STAGE_CAP_SENTINEL = -1


@dataclass(frozen=True)
class StageSwitch:
    """When the expansion stage hands over to optimization.

    kind "fixed": at iteration t0. kind "epsilon": when every safety width
    over the expanders drops below the run's epsilon. kind "plateau": when
    the safe-set size is unchanged for ``window`` iterations, capped at
    ``cap`` iterations (the experimental default).
    """

    kind: str = "plateau"
    t0: int = 0
    window: int = 10
    cap: int = 80

    def __post_init__(self):
        if self.kind not in ("fixed", "epsilon", "plateau"):
            raise ValueError(f"unknown stage switch {self.kind!r}")
        if self.kind == "fixed" and self.t0 < 1:
            raise ValueError("fixed switch requires t0 >= 1")


@dataclass
class RunConfig:
    T: int = 100
    stage_switch: StageSwitch = field(default_factory=StageSwitch)
    epsilon: float = 0.01
    zeta: float = 0.01
    B: float = DEFAULT_B
    delta: float = DEFAULT_DELTA
    beta_safety: Optional[BetaSchedule] = None
    beta_utility: Optional[BetaSchedule] = None
    acquisition: str = "ucb"
    variant: str = "lipschitz"
    feedback: str = "absolute"
    seed: int = 0
    start_index: Optional[int] = None
    sentinel: float = 100.0
    freeze_safety_in_stage_two: bool = False
    expander_full_counts: bool = False
    interval_mode: str = "intersect"

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.interval_mode not in ("intersect", "step"):
            raise ValueError("interval_mode must be 'intersect' or 'step'")
        if self.epsilon <= 0 or self.zeta <= 0:
            raise ValueError("epsilon and zeta must be positive")
        if self.stage_switch.kind == "fixed" and self.stage_switch.t0 > self.T:
            raise ValueError("fixed T0 must not exceed T")


@dataclass
class TraceRow:
    t: int
    stage: str
    x_index: int
    target_fn: Optional[int]
    y_f: float
    y_g: Tuple[float, ...]
    safe_size: int
    expander_size: int
    reward: float
    violation: int
    contradictions: int


@dataclass
class Trace:
    rows: List[TraceRow]
    recommended_index: int
    best_observed: float
    walltime: float
    algorithm: str
    final_safe: Optional[np.ndarray] = None

    @property
    def violations(self) -> int:
        return sum(r.violation for r in self.rows)


def _tie_seed(config: RunConfig, t: int) -> int:
    return (config.seed * 1_000_003 + t) % 2 ** 32


def _resolve_schedules(instance: ProblemInstance, config: RunConfig
                       ) -> Tuple[BetaSchedule, BetaSchedule]:
    """Default schedules use the corrected greedy gamma table of the matching
    kernel(s); the safety schedule takes the pointwise max over the safety
    kernels' tables when there are several.

    ``config.B`` bounds the norm of a unit-amplitude function: each schedule
    scales it by the function's prior standard deviation (a norm bound scales
    with the function's units), so the confidence construction is equivariant
    under rescaling any monitored function together with its noise.
    """
    sigma_u = float(np.sqrt(instance.noise_variance))
    sigma_s = float(np.sqrt(instance.safety_noise))
    beta_s, beta_u = config.beta_safety, config.beta_utility
    if beta_u is None:
        key = ("gamma", "f", config.T)
        if key not in instance._prior_covs:
            instance._prior_covs[key] = estimate_gamma(
                instance.utility_kernel, instance.domain,
                instance.noise_variance, config.T).values
        b_u = config.B * float(np.sqrt(instance.utility_kernel.amplitude))
        beta_u = BetaSchedule(b_u, sigma_u, config.delta,
                              instance._prior_covs[key])
    if beta_s is None:
        key = ("gamma", "g", config.T)
        if key not in instance._prior_covs:
            tables = [estimate_gamma(spec, instance.domain,
                                     instance.safety_noise, config.T).values
                      for spec in instance.safety_kernels]
            instance._prior_covs[key] = np.max(tables, axis=0)
        b_s = config.B * float(np.sqrt(max(
            spec.amplitude for spec in instance.safety_kernels)))
        beta_s = BetaSchedule(b_s, sigma_s, config.delta,
                              instance._prior_covs[key])
    return beta_s, beta_u


def _build_models(instance: ProblemInstance):
    safety_gps = [GPModel(instance.domain, spec, instance.safety_noise,
                          prior_cov=instance.safety_prior_cov(i))
                  for i, spec in enumerate(instance.safety_kernels)]
    utility_gp = GPModel(instance.domain, instance.utility_kernel,
                         instance.noise_variance,
                         prior_cov=instance.utility_prior_cov())
    return safety_gps, utility_gp


def _start_mask(instance: ProblemInstance, config: RunConfig) -> np.ndarray:
    idx = (int(instance.seed_indices[0]) if config.start_index is None
           else int(config.start_index))
    return instance.domain.mask_from_indices([idx])


def _expander_widths(conf: ConfidenceState, expanders: np.ndarray,
                     n_safety: int) -> np.ndarray:
    """Per-safety-function max width over the expander set (empty -> zeros)."""
    if not expanders.any():
        return np.zeros(n_safety)
    widths = conf.upper[:n_safety, expanders] - conf.lower[:n_safety, expanders]
    return widths.max(axis=1)


def _recommend(utility_mean: np.ndarray, safe: np.ndarray) -> int:
    scores = np.where(safe, utility_mean, -np.inf)
    return int(np.argmax(scores))


def _run_staged(instance: ProblemInstance, config: RunConfig,
                dueling: bool) -> Trace:
    start_time = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    beta_s_sched, beta_u_sched = _resolve_schedules(instance, config)
    safety_gps, utility_gp = _build_models(instance)
    pref: Optional[PreferenceGP] = None
    if dueling:
        pref = PreferenceGP(instance.domain, instance.utility_kernel,
                            prior_cov=instance.utility_prior_cov())
    conf = init_confidence(instance.domain, _start_mask(instance, config),
                           instance.spec.thresholds, sentinel=config.sentinel)
    state = SafeState(safe=_start_mask(instance, config), variant=config.variant)
    n_safety = instance.n_safety
    rows: List[TraceRow] = []
    reward = -np.inf
    best_observed = -np.inf
    in_stage_two = config.stage_switch.kind == "fixed" and config.stage_switch.t0 == 0
    safe_size_history: List[int] = []
    prev_index: Optional[int] = None
    switch = config.stage_switch

    update = intersect_update if config.interval_mode == "intersect" \
        else replace_update

    for t in range(1, config.T + 1):
        beta_s = compute_beta(beta_s_sched, t)
        beta_u = compute_beta(beta_u_sched, t)
        for i, gp in enumerate(safety_gps):
            mu, var = gp.posterior()
            update(conf, i, mu, np.sqrt(var), beta_s)
        if dueling:
            mu_f, var_f = pref.posterior()
        else:
            mu_f, var_f = utility_gp.posterior()
        sigma_f = np.sqrt(var_f)
        update(conf, conf.utility_row, mu_f, sigma_f, beta_u)

        if not (in_stage_two and config.freeze_safety_in_stage_two):
            expand_safe(state, conf, instance.spec, instance.domain,
                        safety_gps=safety_gps)
        safe_size_history.append(int(state.safe.sum()))

        if not in_stage_two:
            if switch.kind == "fixed" and t > switch.t0:
                in_stage_two = True
            elif switch.kind == "plateau":
                # A plateau presupposes a prior rise: the no-growth counter
                # only arms once the safe set has expanded at least once,
                # otherwise slow first certifications (common with several
                # safety functions) would end expansion before it starts.
                # The hard cap bounds the stage unconditionally.
                w = switch.window
                grown = safe_size_history[-1] > safe_size_history[0]
                if t > switch.cap or (grown and len(safe_size_history) > w and
                                      len(set(safe_size_history[-(w + 1):])) == 1):
                    in_stage_two = True

        expander_size = 0
        choice = None
        stage = "optimize"
        if not in_stage_two:
            compute_expanders(state, conf, instance.spec, instance.domain,
                              safety_gps=safety_gps, beta=beta_s,
                              count_all=config.expander_full_counts)
            expander_size = int(state.expanders.sum())
            if expander_size == 0:
                # Nothing can be enlarged right now.  Under a fixed horizon
                # this hands over to optimization for good; under adaptive
                # switches the expansion stage keeps sampling the widest
                # safety interval over the whole safe set, since reducing
                # boundary uncertainty can reopen the expander set.
                if switch.kind == "fixed":
                    in_stage_two = True
                else:
                    choice = acq.select_expansion(conf, state.safe, n_safety,
                                                  _tie_seed(config, t))
                    stage = "expand"
            else:
                eps_widths = _expander_widths(conf, state.expanders, n_safety)
                if np.all(eps_widths < config.epsilon):
                    if switch.kind == "epsilon":
                        in_stage_two = True
                    else:
                        # Expander uncertainty resolved: select by UCB while
                        # formally still in the expansion stage.
                        choice = acq.select_ucb(mu_f, sigma_f, state.safe,
                                                beta_u, _tie_seed(config, t))
                        stage = "expand"
                else:
                    choice = acq.select_expansion(conf, state.expanders,
                                                  n_safety, _tie_seed(config, t))
                    stage = "expand"
        if choice is None:
            choice = _select_stage_two(config, mu_f, sigma_f, state.safe,
                                       beta_u, best_observed, t)
            stage = "optimize"

        x_t = choice.index
        if dueling:
            opponent = prev_index if prev_index is not None \
                else _safest_seed(instance, conf, state.safe)
            y_f = float(duel(instance, x_t, opponent, rng))
            pref.add_duel(x_t, opponent, int(y_f))
            pref.fit()
        else:
            y_f = observe(instance, "f", x_t, rng)
            utility_gp.add_observation(x_t, y_f)
            best_observed = max(best_observed, y_f)
        y_g = tuple(observe(instance, i, x_t, rng) for i in range(n_safety))
        for i, gp in enumerate(safety_gps):
            if in_stage_two and config.freeze_safety_in_stage_two:
                continue
            gp.add_observation(x_t, y_g[i])

        reward = max(reward, float(instance.f_true[x_t]))
        rows.append(TraceRow(
            t=t, stage=stage, x_index=x_t,
            target_fn=choice.target_fn, y_f=y_f, y_g=y_g,
            safe_size=safe_size_history[-1], expander_size=expander_size,
            reward=reward, violation=int(instance.is_violation(x_t)),
            contradictions=conf.contradictions))
        prev_index = x_t

    final_mean = pref.posterior()[0] if dueling else utility_gp.posterior()[0]
    return Trace(rows=rows, recommended_index=_recommend(final_mean, state.safe),
                 best_observed=best_observed,
                 walltime=time.perf_counter() - start_time,
                 algorithm="stageopt_dueling" if dueling else "stageopt",
                 final_safe=state.safe.copy())


def _select_stage_two(config: RunConfig, mu_f, sigma_f, safe, beta_u,
                      best_observed, t):
    seed = _tie_seed(config, t)
    incumbent = best_observed if np.isfinite(best_observed) else -config.sentinel
    if config.acquisition == "ucb":
        return acq.select_ucb(mu_f, sigma_f, safe, beta_u, seed)
    if config.acquisition == "ei":
        return acq.select_ei(mu_f, sigma_f, safe, incumbent, seed)
    if config.acquisition == "mpi":
        return acq.select_mpi(mu_f, sigma_f, safe, incumbent,
                              tie_break_seed=seed)
    raise ValueError(f"unsupported stage-two acquisition {config.acquisition!r}")


def _safest_seed(instance: ProblemInstance, conf: ConfidenceState,
                 safe: np.ndarray) -> int:
    """First-duel opponent: the safe point with the highest worst-case safety
    lower bound."""
    floor = conf.lower[:instance.n_safety].min(axis=0)
    scores = np.where(safe, floor, -np.inf)
    return int(np.argmax(scores))


def run_stageopt(instance: ProblemInstance, config: RunConfig) -> Trace:
    """Two-stage run: expansion until the configured switch, then the
    configured acquisition over the (still maintained) safe set."""
    if config.feedback == "dueling":
        return _run_staged(instance, config, dueling=True)
    return _run_staged(instance, config, dueling=False)


def run_stageopt_dueling(instance: ProblemInstance, config: RunConfig) -> Trace:
    """Two-stage run with Bernoulli comparison feedback for the utility;
    safety feedback stays real-valued."""
    return _run_staged(instance, config, dueling=True)


def run_safeopt(instance: ProblemInstance, config: RunConfig) -> Trace:
    """Interleaved baseline: every iteration selects the point of maximal
    interval width over the union of expanders and potential maximizers."""
    start_time = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    beta_s_sched, beta_u_sched = _resolve_schedules(instance, config)
    safety_gps, utility_gp = _build_models(instance)
    conf = init_confidence(instance.domain, _start_mask(instance, config),
                           instance.spec.thresholds, sentinel=config.sentinel)
    state = SafeState(safe=_start_mask(instance, config), variant=config.variant)
    n_safety = instance.n_safety
    scales = np.sqrt(np.array(
        [k.amplitude for k in instance.safety_kernels]
        + [instance.utility_kernel.amplitude]))
    rows: List[TraceRow] = []
    reward = -np.inf
    best_observed = -np.inf

    update = intersect_update if config.interval_mode == "intersect" \
        else replace_update

    for t in range(1, config.T + 1):
        beta_s = compute_beta(beta_s_sched, t)
        beta_u = compute_beta(beta_u_sched, t)
        for i, gp in enumerate(safety_gps):
            mu, var = gp.posterior()
            update(conf, i, mu, np.sqrt(var), beta_s)
        mu_f, var_f = utility_gp.posterior()
        update(conf, conf.utility_row, mu_f, np.sqrt(var_f), beta_u)

        expand_safe(state, conf, instance.spec, instance.domain,
                    safety_gps=safety_gps)
        compute_expanders(state, conf, instance.spec, instance.domain,
                          safety_gps=safety_gps, beta=beta_s,
                          count_all=config.expander_full_counts)
        u_f = conf.upper[conf.utility_row]
        l_f = conf.lower[conf.utility_row]
        maximizers = state.safe & (u_f >= l_f[state.safe].max())
        candidates = state.expanders | maximizers
        # Widths are normalised by each function's prior standard deviation
        # so that functions on different amplitude scales compete fairly.
        widths = ((conf.upper - conf.lower) / scales[:, None]).max(axis=0)
        cand_idx = np.flatnonzero(candidates)
        cand_w = widths[cand_idx]
        tied = cand_idx[cand_w == cand_w.max()]
        if len(tied) > 1:
            tied = np.random.default_rng(_tie_seed(config, t)).permutation(tied)
        x_t = int(tied[0])
        stage = "expand" if state.expanders[x_t] else "optimize"

        y_f = observe(instance, "f", x_t, rng)
        best_observed = max(best_observed, y_f)
        utility_gp.add_observation(x_t, y_f)
        y_g = tuple(observe(instance, i, x_t, rng) for i in range(n_safety))
        for i, gp in enumerate(safety_gps):
            gp.add_observation(x_t, y_g[i])

        reward = max(reward, float(instance.f_true[x_t]))
        rows.append(TraceRow(
            t=t, stage=stage, x_index=x_t, target_fn=None, y_f=y_f, y_g=y_g,
            safe_size=int(state.safe.sum()),
            expander_size=int(state.expanders.sum()),
            reward=reward, violation=int(instance.is_violation(x_t)),
            contradictions=conf.contradictions))

    return Trace(rows=rows,
                 recommended_index=_recommend(utility_gp.posterior()[0], state.safe),
                 best_observed=best_observed,
                 walltime=time.perf_counter() - start_time,
                 algorithm="safeopt", final_safe=state.safe.copy())


def run_cei(instance: ProblemInstance, config: RunConfig) -> Trace:
    """Constrained-EI baseline: per-step admissibility bar delta/T, no
    safe-set machinery. Steps with no admissible point fall back to the run's
    seed and are flagged with stage "fallback"."""
    start_time = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    safety_gps, utility_gp = _build_models(instance)
    seed_index = (int(instance.seed_indices[0]) if config.start_index is None
                  else int(config.start_index))
    p_min = config.delta / config.T
    rows: List[TraceRow] = []
    reward = -np.inf
    best_observed = -np.inf
    full = instance.domain.full_mask()

    for t in range(1, config.T + 1):
        mu_f, var_f = utility_gp.posterior()
        sigma_f = np.sqrt(var_f)
        posteriors = []
        for gp in safety_gps:
            mu, var = gp.posterior()
            posteriors.append((mu, np.sqrt(var)))
        incumbent = best_observed if np.isfinite(best_observed) else -config.sentinel
        admissible = acq.safety_probability(
            posteriors, instance.spec.thresholds) >= 1.0 - p_min
        stage = "optimize"
        if admissible.any():
            try:
                choice = acq.select_cei(mu_f, sigma_f, posteriors,
                                        instance.spec.thresholds, incumbent,
                                        p_min, _tie_seed(config, t))
                x_t = choice.index
            except acq.NoAdmissiblePoint:  # pragma: no cover - guarded above
                x_t, stage = seed_index, "fallback"
        else:
            x_t, stage = seed_index, "fallback"

        y_f = observe(instance, "f", x_t, rng)
        best_observed = max(best_observed, y_f)
        utility_gp.add_observation(x_t, y_f)
        y_g = tuple(observe(instance, i, x_t, rng) for i in range(instance.n_safety))
        for i, gp in enumerate(safety_gps):
            gp.add_observation(x_t, y_g[i])

        reward = max(reward, float(instance.f_true[x_t]))
        rows.append(TraceRow(
            t=t, stage=stage, x_index=x_t, target_fn=None, y_f=y_f, y_g=y_g,
            safe_size=int(admissible.sum()), expander_size=0,
            reward=reward, violation=int(instance.is_violation(x_t)),
            contradictions=0))

    return Trace(rows=rows,
                 recommended_index=_recommend(utility_gp.posterior()[0], full),
                 best_observed=best_observed,
                 walltime=time.perf_counter() - start_time,
                 algorithm="cei", final_safe=None)


ALGORITHMS = {
    "stageopt": run_stageopt,
    "safeopt": run_safeopt,
    "cei": run_cei,
    "stageopt_dueling": run_stageopt_dueling,
}


def theorem1_tstar(schedule: BetaSchedule, closure_size: int, n_safety: int,
                   epsilon: float, noise_std: Optional[float] = None,
                   cap: int = 100_000) -> Optional[int]:
    """Smallest t with t / (beta_t^2 * gamma_{n t}) >= C1 (closure_size + 1) / eps^2,
    C1 = 8 / log(1 + sigma^-2). Returns None if no t <= cap qualifies."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    sigma = schedule.sigma if noise_std is None else noise_std
    with np.errstate(divide="ignore"):
        log_term = np.log1p(np.inf if sigma == 0 else sigma ** -2)
    if log_term == 0.0:
        return None
    c1 = 8.0 / log_term
    rhs = c1 * (closure_size + 1) / epsilon ** 2
    for t in range(1, cap + 1):
        beta = compute_beta(schedule, t)
        gamma_nt = schedule.gamma(n_safety * t)
        if t / (beta ** 2 * max(gamma_nt, np.finfo(float).tiny)) >= rhs:
            return t
    return None


def theorem2_Y(schedule: BetaSchedule, zeta: float,
               cap: int = 100_000) -> Optional[int]:
    """Smallest Y with (4 sqrt(2) / sqrt(Y)) (B sqrt(gamma_Y)
    + sigma sqrt(2 gamma_Y (gamma_Y + 1 + log(1/delta)))) <= zeta."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    for y in range(1, cap + 1):
        g = schedule.gamma(y)
        lhs = (4.0 * np.sqrt(2.0) / np.sqrt(y)) * (
            schedule.B * np.sqrt(g)
            + schedule.sigma * np.sqrt(2.0 * g * (g + 1.0 + np.log(1.0 / schedule.delta))))
        if lhs <= zeta:
            return y
    return None
