"""Synthetic problem instances: GP-sampled utility and safety functions on a
uniform grid, thresholds from grid statistics, safe seeds, and the noisy
observation / duel oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .domain import GridDomain, lipschitz_constant, make_uniform_grid
from .gp import grid_prior_covariance, sample_prior
from .kernels import KernelSpec
from .preference import logit_link
from .safe_sets import SafetySpec

SCENARIOS = ("one_safety", "three_safety")
DEFAULT_NOISE_VARIANCE = 0.0025
SEEDS_PER_INSTANCE = 10
MAX_GENERATION_RETRIES = 100

# Safety amplitude is 0.1x the utility's. The ratio applies to the kernel
# amplitude (prior variance), matching the usual covariance-function
# parameterization; flip to "std" to scale the standard deviation instead
# (variance ratio 0.01). The variance reading keeps the safety signal well
# above the observation noise, so safe regions finish most of their growth
# within the first 40 iterations.
AMPLITUDE_RATIO = 0.1
AMPLITUDE_RATIO_APPLIES_TO = "variance"


class GenerationError(RuntimeError):
    """No valid safe seed found within the retry budget."""


@dataclass
class ProblemInstance:
    """Ground truth for one synthetic run family.

    ``seed_indices`` holds the candidate safe seeds drawn for this instance;
    a single run starts from one of them (a singleton start set).
    """

    domain: GridDomain
    f_true: np.ndarray
    g_true: np.ndarray                      # (n_safety, n_points)
    spec: SafetySpec
    seed_indices: np.ndarray
    noise_variance: float
    utility_kernel: KernelSpec
    safety_kernels: List[KernelSpec]
    scenario: str = "custom"
    rng_seed: Optional[int] = None
    # Observation-noise variance for the safety functions. None means the
    # utility's ``noise_variance`` is shared. The stock scenarios set it
    # proportionally to the safety amplitude (constant relative measurement
    # error), keeping the per-function signal-to-noise ratio independent of
    # the amplitude scaling.
    safety_noise_variance: Optional[float] = None
    _prior_covs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.f_true = np.asarray(self.f_true, dtype=float)
        self.g_true = np.atleast_2d(np.asarray(self.g_true, dtype=float))
        self.seed_indices = np.atleast_1d(np.asarray(self.seed_indices, dtype=int))
        if len(self.seed_indices) == 0:
            raise ValueError("instance must carry at least one safe seed")
        for g, h in zip(self.g_true, self.spec.thresholds):
            if np.any(g[self.seed_indices] < h):
                raise ValueError("seed indices must be safe under ground truth")

    @property
    def n_safety(self) -> int:
        return self.spec.n_safety

    @property
    def safety_noise(self) -> float:
        """Effective safety observation-noise variance."""
        if self.safety_noise_variance is None:
            return self.noise_variance
        return self.safety_noise_variance

    @property
    def optimum_index(self) -> int:
        return int(np.argmax(self.f_true))

    def utility_prior_cov(self) -> np.ndarray:
        return self._cached_cov("f", self.utility_kernel)

    def safety_prior_cov(self, i: int) -> np.ndarray:
        return self._cached_cov(i, self.safety_kernels[i])

    def _cached_cov(self, key, spec: KernelSpec) -> np.ndarray:
        if key not in self._prior_covs:
            self._prior_covs[key] = grid_prior_covariance(self.domain, spec)
        return self._prior_covs[key]

    def is_violation(self, index: int) -> bool:
        return bool(np.any(self.g_true[:, index] < self.spec.thresholds))


def _safety_amplitude(utility_amplitude: float) -> float:
    if AMPLITUDE_RATIO_APPLIES_TO == "std":
        return utility_amplitude * AMPLITUDE_RATIO ** 2
    return utility_amplitude * AMPLITUDE_RATIO


def make_instance(scenario: str, rng_seed: int,
                  points_per_axis: int = 25,
                  noise_variance: float = DEFAULT_NOISE_VARIANCE,
                  utility_length_scale: float = 0.2,
                  seeds_per_instance: int = SEEDS_PER_INSTANCE) -> ProblemInstance:
    """Sample one instance: Matern (nu=1.2) utility on the unit-square grid,
    safety functions per scenario at 0.1x amplitude, thresholds at the grid
    mean plus half a grid standard deviation, seed candidates one full
    standard deviation above the mean."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    domain = make_uniform_grid(2, points_per_axis)
    utility_kernel = KernelSpec(family="matern", nu=1.2,
                                length_scale=utility_length_scale, amplitude=1.0)
    safety_ls = [0.2] if scenario == "one_safety" else [0.2, 0.4, 0.8]
    safety_amp = _safety_amplitude(utility_kernel.amplitude)
    safety_kernels = [KernelSpec(family="matern", nu=1.2, length_scale=ls,
                                 amplitude=safety_amp) for ls in safety_ls]
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_GENERATION_RETRIES):
        f_true = sample_prior(domain, utility_kernel, rng)
        g_true = np.stack([sample_prior(domain, spec, rng)
                           for spec in safety_kernels])
        mean = g_true.mean(axis=1)
        std = g_true.std(axis=1)
        thresholds = mean + 0.5 * std
        seed_bar = mean + std
        candidates = np.flatnonzero(np.all(g_true > seed_bar[:, None], axis=0))
        if len(candidates) == 0:
            continue
        lipschitz = np.array([lipschitz_constant(domain, g) for g in g_true])
        seeds = rng.choice(candidates, size=seeds_per_instance,
                           replace=len(candidates) < seeds_per_instance)
        return ProblemInstance(
            domain=domain, f_true=f_true, g_true=g_true,
            spec=SafetySpec(thresholds=thresholds, lipschitz=lipschitz),
            seed_indices=np.asarray(seeds, dtype=int),
            noise_variance=noise_variance,
            safety_noise_variance=noise_variance * safety_amp
            / utility_kernel.amplitude,
            utility_kernel=utility_kernel, safety_kernels=safety_kernels,
            scenario=scenario, rng_seed=rng_seed)
    raise GenerationError(
        f"no safe seed candidate after {MAX_GENERATION_RETRIES} retries")


def observe(instance: ProblemInstance, fn_id, index: int,
            rng: np.random.Generator) -> float:
    """Noisy evaluation of the utility (fn_id='f') or safety function fn_id."""
    if fn_id == "f":
        true = instance.f_true[index]
        var = instance.noise_variance
    else:
        true = instance.g_true[int(fn_id), index]
        var = instance.safety_noise
    return float(true + rng.normal(0.0, np.sqrt(var)))


def duel(instance: ProblemInstance, index_a: int, index_b: int,
         rng: np.random.Generator, link: Callable = logit_link) -> int:
    """Bernoulli comparison outcome: 1 when the first point wins."""
    p = float(link(instance.f_true[index_a], instance.f_true[index_b]))
    return int(rng.random() < p)


# --- instance files -------------------------------------------------------

def _write_kernel(fh, tag: str, spec: KernelSpec) -> None:
    if spec.family == "precomputed":
        raise ValueError("precomputed kernels cannot be serialized")
    ls = np.atleast_1d(np.asarray(spec.length_scale, dtype=float))
    fh.write(f"kernel {tag} {spec.family} {float(spec.amplitude)!r} "
             f"{float(spec.nu)!r} "
             + " ".join(repr(float(v)) for v in ls) + "\n")


def _parse_kernel(tokens) -> KernelSpec:
    family, amplitude, nu = tokens[0], float(tokens[1]), float(tokens[2])
    ls = np.array([float(v) for v in tokens[3:]])
    if len(ls) == 1:
        ls = float(ls[0])
    return KernelSpec(family=family, amplitude=amplitude, nu=nu, length_scale=ls)


def save_instance(instance: ProblemInstance, path) -> None:
    """Self-describing text container; values round-trip bit-identically."""
    with open(path, "w") as fh:
        fh.write("# stageopt-instance v1\n")
        fh.write(f"scenario {instance.scenario}\n")
        fh.write(f"rng_seed {instance.rng_seed}\n")
        fh.write(f"noise_variance {instance.noise_variance!r}\n")
        if instance.safety_noise_variance is not None:
            fh.write(f"safety_noise_variance {instance.safety_noise_variance!r}\n")
        fh.write(f"n_safety {instance.n_safety}\n")
        _write_kernel(fh, "utility", instance.utility_kernel)
        for i, spec in enumerate(instance.safety_kernels):
            _write_kernel(fh, f"safety{i}", spec)
        fh.write("thresholds " + " ".join(repr(float(v)) for v in instance.spec.thresholds) + "\n")
        fh.write("lipschitz " + " ".join(repr(float(v)) for v in instance.spec.lipschitz) + "\n")
        fh.write("seeds " + " ".join(str(int(v)) for v in instance.seed_indices) + "\n")
        fh.write(f"grid {instance.domain.n} {instance.domain.dim}\n")
        for row in instance.domain.points:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        fh.write("utility_values\n")
        for v in instance.f_true:
            fh.write(repr(float(v)) + "\n")
        for i, g in enumerate(instance.g_true):
            fh.write(f"safety_values {i}\n")
            for v in g:
                fh.write(repr(float(v)) + "\n")


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    pos = 0

    def take():
        nonlocal pos
        line = lines[pos]
        pos += 1
        return line

    header = {}
    kernels = {}
    while True:
        tokens = take().split()
        key = tokens[0]
        if key == "kernel":
            kernels[tokens[1]] = _parse_kernel(tokens[2:])
        elif key == "grid":
            n, dim = int(tokens[1]), int(tokens[2])
            break
        else:
            header[key] = tokens[1:]
    points = np.array([[float(v) for v in take().split()] for _ in range(n)])
    assert take() == "utility_values"
    f_true = np.array([float(take()) for _ in range(n)])
    n_safety = int(header["n_safety"][0])
    g_true = []
    for i in range(n_safety):
        assert take().startswith("safety_values")
        g_true.append([float(take()) for _ in range(n)])
    rng_seed = header["rng_seed"][0]
    return ProblemInstance(
        domain=GridDomain(points.reshape(n, dim)),
        f_true=f_true, g_true=np.array(g_true),
        spec=SafetySpec(thresholds=np.array([float(v) for v in header["thresholds"]]),
                        lipschitz=np.array([float(v) for v in header["lipschitz"]])),
        seed_indices=np.array([int(v) for v in header["seeds"]]),
        noise_variance=float(header["noise_variance"][0]),
        safety_noise_variance=(
            float(header["safety_noise_variance"][0])
            if "safety_noise_variance" in header else None),
        utility_kernel=kernels["utility"],
        safety_kernels=[kernels[f"safety{i}"] for i in range(n_safety)],
        scenario=header["scenario"][0],
        rng_seed=None if rng_seed == "None" else int(rng_seed))
