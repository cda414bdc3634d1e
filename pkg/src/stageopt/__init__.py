"""Stagewise safe Bayesian optimization on discretized domains.

Safe-set expansion with Lipschitz or GP-only certification, a two-stage
expansion/optimization driver with absolute or dueling feedback, interleaved
and constrained-EI baselines, a brute-force reachability oracle, and a
deterministic benchmark harness.
"""

from ._core import backend_name
from .algorithms import (ALGORITHMS, RunConfig, StageSwitch, Trace,
                         run_cei, run_safeopt, run_stageopt,
                         run_stageopt_dueling, theorem1_tstar, theorem2_Y)
from .confidence import (BetaSchedule, ConfidenceState, compute_beta,
                         init_confidence, intersect_update)
from .domain import (GridDomain, lipschitz_constant, make_uniform_grid)
from .gp import ConditioningError, GPModel, sample_prior
from .harness import BenchmarkPlan, aggregate, run_benchmark
from .info_gain import GammaTable, estimate_gamma
from .kernels import KernelSpec, kernel_eval, kernel_matrix
from .preference import PreferenceGP, fit_preference, logit_link
from .reachability import (ReachabilityQuery, one_step_reach, reach_T,
                           reach_closure)
from .safe_sets import SafeState, SafetySpec, compute_expanders, expand_safe
from .synthetic import (ProblemInstance, duel, load_instance, make_instance,
                        observe, save_instance)

__version__ = "0.1.0"
