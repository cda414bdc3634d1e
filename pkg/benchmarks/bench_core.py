"""Micro-benchmark: compiled extension vs pure-numpy fallback.

Times the two hot kernels (Lipschitz safe-set expansion and expander
counting) on synthetic inputs of growing size, verifies both backends agree
bit-for-bit, and reports the speedup. Also times one full end-to-end run per
backend by re-executing in a subprocess with ``STAGEOPT_PURE_PYTHON=1``.

Usage: python benchmarks/bench_core.py [--points 625] [--repeats 5]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from stageopt._core import backend_name
from stageopt._core import _fallback, _impl  # noqa: F401  (fallback import check)
from stageopt import _core


def _inputs(n_points: int, n_safety: int, seed: int):
    rng = np.random.default_rng(seed)
    pts = rng.random((n_points, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    lower = rng.normal(size=(n_safety, n_points))
    upper = lower + rng.random((n_safety, n_points))
    thresholds = np.zeros(n_safety)
    lipschitz = np.full(n_safety, 2.0)
    safe = lower.min(axis=0) > -0.3
    if not safe.any():
        safe[0] = True
    return lower, upper, dist, lipschitz, thresholds, safe


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(n_points: int, repeats: int) -> None:
    fb = _core._fallback
    comp = _core._impl
    for n_safety in (1, 3):
        lower, upper, dist, lip, thr, safe = _inputs(n_points, n_safety, 0)
        safe_u8 = safe.astype(np.uint8)

        res_c = _core.lipschitz_expand(lower, dist, lip, thr, safe)
        res_f = fb.lipschitz_expand(lower, dist, lip, thr, safe)
        assert np.array_equal(res_c, res_f), "expand results diverge"
        cnt_c = _core.expander_counts(upper, dist, lip, thr, safe)
        cnt_f = fb.expander_counts(upper, dist, lip, thr, safe)
        assert np.array_equal(cnt_c, cnt_f), "expander counts diverge"

        t_active = _time(lambda: _core.lipschitz_expand(lower, dist, lip,
                                                        thr, safe), repeats)
        t_fb = _time(lambda: fb.lipschitz_expand(lower, dist, lip, thr,
                                                 safe), repeats)
        print(f"lipschitz_expand  n={n_points} safety={n_safety}: "
              f"{backend_name()} {1e3 * t_active:8.3f} ms   "
              f"fallback {1e3 * t_fb:8.3f} ms   "
              f"ratio {t_fb / t_active:5.2f}x")

        t_active = _time(lambda: _core.expander_counts(upper, dist, lip, thr,
                                                       safe), repeats)
        t_fb = _time(lambda: fb.expander_counts(upper, dist, lip, thr,
                                                safe), repeats)
        print(f"expander_counts   n={n_points} safety={n_safety}: "
              f"{backend_name()} {1e3 * t_active:8.3f} ms   "
              f"fallback {1e3 * t_fb:8.3f} ms   "
              f"ratio {t_fb / t_active:5.2f}x")


END_TO_END = r"""
import time
import numpy as np
from stageopt.synthetic import make_instance
from stageopt.algorithms import run_stageopt, RunConfig
from stageopt._core import backend_name
inst = make_instance("one_safety", 0)
cfg = RunConfig(T=100, seed=0, start_index=int(inst.seed_indices[0]))
t0 = time.perf_counter()
trace = run_stageopt(inst, cfg)
print(f"{backend_name()}: full run {time.perf_counter() - t0:.2f}s, "
      f"reward {trace.rows[-1].reward:.4f}")
"""


def bench_end_to_end() -> None:
    for force_fallback in (False, True):
        env = dict(os.environ)
        if force_fallback:
            env["STAGEOPT_PURE_PYTHON"] = "1"
        else:
            env.pop("STAGEOPT_PURE_PYTHON", None)
        subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=625)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {backend_name()}")
    bench_kernels(args.points, args.repeats)
    bench_end_to_end()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
