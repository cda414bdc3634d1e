"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; set the environment
variable ``STAGEOPT_PURE_PYTHON=1`` to force the fallback. Both backends are
exact and interchangeable; ``backend_name()`` reports which one is active.
"""

from __future__ import annotations

import os

from . import fallback as _fallback

_impl = _fallback
_BACKEND = "fallback"

if not os.environ.get("STAGEOPT_PURE_PYTHON"):
    try:
        from . import _speedups as _compiled
        _impl = _compiled
        _BACKEND = "compiled"
    except ImportError:
        pass


def backend_name() -> str:
    return _BACKEND


def lipschitz_expand(lower, dist, lipschitz, thresholds, safe_prev):
    import numpy as np
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    lipschitz = np.ascontiguousarray(lipschitz, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    safe_prev = np.ascontiguousarray(safe_prev, dtype=np.uint8 if _BACKEND == "compiled" else bool)
    return _impl.lipschitz_expand(lower, dist, lipschitz, thresholds, safe_prev)


def expander_counts(upper, dist, lipschitz, thresholds, safe, count_all=False):
    import numpy as np
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    lipschitz = np.ascontiguousarray(lipschitz, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    safe = np.ascontiguousarray(safe, dtype=np.uint8 if _BACKEND == "compiled" else bool)
    return _impl.expander_counts(upper, dist, lipschitz, thresholds, safe,
                                 count_all=count_all)
