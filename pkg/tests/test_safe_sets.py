"""Safe-set growth and expander identification, both certification variants."""

import numpy as np
import pytest

from stageopt.confidence import ConfidenceState, init_confidence
from stageopt.domain import GridDomain, make_uniform_grid
from stageopt.gp import GPModel
from stageopt.kernels import KernelSpec
from stageopt.safe_sets import (SafeState, SafetySpec, compute_expanders,
                                expand_safe)


def three_point_domain():
    return GridDomain(np.array([[0.0], [0.5], [1.0]]))


def conf_with_bounds(dom, lower, upper, n_safety=1):
    state = ConfidenceState(dom.n, n_safety)
    state.lower[:n_safety] = np.atleast_2d(lower)
    state.upper[:n_safety] = np.atleast_2d(upper)
    return state


def test_spec_validation():
    with pytest.raises(ValueError):
        SafetySpec(thresholds=[0.0], lipschitz=[1.0, 2.0])
    with pytest.raises(ValueError):
        SafetySpec(thresholds=[0.0], lipschitz=[-1.0])
    with pytest.raises(ValueError):
        SafetySpec(thresholds=[np.inf], lipschitz=[1.0])


def test_state_validation():
    with pytest.raises(ValueError):
        SafeState(safe=np.array([True]), variant="bogus")


def test_lipschitz_expansion_hand_example():
    # l(x0) = 1.0, L = 1, h = 0.4: point at distance 0.5 certifies
    # (1.0 - 0.5 >= 0.4), point at distance 1.0 does not (0.0 < 0.4).
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [1.0, -5.0, -5.0], [2.0, 5.0, 5.0])
    state = SafeState(safe=dom.mask_from_indices([0]))
    expand_safe(state, conf, spec, dom)
    assert list(state.safe) == [True, True, False]


def test_lipschitz_expansion_requires_all_functions():
    # Two safety functions; the second one blocks the far point.
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4, 0.4], lipschitz=[1.0, 1.0])
    lower = np.array([[1.0, -5.0, -5.0], [0.5, -5.0, -5.0]])
    upper = np.full((2, 3), 5.0)
    conf = conf_with_bounds(dom, lower, upper, n_safety=2)
    state = SafeState(safe=dom.mask_from_indices([0]))
    expand_safe(state, conf, spec, dom)
    # Function 1 certifies x1 (1.0 - 0.5 >= 0.4) but function 2 does not
    # (0.5 - 0.5 < 0.4).
    assert list(state.safe) == [True, False, False]


def test_expansion_keeps_previous_safe_points():
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [-5.0, -5.0, -5.0], [5.0, 5.0, 5.0])
    state = SafeState(safe=dom.mask_from_indices([1]))
    expand_safe(state, conf, spec, dom)
    assert state.safe[1]


def test_expansion_rejects_empty_safe_set():
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.0], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [0.0] * 3, [1.0] * 3)
    with pytest.raises(ValueError):
        expand_safe(SafeState(safe=dom.empty_mask()), conf, spec, dom)


def test_lipschitz_expanders_hand_example():
    # u(x0) = 1.0 can optimistically certify x1 (1.0 - 0.5 >= 0.4), so x0 is
    # an expander; x1 is unsafe so it cannot be one.
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [0.5, -5.0, -5.0], [1.0, 0.0, 0.0])
    state = SafeState(safe=dom.mask_from_indices([0]))
    compute_expanders(state, conf, spec, dom)
    assert list(state.expanders) == [True, False, False]
    assert state.expansion_counts[0] >= 1


def test_lipschitz_expander_full_counts():
    # With u(x1) = 2.0 and L = 1, both neighbors at distance 0.5 are
    # optimistically certifiable: e(x1) = 2.
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [-5.0, 0.5, -5.0], [0.0, 2.0, 0.0])
    state = SafeState(safe=dom.mask_from_indices([1]))
    compute_expanders(state, conf, spec, dom, count_all=True)
    assert state.expansion_counts[1] == 2


def test_no_expanders_when_everything_safe():
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.0], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [1.0] * 3, [2.0] * 3)
    state = SafeState(safe=dom.full_mask())
    compute_expanders(state, conf, spec, dom)
    assert state.expanders.sum() == 0


def test_gp_only_expansion_uses_lower_bounds_directly():
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [1.0, 0.5, 0.1], [2.0, 2.0, 2.0])
    state = SafeState(safe=dom.mask_from_indices([0]), variant="gp_only")
    expand_safe(state, conf, spec, dom)
    # x1 clears the threshold outright; x2 does not.
    assert list(state.safe) == [True, True, False]


def test_gp_only_expansion_preserves_nestedness():
    # A previously safe point stays safe even if its bound has degraded.
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.4], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    state = SafeState(safe=dom.mask_from_indices([2]), variant="gp_only")
    expand_safe(state, conf, spec, dom)
    assert state.safe[2]


def test_gp_only_expanders_certify_via_hypothetical_update():
    """With a high upper bound at the safe point and strong correlation, a
    noiseless pseudo-observation there certifies the neighbor."""
    dom = GridDomain(np.array([[0.0], [0.05], [1.0]]))
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.3, amplitude=1.0)
    sspec = SafetySpec(thresholds=[0.5], lipschitz=[10.0])
    gp = GPModel(dom, spec, noise_variance=1e-6)
    gp.add_observation(0, 1.5)
    mu, var = gp.posterior()
    conf = ConfidenceState(dom.n, 1)
    beta = 2.0
    conf.lower[0] = mu - beta * np.sqrt(var)
    conf.upper[0] = mu + beta * np.sqrt(var)
    state = SafeState(safe=dom.mask_from_indices([0]), variant="gp_only")
    compute_expanders(state, conf, sspec, dom, safety_gps=[gp], beta=beta)
    assert state.expanders[0]
    # The far point x2 must not be what the count refers to: with count_all,
    # only the nearby point is certifiable.
    compute_expanders(state, conf, sspec, dom, safety_gps=[gp], beta=beta,
                      count_all=True)
    assert state.expansion_counts[0] == 1


def test_gp_only_expanders_require_models():
    dom = three_point_domain()
    spec = SafetySpec(thresholds=[0.0], lipschitz=[1.0])
    conf = conf_with_bounds(dom, [0.0] * 3, [1.0] * 3)
    state = SafeState(safe=dom.mask_from_indices([0]), variant="gp_only")
    with pytest.raises(ValueError):
        compute_expanders(state, conf, spec, dom)


def test_lipschitz_zero_constant_certifies_everything_or_nothing():
    """With L = 0 the distance penalty vanishes: one clearing safe point
    certifies the whole domain, and none clearing certifies nothing new."""
    dom = make_uniform_grid(1, 8)
    spec = SafetySpec(thresholds=[0.2], lipschitz=[0.0])
    clearing = conf_with_bounds(dom, [0.5] + [-5.0] * 7, [5.0] * 8)
    state = SafeState(safe=dom.mask_from_indices([0]))
    expand_safe(state, clearing, spec, dom)
    assert state.safe.all()

    blocked = conf_with_bounds(dom, [0.1] + [-5.0] * 7, [5.0] * 8)
    state = SafeState(safe=dom.mask_from_indices([0]))
    expand_safe(state, blocked, spec, dom)
    assert state.safe.sum() == 1
