"""Covariance functions against independent closed forms and an arbitrary-
precision Bessel oracle."""

import mpmath
import numpy as np
import pytest

from stageopt.kernels import (KernelSpec, kernel_eval, kernel_matrix,
                              matern_correlation)


def mpmath_matern(r, nu):
    """Independent Matern correlation via arbitrary-precision Bessel-K."""
    if r == 0:
        return 1.0
    z = mpmath.sqrt(2 * nu) * r
    val = (2 ** (1 - nu) / mpmath.gamma(nu)) * (z ** nu) * mpmath.besselk(nu, z)
    return float(val)


@pytest.mark.parametrize("nu", [0.5, 1.2, 1.5, 2.5])
@pytest.mark.parametrize("r", [1e-6, 0.05, 0.3, 1.0, 4.0])
def test_matern_correlation_matches_mpmath(nu, r):
    got = matern_correlation(np.array([r]), nu)[0]
    assert got == pytest.approx(mpmath_matern(r, nu), rel=1e-10)


def test_matern_nu_half_is_exponential():
    # nu = 1/2 collapses to exp(-r) in the sqrt(2 nu) scaling convention.
    r = np.linspace(0.01, 3.0, 20)
    assert np.allclose(matern_correlation(r, 0.5), np.exp(-r), atol=1e-12)


def test_matern_zero_distance_is_one():
    assert matern_correlation(np.array([0.0]), 1.2)[0] == 1.0


def test_squared_exponential_half_value_distance():
    # exp(-r^2/2) = 1/2 exactly at r = sqrt(2 ln 2).
    spec = KernelSpec(family="squared_exponential", length_scale=1.0,
                      amplitude=1.0)
    r = np.sqrt(2.0 * np.log(2.0))
    assert kernel_eval(spec, [0.0], [r]) == pytest.approx(0.5, abs=1e-14)


def test_kernel_eval_at_zero_equals_amplitude():
    for family in ("squared_exponential", "matern"):
        spec = KernelSpec(family=family, length_scale=0.3, amplitude=2.5)
        assert kernel_eval(spec, [0.2, 0.4], [0.2, 0.4]) == pytest.approx(2.5)


def test_length_scale_scaling():
    # Doubling the length scale at double the distance leaves k unchanged.
    a = KernelSpec(family="matern", nu=1.2, length_scale=0.2)
    b = KernelSpec(family="matern", nu=1.2, length_scale=0.4)
    assert kernel_eval(a, [0.0], [0.1]) == pytest.approx(
        kernel_eval(b, [0.0], [0.2]), rel=1e-12)


def test_ard_length_scales():
    spec = KernelSpec(family="squared_exponential",
                      length_scale=np.array([1.0, 2.0]))
    # Moving one unit along the second axis counts as r = 1/2.
    expected = np.exp(-0.5 * 0.25)
    assert kernel_eval(spec, [0.0, 0.0], [0.0, 1.0]) == pytest.approx(expected)


def test_kernel_matrix_symmetric_psd():
    rng = np.random.default_rng(11)
    pts = rng.random((30, 2))
    spec = KernelSpec(family="matern", nu=1.2, length_scale=0.2, amplitude=0.1)
    k = kernel_matrix(spec, pts)
    assert np.allclose(k, k.T)
    eigs = np.linalg.eigvalsh(k)
    assert eigs.min() > -1e-10


def test_precomputed_kernel_indexing():
    table = np.array([[1.0, 0.3], [0.3, 1.0]])
    spec = KernelSpec(family="precomputed", table=table)
    assert np.array_equal(kernel_matrix(spec, None), table)
    sub = kernel_matrix(spec, None, indices_a=[1], indices_b=[0])
    assert sub[0, 0] == 0.3
    with pytest.raises(ValueError):
        kernel_eval(spec, [0.0], [1.0])


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(family="wavelet")
    with pytest.raises(ValueError):
        KernelSpec(amplitude=0.0)
    with pytest.raises(ValueError):
        KernelSpec(length_scale=-1.0)
    with pytest.raises(ValueError):
        KernelSpec(family="precomputed")
