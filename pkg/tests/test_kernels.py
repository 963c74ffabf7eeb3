import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from condcopula.kernels import (
    BIWEIGHT,
    TRIWEIGHT,
    SmoothedIndicator,
    folded_mean,
    folded_variance,
    moment_weight,
)

from oracles import central_difference, gauss_legendre_integral

KERNELS = [TRIWEIGHT, BIWEIGHT]


@pytest.mark.parametrize("kernel", KERNELS)
def test_integrates_to_one(kernel):
    assert abs(gauss_legendre_integral(kernel, -1, 1) - 1.0) < 1e-12


@pytest.mark.parametrize("kernel", KERNELS)
def test_first_moment_vanishes(kernel):
    assert abs(gauss_legendre_integral(lambda u: u * kernel(u), -1, 1)) < 1e-12


def test_values_at_zero():
    assert TRIWEIGHT(0.0) == 35 / 32
    assert BIWEIGHT(0.0) == 15 / 16


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("u", [1.0, -1.0, 1.5, -2.0, 100.0])
def test_zero_outside_support(kernel, u):
    assert kernel(u) == 0.0
    assert kernel(u, order=1) == 0.0


def test_symmetry_forces_zero_derivative_at_zero():
    assert BIWEIGHT(0.0, order=1) == 0.0
    assert TRIWEIGHT(0.0, order=1) == 0.0


@given(st.floats(-1.0, 1.0))
def test_symmetry(u):
    for kernel in KERNELS:
        assert kernel(u) == pytest.approx(kernel(-u), abs=1e-15)
        assert kernel(u) >= 0.0


def test_unsupported_derivative_order():
    TRIWEIGHT(0.3, order=2)  # fine: twice continuously differentiable
    with pytest.raises(ValueError):
        BIWEIGHT(0.3, order=2)
    with pytest.raises(ValueError):
        TRIWEIGHT(0.3, order=3)


@pytest.mark.parametrize("kernel,max_order", [(TRIWEIGHT, 2), (BIWEIGHT, 1)])
def test_derivatives_match_finite_differences(kernel, max_order):
    # away from the support endpoints, where one-sided kinks cannot bite
    points = np.linspace(-0.9, 0.9, 19)
    for order in range(1, max_order + 1):
        for u in points:
            fd = central_difference(lambda t, o=order - 1: kernel(t, order=o), u, 1e-6)
            exact = kernel(u, order=order)
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-8)


class TestSmoothedIndicator:
    def test_half_at_center(self):
        si = SmoothedIndicator(BIWEIGHT, h=0.37)
        assert si(2.0, 2.0) == 0.5

    def test_saturates_outside_band(self):
        si = SmoothedIndicator(BIWEIGHT, h=0.5)
        assert si(1.5, 1.0) == 1.0
        assert si(3.0, 1.0) == 1.0
        assert si(0.5, 1.0) == 0.0
        assert si(-4.0, 1.0) == 0.0

    def test_closed_form_matches_quadrature(self):
        # value at half a bandwidth above the jump, frozen from the quintic
        si = SmoothedIndicator(BIWEIGHT, h=1.0)
        closed = (15 / 16) * (0.5 - 2 * 0.5**3 / 3 + 0.5**5 / 5) + 0.5
        assert si(0.5, 0.0) == pytest.approx(closed, abs=1e-15)
        for t in np.linspace(-1.3, 1.3, 21):
            numeric, err = quad(BIWEIGHT, -1.5, t)
            assert si(t, 0.0) == pytest.approx(numeric, abs=max(1e-12, 2 * err))

    @given(
        st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
        st.floats(0.01, 2.0),
    )
    def test_monotone_in_y(self, y1, y2, center, h):
        si = SmoothedIndicator(BIWEIGHT, h=h)
        lo, hi = min(y1, y2), max(y1, y2)
        assert si(lo, center) <= si(hi, center)

    @settings(max_examples=30)
    @given(st.floats(-0.95, 0.95), st.floats(0.05, 1.5))
    def test_derivative_is_scaled_kernel(self, t, h):
        si = SmoothedIndicator(BIWEIGHT, h=h)
        y = t * h  # inside the active band around Y = 0
        fd = central_difference(lambda v: si(v, 0.0), y, 1e-5 * h)
        exact = si.slope(y, 0.0)
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)

    def test_rejects_bad_bandwidth(self):
        with pytest.raises(ValueError):
            SmoothedIndicator(BIWEIGHT, h=0.0)


class TestMomentWeights:
    def test_odd_weight_vanishes_at_zero(self):
        assert moment_weight(TRIWEIGHT, 1, 0.0) == 0.0

    def test_odd_weight_integrates_to_zero(self):
        val = gauss_legendre_integral(lambda u: moment_weight(TRIWEIGHT, 1, u), -1, 1)
        assert abs(val) < 1e-12

    def test_second_moment_weight_value(self):
        # 0.25 * K(0.5) with K(0.5) = (35/32) * 0.75^3 evaluated by hand
        assert moment_weight(TRIWEIGHT, 2, 0.5) == pytest.approx(0.25 * 0.46142578125, abs=1e-15)

    def test_outside_support(self):
        for k in range(4):
            assert moment_weight(TRIWEIGHT, k, 1.2) == 0.0

    def test_derivatives_match_finite_differences(self):
        for k in range(4):
            for u in np.linspace(-0.85, 0.85, 11):
                fd = central_difference(lambda t: moment_weight(TRIWEIGHT, k, t), u, 1e-6)
                assert moment_weight(TRIWEIGHT, k, u, order=1) == pytest.approx(
                    fd, rel=1e-6, abs=1e-8
                )

    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            moment_weight(TRIWEIGHT, 4, 0.3)
        with pytest.raises(ValueError):
            moment_weight(BIWEIGHT, 0, 0.3, order=2)


def test_folded_constants_against_quadrature():
    for kernel in KERNELS:
        a, err_a = quad(lambda u: 2 * u * kernel(u), 0, 1)
        assert folded_mean(kernel) == pytest.approx(a, abs=max(1e-12, 2 * err_a))
        c, err_c = quad(lambda u: 2 * (u - a) ** 2 * kernel(u), 0, 1)
        assert folded_variance(kernel) == pytest.approx(c, abs=max(1e-12, 2 * err_c))
        assert 0.0 < folded_mean(kernel) < 1.0
        assert folded_variance(kernel) > 0.0
