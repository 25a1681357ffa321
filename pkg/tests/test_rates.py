import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from memstoch.circuit import DeviceParams
from memstoch.rates import gamma_01, gamma_10, rate_for_transition, transition_rates

UNIT = DeviceParams(tau01=1.0, V01=0.25, tau10=1.0, V10=0.25, R_on=100.0, R_off=1000.0)
E2 = float(mpmath.exp(2))  # high-precision oracle, rounded once

volts = st.floats(-3.0, 3.0, allow_nan=False)


class TestGamma01:
    def test_negative(self):
        assert gamma_01(-0.3, UNIT) == 0.0

    def test_zero(self):
        assert gamma_01(0.0, UNIT) == 0.0

    def test_value(self):
        assert gamma_01(0.5, UNIT) == pytest.approx(E2, rel=1e-15)
        assert E2 == pytest.approx(7.3890560989, abs=1e-10)

    def test_vectorised(self):
        v = np.array([-1.0, 0.0, 0.25, 0.5])
        np.testing.assert_allclose(gamma_01(v, UNIT), [0, 0, math.e, E2], rtol=1e-15)

    def test_overflow_saturates(self):
        assert gamma_01(1e4, UNIT) == math.inf

    @given(st.floats(1e-6, 3.0), st.floats(1e-6, 3.0))
    def test_monotone(self, v1, v2):
        lo, hi = sorted((v1, v2))
        if hi > lo * (1 + 1e-9):
            assert gamma_01(hi, UNIT) > gamma_01(lo, UNIT)

    @given(st.floats(1e-3, 3.0), st.floats(0.01, 100.0))
    def test_tau_scaling(self, v, c):
        scaled = DeviceParams(UNIT.tau01 * c, UNIT.V01, UNIT.tau10, UNIT.V10, UNIT.R_on, UNIT.R_off)
        assert gamma_01(v, scaled) == pytest.approx(gamma_01(v, UNIT) / c, rel=1e-14)


class TestGamma10:
    def test_positive(self):
        assert gamma_10(0.3, UNIT) == 0.0

    def test_zero(self):
        assert gamma_10(0.0, UNIT) == 0.0

    def test_value(self):
        assert gamma_10(-0.5, UNIT) == pytest.approx(E2, rel=1e-15)

    @given(volts)
    def test_mirror(self, v):
        assert gamma_10(-v, UNIT) == gamma_01(v, UNIT)

    @given(st.floats(-3.0, -1e-6), st.floats(-3.0, -1e-6))
    def test_monotone(self, v1, v2):
        lo, hi = sorted((abs(v1), abs(v2)))
        if hi > lo * (1 + 1e-9):
            assert gamma_10(-hi, UNIT) > gamma_10(-lo, UNIT)


@given(volts)
def test_exclusive_sign_domains(v):
    assert gamma_01(v, UNIT) * gamma_10(v, UNIT) == 0.0
    assert gamma_01(v, UNIT) >= 0 and gamma_10(v, UNIT) >= 0


@given(st.floats(-2.0, 2.0, allow_nan=False), st.floats(0.01, 1.0), st.floats(0.1, 100.0))
def test_against_mpmath(v, v0, tau):
    p = DeviceParams(tau, v0, tau, v0, 100.0, 1000.0)
    expect = float(mpmath.exp(mpmath.mpf(abs(v)) / mpmath.mpf(v0)) / mpmath.mpf(tau)) if v != 0 else 0.0
    got = gamma_01(v, p) if v > 0 else gamma_10(v, p)
    assert got == pytest.approx(expect, rel=1e-13)


class TestRateForTransition:
    def test_off_positive(self):
        assert rate_for_transition(0b000, 1, 0.5, UNIT) == gamma_01(0.5, UNIT)

    def test_on_positive(self):
        assert rate_for_transition(0b010, 1, 0.5, UNIT) == 0.0

    def test_on_negative(self):
        assert rate_for_transition(0b010, 1, -0.5, UNIT) == pytest.approx(E2)

    def test_off_negative(self):
        assert rate_for_transition(0b000, 1, -0.5, UNIT) == 0.0

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            rate_for_transition(0, 3, 0.5, UNIT, n=3)


def test_transition_rates_table(fig1b):
    r = transition_rates(fig1b, 1.0)
    assert r.shape == (8, 3)
    # positive drive: only off devices can switch
    for theta in range(8):
        for m in range(3):
            if (theta >> m) & 1:
                assert r[theta, m] == 0.0
            else:
                assert r[theta, m] > 0.0
