import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from flashhelp import awgn
from flashhelp.awgn import AwgnParams, FlashDesign, HelperMode
from flashhelp.values import ExponentValue

# high-precision reference values (mpmath, 40 significant digits)
WSP_G1_RH05_R06 = 1.00444188257823744549
STEP_S1_RH05_TAU01 = 0.0393803673878072
STEP_VARIABLE_RH05_TAU01 = 0.0278461248255361
FLASH_RATE_S9 = 0.384870745350298
WORST_VARIANCE_P1_GAP02 = 2.03324478171974
C_HALF, C_ONE, C_TWO = 0.2027325540541, 0.346573590279973, 0.549306144334055


class TestCapacities:
    def test_values(self):
        assert awgn.capacity_awgn(1.0) == pytest.approx(C_ONE, abs=1e-15)
        assert awgn.capacity_awgn(0.5) == pytest.approx(C_HALF, abs=1e-13)
        assert awgn.capacity_awgn(2.0) == pytest.approx(C_TWO, abs=1e-15)
        assert awgn.capacity_awgn(0.0) == 0.0

    def test_helped_capacity_is_shift(self):
        assert awgn.helped_capacity(1.0, 0.5) == pytest.approx(C_ONE + 0.5)

    def test_params(self):
        prm = AwgnParams.from_snr(4.0, sigma2=0.25)
        assert prm.power == 1.0 and prm.gamma == 4.0
        with pytest.raises(ValueError):
            AwgnParams(power=0.0)


class TestFlashDesign:
    def test_quantizer_step(self):
        assert awgn.quantizer_step(1.0, 1.0, 0.5, 0.1) == pytest.approx(STEP_S1_RH05_TAU01, rel=1e-14)
        assert awgn.variable_rate_step(1.0, 0.5, 0.1) == pytest.approx(STEP_VARIABLE_RH05_TAU01, rel=1e-14)

    def test_step_from_design(self):
        d = FlashDesign(0.5, 0.1, 1.0)
        assert d.step(1.0) == pytest.approx(STEP_S1_RH05_TAU01, rel=1e-14)
        v = FlashDesign(0.5, 0.1, mode=HelperMode.VARIABLE)
        assert v.step(1.0) == pytest.approx(STEP_VARIABLE_RH05_TAU01, rel=1e-14)

    def test_step_covers_sphere_volume(self):
        # e^{n R_h} cubes of side Delta have the volume of the t-ball of radius sqrt(t(1+s))
        t, s, rh, tau = 40, 1.0, 0.5, 0.1
        n = t / tau
        delta = awgn.quantizer_step(1.0, s, rh, tau)
        log_ball = 0.5 * t * math.log(math.pi * t * (1 + s)) - math.lgamma(t / 2 + 1)
        log_cubes = n * rh + t * math.log(delta)
        # Stirling: the two agree to O(ln t)
        assert abs(log_ball - log_cubes) < 2 * math.log(t)

    def test_fixed_requires_slack(self):
        with pytest.raises(ValueError):
            FlashDesign(0.5, 0.1, 0.0)
        with pytest.raises(ValueError):
            FlashDesign(0.5, 1.0, 1.0)

    def test_from_budget(self):
        assert FlashDesign.from_budget(0.5, 0.1, 0.9).slack == pytest.approx(9.0)

    def test_segment_length(self):
        assert FlashDesign(0.5, 0.1, 1.0).segment_length(640) == 64
        with pytest.raises(ValueError):
            FlashDesign(0.5, 0.1, 1.0).segment_length(4)

    def test_flash_rate(self):
        assert awgn.flash_rate(0.5, 0.1, 9.0, 1.0, 1.0) == pytest.approx(FLASH_RATE_S9, rel=1e-14)

    def test_flash_rate_nonpositive_flagged(self):
        with pytest.warns(awgn.FlashRateWarning):
            assert awgn.flash_rate(0.01, 0.5, 100.0, 1.0, 1.0) == 0.0

    def test_chernoff_sphere_exponent(self):
        assert awgn.chernoff_sphere_exponent(1.0) == pytest.approx(0.5 * (1 - math.log(2)))
        with pytest.raises(ValueError):
            awgn.chernoff_sphere_exponent(0.0)

    @given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
    def test_chernoff_sphere_exponent_increasing(self, s1, s2):
        assume(s1 < s2)
        assert awgn.chernoff_sphere_exponent(s1) <= awgn.chernoff_sphere_exponent(s2)


class TestOrdinaryExponent:
    def test_e0_value(self):
        assert awgn.gallager_e0(1.0, 1.0) == pytest.approx(0.202732554054082, abs=1e-14)

    def test_zero_rate_is_e0_at_one(self):
        assert awgn.default_ordinary_exponent(0.0, 1.0).value == pytest.approx(awgn.gallager_e0(1.0, 1.0), abs=1e-12)

    def test_zero_at_capacity(self):
        assert awgn.default_ordinary_exponent(C_ONE, 1.0).is_zero

    def test_matches_dense_rho_grid(self):
        rhos = np.linspace(0.0, 1.0, 100001)
        for rate in (0.02, 0.1, 0.25, 0.33):
            brute = float(np.max(0.5 * rhos * np.log1p(1.0 / (1 + rhos)) - rhos * rate))
            assert awgn.default_ordinary_exponent(rate, 1.0).value == pytest.approx(brute, abs=1e-9)

    @pytest.mark.parametrize("gap, frozen", [
        # mpmath, 50 digits, stationary point of E0(rho) - rho (c - gap) at SNR 1
        (9.99e-6, 9.980159553168173e-11),
        (1e-7, 1.0000001500000273e-14),
    ])
    def test_near_capacity_series(self, gap, frozen):
        got = awgn.default_ordinary_exponent(C_ONE - gap, 1.0)
        assert got.kind.value == "finite"
        assert got.value == pytest.approx(frozen, rel=1e-8)

    def test_positive_one_ulp_below_capacity(self):
        r = math.nextafter(awgn.capacity_awgn(1.0), 0.0)
        e = awgn.default_ordinary_exponent(r, 1.0)
        assert e.kind.value == "finite" and e.value > 0
        assert e <= awgn.wsp_awgn(r, 1.0, 0.0)

    def test_below_sphere_packing(self):
        for rate in np.linspace(0.01, C_ONE - 1e-3, 40):
            assert awgn.default_ordinary_exponent(rate, 1.0) <= awgn.wsp_awgn(rate, 1.0, 0.0)


class TestAchievable:
    def test_explicit_design(self):
        # flash branch 0.1*(9 - ln 10)/2 against the coded branch at dR = 0.6 - R'
        e = awgn.achievable_exponent(0.6, 1.0, 0.5, tau=0.1, s=9.0)
        coded = 0.9 * awgn.default_ordinary_exponent((0.6 - FLASH_RATE_S9) / 0.9, 1.0).value
        assert e.value == pytest.approx(min(0.05 * (9 - math.log(10)), coded), rel=1e-12)
        assert e.value == pytest.approx(0.012509891, rel=1e-6)

    def test_flash_branch_only_when_no_excess(self):
        e = awgn.achievable_exponent(0.3, 1.0, 0.5, tau=0.1, s=9.0)
        assert e.value == pytest.approx(0.1 * awgn.chernoff_sphere_exponent(9.0))

    def test_needs_both_or_neither(self):
        with pytest.raises(ValueError):
            awgn.achievable_exponent(0.6, 1.0, 0.5, tau=0.1)

    def test_optimized_regimes(self):
        assert awgn.achievable_exponent(0.49, 1.0, 0.5).is_infinite
        assert awgn.achievable_exponent(0.5 + C_ONE, 1.0, 0.5).is_zero
        mid = awgn.achievable_exponent(0.6, 1.0, 0.5)
        assert mid.kind.value == "finite"
        assert mid.value == pytest.approx(awgn.default_ordinary_exponent(0.1, 1.0).value, rel=1e-12)

    def test_explicit_designs_approach_limit(self):
        # tau -> 0 with s = B/tau and growing B tends to E_a(R - R_h)
        limit = awgn.achievable_exponent(0.6, 1.0, 0.5).value
        values = [awgn.achievable_exponent(0.6, 1.0, 0.5, tau=tau, s=B / tau).value
                  for tau, B in ((1e-2, 5.0), (1e-3, 20.0), (1e-4, 50.0))]
        assert all(v <= limit + 1e-9 for v in values)
        assert abs(values[-1] - limit) < abs(values[0] - limit)
        assert values[-1] == pytest.approx(limit, abs=2e-3)

    def test_custom_provider(self):
        calls = []

        def provider(rate, gamma):
            calls.append((rate, gamma))
            return ExponentValue.finite(1.0)

        assert awgn.achievable_exponent(0.6, 2.0, 0.5, provider=provider).value == 1.0
        assert calls[0][0] == pytest.approx(0.1) and calls[0][1] == 2.0


class TestWsp:
    def test_spot_value(self):
        assert awgn.wsp_awgn(0.6, 1.0, 0.5).value == pytest.approx(WSP_G1_RH05_R06, abs=1e-12)

    def test_worst_case_variance(self):
        assert awgn.worst_case_variance(0.7, 0.5, 1.0) == pytest.approx(WORST_VARIANCE_P1_GAP02, rel=1e-13)
        assert awgn.worst_case_variance(0.5, 0.5, 1.0) is None

    def test_worst_variance_makes_rate_capacity(self):
        v = awgn.worst_case_variance(0.8, 0.5, 2.0)
        assert awgn.capacity_awgn(2.0 / v) + 0.5 == pytest.approx(0.8, rel=1e-13)

    def test_regimes(self):
        assert awgn.wsp_awgn(0.5, 1.0, 0.5).is_infinite
        assert awgn.wsp_awgn(0.5 + C_ONE, 1.0, 0.5).is_zero
        assert awgn.wsp_awgn(0.0, 1.0, 0.0).is_infinite

    def test_without_help_is_sphere_packing_at_low_rate(self):
        # v = gamma/(e^{2R}-1) -> large; D grows like v/2
        assert awgn.wsp_awgn(1e-4, 1.0, 0.0).value > 1000

    def test_continuity_at_capacity(self):
        assert awgn.wsp_awgn(0.5 + C_ONE - 1e-9, 1.0, 0.5).value < 1e-15

    @given(st.floats(0.05, 10.0), st.floats(0.0, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_nonincreasing_in_rate(self, gamma, rh, u1, u2):
        c = awgn.capacity_awgn(gamma)
        r1, r2 = sorted((rh + 1e-6 + u1 * c, rh + 1e-6 + u2 * c))
        assert awgn.wsp_awgn(r1, gamma, rh) >= awgn.wsp_awgn(r2, gamma, rh)

    @given(st.floats(0.05, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
    def test_nondecreasing_in_helper_rate(self, gamma, h1, h2, rate):
        lo, hi = sorted((h1, h2))
        assert awgn.wsp_awgn(rate, gamma, hi) >= awgn.wsp_awgn(rate, gamma, lo)

    def test_subnormal_rate_gap_stays_finite(self):
        w = awgn.wsp_awgn(5e-324, 1.0, 0.0)
        assert w.kind.value == "finite" and w.value > 1e300
        assert awgn.achievable_exponent(5e-324, 1.0, 0.0) <= w

    @given(st.floats(0.05, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 1.5))
    def test_sandwich(self, gamma, rh, rate):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert awgn.achievable_exponent(rate, gamma, rh) <= awgn.wsp_awgn(rate, gamma, rh)

    @given(st.floats(0.05, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 1.5))
    def test_regime_boundaries_coincide(self, gamma, rh, rate):
        a = awgn.achievable_exponent(rate, gamma, rh)
        w = awgn.wsp_awgn(rate, gamma, rh)
        if rate < rh:
            assert a.is_infinite and w.is_infinite
        if rate >= rh + awgn.capacity_awgn(gamma):
            assert a.is_zero and w.is_zero
