import math

import numpy as np
import pytest
from scipy import stats

from flashhelp import sim
from flashhelp.awgn import AwgnParams, FlashDesign, HelperMode
from flashhelp.modulo import ModuloParams
from flashhelp.prob import Pmf, gaussian_sphere_tail
from flashhelp.sim import AwgnFlashConfig, RngPlan, SimResult
from oracles import binomial_tail, sequences

MP91 = ModuloParams(Pmf([0.9, 0.1]))


def flash_cfg(t=64, s=1.0, mode=HelperMode.FIXED, power=1.0):
    design = FlashDesign(0.5, 0.1, s if mode is HelperMode.FIXED else 0.0, mode)
    return AwgnFlashConfig(AwgnParams(power), design, t)


def fake_result(errors, trials, n=100):
    return SimResult("x", trials, n, {sim.HELPER_FAILURE: errors, sim.NONE: trials - errors}, None, {})


class TestRng:
    def test_chunks_are_independent_streams(self):
        plan = RngPlan(7)
        a, b = plan.chunk_rng(0).random(4), plan.chunk_rng(1).random(4)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(a, RngPlan(7).chunk_rng(0).random(4))

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError):
            RngPlan(-1)

    def test_workers_do_not_change_results(self):
        cfg = flash_cfg(t=16)
        one = sim.simulate_flash_awgn(cfg, 3 * sim.CHUNK_SIZE + 5, RngPlan(11, 1))
        two = sim.simulate_flash_awgn(cfg, 3 * sim.CHUNK_SIZE + 5, RngPlan(11, 2))
        assert one.to_dict() == two.to_dict()

    def test_trial_count_is_exact(self):
        r = sim.simulate_modulo_fixed(MP91, 1.0, 12, sim.CHUNK_SIZE + 1, RngPlan(1))
        assert r.trials == sim.CHUNK_SIZE + 1
        with pytest.raises(ValueError):
            sim.simulate_modulo_fixed(MP91, 1.0, 12, 0, RngPlan(1))


class TestIntervals:
    def test_clopper_pearson_coverage_definition(self):
        lo, hi = sim.clopper_pearson(7, 100, 0.95)
        assert stats.binom.sf(6, 100, lo) == pytest.approx(0.025, rel=1e-8)
        assert stats.binom.cdf(7, 100, hi) == pytest.approx(0.025, rel=1e-8)

    def test_edges(self):
        assert sim.clopper_pearson(0, 10)[0] == 0.0
        assert sim.clopper_pearson(10, 10)[1] == 1.0

    def test_rule_of_three(self):
        r = fake_result(0, 10**6)
        assert r.ci95 == (0.0, 3e-6)

    def test_censored_estimate(self):
        est = fake_result(0, 10**6).exponent_estimate
        assert est.censored
        assert est.value.value == pytest.approx(0.127168982692962, rel=1e-12)
        assert est.upper == math.inf

    def test_uncensored_estimate(self):
        est = fake_result(50, 10**4).exponent_estimate
        assert not est.censored
        assert est.lower <= est.value.value <= est.upper
        assert est.value.value == pytest.approx(-math.log(50e-4) / 100)

    def test_causes_must_add_up(self):
        with pytest.raises(ValueError):
            SimResult("x", 10, 1, {sim.NONE: 9}, None, {})

    def test_json_sentinels(self):
        d = fake_result(0, 100).to_dict()
        assert d["exponent_estimate"]["upper"] == "inf"


class TestFlash:
    def test_geometry(self):
        cfg = flash_cfg()
        assert cfg.step == pytest.approx(0.0393803673878072, rel=1e-14)
        assert cfg.levels == int(2 / cfg.step) + 1
        assert cfg.block_length == 640

    def test_quantize_to_centers(self):
        # cells [k, k+1) map to their centers k + 1/2
        z = np.array([0.0, 0.49, 0.99, -0.51, 1.5])
        q = sim.quantize_to_centers(z, 1.0)
        np.testing.assert_allclose(q, [0.5, 0.5, 0.5, -0.5, 1.5])
        assert np.all(np.abs(z - q) <= 0.5)

    def test_zero_conditional_errors(self):
        r = sim.simulate_flash_awgn(flash_cfg(t=32), 20000, RngPlan(3))
        assert r.hard_checks["conditional_decode_errors_zero"]
        assert r.hard_checks["residual_within_half_step"]
        assert r.errors_by_cause[sim.DECODE_ERROR] == 0
        assert r.report["max_residual_steps"] <= 0.5

    def test_sphere_failures_match_chi2_tail(self):
        t, s, trials = 20, 0.5, 40000
        r = sim.simulate_flash_awgn(flash_cfg(t=t, s=s), trials, RngPlan(5))
        exact = gaussian_sphere_tail(t, s)
        lo, hi = stats.binom.interval(0.999, trials, exact)
        assert lo <= r.errors_by_cause[sim.HELPER_FAILURE] <= hi

    def test_variable_mode_never_fails(self):
        r = sim.simulate_flash_awgn(flash_cfg(t=16, mode=HelperMode.VARIABLE), 10000, RngPlan(2))
        assert r.errors_total == 0

    def test_power_reported(self):
        r = sim.simulate_flash_awgn(flash_cfg(t=16), 5000, RngPlan(4))
        assert r.realized_power_mean > 0
        assert "power_reference" in r.report


class TestModuloFixed:
    def test_exact_is_binomial_sum(self):
        exact = sim.exact_error_modulo_fixed(MP91, 1.0, 12)
        assert exact == pytest.approx(binomial_tail(12, 0.1, 5), abs=1e-12)

    def test_exact_against_sequence_enumeration(self):
        p = Pmf([0.6, 0.3, 0.1])
        logp = np.log(p.probs)
        t, theta = 6, 1.0
        mass = sum(math.exp(sum(logp[list(z)])) for z in sequences(3, t)
                   if sum(logp[list(z)]) < -t * theta - 1e-9)
        assert sim.exact_error_modulo_fixed(ModuloParams(p), theta, t) == pytest.approx(mass, abs=1e-13)

    def test_monte_carlo_within_interval(self):
        trials = 100000
        r = sim.simulate_modulo_fixed(MP91, 1.0, 12, trials, RngPlan(8))
        exact = sim.exact_error_modulo_fixed(MP91, 1.0, 12)
        lo, hi = stats.binom.interval(0.999, trials, exact)
        assert lo <= r.errors_total <= hi
        assert r.all_checks_passed

    def test_everything_described(self):
        r = sim.simulate_modulo_fixed(MP91, 5.0, 10, 5000, RngPlan(1))
        assert r.errors_total == 0


class TestModuloVariable:
    def test_description_length(self):
        counts = np.array([[10, 0], [5, 5]])
        got = sim.description_length(counts, 2, 1.0)
        np.testing.assert_allclose(got, [math.log(11), 10 * math.log(2) + math.log(11)])

    def test_zero_overflow_margin(self):
        assert sim.zero_overflow_guaranteed(2, 0.3, 0.3, 200)
        assert not sim.zero_overflow_guaranteed(2, 0.2, 0.4, 100)
        r = sim.simulate_modulo_variable(MP91, 0.3, 0.3, 200, 20000, RngPlan(1))
        assert r.errors_total == 0
        assert r.hard_checks["zero_overflow_with_margin"]
        assert sim.exact_overflow_modulo(MP91, 0.3, 0.3, 200) == 0.0

    def test_monte_carlo_matches_exact(self):
        trials = 50000
        r = sim.simulate_modulo_variable(MP91, 0.2, 0.4, 100, trials, RngPlan(6))
        exact = sim.exact_overflow_modulo(MP91, 0.2, 0.4, 100)
        assert 0 < exact < 1
        lo, hi = stats.binom.interval(0.999, trials, exact)
        assert lo <= r.errors_total <= hi
