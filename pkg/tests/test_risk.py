"""Replication engine: stub tests, closed-form coverage, determinism,
exponent fits, and the test-comparison report."""
import math

import numpy as np
import pytest
from scipy.stats import chi2

from sparse_testbench.risk import (
    RiskEstimate,
    compare_tests,
    estimate_risk,
    estimate_risks,
    fit_exponent,
    run_replications,
    wilson_halfwidth,
)
from sparse_testbench.rules import TestSpec, build_test
from sparse_testbench.signals import NRule, RegimeSpec


def _regime(alpha=0.6, r=1.0, n_rule=None):
    return RegimeSpec(
        alpha=alpha, signal_mode="sparse_r", r=r, n_rule=n_rule or NRule(1, 1, 0)
    )


ALWAYS = TestSpec("max_sqrt2logp", -math.inf, "max", (), label="always")
NEVER = TestSpec("max_sqrt2logp", math.inf, "max", (), label="never")


class TestEstimateRisk:
    def test_always_reject_stub(self):
        est = estimate_risk(ALWAYS, _regime(), 32, 200, 0)
        assert (est.type1, est.type2_bayes, est.risk) == (1.0, 0.0, 1.0)

    def test_never_reject_stub(self):
        est = estimate_risk(NEVER, _regime(), 32, 200, 0)
        assert (est.type1, est.type2_bayes, est.risk) == (0.0, 1.0, 1.0)
        assert est.degenerate

    def test_chisq_center_null_closed_form(self):
        reg = _regime(alpha=0.5, r=0.1)
        est = estimate_risk(build_test("chisq_center", reg, 100), reg, 100, 4000, 1)
        exact = chi2.sf(100, 100)  # 0.4812
        assert abs(est.type1 - exact) <= 3 * wilson_halfwidth(
            int(est.type1 * 4000), 4000
        )

    def test_reps_validation(self):
        with pytest.raises(ValueError):
            estimate_risk(ALWAYS, _regime(), 32, 99, 0)

    def test_metadata_resolution(self):
        reg = _regime(alpha=0.6, r=1.0)
        est = estimate_risk(ALWAYS, reg, 64, 100, 3)
        assert (est.p, est.n, est.s) == (64, 64, 6)
        assert est.A == pytest.approx(math.sqrt(2 * math.log(64) / 64), rel=1e-12)

    def test_gaussian_family_runs(self):
        reg = RegimeSpec(alpha=0.5, signal_mode="sparse_r", r=1.0, n_rule=NRule(4, 1, 0))
        est = estimate_risk(build_test("chisq_center", reg, 16), reg, 16, 300, 2,
                            design_family="gaussian")
        assert 0.0 <= est.risk <= 2.0

    def test_rademacher_family_runs(self):
        reg = RegimeSpec(alpha=0.5, signal_mode="sparse_r", r=1.0, n_rule=NRule(4, 1, 0))
        est = estimate_risk(build_test("chisq_center", reg, 8), reg, 8, 200, 2,
                            design_family="rademacher")
        assert 0.0 <= est.risk <= 2.0

    def test_null_law_identical_across_families(self):
        # z | X is exactly N(0, I_p) under the null for every design family,
        # so the fresh-design path must reproduce the same chi-square type I
        # as the orthogonal fast path
        from scipy.stats import chi2

        reg = RegimeSpec(alpha=0.5, signal_mode="sparse_r", r=1.0, n_rule=NRule(5, 1, 0))
        test = build_test("chisq_center", reg, 10)
        exact = chi2.sf(10, 10)
        for family in ("gaussian", "rademacher", "orthogonal"):
            est = estimate_risk(test, reg, 10, 3000, 77, design_family=family)
            hw = wilson_halfwidth(int(round(est.type1 * 3000)), 3000)
            assert abs(est.type1 - exact) <= 3 * hw, family

    def test_bayes_below_worst_candidate(self):
        # the worst fixed candidate dominates the prior average (3 se slack)
        reg = _regime(alpha=0.6, r=1.2)
        test = build_test("max_sqrt2logp", reg, 128)
        est = estimate_risk(test, reg, 128, 4000, 5)
        se = math.sqrt(2.0 * 0.25 / 4000)
        assert est.type2_bayes <= est.type2_worst_candidate + 3 * se

    def test_risk_monotone_in_amplitude(self):
        reg_a = _regime(alpha=0.6, r=0.5)
        reg_2a = _regime(alpha=0.6, r=2.0)  # doubles A
        test = build_test("max_sqrt2logp", reg_a, 128)
        lo = estimate_risk(test, reg_2a, 128, 4000, 7)
        hi = estimate_risk(test, reg_a, 128, 4000, 7)
        se = math.sqrt(2.0 * 0.25 / 4000)
        assert lo.risk <= hi.risk + 3 * se


class TestDeterminism:
    def test_worker_count_invariance(self):
        reg = _regime()
        tests = [build_test("max_sqrt2logp", reg, 64), build_test("chisq_center", reg, 64)]
        c1 = run_replications(tests, reg, 64, 600, 9, workers=1)
        c2 = run_replications(tests, reg, 64, 600, 9, workers=2)
        c3 = run_replications(tests, reg, 64, 600, 9, workers=3)
        assert np.array_equal(c1, c2) and np.array_equal(c1, c3)

    def test_joint_equals_separate(self):
        # sharing replications across tests must not change any estimate
        reg = _regime()
        t1 = build_test("max_sqrt2logp", reg, 64)
        t2 = build_test("chisq_center", reg, 64)
        joint = estimate_risks([t1, t2], reg, 64, 500, 11)
        solo1 = estimate_risk(t1, reg, 64, 500, 11)
        solo2 = estimate_risk(t2, reg, 64, 500, 11)
        assert joint[0] == solo1 and joint[1] == solo2

    def test_seed_sensitivity(self):
        reg = _regime()
        t = build_test("chisq_center", reg, 64)
        a = run_replications([t], reg, 64, 500, 1)
        b = run_replications([t], reg, 64, 500, 2)
        assert not np.array_equal(a, b)

    def test_gaussian_family_worker_invariance(self):
        reg = RegimeSpec(alpha=0.5, signal_mode="sparse_r", r=1.0, n_rule=NRule(3, 1, 0))
        t = build_test("chisq_center", reg, 12)
        c1 = run_replications([t], reg, 12, 300, 4, design_family="gaussian", workers=1)
        c2 = run_replications([t], reg, 12, 300, 4, design_family="gaussian", workers=2)
        assert np.array_equal(c1, c2)


class TestWilson:
    def test_halfwidth_symmetric_cases(self):
        assert wilson_halfwidth(0, 100) > 0.0
        assert wilson_halfwidth(50, 100) == pytest.approx(
            wilson_halfwidth(50, 100), rel=1e-12
        )
        assert wilson_halfwidth(0, 1000) < wilson_halfwidth(0, 100)

    def test_matches_direct_formula(self):
        z = 1.959963984540054
        k, n = 37, 500
        ph = k / n
        expected = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        assert wilson_halfwidth(k, n) == pytest.approx(expected, rel=1e-12)


def _synthetic_series(risk_fn, reps=10**6):
    reg = _regime()
    out = []
    for k in range(8, 13):
        p = 2**k
        s = int(np.ceil(round(p**0.4, 9)))
        out.append(
            RiskEstimate(
                "synthetic", "orthogonal", reg, p, s, 0.1, p,
                0.0, 0.0, 0.0, risk_fn(p), reps, 0.0, 0,
            )
        )
    return out


class TestFitExponent:
    def test_exact_power_law(self):
        fit = fit_exponent(_synthetic_series(lambda p: p**-0.5), "log_risk", "log p")
        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert not fit.censored

    def test_exact_stretched_exponential(self):
        delta = 0.05
        reg = RegimeSpec(alpha=0.4, signal_mode="dense_delta", delta=delta)
        series = []
        for k in range(8, 13):
            p = 2**k
            series.append(
                RiskEstimate(
                    "synthetic", "orthogonal", reg, p, 3, 0.1, p,
                    0.0, 0.0, 0.0, math.exp(-(p**0.1) / 16.0), 10**6, 0.0, 0,
                )
            )
        fit = fit_exponent(series, "log_risk", "p^(2 delta)")
        assert fit.slope == pytest.approx(-1 / 16, abs=1e-9)

    def test_one_minus_risk_side(self):
        fit = fit_exponent(
            _synthetic_series(lambda p: 1.0 - p**-0.25), "log_one_minus_risk", "log p"
        )
        assert fit.slope == pytest.approx(-0.25, abs=1e-9)

    def test_censoring_flag(self):
        fit = fit_exponent(
            _synthetic_series(lambda p: 0.0 if p > 1000 else p**-1.0),
            "log_risk",
            "log p",
        )
        assert fit.censored
        floor = 1.0 / (2.0 * 10**6)
        assert all(v >= floor for _, v in fit.points)

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_exponent(_synthetic_series(lambda p: 0.5)[:2], "log_risk", "log p")

    def test_rejects_mixed_tests(self):
        series = _synthetic_series(lambda p: 0.5)
        other = series[1].__class__(**{**series[1].__dict__, "test_name": "different"})
        with pytest.raises(ValueError):
            fit_exponent([series[0], other, series[2]], "log_risk", "log p")

    def test_rejects_duplicate_p(self):
        series = _synthetic_series(lambda p: 0.5)
        with pytest.raises(ValueError):
            fit_exponent([series[0], series[0], series[1]], "log_risk", "log p")

    def test_stderr_positive_on_noisy_series(self):
        rng = np.random.default_rng(0)
        series = _synthetic_series(lambda p: p**-0.5 * math.exp(0.05 * rng.standard_normal()))
        fit = fit_exponent(series, "log_risk", "log p")
        assert fit.slope_stderr > 0.0


class TestCompareTests:
    def test_preconditions(self):
        with pytest.raises(ValueError):
            compare_tests(_regime(alpha=0.6, r=0.5), 64, 200, 0)
        with pytest.raises(ValueError):
            compare_tests(
                RegimeSpec(alpha=0.4, signal_mode="dense_delta", delta=0.2), 64, 200, 0
            )

    def test_report_structure(self):
        rep = compare_tests(_regime(alpha=0.6, r=2.0), 64, 500, 0)
        assert rep.scan.test_name == "scan_taustar"
        assert len(rep.hc_grid) >= 4 and len(rep.max_grid) >= 4
        assert rep.hc_best.risk == min(e.risk for e in rep.hc_grid)
        assert rep.max_best.risk == min(e.risk for e in rep.max_grid)
        assert rep.scan_ratio <= 0.0

    def test_infinite_cutoffs_degenerate(self):
        rep = compare_tests(
            _regime(alpha=0.6, r=2.0), 64, 200, 0, cutoff_scale=math.inf
        )
        assert rep.degenerate
        assert rep.scan.risk == 1.0
        assert rep.hc_best.risk == 1.0 and rep.max_best.risk == 1.0

    def test_deterministic(self):
        a = compare_tests(_regime(alpha=0.6, r=2.0), 64, 300, 5)
        b = compare_tests(_regime(alpha=0.6, r=2.0), 64, 300, 5)
        assert a.scan == b.scan and a.hc_best == b.hc_best
