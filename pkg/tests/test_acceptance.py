"""Acceptance gate: every criterion at its stated tolerance, one printed
PASS/FAIL line per criterion (run with -s to see them all).

The theory being exercised is asymptotic; most criteria therefore combine
exact closed-form checks and oracle equivalences with directional checks at
explicit tolerances.  Three clauses encode asymptotic predictions that are
out of reach at desk scale; they are kept at their stated tolerances and are
expected to fail honestly rather than be loosened:

- criterion 4a: the max test's exact risk at p = 2^11 is 0.5878 (Type I
  0.1755 + Type II 0.4123), not within 0.05 of the s = 1 limit 1/2; the gap
  decays like 1/sqrt(pi log p) and needs log p ~ 10^3 to close to 0.05.
- criterion 5: at (alpha, r) = (0.6, 2) the scan test's true risk falls from
  ~6e-5 at p = 2^8 to below 1e-6 by p = 2^9, so a 1e5-replication estimate
  is 0 (censored) at four of the five grid points and no slope is
  measurable at the stated replication budget.
- criterion 6a: both the scan risk and the inf-over-grid ideal-HC risk at
  p = 2^10 are below 3e-6, so both estimates are 0 at 1e5 replications and
  no 3-stderr separation exists (the scan-vs-Max clause 6b is measurable
  and passes).
"""
import math

import numpy as np
import pytest
from scipy.stats import binom, chi2, norm

from sparse_testbench.cli import main
from sparse_testbench.designs import generate_design, gram_factorize, gram_sqrt_deviation
from sparse_testbench.lemmas import exact_lr_reference, run_all_checks
from sparse_testbench.risk import (
    compare_tests,
    estimate_risks,
    fit_exponent,
    run_replications,
    wilson_halfwidth,
)
from sparse_testbench.rules import build_test
from sparse_testbench.signals import NRule, PriorSpec, RegimeSpec, simulate
from sparse_testbench.statistics import integrated_lr
from sparse_testbench.theory import predict_exponent, rho_star

ORTHO_N = NRule(1.0, 1.0, 0.0)  # n = p


def _report(num: str, name: str, ok: bool, detail: str = "") -> bool:
    print(f"ACCEPTANCE {num:>3} {name:<42} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_01_detection_boundary_formula():
    alphas = [0.5 + 0.5 * k / 21 for k in range(1, 21)]
    worst = 0.0
    for alpha in alphas:
        expected = alpha - 0.5 if alpha < 0.75 else (1.0 - math.sqrt(1.0 - alpha)) ** 2
        worst = max(worst, abs(rho_star(alpha) - expected))
    worst = max(worst, abs(rho_star(0.6) - 0.1), abs(rho_star(0.84) - 0.36))
    jump = abs(rho_star(0.75 - 1e-6) - rho_star(0.75 + 1e-6))
    ok = worst <= 1e-12 and jump <= 1e-5
    assert _report("1", "detection boundary formula", ok,
                   f"max err {worst:.2e}, jump at 3/4 {jump:.2e}")


def test_criterion_02_exponent_formulas():
    cases = []
    for alpha, r in ((0.55, 0.8), (0.6, 1.0), (0.6, 2.0), (0.7, 0.9), (0.75, 1.0),
                     (0.8, 1.3), (0.9, 1.1), (0.95, 2.0)):
        cases.append((RegimeSpec(alpha=alpha, signal_mode="sparse_r", r=r),
                      -((r - alpha) ** 2) / (4 * r)))
    for alpha, r in ((0.6, 0.02), (0.6, 0.08), (0.7, 0.1), (0.8, 0.2),
                     (0.85, 0.25), (0.9, 0.15)):
        cases.append((RegimeSpec(alpha=alpha, signal_mode="sparse_r", r=r),
                      r - (alpha - 0.5)))
    for alpha, r in ((0.8, 0.29), (0.84, 0.3), (0.9, 0.4), (0.9, 0.36),
                     (0.95, 0.45), (0.85, 0.3)):
        cases.append((RegimeSpec(alpha=alpha, signal_mode="sparse_r", r=r),
                      1.0 - alpha - (1.0 - math.sqrt(r)) ** 2))
    for alpha, delta in ((0.2, 0.05), (0.3, 0.08), (0.1, 0.02), (0.25, 0.09)):
        cases.append((RegimeSpec(alpha=alpha, signal_mode="dense_delta", delta=delta),
                      -1.0 / 16.0))
    for alpha, delta in ((0.4, 0.2), (0.5, 0.3), (0.45, 0.1), (0.3, 0.35)):
        cases.append((RegimeSpec(alpha=alpha, signal_mode="dense_delta", delta=delta),
                      -1.0 / 8.0))
    for s in (1, 2, 3):
        cases.append((RegimeSpec(alpha=0.9, signal_mode="boundary_fixed_s", fixed_s=s),
                      0.5**s))
    assert len(cases) >= 30
    worst = max(abs(predict_exponent(reg).limit_value - want) for reg, want in cases)
    ok = worst <= 1e-12
    assert _report("2", f"exponent formulas ({len(cases)} points)", ok,
                   f"max err {worst:.2e}")


def test_criterion_03_null_calibration():
    p, reps, seed = 100, 10**4, 202
    reg = RegimeSpec(alpha=0.6, signal_mode="sparse_r", r=0.08, n_rule=ORTHO_N)
    tests = [
        build_test("chisq_center", reg, p),
        build_test("max_sqrt2logp", reg, p),
        build_test("hc_below", reg, p),
    ]
    counts = run_replications(tests, reg, p, reps, seed)
    t_max = math.sqrt(2 * math.log(p))
    thr_hc = tests[2].param("threshold")
    q = 2 * norm.sf(thr_hc)
    exact = (
        chi2.sf(p, p),
        1.0 - (2 * norm.cdf(t_max) - 1.0) ** p,
        binom.sf(math.floor(tests[2].cutoff), p, q),
    )
    details, ok = [], True
    for i, name in enumerate(("chisq_center", "max_sqrt2logp", "hc_below")):
        emp = counts[i, 0] / reps
        hw = wilson_halfwidth(int(counts[i, 0]), reps)
        good = abs(emp - exact[i]) <= 3 * hw
        ok &= good
        details.append(f"{name} {emp:.4f} vs {exact[i]:.4f} (3hw {3 * hw:.4f})")
    assert _report("3", "null calibration (orthogonal, p=100)", ok, "; ".join(details))


def _theorem5_series():
    reg = RegimeSpec(alpha=0.9, signal_mode="boundary_fixed_s", fixed_s=1, n_rule=ORTHO_N)
    out = []
    for k in (7, 9, 11):
        p = 2**k
        test = build_test("max_sqrt2logp", reg, p)
        est = estimate_risks([test], reg, p, 10**4, 404 + k)[0]
        out.append(est)
    return out


@pytest.fixture(scope="module")
def theorem5_estimates():
    return _theorem5_series()


def test_criterion_04a_boundary_risk_near_half(theorem5_estimates):
    est = theorem5_estimates[-1]
    dist = abs(est.risk - 0.5)
    ok = dist <= 0.05
    assert _report("4a", "fixed-s boundary risk within 0.05 of 1/2", ok,
                   f"risk(2^11) = {est.risk:.4f}, |risk - 0.5| = {dist:.4f} "
                   f"(exact value 0.5878; unreachable at desk scale)")


def test_criterion_04b_boundary_distance_monotone(theorem5_estimates):
    dists = [abs(e.risk - 0.5) for e in theorem5_estimates]
    ses = [math.sqrt(2.0) * e.ci_halfwidth / 1.96 for e in theorem5_estimates]
    ok = all(
        dists[i + 1] <= dists[i] + 3 * math.hypot(ses[i], ses[i + 1])
        for i in range(len(dists) - 1)
    )
    assert _report("4b", "boundary distance to 1/2 decreasing in p", ok,
                   "distances " + ", ".join(f"{d:.4f}" for d in dists))


def test_criterion_05_scan_exponent_direction():
    reg = RegimeSpec(alpha=0.6, signal_mode="sparse_r", r=2.0, n_rule=ORTHO_N)
    estimates = []
    for k in range(8, 13):
        p = 2**k
        test = build_test("scan_taustar", reg, p)
        estimates.append(estimate_risks([test], reg, p, 10**5, 505 + k)[0])
    fit = fit_exponent(estimates, "log_risk", "s log p")
    target = -((2.0 - 0.6) ** 2) / (4 * 2.0)  # -0.245
    ok = (
        fit.slope < 0.0
        and abs(fit.slope - target) <= 0.5 * abs(target)
        and fit.r_squared >= 0.9
    )
    risks = ", ".join(f"{e.risk:.2e}" for e in estimates)
    assert _report("5", "scan risk slope vs -(r-a)^2/4r", ok,
                   f"slope {fit.slope:.4f} (target {target}), R^2 {fit.r_squared:.3f}, "
                   f"censored={fit.censored}, risks [{risks}] "
                   f"(risk < MC resolution beyond p=2^8 at 1e5 reps)")


@pytest.fixture(scope="module")
def comparison_report():
    reg = RegimeSpec(alpha=0.6, signal_mode="sparse_r", r=2.0, n_rule=ORTHO_N)
    return compare_tests(reg, 2**10, 10**5, 606)


def _gap_in_se(lo, hi, reps):
    gap = hi.risk - lo.risk
    se = math.hypot(
        math.sqrt(max(lo.risk * (1 - min(lo.risk, 1.0)), 0.0) / reps),
        math.sqrt(max(hi.risk * (1 - min(hi.risk, 1.0)), 0.0) / reps),
    )
    return gap, se


def test_criterion_06a_scan_beats_ideal_hc(comparison_report):
    rep = comparison_report
    gap, se = _gap_in_se(rep.scan, rep.hc_best, rep.reps)
    ok = gap >= 3 * se and gap > 0
    assert _report("6a", "scan below inf-cutoff ideal HC (3 se)", ok,
                   f"scan {rep.scan.risk:.2e} vs HC {rep.hc_best.risk:.2e} "
                   f"({rep.hc_best.test_name}); both at MC floor, no separation "
                   f"measurable at 1e5 reps")


def test_criterion_06b_scan_beats_max(comparison_report):
    rep = comparison_report
    gap, se = _gap_in_se(rep.scan, rep.max_best, rep.reps)
    ok = gap >= 3 * se and gap > 0
    assert _report("6b", "scan below inf-cutoff Max test (3 se)", ok,
                   f"scan {rep.scan.risk:.2e} vs Max {rep.max_best.risk:.2e} "
                   f"({rep.max_best.test_name}), gap/se = "
                   f"{gap / se if se else math.inf:.1f}")


def test_criterion_07_lr_oracle_equivalence():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(1000):
        p = int(rng.integers(4, 13))
        s = int(rng.integers(1, 4))
        mode = "symmetric_signed" if rng.integers(2) else "one_directional"
        x = generate_design("gaussian", 3 * p, p, int(rng.integers(10**6)))
        obs = simulate(x, None, int(rng.integers(10**6)))
        prior = PriorSpec(p, s, 0.4, mode)
        ref = exact_lr_reference(obs, prior)
        val = integrated_lr(obs, prior)
        worst = max(worst, abs(val.log_value - math.log(ref)))
    p, s, a = 10, 2, 0.35
    x = generate_design("orthogonal", p, p, 3)
    prior = PriorSpec(p, s, a, "one_directional")
    vals = np.array(
        [integrated_lr(simulate(x, None, seed), prior).value for seed in range(10**5)]
    )
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    mean_ok = abs(vals.mean() - 1.0) <= 3 * se
    ok = worst <= 1e-10 and mean_ok
    assert _report("7", "LR dual-route + unit null mean", ok,
                   f"max log-rel err {worst:.2e}; E0[L] = {vals.mean():.4f} "
                   f"(3 se = {3 * se:.4f})")


def test_criterion_08_lemma_suite():
    results = run_all_checks()
    bad = [r.lemma_id for r in results if not r.passed]
    code = main(["verify-lemmas"])
    ok = not bad and code == 0
    assert _report("8", "lemma verification suite", ok,
                   f"exit {code}" + (f", violations in {bad}" if bad else ""))


def test_criterion_09_determinism(tmp_path, monkeypatch):
    cfg = f"""
experiment_id = "determinism"
design_family = "orthogonal"
p_grid = [64, 128]
reps = 300
seed = 909
output_dir = "{tmp_path}/out"

[regime]
alpha = 0.6
signal_mode = "sparse_r"
r = 1.5

[[tests]]
name = "max_sqrt2logp"

[[tests]]
name = "scan_taustar"
"""
    path = tmp_path / "det.toml"
    path.write_text(cfg)
    blobs = []
    for threads in ("1", "0"):
        monkeypatch.setenv("SPARSE_TESTBENCH_THREADS", threads)
        assert main(["run", str(path)]) == 0
        blobs.append((tmp_path / "out" / "determinism" / "results.csv").read_bytes())
    ok = blobs[0] == blobs[1]
    assert _report("9", "byte-identical rerun across thread counts", ok,
                   f"{len(blobs[0])} bytes")


def test_criterion_10_gram_correctness():
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(1000):
        family = ("gaussian", "rademacher")[int(rng.integers(2))]
        p = int(rng.integers(2, 13))
        n = int(rng.integers(p + 2, 40))
        x = generate_design(family, n, p, int(rng.integers(10**9)))
        fac = gram_factorize(x)
        err = np.max(np.abs(fac.inv_sqrt @ x.gram @ fac.inv_sqrt - np.eye(p)))
        worst = max(worst, float(err))
    ortho_worst = max(
        gram_sqrt_deviation(generate_design("orthogonal", 24, 12, seed))
        for seed in range(100)
    )
    ok = worst <= 1e-8 and ortho_worst <= 1e-10
    assert _report("10", "gram factorization correctness", ok,
                   f"max whitening err {worst:.2e}, orthogonal deviation "
                   f"{ortho_worst:.2e}")
