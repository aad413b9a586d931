"""Monte Carlo risk estimation with deterministic parallel replication.

Risk(T, s, A) = Type I + worst-case Type II is estimated by replicated
simulation.  Replication i draws everything it needs from a private stream
derived from (seed, i), so totals are independent of chunking and worker
count.  Per replication the engine simulates a null dataset, one alternative
drawn from the boundary prior, and a fixed set of worst-case candidate
signals; every requested test is decided on each dataset, with statistic
values shared between tests that differ only in their cutoff.

For orthogonal designs the whitened vector z given X is exactly
N(sqrt(n) beta, I_p) whatever the orthogonal X, so the engine samples z
directly instead of materializing a fresh design per replication; the
estimator targets the identical distribution at a fraction of the cost.
Sub-gaussian families draw a fresh design each replication.

Per-replication draw order (fixed, documented for reproducibility):
design entries (sub-gaussian families only), then the 5 x dim noise block
(null, prior alternative, 3 candidates), then prior support, then prior signs.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .designs import draw_design
from .rules import TestSpec, build_test
from .signals import RegimeSpec, resolve_regime
from .statistics import lr_log_terms, _check_budget

_DATASETS = 5  # null, bayes alternative, 3 worst-case candidates
_Z975 = 1.959963984540054


@dataclass(frozen=True)
class RiskEstimate:
    test_name: str
    design_family: str
    regime: RegimeSpec
    p: int
    s: int
    A: float
    n: int
    type1: float
    type2_bayes: float
    type2_worst_candidate: float
    risk: float
    reps: int
    ci_halfwidth: float
    seed: int
    degenerate: bool = False


@dataclass(frozen=True)
class ExponentFit:
    points: tuple
    scale: str
    side: str
    slope: float
    slope_stderr: float
    r_squared: float
    censored: bool


@dataclass(frozen=True)
class ComparisonReport:
    regime: RegimeSpec
    p: int
    reps: int
    seed: int
    scan: RiskEstimate
    hc_grid: tuple
    max_grid: tuple
    hc_best: RiskEstimate
    max_best: RiskEstimate
    scan_ratio: float
    hc_ratio: float
    max_ratio: float
    degenerate: bool


def wilson_halfwidth(successes: int, trials: int, z: float = _Z975) -> float:
    """Half-width of the 95% Wilson score interval."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    return (
        z
        * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
        / denom
    )


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit arg, else SPARSE_TESTBENCH_THREADS (0 = all cores)."""
    if workers is None:
        env = os.environ.get("SPARSE_TESTBENCH_THREADS", "")
        workers = int(env) if env.strip() else 1
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    return workers


def _candidate_signals(p: int, s: int):
    """The fixed worst-case candidate set: supports and sign patterns."""
    front = np.arange(s)
    alternating = np.where(np.arange(s) % 2 == 0, 1.0, -1.0)
    spread = (np.arange(s) * p) // s
    ones = np.ones(s)
    return (
        (front, ones),
        (front, alternating),
        (spread, ones),
    )


class _RepContext:
    """Lazy statistic evaluation for one simulated dataset."""

    def __init__(self, z, sqrt_n, xty=None, gram_for_lr=None, ztilde=None):
        self.z = z
        self.sqrt_n = sqrt_n
        self._xty = xty  # X'y; sqrt(n) z when X'X = n I
        self._gram = gram_for_lr  # dense X'X, or the scalar n
        self._ztilde = ztilde
        self._cache = {}

    @property
    def xty(self):
        if self._xty is None:
            self._xty = self.sqrt_n * self.z
        return self._xty

    @property
    def gram_for_lr(self):
        if self._gram is None:
            self._gram = self.sqrt_n * self.sqrt_n
        return self._gram

    @property
    def ztilde(self):
        if self._ztilde is None:
            self._ztilde = self.z / self.sqrt_n
        return self._ztilde

    def stat(self, key: tuple) -> float:
        if key in self._cache:
            return self._cache[key]
        kind = key[0]
        z = self.z
        if kind == "chi_sq":
            val = float(z @ z)
        elif kind == "max":
            val = float(np.max(np.abs(z)))
        elif kind == "ols_max":
            val = float(np.max(np.abs(self.ztilde)))
        elif kind == "scan_abs":
            s = key[1]
            a = np.abs(z)
            val = float(-np.partition(-a, s - 1)[:s].sum())
        elif kind == "scan_signed":
            s = key[1]
            top = -np.partition(-z, s - 1)[:s].sum()
            bottom = np.partition(z, s - 1)[:s].sum()
            val = float(max(top, -bottom))
        elif kind == "hc":
            val = float(np.count_nonzero(np.abs(z) > key[1]))
        elif kind == "lr":
            val = self._lr(key[1], None, 0.0)
        elif kind == "lr_trunc":
            val = self._lr(key[1], self.z, key[2])
        else:
            raise ValueError(f"unknown statistic kind {kind!r}")
        self._cache[key] = val
        return val

    def _lr(self, prior, z_trunc, level) -> float:
        total = _check_budget(prior)
        parts = [
            logsumexp(t)
            for t in lr_log_terms(self.xty, self.gram_for_lr, prior, z_trunc, level)
        ]
        return float(logsumexp(parts) - math.log(total))


def _rejects(test: TestSpec, ctx: _RepContext) -> bool:
    if test.stat == "bonferroni":
        return any(_rejects(m, ctx) for m in test.members)
    return ctx.stat(test.stat_key()) > test.cutoff


def _chunk_counts(args) -> np.ndarray:
    (tests, regime, p, design_family, prior_sign_mode, seed, i0, i1) = args
    s, amp, n = resolve_regime(regime, p)
    orthogonal = design_family == "orthogonal"
    sqrt_n = math.sqrt(n)
    candidates = _candidate_signals(p, s)
    counts = np.zeros((len(tests), _DATASETS), dtype=np.int64)
    for i in range(i0, i1):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(int(i),))
        )
        if orthogonal:
            noise = rng.standard_normal((_DATASETS, p))
            support = rng.choice(p, size=s, replace=False)
            if prior_sign_mode == "symmetric_signed":
                signs = rng.integers(0, 2, size=s) * 2.0 - 1.0
            else:
                signs = np.ones(s)
            contexts = []
            for d in range(_DATASETS):
                z = noise[d]
                if d == 1:
                    z = z.copy()
                    z[support] += sqrt_n * amp * signs
                elif d >= 2:
                    sup_c, sgn_c = candidates[d - 2]
                    z = z.copy()
                    z[sup_c] += sqrt_n * amp * sgn_c
                contexts.append(_RepContext(z, sqrt_n))
        else:
            entries = draw_design(design_family, n, p, rng)
            gram = entries.T @ entries
            gram = (gram + gram.T) / 2.0
            eigs, vecs = np.linalg.eigh(gram)
            inv_sqrt = (vecs / np.sqrt(eigs)) @ vecs.T
            inverse = (vecs / eigs) @ vecs.T
            noise = rng.standard_normal((_DATASETS, n))
            support = rng.choice(p, size=s, replace=False)
            if prior_sign_mode == "symmetric_signed":
                signs = rng.integers(0, 2, size=s) * 2.0 - 1.0
            else:
                signs = np.ones(s)
            contexts = []
            for d in range(_DATASETS):
                y = noise[d]
                if d == 1:
                    y = y + entries[:, support] @ (amp * signs)
                elif d >= 2:
                    sup_c, sgn_c = candidates[d - 2]
                    y = y + entries[:, sup_c] @ (amp * sgn_c)
                xty = entries.T @ y
                contexts.append(
                    _RepContext(
                        inv_sqrt @ xty,
                        sqrt_n,
                        xty=xty,
                        gram_for_lr=gram,
                        ztilde=inverse @ xty,
                    )
                )
        for t_idx, test in enumerate(tests):
            for d, ctx in enumerate(contexts):
                if d == 0:
                    counts[t_idx, 0] += _rejects(test, ctx)
                else:
                    counts[t_idx, d] += not _rejects(test, ctx)
    return counts


def run_replications(
    tests,
    regime: RegimeSpec,
    p: int,
    reps: int,
    seed: int,
    design_family: str = "orthogonal",
    prior_sign_mode: str = "one_directional",
    workers: int | None = None,
) -> np.ndarray:
    """Counts[test, dataset]: rejections under the null (dataset 0) and
    acceptances under each alternative (datasets 1..4).  Deterministic in
    (tests, regime, p, reps, seed, design_family, prior_sign_mode) only.
    """
    if reps < 100:
        raise ValueError(f"need reps >= 100, got {reps}")
    tests = tuple(tests)
    nworkers = resolve_workers(workers)
    chunk = max(200, math.ceil(reps / (4 * nworkers)))
    ranges = [(i, min(i + chunk, reps)) for i in range(0, reps, chunk)]
    argsets = [
        (tests, regime, p, design_family, prior_sign_mode, seed, i0, i1)
        for i0, i1 in ranges
    ]
    if nworkers == 1 or len(argsets) == 1:
        parts = [_chunk_counts(a) for a in argsets]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            parts = list(pool.map(_chunk_counts, argsets))
    return np.sum(parts, axis=0)


def _estimate_from_counts(
    test: TestSpec,
    counts_row: np.ndarray,
    regime: RegimeSpec,
    p: int,
    reps: int,
    seed: int,
    design_family: str,
) -> RiskEstimate:
    s, amp, n = resolve_regime(regime, p)
    type1 = counts_row[0] / reps
    type2_bayes = counts_row[1] / reps
    type2_worst = float(np.max(counts_row[2:])) / reps
    risk = type1 + max(type2_bayes, type2_worst)
    worst_count = int(np.max(counts_row[2:]))
    ci = max(
        wilson_halfwidth(int(counts_row[0]), reps),
        wilson_halfwidth(int(counts_row[1]), reps),
        wilson_halfwidth(worst_count, reps),
    )
    rates = (type1, type2_bayes, type2_worst)
    return RiskEstimate(
        test_name=test.display_name,
        design_family=design_family,
        regime=regime,
        p=p,
        s=s,
        A=amp,
        n=n,
        type1=type1,
        type2_bayes=type2_bayes,
        type2_worst_candidate=type2_worst,
        risk=risk,
        reps=reps,
        ci_halfwidth=ci,
        seed=seed,
        degenerate=any(r in (0.0, 1.0) for r in rates),
    )


def estimate_risk(
    test: TestSpec,
    regime: RegimeSpec,
    p: int,
    reps: int,
    seed: int,
    design_family: str = "orthogonal",
    prior_sign_mode: str = "one_directional",
    workers: int | None = None,
) -> RiskEstimate:
    counts = run_replications(
        [test], regime, p, reps, seed, design_family, prior_sign_mode, workers
    )
    return _estimate_from_counts(test, counts[0], regime, p, reps, seed, design_family)


def estimate_risks(
    tests,
    regime: RegimeSpec,
    p: int,
    reps: int,
    seed: int,
    design_family: str = "orthogonal",
    prior_sign_mode: str = "one_directional",
    workers: int | None = None,
) -> list[RiskEstimate]:
    """Estimates for several tests on shared replications.

    Identical to separate estimate_risk calls (the simulated data never
    depends on the tests), at a fraction of the cost.
    """
    tests = tuple(tests)
    counts = run_replications(
        tests, regime, p, reps, seed, design_family, prior_sign_mode, workers
    )
    return [
        _estimate_from_counts(t, counts[k], regime, p, reps, seed, design_family)
        for k, t in enumerate(tests)
    ]


_SCALES = ("log p", "s log p", "p^(2 delta)", "p^(1/2 + delta)")


def _normalizer(estimate: RiskEstimate, scale: str) -> float:
    if scale == "log p":
        return math.log(estimate.p)
    if scale == "s log p":
        return estimate.s * math.log(estimate.p)
    delta = estimate.regime.delta
    if delta is None:
        raise ValueError(f"scale {scale!r} needs a dense_delta regime")
    if scale == "p^(2 delta)":
        return estimate.p ** (2.0 * delta)
    if scale == "p^(1/2 + delta)":
        return estimate.p ** (0.5 + delta)
    raise ValueError(f"unknown scale {scale!r}; choose from {_SCALES}")


def fit_exponent(series, side: str, scale: str) -> ExponentFit:
    """Least-squares slope of log(risk) (or log(1-risk)) on the normalizer.

    Rates that hit 0 or 1 exactly are replaced by the continuity correction
    1/(2 reps) and flagged as censored rather than rejected.
    """
    series = sorted(series, key=lambda e: e.p)
    if len(series) < 3:
        raise ValueError("need at least 3 estimates to fit an exponent")
    ps = [e.p for e in series]
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise ValueError("estimates must be at distinct p values")
    names = {e.test_name for e in series}
    regimes = {e.regime for e in series}
    if len(names) > 1 or len(regimes) > 1:
        raise ValueError("estimates must share one test and one regime")
    if side not in ("log_risk", "log_one_minus_risk"):
        raise ValueError(f"unknown side {side!r}")
    censored = False
    xs, ys, points = [], [], []
    for e in series:
        val = e.risk if side == "log_risk" else 1.0 - e.risk
        floor = 1.0 / (2.0 * e.reps)
        if val < floor:
            val = floor
            censored = True
        xs.append(_normalizer(e, scale))
        ys.append(math.log(val))
        points.append((e.p, val))
    x = np.array(xs)
    y = np.array(ys)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("normalizer is constant across the series")
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - (y.mean() + slope * xc)
    dof = len(x) - 2
    mse = float(resid @ resid) / dof if dof > 0 else 0.0
    stderr = math.sqrt(mse / sxx)
    sst = float((y - y.mean()) @ (y - y.mean()))
    r2 = 1.0 if sst == 0.0 else 1.0 - float(resid @ resid) / sst
    return ExponentFit(
        points=tuple(points),
        scale=scale,
        side=side,
        slope=slope,
        slope_stderr=stderr,
        r_squared=r2,
        censored=censored,
    )


def _scaled(test: TestSpec, factor: float) -> TestSpec:
    if factor == 1.0:
        return test
    return TestSpec(
        test.name, test.cutoff * factor, test.stat, test.params, test.members, test.label
    )


def compare_tests(
    regime: RegimeSpec,
    p: int,
    reps: int,
    seed: int,
    design_family: str = "orthogonal",
    workers: int | None = None,
    cutoff_scale: float = 1.0,
) -> ComparisonReport:
    """Scan test against inf-over-cutoff ideal HC and Max tests.

    The HC count cutoffs are proportional to s (t = ceil(c s) for
    c in {1/4, 1/2, 1, 2, 4}); the Max cutoffs sweep sqrt(2 c log p) for c
    between 1 and 3r/2, bracketing the type-I/type-II balance point.
    `cutoff_scale` rescales every cutoff (debug knob; inf disables rejection).
    """
    if regime.signal_mode != "sparse_r":
        raise ValueError("compare_tests needs a sparse_r regime")
    if regime.r <= regime.alpha:
        raise ValueError(f"need r > alpha, got r={regime.r}, alpha={regime.alpha}")
    s, _, _ = resolve_regime(regime, p)
    r = regime.r
    logp = math.log(p)

    scan = _scaled(build_test("scan_taustar", regime, p), cutoff_scale)
    hc_ts = sorted({math.ceil(c * s) for c in (0.25, 0.5, 1.0, 2.0, 4.0)})
    hc_tests = [
        _scaled(build_test("hc_ideal", regime, p, t=t, label=f"hc_ideal(t={t})"), cutoff_scale)
        for t in hc_ts
    ]
    max_cs = sorted({1.0, (1.0 + math.sqrt(r)) ** 2 / 4.0, 0.75 * r, r, 1.25 * r, 1.5 * r})
    max_tests = []
    for c in max_cs:
        cutoff = math.sqrt(2.0 * c * logp)
        max_tests.append(
            _scaled(
                TestSpec(
                    "max_sqrt2logp",
                    cutoff,
                    "max",
                    (("p", p), ("s", s), ("c", c)),
                    label=f"max(c={c:g})",
                ),
                cutoff_scale,
            )
        )

    all_tests = [scan] + hc_tests + max_tests
    estimates = estimate_risks(
        all_tests, regime, p, reps, seed, design_family, "one_directional", workers
    )
    scan_est = estimates[0]
    hc_ests = tuple(estimates[1 : 1 + len(hc_tests)])
    max_ests = tuple(estimates[1 + len(hc_tests) :])
    hc_best = min(hc_ests, key=lambda e: e.risk)
    max_best = min(max_ests, key=lambda e: e.risk)
    floor = 1.0 / (2.0 * reps)
    norm = s * logp

    def ratio(est):
        return math.log(max(est.risk, floor)) / norm

    degenerate = any(
        e.risk <= 0.0 or e.risk >= 1.0 for e in (scan_est, hc_best, max_best)
    )
    return ComparisonReport(
        regime=regime,
        p=p,
        reps=reps,
        seed=seed,
        scan=scan_est,
        hc_grid=hc_ests,
        max_grid=max_ests,
        hc_best=hc_best,
        max_best=max_best,
        scan_ratio=ratio(scan_est),
        hc_ratio=ratio(hc_best),
        max_ratio=ratio(max_best),
        degenerate=degenerate,
    )
