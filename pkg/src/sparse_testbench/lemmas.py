"""Independent verifiers for the concentration lemmas the analysis rests on.

Every bound is checked on a grid against an exact tail value, adaptive
quadrature, or a large Monte Carlo estimate computed by a route independent
of the main implementation.  A passing check reports zero violations;
`max_slack` records the smallest margin by which the bound held (its worst
point).  `bound_multiplier` rescales every bound and exists to exercise the
failure path (0.0 forces violations).

Checks covered: chi-square upper/lower tails, the Birge non-central
analogues, folded-normal exponential moments (closed form vs quadrature),
the hypergeometric overlap bound, deviation envelopes for sums of folded
normals, the soft-max inequality, and the two cosh/exp moment envelopes for
overlap counts of independent prior draws.

The folded-normal moment bound is verified in the form
E[exp(lambda |Z|)] <= 2 exp(+lambda^2/2): the variant with a negative
exponent fails numerically (E[exp(lambda|Z|)] >= 1 always), so the positive
sign is the one checked and used downstream.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp
from scipy.stats import chi2, ncx2, norm

from .signals import Observation, PriorSpec

_MC_SEED = 20240817


class OverflowGuardError(ValueError):
    """Raised when the plain-arithmetic LR reference would overflow."""


@dataclass(frozen=True)
class LemmaCheckResult:
    lemma_id: str
    grid: str
    checks: int
    violations: int
    max_slack: float  # smallest margin (bound - value) observed
    tolerance: float
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0


class _Margin:
    def __init__(self):
        self.worst = math.inf
        self.violations = 0
        self.checks = 0

    def record(self, bound: float, value: float, slack: float = 0.0):
        self.checks += 1
        margin = bound - value
        self.worst = min(self.worst, margin)
        if value > bound + slack:
            self.violations += 1


# ---------------------------------------------------------------------------
# chi-square tails


def _chisq_upper(k: int, nu: float, x: float) -> float:
    thr = (k + nu) + 2.0 * math.sqrt((k + 2.0 * nu) * x) + 2.0 * x
    return float(chi2.sf(thr, k) if nu == 0 else ncx2.sf(thr, k, nu))


def _chisq_lower(k: int, nu: float, x: float) -> float:
    thr = (k + nu) - 2.0 * math.sqrt((k + 2.0 * nu) * x)
    if thr <= 0:
        return 0.0
    return float(chi2.cdf(thr, k) if nu == 0 else ncx2.cdf(thr, k, nu))


def check_chisq_tails(
    grid=None,
    bound_multiplier: float = 1.0,
    mc_reps: int = 10**6,
) -> LemmaCheckResult:
    """Central and non-central chi-square tail bounds, P <= exp(-x).

    The scipy tail evaluations are themselves validated against Monte Carlo
    at three grid points before being trusted on the full grid.
    """
    if grid is None:
        ks = (1, 2, 5, 20, 100)
        xs = (0.1, 0.5, 1.0, 2.0, 5.0)
        nus = (0.0, 1.0, 5.0, 20.0)
        grid = [(k, nu, x) for k in ks for nu in nus for x in xs]
    m = _Margin()
    rng = np.random.default_rng(_MC_SEED)
    notes = []
    for k, nu, x in ((1, 0.0, 1.0), (2, 0.0, 2.0), (100, 5.0, 5.0)):
        thr = (k + nu) + 2.0 * math.sqrt((k + 2.0 * nu) * x) + 2.0 * x
        draws = chi2.rvs(k, size=mc_reps, random_state=rng) if nu == 0 else ncx2.rvs(
            k, nu, size=mc_reps, random_state=rng
        )
        emp = float(np.mean(draws > thr))
        exact = _chisq_upper(k, nu, x)
        se = math.sqrt(max(emp * (1 - emp), 1e-12) / mc_reps)
        if abs(emp - exact) > 4 * se + 1e-4:
            m.violations += 1
            notes.append(f"tail evaluation disagrees with MC at (k={k},nu={nu},x={x})")
        m.checks += 1
    for k, nu, x in grid:
        bound = bound_multiplier * math.exp(-x)
        m.record(bound, _chisq_upper(k, nu, x))
        m.record(bound, _chisq_lower(k, nu, x))
    return LemmaCheckResult(
        lemma_id="chisq_tails",
        grid=f"{len(grid)} (k, nu, x) points + {mc_reps}-rep MC validation",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=0.0,
        notes="; ".join(notes),
    )


# ---------------------------------------------------------------------------
# folded-normal exponential moments


def folded_exp_moment_closed(lam: float, mu: float) -> float:
    """E[exp(-lam |Z|)], Z ~ N(mu, 1), in closed form."""
    return math.exp(lam * lam / 2.0 - mu * lam) * norm.sf(lam - mu) + math.exp(
        lam * lam / 2.0 + mu * lam
    ) * norm.sf(mu + lam)


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _exp_gauss(expo: float) -> float:
    # combined exponents here are bounded above by lam^2/2; only the far
    # negative side can exceed the double range
    return 0.0 if expo < -745.0 else math.exp(expo)


def folded_exp_moment_quad(lam: float, mu: float, tol: float = 1e-12) -> float:
    """E[exp(-lam |Z|)] by adaptive quadrature, split at the fold."""
    f = lambda t: _exp_gauss(-lam * abs(t) - 0.5 * (t - mu) ** 2) * _INV_SQRT_2PI
    left, _ = integrate.quad(f, -np.inf, 0.0, epsabs=tol, epsrel=tol)
    right, _ = integrate.quad(f, 0.0, np.inf, epsabs=tol, epsrel=tol)
    return left + right


def folded_pos_moment_quad(lam: float, tol: float = 1e-12) -> float:
    """E[exp(+lam |Z|)], Z ~ N(0,1), by quadrature."""
    f = lambda t: 2.0 * _exp_gauss(lam * t - 0.5 * t * t) * _INV_SQRT_2PI
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=tol, epsrel=tol)
    return val


def check_folded_normal(
    grid=None, bound_multiplier: float = 1.0, tol: float = 1e-8
) -> LemmaCheckResult:
    if grid is None:
        grid = [
            (lam, mu)
            for lam in (0.1, 0.5, 1.0, 2.0, 3.0)
            for mu in (0.0, 0.5, 1.0, 2.0, 5.0)
        ]
    m = _Margin()
    notes = []
    for lam, mu in grid:
        closed = folded_exp_moment_closed(lam, mu)
        quad = folded_exp_moment_quad(lam, mu)
        m.record(bound_multiplier * tol, abs(closed - quad))
        # self-consistency of the quadrature at two tolerances
        coarse = folded_exp_moment_quad(lam, mu, tol=1e-10)
        m.record(1e-10, abs(coarse - quad))
    for lam, _ in grid:
        pos = folded_pos_moment_quad(lam)
        bound = bound_multiplier * 2.0 * math.exp(lam * lam / 2.0)
        m.record(bound, pos)
        if pos > 2.0 * math.exp(-lam * lam / 2.0):
            notes.append(f"negative-exponent variant fails at lambda={lam:g}")
    return LemmaCheckResult(
        lemma_id="folded_normal_moments",
        grid=f"{len(grid)} (lambda, mu) points",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=tol,
        notes="; ".join(notes[:1]),
    )


# ---------------------------------------------------------------------------
# hypergeometric overlap


def hypergeom_log_pmf(k: int, p: int, s: int) -> float:
    """log P[W = k], W ~ Hyp(p, s, s): overlap of two random size-s subsets."""
    if k < max(0, 2 * s - p) or k > s:
        return -math.inf

    def logc(a, b):
        return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)

    return float(logc(s, k) + logc(p - s, s - k) - logc(p, s))


def hypergeom_pmf(k: int, p: int, s: int) -> float:
    """P[W = k] by exact integer combinatorics (correct to one ulp; the
    log-gamma route drifts past 1e-12 in total mass for p in the thousands)."""
    if k < max(0, 2 * s - p) or k > s:
        return 0.0
    num = math.comb(s, k) * math.comb(p - s, s - k)
    return num / math.comb(p, s)


def check_hypergeometric(
    grid=None, bound_multiplier: float = 1.0, c_cap: float = 10.0
) -> LemmaCheckResult:
    """P[W=k] <= C (s^2/p)^k / k! with a fitted universal C, plus exactness.

    The fitted C is the largest ratio observed on the grid; the check fails
    if it exceeds `c_cap`, which would contradict universality.  Also checks
    pmf normalization to 1e-12 and the P[W=0] = 1 - (s^2/p)(1+o(1)) trend.
    """
    if grid is None:
        grid = []
        for p in (16, 64, 256, 1024, 4096):
            root = math.isqrt(p)
            for s in sorted({1, max(1, root // 2), root, min(2 * root, p // 2)}):
                grid.append((p, s))
    m = _Margin()
    fitted_c = 0.0
    for p, s in grid:
        pmf = np.array([hypergeom_pmf(k, p, s) for k in range(s + 1)])
        m.record(1e-12, abs(pmf.sum() - 1.0))
        lam = s * s / p
        for k in range(s + 1):
            env = lam**k / math.factorial(min(k, 170)) if k <= 170 else math.inf
            if env > 0 and np.isfinite(env):
                fitted_c = max(fitted_c, pmf[k] / env)
            m.record(bound_multiplier * c_cap * env, pmf[k])
    # trend of P[W=0] at fixed s as p grows
    s = 3
    errs = [
        abs((1.0 - hypergeom_pmf(0, p, s)) * p / (s * s) - 1.0)
        for p in (64, 256, 1024, 4096)
    ]
    m.record(0.15, errs[-1])
    m.record(0.0, float(errs[-1] > errs[0]))  # error must shrink along the sequence
    return LemmaCheckResult(
        lemma_id="hypergeometric_overlap",
        grid=f"{len(grid)} (p, s) pairs",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=1e-12,
        notes=f"fitted C = {fitted_c:.4f}",
    )


# ---------------------------------------------------------------------------
# folded-normal deviation envelopes


def _folded_sum_sf_exact(s: int, mu: float, c: float) -> float:
    """P(sum of s iid |mu + Z_i| > c) by iterated quadrature, s <= 3."""
    if c <= 0:
        return 1.0

    def pdf(t):
        return norm.pdf(t - mu) + norm.pdf(t + mu)

    def sf1(c1):
        if c1 <= 0:
            return 1.0
        return float(norm.sf(c1 - mu) + norm.sf(c1 + mu))

    if s == 1:
        return sf1(c)
    if s == 2:
        val, _ = integrate.quad(
            lambda u: pdf(u) * sf1(c - u), 0.0, c, epsabs=1e-11, epsrel=1e-11
        )
        return val + sf1(c)  # the first coordinate alone may already exceed c
    if s == 3:

        def sf2(c2):
            if c2 <= 0:
                return 1.0
            inner, _ = integrate.quad(
                lambda u: pdf(u) * sf1(c2 - u), 0.0, c2, epsabs=1e-9, epsrel=1e-9
            )
            return inner + sf1(c2)

        val, _ = integrate.quad(
            lambda u: pdf(u) * sf2(c - u), 0.0, c, epsabs=1e-8, epsrel=1e-8
        )
        return val + sf1(c)
    raise ValueError("exact convolution implemented for s <= 3 only")


def check_folded_deviations(
    grid=None,
    mc_reps: int = 10**6,
    bound_multiplier: float = 1.0,
) -> LemmaCheckResult:
    """Envelopes for sums of folded normals.

    Part 1: P[sum |Z_i| > s sqrt(2 tau log p)] <= 3^s exp(-tau s log p).
    Part 2: P[sum |sqrt(2 r log p) + Z_i| <= s sqrt(2 tau log p)]
            <= 2 exp(-(sqrt r - sqrt tau)^2 s log p), for tau < r.
    Verified by Monte Carlo everywhere and by exact convolution for s <= 3.
    """
    if grid is None:
        ss = (1, 2, 3, 8)
        ps = (math.e**2, 100.0)
        taus = (0.25, 1.0)
        rs = (1.0, 4.0)
        grid = [(s, p, r, tau) for s in ss for p in ps for tau in taus for r in rs]
    rng = np.random.default_rng(_MC_SEED + 1)
    m = _Margin()
    for s, p, r, tau in grid:
        logp = math.log(p)
        thr = s * math.sqrt(2.0 * tau * logp)
        mu = math.sqrt(2.0 * r * logp)
        bound1 = bound_multiplier * (3.0**s) * math.exp(-tau * s * logp)
        bound2 = bound_multiplier * 2.0 * math.exp(
            -((math.sqrt(r) - math.sqrt(tau)) ** 2) * s * logp
        )
        hits1 = hits2 = 0
        done = 0
        while done < mc_reps:
            b = min(200_000, mc_reps - done)
            z = rng.standard_normal((b, s))
            hits1 += int(np.count_nonzero(np.abs(z).sum(axis=1) > thr))
            hits2 += int(np.count_nonzero(np.abs(z + mu).sum(axis=1) <= thr))
            done += b
        for hits, bound, part2 in ((hits1, bound1, False), (hits2, bound2, True)):
            if part2 and tau >= r:
                continue
            est = hits / mc_reps
            se = math.sqrt(max(est * (1 - est), 1e-12) / mc_reps)
            m.record(bound, est, slack=3 * se)
        if s <= 3:
            exact1 = _folded_sum_sf_exact(s, 0.0, thr)
            m.record(bound1, exact1, slack=1e-9)
            if tau < r:
                exact2 = 1.0 - _folded_sum_sf_exact(s, mu, thr)
                m.record(bound2, exact2, slack=1e-9)
    return LemmaCheckResult(
        lemma_id="folded_deviations",
        grid=f"{len(grid)} (s, p, r, tau) points, {mc_reps}-rep MC",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=0.0,
    )


# ---------------------------------------------------------------------------
# soft-max inequality


def check_soft_max(
    instances: int = 10**4, bound_multiplier: float = 1.0, seed: int = _MC_SEED + 2
) -> LemmaCheckResult:
    """| (1/M) log sum a_i exp(x_i M) - max x_i | <= max(|log c|, log(C N)) / M."""
    rng = np.random.default_rng(seed)
    m = _Margin()
    for _ in range(instances):
        n = int(rng.integers(1, 21))
        c = float(rng.uniform(0.05, 0.9))
        big_c = float(rng.uniform(1.1, 20.0))
        a = rng.uniform(c, big_c, size=n)
        x = rng.uniform(-5.0, 5.0, size=n)
        big_m = float(rng.choice((10.0, 100.0, 1000.0)))
        val = (logsumexp(np.log(a) + x * big_m)) / big_m - x.max()
        bound = bound_multiplier * max(abs(math.log(c)), math.log(big_c * n)) / big_m
        m.record(bound, abs(val), slack=1e-12)
    return LemmaCheckResult(
        lemma_id="soft_max",
        grid=f"{instances} random instances, N <= 20, M in {{10, 100, 1000}}",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=1e-12,
    )


# ---------------------------------------------------------------------------
# cosh / exp overlap-moment envelopes


def overlap_moment_exact(p: int, s: int, n_a_sq: float, sign_mode: str) -> float:
    """E[exp(n <b, b'>)] over two independent prior draws, via the exact
    hypergeometric overlap law: E[cosh(nA^2)^W] (signed) or E[exp(nA^2 W)].
    """
    if sign_mode == "symmetric_signed":
        log_base = math.log(math.cosh(n_a_sq))
    else:
        log_base = n_a_sq
    logs = [
        hypergeom_log_pmf(k, p, s) + k * log_base
        for k in range(s + 1)
        if hypergeom_log_pmf(k, p, s) > -math.inf
    ]
    return float(math.exp(logsumexp(logs)))


def overlap_moment_enumerated(p: int, s: int, n_a_sq: float, sign_mode: str) -> float:
    """Brute-force average over all support pairs (budget C(p,s)^2 <= 1e6)."""
    supports = list(itertools.combinations(range(p), s))
    if len(supports) ** 2 > 10**6:
        raise OverflowGuardError("enumeration over support pairs exceeds budget")
    base = math.cosh(n_a_sq) if sign_mode == "symmetric_signed" else math.exp(n_a_sq)
    sets = [frozenset(t) for t in supports]
    total = 0.0
    for a in sets:
        for b in sets:
            total += base ** len(a & b)
    return total / len(sets) ** 2


def check_cosh_moment(grid=None, bound_multiplier: float = 1.0) -> LemmaCheckResult:
    """Hoeffding envelopes for the overlap moment.

    signed prior:      E[cosh(nA^2)^W] <= exp((s^2/p)(cosh(nA^2) - 1))
    one-directional:   E[exp(nA^2 W)]  <= exp((s^2/p)(exp(nA^2) - 1))
    Each exact value is cross-checked against pair enumeration when the
    budget allows.
    """
    if grid is None:
        grid = [
            (p, s, t)
            for (p, s) in ((2, 1), (4, 1), (10, 2), (30, 3))
            for t in (0.5, 1.0, 2.0)
        ]
    m = _Margin()
    for p, s, t in grid:
        for mode, gen in (
            ("symmetric_signed", math.cosh(t) - 1.0),
            ("one_directional", math.exp(t) - 1.0),
        ):
            exact = overlap_moment_exact(p, s, t, mode)
            env = bound_multiplier * math.exp(s * s / p * gen)
            m.record(env, exact, slack=1e-12)
            if math.comb(p, s) ** 2 <= 10**6:
                brute = overlap_moment_enumerated(p, s, t, mode)
                m.record(1e-10, abs(exact - brute) / brute)
    return LemmaCheckResult(
        lemma_id="cosh_moment",
        grid=f"{len(grid)} (p, s, nA^2) points, both priors",
        checks=m.checks,
        violations=m.violations,
        max_slack=m.worst,
        tolerance=1e-10,
    )


# ---------------------------------------------------------------------------
# reference LR implementation (dual route for the log-space enumeration)


def exact_lr_reference(obs: Observation, prior: PriorSpec) -> float:
    """Integrated LR by direct double-precision summation with Kahan
    compensation.  Valid only when no term exceeds exp(700) and the
    enumeration stays small; the log-space implementation must agree with
    this value to 1e-10 relative.
    """
    if math.comb(prior.p, prior.s) > 10**4:
        raise OverflowGuardError("reference enumeration limited to C(p,s) <= 1e4")
    xty = obs.X.entries.T @ obs.y
    gram = obs.X.gram
    signed = prior.sign_mode == "symmetric_signed"
    patterns = (
        list(itertools.product((1.0, -1.0), repeat=prior.s)) if signed else [None]
    )
    total = 0.0
    comp = 0.0
    count = 0
    for support in itertools.combinations(range(prior.p), prior.s):
        idx = list(support)
        w = xty[idx]
        g = gram[np.ix_(idx, idx)]
        for pat in patterns:
            sgn = np.ones(prior.s) if pat is None else np.array(pat)
            expo = prior.A * float(sgn @ w) - 0.5 * prior.A**2 * float(sgn @ g @ sgn)
            if expo >= 700.0:
                raise OverflowGuardError(f"term exponent {expo:.1f} >= 700")
            term = math.exp(expo)
            # Kahan compensated accumulation
            y_ = term - comp
            t_ = total + y_
            comp = (t_ - total) - y_
            total = t_
            count += 1
    return total / count


# ---------------------------------------------------------------------------

ALL_CHECKS = {
    "chisq_tails": check_chisq_tails,
    "folded_normal_moments": check_folded_normal,
    "hypergeometric_overlap": check_hypergeometric,
    "folded_deviations": check_folded_deviations,
    "soft_max": check_soft_max,
    "cosh_moment": check_cosh_moment,
}


def run_all_checks(
    only: str | None = None, bound_multiplier: float = 1.0
) -> list[LemmaCheckResult]:
    if only is not None and only not in ALL_CHECKS:
        raise ValueError(f"unknown lemma id {only!r}; choose from {sorted(ALL_CHECKS)}")
    names = [only] if only else list(ALL_CHECKS)
    return [ALL_CHECKS[name](bound_multiplier=bound_multiplier) for name in names]
