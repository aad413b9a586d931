"""Named binary tests: statistics packaged with calibrated cutoffs.

Each test name resolves, at a given (regime, p), to a concrete statistic and
a numeric cutoff.  Rejection is strict (statistic > cutoff); ties accept.
Cutoffs follow the constructions used to certify each regime:

- chisq_center      ||z||^2 > p
- chisq_above       ||z||^2 > p + tau sqrt(2p),  tau = n s A^2 / (2 sqrt(2p))
- max_sqrt2logp     max |z_j| > sqrt(2 log p)
- scan_taustar      top-s sum of |z_j| > s sqrt(2 tau* log p),
                    tau* = (r + alpha)^2 / (4 r)
- scan_binom        max_S |sum_S z_j| > sqrt(2 (1+tau) log C(p,s))
- hc_below          #{|z_j| > 2 sqrt(n) A} > 2 p Q + tau_p sqrt(2 p Q (1-2Q)),
                    Q = Phi-bar(2 sqrt(n) A), tau_p = log log p
- hc_ideal          #{|z_j| > sqrt(2 log p)} > t  (t free)
- lr_test           L_pi > 1 (integrated likelihood ratio, log-space)
- lr_truncated_test truncated L_pi > 1
- ols_max           ||z-tilde||_inf > sqrt(2 tau log p) on the OLS-whitened
                    vector; catches oversized signals in Bonferroni combos
- bonferroni        rejects iff any member rejects
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .designs import GramFactorization
from .signals import Observation, PriorSpec, RegimeSpec, resolve_regime
from . import statistics as stats

TEST_NAMES = (
    "chisq_center",
    "chisq_above",
    "max_sqrt2logp",
    "scan_taustar",
    "scan_binom",
    "hc_below",
    "hc_ideal",
    "lr_test",
    "lr_truncated_test",
    "ols_max",
    "bonferroni",
)


@dataclass(frozen=True)
class TestSpec:
    __test__ = False  # not a pytest collection target
    name: str
    cutoff: float
    stat: str  # chi_sq | max | scan_abs | scan_signed | hc | lr | lr_trunc | ols_max | bonferroni
    params: tuple = ()  # ((key, value), ...) resolved at build time
    members: tuple = ()  # bonferroni components
    label: str = ""  # distinguishes grid variants of one name in reports

    def param(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    @property
    def display_name(self) -> str:
        return self.label or self.name

    def stat_key(self) -> tuple:
        """Hashable statistic identity, shared by tests that differ only in cutoff."""
        if self.stat in ("chi_sq", "max", "ols_max"):
            return (self.stat,)
        if self.stat in ("scan_abs", "scan_signed"):
            return (self.stat, self.param("s"))
        if self.stat == "hc":
            return (self.stat, self.param("threshold"))
        if self.stat == "lr":
            return (self.stat, self.param("prior"))
        if self.stat == "lr_trunc":
            return (self.stat, self.param("prior"), self.param("truncation_level"))
        raise ValueError(f"no statistic behind {self.name!r}")


@dataclass(frozen=True)
class TestDecision:
    __test__ = False  # not a pytest collection target
    reject: bool
    statistic_value: float
    cutoff: float


def log_binom(p: int, s: int) -> float:
    return float(gammaln(p + 1) - gammaln(s + 1) - gammaln(p - s + 1))


def build_test(
    name: str,
    regime: RegimeSpec,
    p: int,
    *,
    t: float | None = None,
    tau: float = 1.0,
    tau_ols: float = 4.0,
    tau_p: float | None = None,
    sign_mode: str = "one_directional",
    members: tuple = (),
    label: str = "",
) -> TestSpec:
    """Materialize a named test at (regime, p); every cutoff becomes a number.

    `t` is the free count cutoff of hc_ideal; `tau` the slack in scan_binom's
    cutoff; `tau_ols` the threshold constant of ols_max; `tau_p` overrides
    the log log p drift term of hc_below (0 reduces it to the raw count mean).
    """
    if name not in TEST_NAMES:
        raise ValueError(f"unknown test name {name!r}")
    if name == "bonferroni":
        if not members:
            raise ValueError("bonferroni needs at least one member test")
        return TestSpec(name, math.nan, "bonferroni", members=tuple(members), label=label)

    s, amp, n = resolve_regime(regime, p)
    base = (
        ("s", s),
        ("A", amp),
        ("n", n),
        ("p", p),
        ("alpha", regime.alpha),
        ("r", regime.r),
        ("delta", regime.delta),
    )
    logp = math.log(p)

    if name == "chisq_center":
        return TestSpec(name, float(p), "chi_sq", base, label=label)
    if name == "chisq_above":
        tau_chi = n * s * amp * amp / (2.0 * math.sqrt(2.0 * p))
        cutoff = p + tau_chi * math.sqrt(2.0 * p)
        return TestSpec(name, cutoff, "chi_sq", base + (("tau", tau_chi),), label=label)
    if name == "max_sqrt2logp":
        return TestSpec(name, math.sqrt(2.0 * logp), "max", base, label=label)
    if name == "scan_taustar":
        if regime.signal_mode != "sparse_r" or regime.r <= regime.alpha:
            warnings.warn(
                "scan_taustar is calibrated for the sparse regime with r > alpha",
                stacklevel=2,
            )
        r_eff = n * amp * amp / (2.0 * logp)
        tau_star = (r_eff + regime.alpha) ** 2 / (4.0 * r_eff)
        cutoff = s * math.sqrt(2.0 * tau_star * logp)
        return TestSpec(
            name, cutoff, "scan_abs", base + (("tau_star", tau_star),), label=label
        )
    if name == "scan_binom":
        cutoff = math.sqrt(2.0 * (1.0 + tau) * log_binom(p, s))
        return TestSpec(name, cutoff, "scan_signed", base + (("tau", tau),), label=label)
    if name == "hc_below":
        threshold = 2.0 * math.sqrt(n) * amp  # on the whitened scale
        drift = math.log(logp) if tau_p is None else tau_p
        q = 2.0 * norm.sf(threshold)
        cutoff = 2.0 * p * norm.sf(threshold) + drift * math.sqrt(
            max(p * q * (1.0 - q), 0.0)
        )
        return TestSpec(
            name,
            cutoff,
            "hc",
            base + (("threshold", threshold), ("tau_p", drift)),
            label=label,
        )
    if name == "hc_ideal":
        if t is None:
            raise ValueError("hc_ideal needs its count cutoff t")
        threshold = math.sqrt(2.0 * logp)
        return TestSpec(
            name, float(t), "hc", base + (("threshold", threshold),), label=label
        )
    if name in ("lr_test", "lr_truncated_test"):
        mode = "one_directional" if name == "lr_truncated_test" else sign_mode
        prior = PriorSpec(p=p, s=s, A=amp, sign_mode=mode)
        if name == "lr_test":
            # cutoff 1 on the LR scale, i.e. 0 in log-space
            return TestSpec(name, 0.0, "lr", base + (("prior", prior),), label=label)
        return TestSpec(
            name,
            0.0,
            "lr_trunc",
            base
            + (
                ("prior", prior),
                ("truncation_level", math.sqrt(2.0 * logp)),
            ),
            label=label,
        )
    if name == "ols_max":
        cutoff = math.sqrt(2.0 * tau_ols * logp)
        c_star = 16.0 * tau_ols  # needs c_star > 4 tau_ols
        return TestSpec(
            name, cutoff, "ols_max", base + (("tau", tau_ols), ("c_star", c_star)),
            label=label,
        )
    raise AssertionError(name)


def leaf_tests(test: TestSpec) -> tuple:
    if test.stat == "bonferroni":
        out = []
        for m in test.members:
            out.extend(leaf_tests(m))
        return tuple(out)
    return (test,)


def _stat_from_observation(test: TestSpec, obs: Observation, gram: GramFactorization) -> float:
    if test.stat == "chi_sq":
        return stats.chi_sq_stat(stats.compute_z(obs, gram, "half_inverse"))
    if test.stat == "max":
        return stats.max_stat(stats.compute_z(obs, gram, "half_inverse"))
    if test.stat == "scan_abs":
        return stats.scan_stat(
            stats.compute_z(obs, gram, "half_inverse"), test.param("s"), "abs_sum"
        )
    if test.stat == "scan_signed":
        return stats.scan_stat(
            stats.compute_z(obs, gram, "half_inverse"), test.param("s"), "signed_sum"
        )
    if test.stat == "hc":
        return float(
            stats.hc_stat(stats.compute_z(obs, gram, "half_inverse"), test.param("threshold"))
        )
    if test.stat == "ols_max":
        return stats.max_stat(stats.compute_z(obs, gram, "full_inverse"))
    if test.stat == "lr":
        return stats.integrated_lr(obs, test.param("prior")).log_value
    if test.stat == "lr_trunc":
        return stats.truncated_lr(obs, test.param("prior"), gram).log_value
    raise ValueError(f"cannot evaluate statistic for {test.name!r}")


def decide(test: TestSpec, obs: Observation, gram: GramFactorization) -> TestDecision:
    """Deterministic strict-threshold decision; bonferroni takes any-member max."""
    if test.stat == "bonferroni":
        decisions = [decide(m, obs, gram) for m in test.members]
        rejected = any(d.reject for d in decisions)
        # report the member margin closest to (or furthest past) its cutoff
        margins = [d.statistic_value - d.cutoff for d in decisions]
        best = int(np.argmax(margins))
        return TestDecision(rejected, decisions[best].statistic_value, decisions[best].cutoff)
    value = _stat_from_observation(test, obs, gram)
    return TestDecision(bool(value > test.cutoff), value, test.cutoff)
