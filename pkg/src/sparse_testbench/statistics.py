"""Test statistics computed from an observation.

All classical statistics operate on the whitened vector z = (X'X)^(-1/2) X'y,
whose coordinates are exactly i.i.d. standard normal under the null given X.
The integrated likelihood ratio averages exp(<y, X b> - ||X b||^2 / 2) over a
prior on boundary signals; its truncated variant multiplies each term by the
indicator that the support coordinates of z stay below sqrt(2 log p).  All
likelihood-ratio arithmetic is carried in log-space with log-sum-exp
reduction, since the raw terms overflow doubles at moderate s log p.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .designs import GramFactorization
from .signals import Observation, PriorSpec

ENUMERATION_BUDGET = 10**6
_CHUNK = 8192


class EnumerationBudgetError(ValueError):
    """Raised when exact enumeration would exceed the term budget."""


@dataclass(frozen=True)
class WhitenedVector:
    z: np.ndarray
    variant: str  # "half_inverse" (z) or "full_inverse" (z-tilde)

    @property
    def p(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class LikelihoodRatioValue:
    """LR value stored in log-space; `value` may underflow to 0.0 harmlessly."""

    log_value: float
    truncated: bool
    prior: PriorSpec
    truncation_level: float | None = None

    @property
    def value(self) -> float:
        if self.log_value == -math.inf:
            return 0.0
        if self.log_value > 700:
            return math.inf
        return math.exp(self.log_value)


def compute_z(obs: Observation, gram: GramFactorization, variant: str = "half_inverse") -> WhitenedVector:
    if variant not in ("half_inverse", "full_inverse"):
        raise ValueError(f"unknown variant {variant!r}")
    if gram.inv_sqrt.shape[0] != obs.X.p:
        raise ValueError("gram factorization does not match the design dimension")
    xty = obs.X.entries.T @ obs.y
    mat = gram.inv_sqrt if variant == "half_inverse" else gram.inverse
    return WhitenedVector(z=mat @ xty, variant=variant)


def _as_array(z) -> np.ndarray:
    return z.z if isinstance(z, WhitenedVector) else np.asarray(z, dtype=float)


def chi_sq_stat(z: WhitenedVector) -> float:
    if isinstance(z, WhitenedVector) and z.variant != "half_inverse":
        raise ValueError("chi-squared statistic is defined on the half_inverse vector")
    v = _as_array(z)
    return float(v @ v)


def max_stat(z) -> float:
    return float(np.max(np.abs(_as_array(z))))


def scan_stat(z, s: int, flavor: str = "abs_sum") -> float:
    """Scan statistic over size-s coordinate subsets, in O(p log p).

    abs_sum:    sum of the s largest |z_j|  (= max_S sum_{i in S} |z_i|)
    signed_sum: max_S |sum_{i in S} z_i|, attained by the s largest or the
                s smallest coordinates.
    """
    v = _as_array(z)
    p = v.shape[0]
    if not 1 <= s <= p:
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    if flavor == "abs_sum":
        a = np.abs(v)
        return float(-np.partition(-a, s - 1)[:s].sum())
    if flavor == "signed_sum":
        top = -np.partition(-v, s - 1)[:s].sum()
        bottom = np.partition(v, s - 1)[:s].sum()
        return float(max(top, -bottom))
    raise ValueError(f"unknown scan flavor {flavor!r}")


def hc_stat(z, tau: float) -> int:
    """Count of coordinates with |z_j| strictly above tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return int(np.count_nonzero(np.abs(_as_array(z)) > tau))


def _sign_patterns(s: int) -> np.ndarray:
    pats = np.array(list(itertools.product((1.0, -1.0), repeat=s)))
    return pats.reshape(-1, s)


def _iter_support_chunks(p: int, s: int, chunk: int = _CHUNK):
    it = itertools.combinations(range(p), s)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def lr_log_terms(
    xty: np.ndarray,
    gram_matrix,
    prior: PriorSpec,
    z_for_truncation: np.ndarray | None = None,
    truncation_level: float = 0.0,
):
    """Yield (log-term, count) chunks of the integrated LR enumeration.

    Each term is A * (sigma . w_S) - A^2/2 * sigma' G_SS sigma for a support S
    and sign vector sigma.  `gram_matrix` may be a dense p x p array or the
    scalar n for designs with X'X = n I.  Truncated terms (those with
    max_{i in S} z_i >= truncation_level) are emitted as -inf.
    """
    A = prior.A
    signed = prior.sign_mode == "symmetric_signed"
    pats = _sign_patterns(prior.s) if signed else None
    scalar_gram = np.isscalar(gram_matrix)
    for idx in _iter_support_chunks(prior.p, prior.s):
        w_sub = xty[idx]  # (B, s)
        if scalar_gram:
            quad_diag = gram_matrix * prior.s
        else:
            g_sub = gram_matrix[idx[:, :, None], idx[:, None, :]]  # (B, s, s)
        if signed:
            if scalar_gram:
                # sigma' (nI) sigma = n s regardless of signs
                quads = np.full((idx.shape[0], pats.shape[0]), quad_diag)
            else:
                quads = np.einsum("bij,ki,kj->bk", g_sub, pats, pats)
            terms = A * (w_sub @ pats.T) - 0.5 * A * A * quads  # (B, 2^s)
        else:
            if scalar_gram:
                quads = quad_diag
            else:
                quads = g_sub.sum(axis=(1, 2))
            terms = A * w_sub.sum(axis=1) - 0.5 * A * A * quads  # (B,)
        if z_for_truncation is not None:
            keep = np.max(z_for_truncation[idx], axis=1) < truncation_level
            terms = np.where(
                keep if terms.ndim == 1 else keep[:, None], terms, -np.inf
            )
        yield terms.ravel()


def _check_budget(prior: PriorSpec):
    total = math.comb(prior.p, prior.s)
    if prior.sign_mode == "symmetric_signed":
        total *= 2**prior.s
    if total > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"exact enumeration needs {total} terms, budget is {ENUMERATION_BUDGET}"
        )
    return total


def integrated_lr(
    obs: Observation,
    prior: PriorSpec,
    mode: str = "exact_enumeration",
    draws: int = 0,
    seed: int = 0,
) -> LikelihoodRatioValue:
    """Integrated likelihood ratio L_pi against the null, in log-space.

    exact_enumeration averages over every support (and sign pattern for the
    symmetric prior); monte_carlo averages over `draws` prior draws.
    """
    if prior.p != obs.X.p:
        raise ValueError("prior dimension does not match the design")
    xty = obs.X.entries.T @ obs.y
    if mode == "exact_enumeration":
        total = _check_budget(prior)
        parts = [
            logsumexp(t)
            for t in lr_log_terms(xty, obs.X.gram, prior)
        ]
        log_val = logsumexp(parts) - math.log(total)
        return LikelihoodRatioValue(float(log_val), False, prior)
    if mode == "monte_carlo":
        if draws < 1:
            raise ValueError("monte_carlo mode needs draws >= 1")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), prior.p, 23]))
        gram = obs.X.gram
        parts = []
        done = 0
        while done < draws:
            m = min(10**5, draws - done)
            idx = np.argsort(rng.random((m, prior.p)), axis=1)[:, : prior.s]
            if prior.sign_mode == "symmetric_signed":
                sgn = rng.integers(0, 2, size=(m, prior.s)) * 2.0 - 1.0
            else:
                sgn = np.ones((m, prior.s))
            w_sub = (xty[idx] * sgn).sum(axis=1)
            g_sub = gram[idx[:, :, None], idx[:, None, :]]
            quads = np.einsum("bij,bi,bj->b", g_sub, sgn, sgn)
            parts.append(logsumexp(prior.A * w_sub - 0.5 * prior.A**2 * quads))
            done += m
        log_val = logsumexp(parts) - math.log(draws)
        return LikelihoodRatioValue(float(log_val), False, prior)
    raise ValueError(f"unknown mode {mode!r}")


def truncated_lr(
    obs: Observation,
    prior: PriorSpec,
    gram: GramFactorization,
) -> LikelihoodRatioValue:
    """Truncated LR: each term carries 1(max_{i in S} z_i < sqrt(2 log p)).

    The truncation is on the signed support coordinates of z, so only the
    one-directional prior is meaningful here.
    """
    if prior.sign_mode != "one_directional":
        raise ValueError("truncated LR is defined for the one_directional prior")
    total = _check_budget(prior)
    level = math.sqrt(2.0 * math.log(prior.p))
    z = compute_z(obs, gram, "half_inverse").z
    xty = obs.X.entries.T @ obs.y
    parts = [
        logsumexp(t)
        for t in lr_log_terms(xty, obs.X.gram, prior, z, level)
    ]
    log_val = logsumexp(parts) - math.log(total)
    return LikelihoodRatioValue(float(log_val), True, prior, truncation_level=level)
