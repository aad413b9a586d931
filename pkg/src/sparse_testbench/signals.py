"""Alternative parameter spaces, priors, asymptotic regimes, and data simulation.

A Signal is a point of the sparse alternative class: s nonzero coordinates,
each at least A in absolute value (exactly A for boundary signals).  Priors
draw boundary signals with a uniformly random support and either all-positive
or i.i.d. random signs.  A RegimeSpec ties the triple (s, A, n) to p through
the standard parametrizations s = ceil(p^(1-alpha)) and A in the sparse
(sqrt(2 r log p / n)) or dense (sqrt(p^(alpha-1/2+delta) / n)) scaling.

Natural log is used everywhere a log appears.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .designs import DesignMatrix

SIGN_MODES = ("one_directional", "symmetric_signed")
SIGNAL_MODES = ("sparse_r", "dense_delta", "boundary_fixed_s")


@dataclass(frozen=True)
class Signal:
    coords: np.ndarray = field(repr=False)
    support: tuple
    amplitude: float
    signed: bool

    def __post_init__(self):
        self.coords.setflags(write=False)

    @property
    def s(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class PriorSpec:
    """Uniform prior over boundary signals with s entries of size A."""

    p: int
    s: int
    A: float
    sign_mode: str = "one_directional"

    def __post_init__(self):
        if not 1 <= self.s <= self.p:
            raise ValueError(f"need 1 <= s <= p, got s={self.s}, p={self.p}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}")
        if self.A < 0:
            raise ValueError("amplitude A must be nonnegative")


@dataclass(frozen=True)
class NRule:
    """Sample-size rule n(p) = max(p, ceil(c * p^gamma * (log p)^kappa))."""

    c: float = 1.0
    gamma: float = 1.0
    kappa: float = 0.0

    def __call__(self, p: int) -> int:
        val = self.c * p**self.gamma * math.log(p) ** self.kappa
        return max(p, math.ceil(val - 1e-9))


# Defaults: n = p suffices for orthogonal designs; n = ceil(p^2 log p)
# covers the strongest growth hypothesis needed for sub-gaussian designs.
N_RULE_ORTHOGONAL = NRule(1.0, 1.0, 0.0)
N_RULE_SUBGAUSSIAN = NRule(1.0, 2.0, 1.0)


def default_n_rule(design_family: str) -> NRule:
    return N_RULE_ORTHOGONAL if design_family == "orthogonal" else N_RULE_SUBGAUSSIAN


@dataclass(frozen=True)
class RegimeSpec:
    """Asymptotic parametrization of the testing problem.

    Exactly one of (r, delta, fixed_s) is active, selected by signal_mode:

    - sparse_r:         A = sqrt(2 r log p / n), s = ceil(p^(1-alpha))
    - dense_delta:      A = sqrt(p^(alpha - 1/2 + delta) / n); delta < 0 is
                        below the detection boundary, delta > 0 above
    - boundary_fixed_s: s fixed, A = sqrt(2 log p / n)
    """

    alpha: float
    signal_mode: str
    r: float | None = None
    delta: float | None = None
    fixed_s: int | None = None
    n_rule: NRule = N_RULE_ORTHOGONAL

    def __post_init__(self):
        if self.signal_mode not in SIGNAL_MODES:
            raise ValueError(f"signal_mode must be one of {SIGNAL_MODES}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")
        active = {
            "sparse_r": self.r,
            "dense_delta": self.delta,
            "boundary_fixed_s": self.fixed_s,
        }[self.signal_mode]
        if active is None:
            raise ValueError(
                f"signal_mode={self.signal_mode!r} needs its parameter set"
            )
        others = [
            v
            for k, v in (("sparse_r", self.r), ("dense_delta", self.delta),
                         ("boundary_fixed_s", self.fixed_s))
            if k != self.signal_mode
        ]
        if any(v is not None for v in others):
            raise ValueError("exactly one of r / delta / fixed_s may be set")
        if self.signal_mode == "sparse_r" and self.r <= 0:
            raise ValueError("sparse_r mode needs r > 0")
        if self.signal_mode == "boundary_fixed_s" and self.fixed_s < 1:
            raise ValueError("boundary_fixed_s mode needs fixed_s >= 1")


def sparsity_at(alpha: float, p: int) -> int:
    # round() guards ceil against floating-point overshoot of exact powers,
    # e.g. 10000**0.25 = 10.000000000000002
    return int(math.ceil(round(p ** (1.0 - alpha), 9)))


def resolve_regime(regime: RegimeSpec, p: int) -> tuple[int, float, int]:
    """Materialize (s, A, n) at dimension p."""
    if p < 2:
        raise ValueError(f"need p >= 2, got p={p}")
    n = regime.n_rule(p)
    if regime.signal_mode == "boundary_fixed_s":
        s = regime.fixed_s
        amp = math.sqrt(2.0 * math.log(p) / n)
    elif regime.signal_mode == "sparse_r":
        s = sparsity_at(regime.alpha, p)
        amp = math.sqrt(2.0 * regime.r * math.log(p) / n)
    else:
        s = sparsity_at(regime.alpha, p)
        amp = math.sqrt(p ** (regime.alpha - 0.5 + regime.delta) / n)
    return s, amp, n


def make_signal(p: int, support, A: float, signs) -> Signal:
    """Boundary signal with the given support and sign pattern."""
    support = tuple(int(i) for i in support)
    signs = np.asarray(signs, dtype=float)
    if len(signs) != len(support):
        raise ValueError("signs must match the support length")
    if len(set(support)) != len(support):
        raise ValueError(f"duplicate support indices in {support}")
    if any(i < 0 or i >= p for i in support):
        raise IndexError(f"support indices out of range [0, {p})")
    if signs.size and not np.all(np.abs(signs) == 1.0):
        raise ValueError("signs must be +1 or -1")
    coords = np.zeros(p)
    coords[list(support)] = A * signs
    return Signal(
        coords=coords,
        support=support,
        amplitude=float(A),
        signed=bool(np.any(signs < 0)),
    )


def draw_prior_with(prior: PriorSpec, rng: np.random.Generator) -> Signal:
    """Draw from the prior consuming `rng` in place (support, then signs)."""
    support = np.sort(rng.choice(prior.p, size=prior.s, replace=False))
    if prior.sign_mode == "symmetric_signed":
        signs = rng.integers(0, 2, size=prior.s).astype(float) * 2.0 - 1.0
    else:
        signs = np.ones(prior.s)
    return make_signal(prior.p, support, prior.A, signs)


def draw_prior(prior: PriorSpec, seed: int) -> Signal:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), prior.p, prior.s]))
    return draw_prior_with(prior, rng)


@dataclass(frozen=True)
class Observation:
    """A response vector tied to the design that produced it."""

    y: np.ndarray = field(repr=False)
    X: DesignMatrix
    truth: Signal | None

    def __post_init__(self):
        if self.y.shape != (self.X.n,):
            raise ValueError(
                f"y has shape {self.y.shape}, expected ({self.X.n},)"
            )
        self.y.setflags(write=False)


def simulate(
    x: DesignMatrix,
    signal: Signal | None,
    seed: int,
    zero_noise: bool = False,
) -> Observation:
    """y = X beta + eps with standard normal noise (beta = 0 under the null).

    The noise stream is keyed by `seed` alone, independent of the design's
    stream.  `zero_noise` suppresses eps for exactness tests only.
    """
    if signal is not None and signal.coords.shape != (x.p,):
        raise ValueError(
            f"signal has length {signal.coords.shape[0]}, design has p={x.p}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), x.n, 11]))
    eps = np.zeros(x.n) if zero_noise else rng.standard_normal(x.n)
    y = eps if signal is None else x.entries @ signal.coords + eps
    return Observation(y=y, X=x, truth=signal)
