"""Simulation bench for minimax risk of sparse-signal detection in
high-dimensional linear regression: designs, whitened statistics, calibrated
tests, Monte Carlo risk estimation, closed-form exponent predictions, and
brute-force lemma verification.
"""

__version__ = "0.1.0"

from .designs import (
    DesignMatrix,
    GramFactorization,
    generate_design,
    gram_factorize,
    gram_sqrt_deviation,
    rip_deviation,
)
from .signals import (
    NRule,
    Observation,
    PriorSpec,
    RegimeSpec,
    Signal,
    draw_prior,
    make_signal,
    resolve_regime,
    simulate,
)
from .statistics import (
    LikelihoodRatioValue,
    WhitenedVector,
    chi_sq_stat,
    compute_z,
    hc_stat,
    integrated_lr,
    max_stat,
    scan_stat,
    truncated_lr,
)
from .rules import TestDecision, TestSpec, build_test, decide
from .theory import (
    ExponentPrediction,
    classify_regime,
    phase_diagram,
    predict_exponent,
    rho_star,
    suboptimality_gap,
)
from .risk import (
    ComparisonReport,
    ExponentFit,
    RiskEstimate,
    compare_tests,
    estimate_risk,
    estimate_risks,
    fit_exponent,
)
from .lemmas import LemmaCheckResult, exact_lr_reference, run_all_checks

__all__ = [
    "DesignMatrix",
    "GramFactorization",
    "generate_design",
    "gram_factorize",
    "gram_sqrt_deviation",
    "rip_deviation",
    "NRule",
    "Observation",
    "PriorSpec",
    "RegimeSpec",
    "Signal",
    "draw_prior",
    "make_signal",
    "resolve_regime",
    "simulate",
    "LikelihoodRatioValue",
    "WhitenedVector",
    "chi_sq_stat",
    "compute_z",
    "hc_stat",
    "integrated_lr",
    "max_stat",
    "scan_stat",
    "truncated_lr",
    "TestDecision",
    "TestSpec",
    "build_test",
    "decide",
    "ExponentPrediction",
    "classify_regime",
    "phase_diagram",
    "predict_exponent",
    "rho_star",
    "suboptimality_gap",
    "ComparisonReport",
    "ExponentFit",
    "RiskEstimate",
    "compare_tests",
    "estimate_risk",
    "estimate_risks",
    "fit_exponent",
    "LemmaCheckResult",
    "exact_lr_reference",
    "run_all_checks",
]
