"""Closed-form layer: detection boundary, regime classification, exponents.

The detection boundary rho*(alpha) separates consistent detectability from
impossibility for alpha > 1/2.  Each studied regime carries a predicted limit
of log Risk (above the boundary) or log(1 - Risk) (below it) against a
normalizer; two parameter regions have no proven exponent and are labelled
"gap" rather than extrapolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .signals import RegimeSpec

REGIME_LABELS = (
    "below_dense",
    "below_sparse_small_r",
    "below_sparse_large_r",
    "above_dense_near",
    "above_dense_far",
    "above_sparse",
    "boundary_fixed_s",
    "gap",
)

SIDES = ("log_one_minus_risk", "log_risk", "risk_itself")
SCALES = ("log p", "s log p", "p^(2 delta)", "p^(1/2 + delta)", "none")


class GapRegimeError(ValueError):
    """Raised when an exponent is requested inside an uncharacterized region."""


@dataclass(frozen=True)
class ExponentPrediction:
    regime_label: str
    scale: str | None = None
    limit_value: float | None = None
    side: str | None = None


@dataclass(frozen=True)
class SuboptimalityRecord:
    """Theoretical comparison of the scan test with ideal HC and Max tests.

    Above the boundary (r > alpha) the scan test attains risk exponent
    -(r-alpha)^2/(4r) on the s log p scale, while the ideal single-threshold
    HC and Max tests attain no negative exponent on that scale at all.
    """

    alpha: float
    r: float
    optimal_exponent: float
    hc_exponent_on_slogp_scale: float
    max_exponent_on_slogp_scale: float
    statement: str


def rho_star(alpha: float) -> float:
    """Sharp detection threshold constant for sparse signals (1/2 < alpha < 1)."""
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"rho_star is defined on (1/2, 1), got alpha={alpha}")
    if alpha < 0.75:
        return alpha - 0.5
    return (1.0 - math.sqrt(1.0 - alpha)) ** 2


def classify_regime(regime: RegimeSpec) -> ExponentPrediction:
    """Label the regime and attach the predicted exponent when one exists."""
    if regime.signal_mode == "boundary_fixed_s":
        return ExponentPrediction(
            "boundary_fixed_s",
            scale="none",
            limit_value=0.5**regime.fixed_s,
            side="risk_itself",
        )
    if regime.signal_mode == "sparse_r":
        alpha, r = regime.alpha, regime.r
        if alpha <= 0.5:
            raise ValueError("sparse_r classification needs alpha > 1/2")
        rho = rho_star(alpha)
        if r > alpha:
            return ExponentPrediction(
                "above_sparse",
                scale="s log p",
                limit_value=-((r - alpha) ** 2) / (4.0 * r),
                side="log_risk",
            )
        if r <= rho:
            # boundary point r = rho* kept with the below branch: both
            # branch formulas vanish there
            if 4.0 * r <= 1.0:
                return ExponentPrediction(
                    "below_sparse_small_r",
                    scale="log p",
                    limit_value=r - (alpha - 0.5),
                    side="log_one_minus_risk",
                )
            return ExponentPrediction(
                "below_sparse_large_r",
                scale="log p",
                limit_value=1.0 - alpha - (1.0 - math.sqrt(r)) ** 2,
                side="log_one_minus_risk",
            )
        return ExponentPrediction("gap")
    # dense_delta
    alpha, delta = regime.alpha, regime.delta
    if alpha > 0.5:
        raise ValueError("dense_delta classification needs alpha <= 1/2")
    if -0.5 < delta < 0.0:
        return ExponentPrediction(
            "below_dense",
            scale="log p",
            limit_value=delta,
            side="log_one_minus_risk",
        )
    if 0.0 < delta < 0.1 and alpha - 0.5 + 2.0 * delta < 0.0:
        return ExponentPrediction(
            "above_dense_near",
            scale="p^(2 delta)",
            limit_value=-1.0 / 16.0,
            side="log_risk",
        )
    if alpha - 0.5 + delta > 0.0 and 0.0 < delta < 0.5:
        return ExponentPrediction(
            "above_dense_far",
            scale="p^(1/2 + delta)",
            limit_value=-1.0 / 8.0,
            side="log_risk",
        )
    return ExponentPrediction("gap")


def predict_exponent(regime: RegimeSpec) -> ExponentPrediction:
    pred = classify_regime(regime)
    if pred.regime_label == "gap":
        raise GapRegimeError(
            "no exponent is proven in this parameter region; refusing to extrapolate"
        )
    return pred


def suboptimality_gap(alpha: float, r: float) -> SuboptimalityRecord:
    """Record the sub-optimality of ideal HC and Max tests for r > alpha > 1/2.

    Both tests satisfy inf-over-cutoff Risk >> exp(-C s log p) for every
    C > 0, so on the s log p scale their exponent is 0, strictly above the
    optimal -(r-alpha)^2/(4r).
    """
    if not (r > alpha > 0.5):
        raise ValueError(f"need r > alpha > 1/2, got alpha={alpha}, r={r}")
    opt = -((r - alpha) ** 2) / (4.0 * r)
    return SuboptimalityRecord(
        alpha=alpha,
        r=r,
        optimal_exponent=opt,
        hc_exponent_on_slogp_scale=0.0,
        max_exponent_on_slogp_scale=0.0,
        statement=(
            "ideal HC at threshold sqrt(2 log p) and the Max test attain no "
            "negative exponent on the s log p scale; the scan test attains "
            f"{opt:.6g}"
        ),
    )


def _sparse_regime(alpha: float, r: float) -> RegimeSpec:
    return RegimeSpec(alpha=alpha, signal_mode="sparse_r", r=r)


def _dense_regime(alpha: float, delta: float) -> RegimeSpec:
    return RegimeSpec(alpha=alpha, signal_mode="dense_delta", delta=delta)


PHASE_MODES = ("figure1_dense", "figure1_sparse", "figure2_dense", "figure2_sparse")


def phase_diagram(mode: str, resolution: int = 50) -> list[tuple[float, float, str]]:
    """Cell-labelled (alpha, y, label) grid for one phase-diagram panel.

    figure1_* panels label detectability (powerless/powerful); figure2_*
    panels carry the exponent regime labels.  In figure1_dense the signal is
    parametrized as A = sqrt(p^(-y)/n), so tests are powerless iff
    y > 1/2 - alpha.
    """
    if mode not in PHASE_MODES:
        raise ValueError(f"mode must be one of {PHASE_MODES}")
    if resolution < 2:
        raise ValueError("need at least 2 cells per axis")
    cells = []
    ticks = [(i + 0.5) / resolution for i in range(resolution)]
    if mode == "figure1_dense":
        for a in ticks:
            alpha = 0.5 * a
            for t in ticks:
                y = t  # exponent in A = sqrt(p^(-y)/n), y in (0,1)
                label = "powerless" if y > 0.5 - alpha else "powerful"
                cells.append((alpha, y, label))
    elif mode == "figure1_sparse":
        for a in ticks:
            alpha = 0.5 + 0.5 * a
            for t in ticks:
                r = t  # r in (0,1)
                label = "powerless" if r <= rho_star(alpha) else "powerful"
                cells.append((alpha, r, label))
    elif mode == "figure2_sparse":
        for a in ticks:
            alpha = 0.5 + 0.5 * a
            for t in ticks:
                r = 1.5 * t  # r in (0, 1.5) covers every sparse regime
                cells.append((alpha, r, classify_regime(_sparse_regime(alpha, r)).regime_label))
    else:
        for a in ticks:
            alpha = 0.5 * a
            for t in ticks:
                delta = -0.5 + t  # delta in (-1/2, 1/2)
                cells.append(
                    (alpha, delta, classify_regime(_dense_regime(alpha, delta)).regime_label)
                )
    return cells


def exponent_table_rows() -> list[dict]:
    """Canonical table of regime labels, normalizers, and limits."""
    rows = []

    def add(mode, alpha, param, regime):
        pred = classify_regime(regime)
        rows.append(
            {
                "signal_mode": mode,
                "alpha": alpha,
                "parameter": param,
                "regime_label": pred.regime_label,
                "side": pred.side or "",
                "scale": pred.scale or "",
                "limit": "" if pred.limit_value is None else pred.limit_value,
            }
        )

    for alpha in (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95):
        rho = rho_star(alpha)
        r_values = sorted({rho / 2.0, rho, (rho + alpha) / 2.0, alpha, 1.0, 2.0})
        for r in r_values:
            add("sparse_r", alpha, r, _sparse_regime(alpha, r))
    for alpha in (0.1, 0.2, 0.3, 0.4, 0.5):
        for delta in (-0.3, -0.1, 0.02, 0.05, 0.2, 0.45):
            add("dense_delta", alpha, delta, _dense_regime(alpha, delta))
    for s in (1, 2, 3, 5):
        add(
            "boundary_fixed_s",
            0.99,
            s,
            RegimeSpec(alpha=0.99, signal_mode="boundary_fixed_s", fixed_s=s),
        )
    return rows
