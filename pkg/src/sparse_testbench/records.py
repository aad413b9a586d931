"""Flattened result rows and their CSV / JSON serialization.

The CSV schema is fixed: one row per (experiment_id, test, p) with every
risk-estimate field, the resolved (s, A, n), the regime label, and the
theory prediction when one exists.  Reals are written with 17 significant
digits ('.' decimal, no separators) so the files round-trip exactly and
reruns are byte-identical.
"""
from __future__ import annotations

import json

from .risk import RiskEstimate
from .theory import ExponentPrediction, classify_regime

RESULT_COLUMNS = (
    "experiment_id",
    "test",
    "p",
    "s",
    "A",
    "n",
    "design_family",
    "signal_mode",
    "alpha",
    "r",
    "delta",
    "fixed_s",
    "regime_label",
    "theory_side",
    "theory_scale",
    "theory_limit",
    "type1",
    "type2_bayes",
    "type2_worst_candidate",
    "risk",
    "reps",
    "ci_halfwidth",
    "seed",
    "degenerate",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def build_record(experiment_id: str, est: RiskEstimate) -> dict:
    regime = est.regime
    try:
        pred = classify_regime(regime)
    except ValueError:
        pred = ExponentPrediction("unclassified")
    return {
        "experiment_id": experiment_id,
        "test": est.test_name,
        "p": est.p,
        "s": est.s,
        "A": est.A,
        "n": est.n,
        "design_family": est.design_family,
        "signal_mode": regime.signal_mode,
        "alpha": regime.alpha,
        "r": regime.r,
        "delta": regime.delta,
        "fixed_s": regime.fixed_s,
        "regime_label": pred.regime_label,
        "theory_side": pred.side,
        "theory_scale": pred.scale,
        "theory_limit": pred.limit_value,
        "type1": est.type1,
        "type2_bayes": est.type2_bayes,
        "type2_worst_candidate": est.type2_worst_candidate,
        "risk": est.risk,
        "reps": est.reps,
        "ci_halfwidth": est.ci_halfwidth,
        "seed": est.seed,
        "degenerate": est.degenerate,
    }


def records_to_csv(records) -> str:
    lines = [",".join(RESULT_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(rec[col]) for col in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


def records_to_json(records) -> str:
    return json.dumps(list(records), indent=1, sort_keys=True) + "\n"


def read_csv(text: str) -> list[dict]:
    """Parse a results.csv back into typed records."""
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        raw = dict(zip(header, line.split(",")))
        rec = {}
        for key, val in raw.items():
            if val == "":
                rec[key] = None
            elif key in ("p", "s", "n", "reps", "seed", "fixed_s"):
                rec[key] = int(val)
            elif key == "degenerate":
                rec[key] = val == "true"
            elif key in (
                "A", "alpha", "r", "delta", "theory_limit", "type1", "type2_bayes",
                "type2_worst_candidate", "risk", "ci_halfwidth",
            ):
                rec[key] = float(val)
            else:
                rec[key] = val
        out.append(rec)
    return out
