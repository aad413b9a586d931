#!/usr/bin/env python3
"""Risk trajectory of the max test at the detection boundary with s fixed.

The theory predicts Risk -> (1/2)^s as p grows; the Type I contribution
decays only like 1/sqrt(pi log p), so the approach is extremely slow.  This
script prints the measured trajectory and its distance to the limit.
"""
import argparse

from sparse_testbench.risk import estimate_risk
from sparse_testbench.rules import build_test
from sparse_testbench.signals import NRule, RegimeSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=int, default=1)
    ap.add_argument("--p", type=int, nargs="+", default=[128, 512, 2048, 8192])
    ap.add_argument("--reps", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=20240906)
    args = ap.parse_args()

    regime = RegimeSpec(
        alpha=0.9, signal_mode="boundary_fixed_s", fixed_s=args.s, n_rule=NRule(1, 1, 0)
    )
    limit = 0.5**args.s
    print(f"s={args.s}, limit (1/2)^s = {limit}")
    print(f"{'p':>7s} {'type1':>8s} {'type2':>8s} {'risk':>8s} {'|risk-limit|':>12s}")
    for p in args.p:
        test = build_test("max_sqrt2logp", regime, p)
        est = estimate_risk(test, regime, p, args.reps, args.seed)
        t2 = max(est.type2_bayes, est.type2_worst_candidate)
        print(
            f"{p:7d} {est.type1:8.4f} {t2:8.4f} {est.risk:8.4f} "
            f"{abs(est.risk - limit):12.4f}"
        )


if __name__ == "__main__":
    main()
