#!/usr/bin/env python3
"""Render the four phase-diagram panels as self-contained SVG files."""
import argparse
import os

from sparse_testbench.cli import main as cli_main
from sparse_testbench.theory import PHASE_MODES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--resolution", type=int, default=120)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for mode in PHASE_MODES:
        out = os.path.join(args.out_dir, f"{mode}.svg")
        code = cli_main(
            ["plot", mode, "--out", out, "--resolution", str(args.resolution)]
        )
        if code != 0:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
