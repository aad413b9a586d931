#!/usr/bin/env python3
"""Write the canonical experiment configs into a directory.

Emits one TOML per experiment:
  scan_above_boundary   scan test risk decay, alpha=0.6, r=2, p = 2^8..2^12
  boundary_fixed_s1     max test risk at the detection boundary, s = 1
  hc_below_boundary     ideal HC below the boundary (4r <= 1 branch)
  dense_chisq           centered chi-squared test in the dense regime

Run them all with: sparse-testbench sweep <dir>
"""
import argparse
import os

CONFIGS = {
    "scan_above_boundary": """\
experiment_id = "scan_above_boundary"
design_family = "orthogonal"
p_grid = [256, 512, 1024, 2048, 4096]
reps = 100000
seed = 20240901
output_dir = "{out}"

[regime]
alpha = 0.6
signal_mode = "sparse_r"
r = 2.0

[[tests]]
name = "scan_taustar"

[[tests]]
name = "scan_binom"
""",
    "boundary_fixed_s1": """\
experiment_id = "boundary_fixed_s1"
design_family = "orthogonal"
p_grid = [128, 512, 2048]
reps = 10000
seed = 20240902
output_dir = "{out}"

[regime]
alpha = 0.9
signal_mode = "boundary_fixed_s"
fixed_s = 1

[[tests]]
name = "max_sqrt2logp"

[[tests]]
name = "lr_test"
""",
    "hc_below_boundary": """\
experiment_id = "hc_below_boundary"
design_family = "orthogonal"
p_grid = [256, 1024, 4096]
reps = 20000
seed = 20240903
output_dir = "{out}"

[regime]
alpha = 0.6
signal_mode = "sparse_r"
r = 0.08

[[tests]]
name = "hc_below"

[[tests]]
name = "max_sqrt2logp"

[[tests]]
name = "chisq_center"
""",
    "dense_chisq": """\
experiment_id = "dense_chisq"
design_family = "orthogonal"
p_grid = [256, 1024, 4096]
reps = 20000
seed = 20240904
output_dir = "{out}"

[regime]
alpha = 0.4
signal_mode = "dense_delta"
delta = -0.2

[[tests]]
name = "chisq_center"

[[tests]]
name = "chisq_above"
""",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config-dir", default="configs")
    ap.add_argument("--output-dir", default="results")
    args = ap.parse_args()
    os.makedirs(args.config_dir, exist_ok=True)
    for name, template in CONFIGS.items():
        path = os.path.join(args.config_dir, f"{name}.toml")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(template.format(out=args.output_dir))
        print(path)


if __name__ == "__main__":
    main()
