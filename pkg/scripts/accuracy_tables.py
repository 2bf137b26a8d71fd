"""Refinement studies on the manufactured 1D and 2D problems.

Writes one convergence CSV + text table per configuration under --out.
"""

import argparse
from pathlib import Path

from fvflow import RunConfig
from fvflow.harness import convergence_study, convergence_table_text, emit_convergence

STUDIES = {
    "1d_first_tau_h2": (RunConfig(problem="accuracy1d", scheme="first", tau_rule="h2", tau_coef=1.0), [40, 80, 160, 320]),
    "1d_first_tau_0.1h": (RunConfig(problem="accuracy1d", scheme="first", tau_rule="h", tau_coef=0.1), [40, 80, 160, 320]),
    "1d_second_tau_h": (RunConfig(problem="accuracy1d", scheme="second", tau_rule="h", tau_coef=1.0), [40, 80, 160, 320]),
    "2d_first_tau_0.1h2": (RunConfig(problem="accuracy2d", scheme="first", tau_rule="h2", tau_coef=0.1), [10, 20, 40, 80]),
    "2d_second_tau_0.1h": (RunConfig(problem="accuracy2d", scheme="second", tau_rule="h", tau_coef=0.1), [10, 20, 40, 80]),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/accuracy")
    ap.add_argument("--only", nargs="*", choices=sorted(STUDIES))
    args = ap.parse_args()
    for name in args.only or STUDIES:
        cfg, levels = STUDIES[name]
        rows = convergence_study(cfg, levels)
        meta = {"study": name, "problem": cfg.problem, "scheme": cfg.scheme, "tau_rule": cfg.tau_rule,
                "tau_coef": cfg.tau_coef, "levels": levels}
        emit_convergence(rows, Path(args.out) / name, meta)
        print(f"== {name}")
        print(convergence_table_text(rows))


if __name__ == "__main__":
    main()
