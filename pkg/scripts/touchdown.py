"""Second order with the limiter on a solution touching zero.

Reports errors, orders, limiter activity and the largest neighbourhood per
level, with and without the limiter.
"""

import argparse
import math

from fvflow import RunConfig, run
from fvflow.diagnostics import error_norms
from fvflow.harness import exact_averages


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", default="160,320,640,1280")
    args = ap.parse_args()
    levels = [int(s) for s in args.levels.split(",")]
    for limiter in (True, False):
        prev = None
        print(f"limiter {'on' if limiter else 'off'}")
        for n in levels:
            res = run(RunConfig(problem="touchdown1d", N=n, limiter=limiter))
            l1, linf = error_norms(res.rho, exact_averages(res.plan.problem, res.grid, res.state.time), res.grid)
            ev = res.limiter_events
            order = "-" if prev is None else f"{math.log2(prev / l1):.4f}"
            print(f"  N = {n:5d}  l1 {l1:.4e}  order {order:>7s}  events {len(ev):4d}  "
                  f"max |S| {max((e.size for e in ev), default=0)}  min rho {res.rho.min():.2e}")
            prev = l1


if __name__ == "__main__":
    main()
