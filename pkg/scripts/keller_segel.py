"""Keller-Segel with sub- and super-critical mass: peak density and energy per snapshot."""

import argparse
from pathlib import Path

import numpy as np

from fvflow import RunConfig, emit_outputs, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/keller_segel")
    ap.add_argument("--N", type=int, default=51)
    args = ap.parse_args()
    for case in ("super", "sub"):
        res = run(RunConfig(problem="keller_segel", params={"case": case}, N=args.N))
        emit_outputs(res, Path(args.out) / case)
        e = np.array([r.energy for r in res.energy])
        print(f"{case}: initial mass {res.metadata['initial_mass']:.6f}, "
              f"max energy increase after step 2 {np.max(np.diff(e[2:])):.2e}")
        for step, t, rho in res.snapshots:
            print(f"  t = {t:5.2f}  max rho {rho.max():10.4f}  E {res.energy[step].energy:.6f}")


if __name__ == "__main__":
    main()
