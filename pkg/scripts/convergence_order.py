"""Measure the integrator's convergence order by step halving on a nominal run.

Differences between successive halvings are taken at t = T1/2, where the
settling-time grading does not interfere with the base step.
"""

import argparse
import math

import numpy as np

from cansim.dynamics import ProtocolParams
from cansim.generators import random_strong
from cansim.simulator import Scenario, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--seed", type=int, default=909)
    ap.add_argument("--h0", type=float, default=0.015)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    g = random_strong(args.n, rng, balanced=True)
    params = ProtocolParams(rho1=0.1, rho2=0.3, kappa=1.0, T1=0.6)
    x0 = rng.uniform(-5, 5, args.n)
    hs = [args.h0 / 2**k for k in range(args.levels)]
    xs = [simulate(Scenario(g, params, x0, 0.6, h=h)).at(0.3) for h in hs]
    diffs = [float(np.max(np.abs(a - b))) for a, b in zip(xs, xs[1:])]
    print(f"{'h':>10} {'|x_h - x_h/2|':>16} {'order':>7}")
    for i, (h, d) in enumerate(zip(hs, diffs)):
        order = math.log2(diffs[i - 1] / d) if i and d > 0 else float("nan")
        print(f"{h:10.5g} {d:16.3e} {order:7.3f}")


if __name__ == "__main__":
    main()
