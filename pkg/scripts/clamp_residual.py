"""Residual at the settling time against spectral margin and clamp width.

For random graphs of one class, prints the margin, the verdict residual
relative to the default tolerance, and pass/fail for each clamp width.
"""

import argparse

import numpy as np

from cansim.dynamics import ProtocolParams
from cansim.generators import random_quasi_strong, random_strong, random_weak, spectral_margin
from cansim.simulator import Scenario, simulate
from cansim.spectral import analyze_graph
from cansim.verify import default_tolerance, predicted_limits


def draw(kind, rng, balanced):
    if kind == "strong":
        return random_strong(int(rng.integers(3, 9)), rng, balanced)
    if kind == "quasi":
        return random_quasi_strong(int(rng.integers(2, 5)), int(rng.integers(1, 5)), rng, balanced)
    return random_weak((2, 3), int(rng.integers(1, 4)), rng, (balanced, False))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=("strong", "quasi", "weak"), default="strong")
    ap.add_argument("--unbalanced", action="store_true")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-6, 1e-10])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.trials):
        g = draw(args.kind, rng, not args.unbalanced)
        x0 = rng.uniform(-5, 5, g.n_nodes)
        tol = default_tolerance(x0)
        lim = predicted_limits(analyze_graph(g), x0).limit
        ratios = []
        for eps in args.eps:
            params = ProtocolParams(rho1=0.1, rho2=0.3, kappa=1.0, T1=0.6, epsilon_rel=eps)
            traj = simulate(Scenario(g, params, x0, 0.6))
            ratios.append(float(np.max(np.abs(traj.at(0.6) - lim))) / tol)
        rows.append((spectral_margin(g), ratios))

    rows.sort()
    print("margin  " + "  ".join(f"eps={e:g}" for e in args.eps))
    for m, ratios in rows:
        print(f"{m:6.3f}  " + "  ".join(f"{r:9.3g}{'*' if r > 1 else ' '}" for r in ratios))
    for j, eps in enumerate(args.eps):
        bad = [m for m, r in rows if r[j] > 1]
        edge = f", largest failing margin {max(bad):.3f}" if bad else ""
        print(f"eps={eps:g}: {len(bad)}/{len(rows)} above tol{edge}")


if __name__ == "__main__":
    main()
