"""Two constant velocity fields and the maximal mixture between them.

For Diracs at ``v1`` and ``v2`` and ``f = |.|^2`` the functional along the
segment is ``tau (1 - tau) |v1 - v2|^2 vol``; this script prints the sampled
curve next to that parabola and the selector's optimum.

    python3 scripts/toy_example.py [--samples 11] [--n 8]
"""

import argparse

import numpy as np

from turbmax import SpaceTimeGrid, maximize, squared_norm, young_of_function
from turbmax.measure import convex_combine
from turbmax.functional import jensen_defect
from turbmax.selector import brute_force_simplex


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=11)
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args()
    g = SpaceTimeGrid(1.0, 2, args.n, args.n)
    v1, v2 = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
    Y1 = young_of_function(np.tile(v1, (g.n_cells, 1)), g)
    Y2 = young_of_function(np.tile(v2, (g.n_cells, 1)), g)
    f = squared_norm()
    const = float(np.sum((v1 - v2) ** 2)) * g.total_volume
    print(f"{'tau':>6} {'V_f':>14} {'parabola':>14}")
    for tau in np.linspace(0, 1, args.samples):
        v = jensen_defect(convex_combine(Y1, Y2, tau), f).value
        print(f"{tau:6.3f} {v:14.8f} {tau * (1 - tau) * const:14.8f}")
    res = maximize([Y1, Y2], f)
    th, val = brute_force_simplex([Y1, Y2], f, 10_000)
    print(f"selector: tau* = {res.theta.theta[0]:.12f}  V* = {res.value:.12f}  gap = {res.gap:.2e}")
    print(f"grid search: tau = {th[0]:.4f}  V = {val:.12f}")
    print(f"closed form: tau = 0.5  V = {0.25 * const:.12f}")


if __name__ == "__main__":
    main()
