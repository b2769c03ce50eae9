"""Refinement study behind ``incompressible.C_EST``.

Runs the steady shear flow ``v = (sin x2, 0)`` (incompressible) and a constant
state (compressible) through the weak-form checker on grids ``n = 8 .. 64``
and prints the largest normalized residual, the observed order and the
constant ``residual / resolution**2``.

    python3 scripts/calibrate_residual_constant.py [--max-n 64]
"""

import argparse
import math

import numpy as np

from turbmax import compressible as C
from turbmax import incompressible as I
from turbmax.grid import SpaceTimeGrid
from turbmax.growth import IsentropicGrowth
from turbmax.measure import young_of_function


def shear(n, T=1.0):
    g = SpaceTimeGrid(T, 2, n, n)
    v = lambda t, x: np.stack([np.sin(x[:, 1]), np.zeros(len(x))], axis=1)
    Y = young_of_function(v, g)
    data = I.IncompressibleData.from_function(g, lambda x: np.stack([np.sin(x[:, 1]), 0 * x[:, 1]], axis=1))
    rep = I.check(Y, data)
    return g, rep.max_residual


def constant_state(n, T=1.0, gamma=1.4):
    g = SpaceTimeGrid(T, 2, n, n)
    rho, u = 1.3, np.array([0.4, -0.2])
    Y = young_of_function(np.tile(C.state(np.array(rho), u), (g.n_cells, 1)), g, IsentropicGrowth(gamma))
    rep = C.check(Y, C.CompressibleData(g, gamma, rho, u))
    return g, rep.max_residual


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-n", type=int, default=64)
    args = ap.parse_args()
    ns = [n for n in (8, 16, 32, 64, 128) if n <= args.max_n]
    for name, run in (("shear flow (incompressible)", shear), ("constant state (compressible)", constant_state)):
        print(name)
        prev = None
        for n in ns:
            g, r = run(n)
            order = "" if prev is None else f"  order {math.log2(prev / r):.3f}"
            print(f"  n={n:4d}  residual {r:.4e}  residual/h^2 {r / g.resolution**2:.5f}{order}")
            prev = r
    print(f"current C_EST = {I.C_EST}")


if __name__ == "__main__":
    main()
