"""Restarted selection on random candidate families.

Every converged maximizer over the same hull must have the same barycenter
field and total energy.  The study reports the worst disagreement over all
families, for random families and for families with a reflected duplicate
(where the optimal weights themselves are not unique).

    python3 scripts/uniqueness_study.py [--families 20] [--restarts 20] [--growth quadratic|isentropic]
"""

import argparse
import time

import numpy as np

from turbmax.grid import SpaceTimeGrid
from turbmax.growth import IsentropicGrowth, quadratic
from turbmax.integrands import builtin_energy
from turbmax.sampling import degenerate_family, random_candidate_family
from turbmax.selector import maximize, uniqueness_diagnostic


def run(families, restarts, growth, degenerate, seed, n):
    rng = np.random.default_rng(seed)
    g = SpaceTimeGrid(1.0, 2, n, n)
    f = builtin_energy(growth)
    worst_b = worst_e = 0.0
    distinct = 0
    for _ in range(families):
        cands = degenerate_family(rng, g) if degenerate else random_candidate_family(rng, g, 4, growth)
        runs = [maximize(cands, f, theta0=rng.dirichlet(np.ones(len(cands)))) for _ in range(restarts)]
        rep = uniqueness_diagnostic(runs)
        worst_b = max(worst_b, rep.max_barycenter_diff)
        worst_e = max(worst_e, rep.max_energy_rel_diff)
        distinct += rep.distinct_theta
    return worst_b, worst_e, distinct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--families", type=int, default=20)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--growth", choices=["quadratic", "isentropic"], default="quadratic")
    ap.add_argument("--gamma", type=float, default=1.4)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    growth = quadratic() if args.growth == "quadratic" else IsentropicGrowth(args.gamma)
    cases = [("random", False)] + ([("reflected duplicate", True)] if args.growth == "quadratic" else [])
    for name, degenerate in cases:
        t0 = time.perf_counter()
        b, e, distinct = run(args.families, args.restarts, growth, degenerate, args.seed, args.n)
        print(
            f"{name:>20}: max barycenter diff {b:.3e}  max energy rel diff {e:.3e}  "
            f"families with distinct optimal weights {distinct}/{args.families}  ({time.perf_counter() - t0:.1f} s)"
        )


if __name__ == "__main__":
    main()
