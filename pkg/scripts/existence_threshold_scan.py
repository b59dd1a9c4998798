#!/usr/bin/env python3
"""Locate the boundary-value existence threshold of the singular branch.

For q > 2 the singular solution exists only for boundary values near or
above the eikonal plateau constant: the gradient term caps how far any
solution can rise above its boundary value, so prescribing a value too far
below the plateau leaves nothing for the boundary-value continuation to
converge to.  This script walks the continuation until it stalls and
reports the last reachable boundary value for a grid of exponents.
"""
import argparse

from expsing.errors import BranchCollapse, NoConvergence
from expsing.params import ProblemParams
from expsing.radial import SolverConfig, eikonal_plateau_constant, solve_supercritical_singular


def threshold(params: ProblemParams, config: SolverConfig) -> float:
    ell = eikonal_plateau_constant(params)
    try:
        solve_supercritical_singular(params, ell - 40.0 / params.b, config)
        return float("-inf")  # reached an extremely low value: no fold seen
    except NoConvergence as exc:
        text = str(exc)
        marker = "stalled at "
        i = text.find(marker)
        return float(text[i + len(marker):].split()[0]) if i >= 0 else float("nan")
    except BranchCollapse:
        return float("nan")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--q", type=float, nargs="+", default=[2.5, 3.0, 4.0])
    parser.add_argument("--n-points", type=int, default=2048)
    args = parser.parse_args()
    config = SolverConfig(n_points=args.n_points, newton_max_iter=40)
    print(f"{'q':>6} {'plateau':>10} {'last reachable':>15} {'gap':>8}")
    for q in args.q:
        params = ProblemParams(m=1.0, a=1.0, b=1.0, q=q)
        ell = eikonal_plateau_constant(params)
        reach = threshold(params, config)
        print(f"{q:6.2f} {ell:10.4f} {reach:15.4f} {ell - reach:8.4f}")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
