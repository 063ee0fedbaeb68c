"""Coordination rate R(delta) of a uniform source through a binary symmetric kernel."""
import argparse

import numpy as np

from gctypical.rates import CoordinationProblem, curve_to_csv, rate_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--crossover", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--max-delta", type=float, default=0.5)
    args = ap.parse_args()
    e = args.crossover
    p = CoordinationProblem(np.array([0.5, 0.5]), np.array([[1 - e, e], [e, 1 - e]]))
    print(curve_to_csv(rate_curve(p, np.linspace(0.0, args.max_delta, args.points))), end="")


if __name__ == "__main__":
    main()
