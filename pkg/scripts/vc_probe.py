"""Shattering search for the classical set classes in the plane."""
import argparse

from gctypical.classes import Balls, HalfLines, Halfspaces, Intervals, Rectangles
from gctypical.concentration import vc_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--evidence", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("class,classical_dimension,lower_bound,unshattered,tested")
    for F in (HalfLines(), Intervals(), Halfspaces(2), Rectangles(2), Balls(2)):
        r = vc_probe(F, args.budget, args.seed, args.evidence)
        print(f"{F.id},{r.classical_dimension},{r.lower_bound},{r.counterexample_evidence},{r.tested}")


if __name__ == "__main__":
    main()
