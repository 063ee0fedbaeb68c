"""Mean half-line deviation of uniform samples against n, with the sqrt(n) column."""
import argparse
import math

from gctypical.classes import HalfLines
from gctypical.measures import uniform_box
from gctypical.typicality import convergence_curve, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    rows = summarize(convergence_curve(uniform_box([0], [1]), HalfLines(), args.n, args.trials, args.seed,
                                       args.threads))
    print("n,mean,stderr,mean_sqrt_n")
    for r in rows:
        print(f"{r.n},{r.mean:.6f},{r.stderr:.6f},{r.mean * math.sqrt(r.n):.4f}")


if __name__ == "__main__":
    main()
