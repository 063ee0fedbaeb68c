"""Mean deviation times sqrt(n) for VC classes, with raw tail frequencies."""
import argparse

from gctypical.classes import HalfLines, Halfspaces, Intervals
from gctypical.concentration import deviation_scaling
from gctypical.measures import uniform_box


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[50, 200, 800])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    for F, model in ((HalfLines(), uniform_box([0], [1])), (Intervals(), uniform_box([0], [1])),
                     (Halfspaces(2), uniform_box([0, 0], [1, 1]))):
        t = deviation_scaling(F, model, args.n, args.trials, args.seed, (0.05, 0.1), args.threads)
        print(f"# {t.cls} (VC dimension {t.classical_dimension})")
        print(t.to_csv(), end="")


if __name__ == "__main__":
    main()
