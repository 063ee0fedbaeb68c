"""Decode-error rate of random binning against the bin rate, around H(U|Y)."""
import argparse

import numpy as np

from gctypical.classes import AllFunctions
from gctypical.coding_sim import simulate_wz
from gctypical.information import binary_entropy
from gctypical.rates import SideInfoProblem, WZSolution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--crossover", type=float, default=0.11)
    ap.add_argument("--n1", type=int, default=20)
    ap.add_argument("--n2", type=int, default=100)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--offsets", type=float, nargs="+", default=[-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3])
    ap.add_argument("--decoder", choices=("ml", "threshold"), default="ml")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    e = args.crossover
    pxy = np.array([[1 - e, e], [e, 1 - e]]) / 2
    p = SideInfoProblem(pxy, AllFunctions(), 0.0, 2)
    scheme = WZSolution(0.0, np.eye(2), np.array([[0, 1], [0, 1]]), True)
    h = binary_entropy(e)
    print(f"# H(U|Y)={h:.4f}")
    print("R_bin,bin_rate,decode_error_rate,mean_deviation")
    for off in args.offsets:
        rep = simulate_wz(p, scheme, 1.0, h + off, args.n1, args.n2, args.trials, args.seed,
                          decoder=args.decoder, threads=args.threads)
        print(f"{h + off:.4f},{rep.meta['bin_rate']:.4f},{rep.decode_error_rate:.4f},{rep.mean:.4f}")


if __name__ == "__main__":
    main()
