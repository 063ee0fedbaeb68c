"""Half-line quantizers of a uniform sample: achieved deviation against the codebook size."""
import argparse

import numpy as np

from gctypical.classes import HalfLines
from gctypical.measures import empirical_measure
from gctypical.typicality import quantizer_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    mu = empirical_measure(np.random.default_rng(args.seed).random((args.samples, 1)))
    print("m,delta,one_over_2m")
    for m, (_, d) in enumerate(quantizer_path(mu, HalfLines(), args.m), start=1):
        print(f"{m},{d:.5f},{1 / (2 * m):.5f}")


if __name__ == "__main__":
    main()
