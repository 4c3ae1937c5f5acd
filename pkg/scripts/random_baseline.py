"""Mean APFD of random ordering on one synthetic version (expected about 0.5).

    python3 scripts/random_baseline.py --runs 10000
"""

import argparse

import numpy as np

from tcp_rank.metrics import apfd
from tcp_rank.prioritization import prioritize_random
from tcp_rank.synthetic import GenSpec, generate_versions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    v = next(v for v in generate_versions(GenSpec(versions=3, seed=args.seed)) if v.failed_indices())
    failed = v.failed_indices()
    scores = np.array([apfd(prioritize_random(v.n_tests, s).order, failed, v.n_tests) for s in range(args.runs)])
    l, n = len(failed), v.n_tests
    print(f"{l}/{n} tests fail; mean APFD {scores.mean():.4f} +- {scores.std(ddof=1) / np.sqrt(args.runs):.4f} (se)")
    # E[position of a failed test] = (n+1)/2, so E[APFD] = 1 - (n+1)/(2n) + 1/(2n) = 1/2
    print("expected 0.5")


if __name__ == "__main__":
    main()
