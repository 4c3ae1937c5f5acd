"""Training-set F1 of the defect network when the toy labels are shuffled.

A network that can memorize arbitrary labels would score well here; the
test suite's bound on shuffled-label F1 was set from this script's output.

    python3 scripts/calibrate_shuffled_f1.py --trials 30
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import separable_toy  # noqa: E402

from tcp_rank.defect import TrainConfig, TrainingSet, f1_score, train  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=30)
    args = ap.parse_args()

    toy = separable_toy()
    real = train(toy)
    print(f"true labels:     F1 = {f1_score(toy.labels, real.predict_many(toy.features) > 0.5):.3f}")
    f1s = []
    for seed in range(args.trials):
        y = np.random.default_rng(100 + seed).permutation(toy.labels)
        model = train(TrainingSet(toy.features, y), TrainConfig(seed=seed))
        f1s.append(f1_score(y, model.predict_many(toy.features) > 0.5))
    f1s = np.array(f1s)
    print(f"shuffled labels: F1 mean {f1s.mean():.3f}  min {f1s.min():.3f}  max {f1s.max():.3f}  ({args.trials} trials)")


if __name__ == "__main__":
    main()
