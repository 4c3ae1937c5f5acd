"""APFD of the modified strategies as a function of p0 on synthetic data.

p0 = 1 reproduces the traditional strategies; p0 = 0 trusts the defect
predictor completely.

    python3 scripts/p0_sweep.py --seeds 5 --step 0.1
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from tcp_rank.cli import parse_sweep
from tcp_rank.harness import ExperimentConfig, run_experiment
from tcp_rank.synthetic import GenSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--step", type=float, default=0.1)
    ap.add_argument("--signal", type=float, default=3.0)
    args = ap.parse_args()

    sweep = parse_sweep(f"0:1:{args.step}")
    curves = {"mod_total": {p: [] for p in sweep}, "mod_additional": {p: [] for p in sweep}}
    with tempfile.TemporaryDirectory() as tmp:
        for s in range(args.seeds):
            path = generate(GenSpec(versions=15, signal_strength=args.signal, seed=s), Path(tmp) / f"seed{s}")
            rep = run_experiment(ExperimentConfig(str(path), strategies=tuple(curves), p0_sweep=sweep, seed=s))
            for r in rep.rows:
                if r.strategy in curves:
                    curves[r.strategy].setdefault(r.p0, []).append(r.apfd)
    print(f"{'p0':>5}{'mod_total':>11}{'mod_additional':>16}")
    for p in sweep:
        print(f"{p:>5.2f}{np.mean(curves['mod_total'][p]):>11.4f}{np.mean(curves['mod_additional'][p]):>16.4f}")


if __name__ == "__main__":
    main()
