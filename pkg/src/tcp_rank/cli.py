"""``tcp-rank`` command line: run, validate, gen.

Exit codes: 0 success, 2 data error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .data import find_projects, load_project
from .defect import TrainConfig
from .errors import ConfigError, DataError, SpecError
from .harness import ExperimentConfig, run_experiment
from .synthetic import GenSpec, generate

EXIT_DATA = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_sweep(text: str) -> tuple:
    """``"0:1:0.1"`` (inclusive range) or ``"0,0.3,1"``."""
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad sweep {text!r}, expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad sweep {text!r}")
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + k * step, 12) for k in range(count) if start + k * step <= stop + 1e-9)
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad sweep {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tcp-rank", description="Fault-proneness weighted test case prioritization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="rolling train/evaluate experiment")
    run.add_argument("--dataset", required=True)
    run.add_argument("--strategies", default="total,additional,mod_total,mod_additional")
    run.add_argument("--p0", type=float, default=0.3)
    run.add_argument("--p0-sweep", default=None, help="start:stop:step or comma list")
    run.add_argument("--eval-window", type=int, default=None)
    run.add_argument("--min-training-versions", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--reuse-model", action="store_true")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--timings", action="store_true", help="record runtime_ms (breaks byte-identical reruns)")
    run.add_argument("--iterations", type=int, default=TrainConfig.iterations)
    run.add_argument("--epochs", type=int, default=TrainConfig.epochs_per_iteration)
    run.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    run.add_argument("--neg-pos-ratio", type=float, default=TrainConfig.neg_pos_ratio)
    run.add_argument("--out", required=True)

    val = sub.add_parser("validate", help="check a dataset against the schema")
    val.add_argument("--dataset", required=True)

    gen = sub.add_parser("gen", help="write a synthetic project")
    gen.add_argument("--versions", type=int, default=GenSpec.versions)
    gen.add_argument("--tests", type=int, default=GenSpec.tests_per_version)
    gen.add_argument("--units", type=int, default=GenSpec.units_per_version)
    gen.add_argument("--classes", type=int, default=GenSpec.classes)
    gen.add_argument("--density", type=float, default=GenSpec.coverage_density)
    gen.add_argument("--fault-rate", type=float, default=GenSpec.fault_rate)
    gen.add_argument("--signal", type=float, default=GenSpec.signal_strength)
    gen.add_argument("--failure-link", type=float, default=GenSpec.failure_link)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return parser


def _run(args) -> int:
    try:
        tc = TrainConfig(
            iterations=args.iterations,
            epochs_per_iteration=args.epochs,
            learning_rate=args.learning_rate,
            neg_pos_ratio=args.neg_pos_ratio,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig(
        dataset_path=args.dataset,
        strategies=tuple(s.strip() for s in args.strategies.split(",") if s.strip()),
        p0=args.p0,
        p0_sweep=parse_sweep(args.p0_sweep) if args.p0_sweep else (),
        min_training_versions=args.min_training_versions,
        seed=args.seed,
        train_config=tc,
        output_dir=args.out,
        eval_window=args.eval_window,
        reuse_model=args.reuse_model,
        workers=args.workers,
        record_timings=args.timings,
    )
    report = run_experiment(cfg)
    for comp in report.summary["comparisons"]:
        pooled = comp["pooled"]
        if pooled["n_pairs"] == 0:
            continue
        p = pooled["wilcoxon"]["p_value"]
        print(
            f"{comp['modified']:>15} vs {comp['traditional']:<10} p0={comp['p0']:<5g} "
            f"APFD {pooled['mean_modified']:.4f} vs {pooled['mean_traditional']:.4f}  "
            f"improvement {100 * pooled['improvement']:+.2f}%  "
            f"wilcoxon p={'n/a' if p is None else f'{p:.4g}'}  (n={pooled['n_pairs']})"
        )
    print(f"{len(report.rows)} APFD rows, {len(report.skips)} skipped versions -> {args.out}")
    return 0


def _validate(args) -> int:
    for pdir in find_projects(args.dataset):
        versions = load_project(pdir)
        n_failed = sum(1 for v in versions if v.outcomes.failed)
        print(
            f"{pdir}: {len(versions)} versions OK "
            f"({n_failed} with failing tests, "
            f"{sum(len(v.buggy_classes()) for v in versions)} buggy class records)"
        )
    return 0


def _gen(args) -> int:
    try:
        spec = GenSpec(
            versions=args.versions,
            tests_per_version=args.tests,
            units_per_version=args.units,
            classes=args.classes,
            coverage_density=args.density,
            fault_rate=args.fault_rate,
            signal_strength=args.signal,
            failure_link=args.failure_link,
            seed=args.seed,
        )
    except SpecError as exc:
        raise ConfigError(str(exc)) from None
    path = generate(spec, args.out)
    print(f"wrote {spec.versions} versions to {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": _run, "validate": _validate, "gen": _gen}
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, SpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
