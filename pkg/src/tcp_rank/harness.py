"""Rolling train/evaluate experiment over project versions.

For every evaluated version ``i`` a fresh defect model is trained on versions
``< i`` only; version ``i`` itself is opened after training. Its classes are
scored, the scores are extrapolated to units, and each requested strategy
ranks the version's tests. APFD against the version's failing tests is
recorded per (version, strategy, p0).
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import metrics
from .data import ProjectSource, find_projects, unit_class_scores
from .defect import (
    TrainConfig,
    build_training_set,
    class_scores,
    predicted_bug_diagnostic,
    train,
)
from .errors import ConfigError, NoFailuresError, NoPositivesError, TooFewSamplesError
from .prioritization import Strategy, prioritize

log = logging.getLogger(__name__)

APFD_HEADER = ["project", "version_id", "strategy", "p0", "apfd", "runtime_ms"]
SWEEP_HEADER = ["project", "strategy", "p0", "mean_apfd"]
SKIPS_HEADER = ["project", "version_id", "reason"]

SKIP_OUTSIDE_WINDOW = "outside evaluation window"
SKIP_HISTORY = "insufficient history"
SKIP_NO_POSITIVES = "no buggy classes in training window"
SKIP_NO_FAILURES = "no failing tests"

_STRATEGY_ORDER = [s.value for s in Strategy]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    strategies: tuple = ("total", "additional", "mod_total", "mod_additional")
    p0: float = 0.3
    p0_sweep: tuple = ()
    min_training_versions: int = 1  # prior versions with >= 1 buggy class
    seed: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str | None = None
    eval_window: int | None = None
    reuse_model: bool = False
    workers: int = 1
    record_timings: bool = False

    def __post_init__(self):
        try:
            strategies = tuple(Strategy(s) for s in self.strategies)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not strategies:
            raise ConfigError("no strategies requested")
        # a modified strategy is always compared against its baseline
        wanted = set(strategies) | {s.traditional for s in strategies}
        object.__setattr__(self, "strategies", tuple(s.value for s in Strategy if s in wanted))
        for p in (self.p0, *self.p0_sweep):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"p0 value {p!r} outside [0, 1]")
        object.__setattr__(self, "p0_sweep", tuple(float(p) for p in self.p0_sweep))
        if self.min_training_versions < 0:
            raise ConfigError("min_training_versions must be >= 0")
        if self.eval_window is not None and self.eval_window < 1:
            raise ConfigError("eval_window must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def p0_values(self) -> list[float]:
        return sorted({float(self.p0), *self.p0_sweep})

    def echo(self) -> dict:
        """Config fields that affect results (no output path, no worker count)."""
        d = asdict(self)
        for k in ("output_dir", "workers"):
            d.pop(k)
        d["strategies"] = list(self.strategies)
        d["p0_sweep"] = list(self.p0_sweep)
        return d


@dataclass(frozen=True)
class ApfdRow:
    project: str
    version_id: int
    strategy: str
    p0: float | None
    apfd: float
    runtime_ms: float | None = None


@dataclass
class VersionOutcome:
    project: str
    version_id: int
    rows: list = field(default_factory=list)
    skip: str | None = None
    predicted_bug: bool | None = None
    unit_scores: np.ndarray | None = None
    train_ms: float | None = None


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    skips: list  # of (project, version_id, reason)
    summary: dict
    sweep: list  # of (project, strategy, p0, mean_apfd)
    unit_scores: dict = field(default_factory=dict)  # (project, version_id) -> P_dp per unit

    def apfd_table(self) -> dict:
        return {(r.project, r.version_id, r.strategy, r.p0): r.apfd for r in self.rows}


def version_seed(seed: int, version_id: int, salt: int = 0) -> int:
    """Per-version seed, independent of evaluation order and worker count."""
    return int(np.random.SeedSequence([int(seed), int(version_id), int(salt)]).generate_state(1)[0])


def _evaluation_plan(src: ProjectSource, cfg: ExperimentConfig):
    ids = src.version_ids
    candidates = ids[1:]
    if cfg.eval_window is not None:
        inside = set(candidates[-cfg.eval_window :])
    else:
        inside = set(candidates)
    return ids, candidates, inside


def _train_for(src, ids, upto, cfg):
    history = [src.load(v) for v in ids if v < upto]
    buggy_versions = sum(1 for v in history if any(c.is_buggy for c in v.class_features))
    if buggy_versions < cfg.min_training_versions:
        return None, SKIP_HISTORY
    try:
        ts = build_training_set(history, upto)
    except NoPositivesError:
        return None, SKIP_NO_POSITIVES
    tc = TrainConfig(**{**asdict(cfg.train_config), "seed": version_seed(cfg.seed, upto)})
    return train(ts, tc), None


def evaluate_version(
    src: ProjectSource, version_id: int, cfg: ExperimentConfig, model_cache: dict | None = None
) -> VersionOutcome:
    ids, _, inside = _evaluation_plan(src, cfg)
    out = VersionOutcome(src.project, version_id)
    if version_id not in inside:
        out.skip = SKIP_OUTSIDE_WINDOW
        return out

    t0 = time.perf_counter()
    if cfg.reuse_model:
        # one model, trained before the first version of the window
        anchor = min(inside)
        key = (src.project, anchor)
        if model_cache is not None and key in model_cache:
            model, reason = model_cache[key]
        else:
            model, reason = _train_for(src, ids, anchor, cfg)
            if model_cache is not None:
                model_cache[key] = (model, reason)
    else:
        model, reason = _train_for(src, ids, version_id, cfg)
    out.train_ms = (time.perf_counter() - t0) * 1e3
    if model is None:
        out.skip = reason
        return out

    # opened only now: training above never sees this version
    version = src.load(version_id)
    failed = version.failed_indices()
    scores = class_scores(model, version)
    if version.buggy_classes():
        out.predicted_bug = predicted_bug_diagnostic(model, version, scores)
    if not failed:
        out.skip = SKIP_NO_FAILURES
        return out
    pdp = unit_class_scores(version, scores)
    out.unit_scores = pdp

    for name in cfg.strategies:
        strategy = Strategy(name)
        p0s = cfg.p0_values if strategy.is_modified else [None]
        for p0 in p0s:
            t1 = time.perf_counter()
            result = prioritize(
                strategy, version.coverage, pdp=pdp, p0=p0, seed=version_seed(cfg.seed, version_id, 1)
            )
            ms = (time.perf_counter() - t1) * 1e3
            value = metrics.apfd(result.order, failed, version.n_tests)
            out.rows.append(
                ApfdRow(src.project, version_id, name, p0, value, ms if cfg.record_timings else None)
            )
    return out


def _evaluate_job(args):
    project_dir, version_id, cfg = args
    return evaluate_version(ProjectSource(project_dir), version_id, cfg, {})


def _comparison(pairs, label):
    entry = {"pooling": label, "n_pairs": len(pairs)}
    if not pairs:
        entry.update(mean_traditional=None, mean_modified=None, improvement=None,
                     wilcoxon={"statistic": None, "p_value": None, "n_pairs": 0})
        return entry
    trad = [p[1] for p in pairs]
    mod = [p[2] for p in pairs]
    entry["mean_traditional"] = float(np.mean(trad))
    entry["mean_modified"] = float(np.mean(mod))
    entry["improvement"] = metrics.improvement(trad, mod)
    wil = {"n_pairs": len(pairs)}
    try:
        stat, p = metrics.wilcoxon_signed_rank(trad, mod)
        wil.update(statistic=stat, p_value=p)
    except TooFewSamplesError as exc:
        wil.update(statistic=None, p_value=None, note=str(exc))
    entry["wilcoxon"] = wil
    return entry


def summarize(rows, cfg: ExperimentConfig, predicted, train_ms) -> tuple[dict, list]:
    projects = sorted({r.project for r in rows} | set(predicted))
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.strategy, r.p0), []).append(r)

    strategies = []
    for (s, p0), rs in sorted(groups.items(), key=lambda kv: (_STRATEGY_ORDER.index(kv[0][0]), kv[0][1] or 0.0)):
        per_project = {}
        for proj in projects:
            vals = [r.apfd for r in rs if r.project == proj]
            if vals:
                per_project[proj] = {"mean_apfd": float(np.mean(vals)), "n_versions": len(vals)}
        strategies.append({
            "strategy": s, "p0": p0, "mean_apfd": float(np.mean([r.apfd for r in rs])),
            "n_versions": len(rs), "per_project": per_project,
        })

    table = {(r.project, r.version_id, r.strategy, r.p0): r.apfd for r in rows}
    comparisons = []
    for s in cfg.strategies:
        strategy = Strategy(s)
        if not strategy.is_modified:
            continue
        base = strategy.traditional.value
        for p0 in cfg.p0_values:
            pairs = sorted(
                (proj, vid, table[(proj, vid, base, None)], a)
                for (proj, vid, st, p), a in table.items()
                if st == s and p == p0 and (proj, vid, base, None) in table
            )
            flat = [(f"{proj}:{vid}", t, m) for proj, vid, t, m in pairs]
            entry = {"traditional": base, "modified": s, "p0": p0, "pooled": _comparison(flat, "pooled")}
            entry["per_project"] = {
                proj: _comparison([(f"{vid}", t, m) for pj, vid, t, m in pairs if pj == proj], proj)
                for proj in projects
            }
            comparisons.append(entry)

    diagnostics = {"predicted_bugs": {}}
    for proj in projects:
        flags = predicted.get(proj, [])
        diagnostics["predicted_bugs"][proj] = {"predicted": int(sum(flags)), "evaluated": len(flags)}
    all_flags = [f for fl in predicted.values() for f in fl]
    diagnostics["predicted_bugs"]["overall"] = {"predicted": int(sum(all_flags)), "evaluated": len(all_flags)}
    if cfg.record_timings:
        diagnostics["runtimes_ms"] = {
            "training_total": float(sum(train_ms)),
            "prioritization_total": float(sum(r.runtime_ms for r in rows)),
        }

    sweep = []
    if cfg.p0_sweep:
        for proj in projects:
            for s in cfg.strategies:
                if not Strategy(s).is_modified:
                    continue
                for p0 in sorted(set(cfg.p0_sweep)):
                    vals = [r.apfd for r in groups.get((s, p0), []) if r.project == proj]
                    if vals:
                        sweep.append((proj, s, p0, float(np.mean(vals))))

    summary = {
        "config": cfg.echo(),
        "strategies": strategies,
        "comparisons": comparisons,
        "diagnostics": diagnostics,
    }
    return summary, sweep


def run_experiment(cfg: ExperimentConfig, tracer: Callable[[str, int], None] | None = None) -> ExperimentReport:
    """Run the rolling evaluation over every project under ``cfg.dataset_path``.

    ``tracer(project, version_id)`` is called whenever a version's files are
    opened (sequential mode only).
    """
    projects = find_projects(cfg.dataset_path)
    sources = []
    for pdir in projects:
        src = ProjectSource(pdir)
        if tracer is not None:
            src.tracer = (lambda name: (lambda vid: tracer(name, vid)))(src.project)
        if len(src.version_ids) < 2:
            raise ConfigError(f"project {src.project!r} has fewer than 2 versions")
        sources.append(src)

    outcomes: list[VersionOutcome] = []
    if cfg.workers == 1:
        cache: dict = {}
        for src in sources:
            for vid in src.version_ids[1:]:
                outcomes.append(evaluate_version(src, vid, cfg, cache))
    else:
        jobs = [(str(src.root), vid, cfg) for src in sources for vid in src.version_ids[1:]]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_evaluate_job, jobs))

    rows, skips, predicted, train_ms, unit_scores = [], [], {}, [], {}
    for o in sorted(outcomes, key=lambda o: (o.project, o.version_id)):
        rows.extend(o.rows)
        if o.skip is not None:
            skips.append((o.project, o.version_id, o.skip))
            log.info("%s v%s skipped: %s", o.project, o.version_id, o.skip)
        if o.predicted_bug is not None:
            predicted.setdefault(o.project, []).append(o.predicted_bug)
        if o.train_ms is not None:
            train_ms.append(o.train_ms)
        if o.unit_scores is not None:
            unit_scores[(o.project, o.version_id)] = o.unit_scores
    for src in sources:
        predicted.setdefault(src.project, [])

    summary, sweep = summarize(rows, cfg, predicted, train_ms)
    report = ExperimentReport(cfg.echo(), rows, skips, summary, sweep, unit_scores)
    if cfg.output_dir is not None:
        emit_report(report, cfg.output_dir)
    return report


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def emit_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write the four report files; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    p = out / "apfd_per_version.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(APFD_HEADER)
        for r in report.rows:
            w.writerow([r.project, r.version_id, r.strategy, _fmt(r.p0), _fmt(r.apfd), _fmt(r.runtime_ms)])
    paths.append(p)

    p = out / "summary.json"
    p.write_text(json.dumps(report.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(p)

    p = out / "p0_sweep.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for proj, s, p0, mean in report.sweep:
            w.writerow([proj, s, _fmt(p0), _fmt(mean)])
    paths.append(p)

    p = out / "skips.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SKIPS_HEADER)
        w.writerows(report.skips)
    paths.append(p)
    return paths
