"""Seeded generator of synthetic multi-version projects.

Each class carries 104 features on very different scales. The first five
("signal") features, in standard units, drive a logistic bug model::

    P(buggy) = sigmoid(b + signal_strength * s),   s = sum(z[:5]) normalized to N(0, 1)

with the intercept ``b`` solved so that the marginal bug rate equals
``fault_rate`` whatever the signal strength.

Class features drift from version to version, so a classifier has to learn
the feature/bug relation rather than memorize class identities. A test fails
only when it covers some unit of a buggy class and a Bernoulli(failure_link)
draw succeeds, so every failure has a coverage path to a fault.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .data import (
    N_FEATURES,
    ClassFeatureVector,
    CodeUnit,
    CoverageMatrix,
    TestCase,
    TestOutcomes,
    VersionRecord,
    save_project,
)
from .errors import SpecError

N_SIGNAL = 5


@dataclass(frozen=True)
class GenSpec:
    versions: int = 10
    tests_per_version: int = 60
    units_per_version: int = 120
    classes: int = 30
    coverage_density: float = 0.05
    fault_rate: float = 0.05
    signal_strength: float = 3.0
    failure_link: float = 0.8
    seed: int = 0
    drift: float = 0.5  # std of per-version feature drift, standard units
    partial_coverage: float = 0.3  # share of covered entries with fraction < 1

    def __post_init__(self):
        for name in ("versions", "tests_per_version", "units_per_version", "classes"):
            if int(getattr(self, name)) < 1:
                raise SpecError(f"{name} must be >= 1")
        if not 0.0 < self.coverage_density <= 1.0:
            raise SpecError("coverage_density must be in (0, 1]")
        if not 0.0 < self.fault_rate < 1.0:
            raise SpecError("fault_rate must be in (0, 1)")
        if not self.signal_strength >= 0.0:
            raise SpecError("signal_strength must be >= 0")
        if not 0.0 <= self.failure_link <= 1.0:
            raise SpecError("failure_link must be in [0, 1]")
        if not 0.0 <= self.partial_coverage <= 1.0:
            raise SpecError("partial_coverage must be in [0, 1]")
        if self.drift < 0:
            raise SpecError("drift must be >= 0")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def bug_intercept(fault_rate: float, signal_strength: float) -> float:
    """Intercept b with E[sigmoid(b + k*s)] = fault_rate for s ~ N(0, 1)."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(80)
    weights = weights / weights.sum()

    def excess(b):
        return float(weights @ _sigmoid(b + signal_strength * nodes)) - fault_rate

    return float(optimize.brentq(excess, -60.0, 60.0, xtol=1e-12))


def _coverage(spec: GenSpec, rng: np.random.Generator) -> np.ndarray:
    n, m = spec.tests_per_version, spec.units_per_version
    if spec.coverage_density >= 1.0:
        return np.ones((n, m))
    covered = rng.random((n, m)) < spec.coverage_density
    partial = rng.random((n, m)) < spec.partial_coverage
    fraction = np.where(partial, rng.uniform(0.05, 1.0, size=(n, m)), 1.0)
    return np.where(covered, fraction, 0.0)


def generate_versions(spec: GenSpec) -> list[VersionRecord]:
    """Build the synthetic project in memory."""
    rng = np.random.default_rng(spec.seed)
    C, m = spec.classes, spec.units_per_version
    class_ids = [f"synth.pkg.Class{c:03d}" for c in range(C)]
    # per-feature scale spanning several orders of magnitude
    scale = np.exp(rng.normal(0.0, 2.0, size=N_FEATURES))
    offset = rng.normal(0.0, 5.0, size=N_FEATURES) * scale
    base = rng.normal(size=(C, N_FEATURES))
    unit_class = rng.permutation(np.arange(m) % C)
    units = [CodeUnit(f"{class_ids[c]}#m{j:04d}()", class_ids[c]) for j, c in enumerate(unit_class)]
    tests = [TestCase(f"synth.Test{i:04d}", i) for i in range(spec.tests_per_version)]
    intercept = bug_intercept(spec.fault_rate, spec.signal_strength)
    signal_sd = math.sqrt(N_SIGNAL * (1.0 + spec.drift**2))

    records = []
    z = base
    for vid in range(1, spec.versions + 1):
        z = base + spec.drift * rng.normal(size=(C, N_FEATURES))
        signal = z[:, :N_SIGNAL].sum(axis=1) / signal_sd
        p_bug = _sigmoid(intercept + spec.signal_strength * signal)
        buggy = rng.random(C) < p_bug
        raw = z * scale + offset
        features = [ClassFeatureVector(class_ids[c], raw[c], bool(buggy[c])) for c in range(C)]

        cover = _coverage(spec, rng)
        buggy_units = buggy[unit_class]
        hits_fault = (cover[:, buggy_units] > 0).any(axis=1)
        link = rng.random(spec.tests_per_version) < spec.failure_link
        failed = frozenset(tests[i].test_id for i in np.flatnonzero(hits_fault & link))

        records.append(
            VersionRecord(
                version_id=vid,
                units=units,
                tests=tests,
                coverage=CoverageMatrix.from_dense(cover),
                outcomes=TestOutcomes(failed),
                class_features=features,
            )
        )
    return records


def generate(spec: GenSpec, out_dir) -> Path:
    """Write a synthetic project to ``out_dir`` in the standard dataset layout."""
    return save_project(generate_versions(spec), out_dir, project=Path(out_dir).name)
