import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tcp_rank.data import FEATURE_COLUMNS  # noqa: E402
from tcp_rank.defect import TrainingSet  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _features_row(class_id, seed, buggy):
    vals = np.random.default_rng(seed).normal(size=len(FEATURE_COLUMNS))
    return [class_id, *(repr(float(v)) for v in vals), str(int(buggy))]


def write_fixture_version(vdir, *, coverage=None, outcomes=None, buggy=("p.A",)):
    """Three tests, four units in classes p.A / p.B (one unit unmapped)."""
    vdir = Path(vdir)
    vdir.mkdir(parents=True)
    (vdir / "units.csv").write_text("unit_id,class_id\np.A#a(),p.A\np.A#b(),p.A\np.B#c(),p.B\np.Free#d(),\n")
    (vdir / "tests.csv").write_text("test_id\nT0\nT1\nT2\n")
    if coverage is None:
        coverage = [("T0", "p.A#a()", "1.0"), ("T0", "p.A#b()", "0.5"), ("T1", "p.B#c()", "0.25"),
                    ("T2", "p.A#b()", "1.0"), ("T2", "p.Free#d()", "0.75")]
    (vdir / "coverage.csv").write_text(
        "test_id,unit_id,fraction\n" + "".join(f"{t},{u},{f}\n" for t, u, f in coverage)
    )
    if outcomes is None:
        outcomes = [("T0", 1), ("T1", 0), ("T2", 0)]
    (vdir / "outcomes.csv").write_text("test_id,failed\n" + "".join(f"{t},{f}\n" for t, f in outcomes))
    rows = [",".join(["class_id", *FEATURE_COLUMNS, "is_buggy"])]
    for k, cid in enumerate(("p.A", "p.B")):
        rows.append(",".join(_features_row(cid, k + 10 * len(str(vdir)), cid in buggy)))
    (vdir / "features.csv").write_text("\n".join(rows) + "\n")


@pytest.fixture
def fixture_project(tmp_path):
    root = tmp_path / "proj"
    root.mkdir()
    write_fixture_version(root / "1")
    write_fixture_version(root / "2", outcomes=[("T0", 0), ("T1", 1), ("T2", 1)], buggy=("p.B",))
    manifest = {
        "project": "proj",
        "versions": [{"id": 1, "n_tests": 3, "n_units": 4}, {"id": 2, "dir": "2", "n_tests": 3, "n_units": 4}],
    }
    (root / "manifest.json").write_text(json.dumps(manifest))
    return root


def separable_toy(seed=1, noise=1.0):
    """50 positives at +1 and 500 negatives at -1 on feature 0; other features noise."""
    rng = np.random.default_rng(seed)
    y = np.r_[np.ones(50), np.zeros(500)]
    X = noise * rng.normal(size=(550, 104))
    X[:, 0] = np.where(y == 1, 1.0, -1.0)
    return TrainingSet(X, y)


@pytest.fixture
def toy_set():
    return separable_toy()
