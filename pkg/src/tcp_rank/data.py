"""Dataset model and CSV ingestion for multi-version projects.

A project directory holds ``manifest.json`` plus one subdirectory per
version::

    manifest.json   {"project": "Lang", "versions": [1, 2, {"id": 3, "dir": "v3"}]}
    <version>/units.csv      unit_id,class_id
    <version>/tests.csv      test_id
    <version>/coverage.csv   test_id,unit_id,fraction
    <version>/outcomes.csv   test_id,failed
    <version>/features.csv   class_id,f1..f104,is_buggy

A version entry may be a bare integer (directory named after the id) or an
object with ``id`` and optional ``dir``, ``n_tests`` and ``n_units``; the
counts, when given, are checked against the loaded tables.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import ConsistencyError, RangeError, SchemaError

N_FEATURES = 104
MANIFEST = "manifest.json"
FEATURE_COLUMNS = [f"f{k}" for k in range(1, N_FEATURES + 1)]


@dataclass(frozen=True)
class CodeUnit:
    unit_id: str
    class_id: str | None = None


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting this

    test_id: str
    suite_index: int


@dataclass(frozen=True)
class ClassFeatureVector:
    class_id: str
    features: np.ndarray
    is_buggy: bool

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        if feats.shape != (N_FEATURES,):
            raise SchemaError(f"class {self.class_id!r}: expected {N_FEATURES} features, got {feats.size}")
        if not np.all(np.isfinite(feats)):
            raise RangeError(f"class {self.class_id!r}: non-finite feature value")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "is_buggy", bool(self.is_buggy))


class CoverageMatrix:
    """Sparse n x m matrix of per-test, per-unit coverage fractions in [0, 1]."""

    def __init__(self, rows, cols, values, shape):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        n, m = shape
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= m:
                raise ConsistencyError("coverage index outside matrix shape")
            bad = ~((values >= 0.0) & (values <= 1.0))
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise RangeError(f"coverage entry ({rows[k]}, {cols[k]}) = {values[k]!r} outside [0, 1]")
            keys = rows * m + cols
            if np.unique(keys).size != keys.size:
                raise ConsistencyError("duplicate (test, unit) coverage entry")
        keep = values != 0.0
        mat = sparse.csr_array((values[keep], (rows[keep], cols[keep])), shape=(n, m))
        mat.sort_indices()
        self._csr = mat
        self.shape = (int(n), int(m))

    @classmethod
    def from_dense(cls, dense) -> "CoverageMatrix":
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2:
            raise ValueError("coverage must be two-dimensional")
        r, c = np.nonzero(dense)
        return cls(r, c, dense[r, c], dense.shape)

    @property
    def n(self) -> int:
        return self.shape[0]

    @property
    def m(self) -> int:
        return self.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def to_csr(self) -> sparse.csr_array:
        return self._csr.copy()

    def row(self, i: int) -> np.ndarray:
        out = np.zeros(self.m)
        lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
        out[self._csr.indices[lo:hi]] = self._csr.data[lo:hi]
        return out

    def triplets(self):
        """Yield ``(row, col, value)`` for stored entries in row-major order."""
        coo = self._csr.tocoo()
        for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            yield r, c, v

    def __eq__(self, other):
        if not isinstance(other, CoverageMatrix) or self.shape != other.shape:
            return NotImplemented if not isinstance(other, CoverageMatrix) else False
        a, b = self._csr, other._csr
        return (
            np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    def __repr__(self):
        return f"CoverageMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True)
class TestOutcomes:
    __test__ = False

    failed: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class VersionRecord:
    version_id: int
    units: tuple
    tests: tuple
    coverage: CoverageMatrix
    outcomes: TestOutcomes
    class_features: tuple

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "tests", tuple(self.tests))
        object.__setattr__(self, "class_features", tuple(self.class_features))
        validate_version(self)

    @property
    def n_tests(self) -> int:
        return len(self.tests)

    @property
    def n_units(self) -> int:
        return len(self.units)

    def failed_indices(self) -> frozenset:
        index = {t.test_id: t.suite_index for t in self.tests}
        return frozenset(index[t] for t in self.outcomes.failed)

    def buggy_classes(self) -> list:
        return [c.class_id for c in self.class_features if c.is_buggy]

    def feature_matrix(self) -> np.ndarray:
        if not self.class_features:
            return np.zeros((0, N_FEATURES))
        return np.vstack([c.features for c in self.class_features])

    def labels(self) -> np.ndarray:
        return np.array([c.is_buggy for c in self.class_features], dtype=float)


def validate_version(v: VersionRecord, path=None) -> None:
    """Check the cross-table invariants of one version; raise on the first violation."""
    unit_ids = [u.unit_id for u in v.units]
    if len(set(unit_ids)) != len(unit_ids):
        raise ConsistencyError("duplicate unit_id", path)
    test_ids = [t.test_id for t in v.tests]
    if len(set(test_ids)) != len(test_ids):
        raise ConsistencyError("duplicate test_id", path)
    if sorted(t.suite_index for t in v.tests) != list(range(len(v.tests))):
        raise ConsistencyError("suite_index values must be 0..n-1", path)
    class_ids = [c.class_id for c in v.class_features]
    if len(set(class_ids)) != len(class_ids):
        raise ConsistencyError("duplicate class_id in features", path)
    known = set(class_ids)
    for u in v.units:
        if u.class_id is not None and u.class_id not in known:
            raise ConsistencyError(f"unit {u.unit_id!r} refers to unknown class {u.class_id!r}", path)
    if v.coverage.shape != (len(v.tests), len(v.units)):
        raise ConsistencyError(
            f"coverage shape {v.coverage.shape} != ({len(v.tests)}, {len(v.units)})", path
        )
    unknown = set(v.outcomes.failed) - set(test_ids)
    if unknown:
        raise ConsistencyError(f"failed test(s) not in test table: {sorted(unknown)[:5]}", path)


def unit_class_scores(version: VersionRecord, class_scores: Mapping[str, float]) -> np.ndarray:
    """Extrapolate class fault-proneness scores to the version's units.

    Units without a class, or whose class has no score, get 0.
    """
    return np.array(
        [float(class_scores.get(u.class_id, 0.0)) if u.class_id is not None else 0.0 for u in version.units],
        dtype=float,
    )


# ---------------------------------------------------------------- CSV reading


def _read_csv(path: Path, required: Sequence[str]):
    if not path.is_file():
        raise SchemaError("missing file", path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise SchemaError("missing header row", path)
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"missing column(s) {missing[:5]}", path)
        # record numbers are 1-based data rows (header excluded)
        return [(k, row) for k, row in enumerate(reader, start=1)]


def _parse_float(text, path, record, column):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"column {column!r}: not a number: {text!r}", path, record) from None


def _parse_flag(text, path, record, column):
    if text is None or text.strip() not in ("0", "1"):
        raise SchemaError(f"column {column!r}: expected 0 or 1, got {text!r}", path, record)
    return text.strip() == "1"


def read_version(vdir: Path, version_id: int) -> VersionRecord:
    vdir = Path(vdir)

    p = vdir / "features.csv"
    class_features = []
    for rec, row in _read_csv(p, ["class_id", *FEATURE_COLUMNS, "is_buggy"]):
        feats = [_parse_float(row[c], p, rec, c) for c in FEATURE_COLUMNS]
        if not all(math.isfinite(x) for x in feats):
            raise RangeError("non-finite feature value", p, rec)
        class_features.append(
            ClassFeatureVector(row["class_id"], np.array(feats), _parse_flag(row["is_buggy"], p, rec, "is_buggy"))
        )
    known_classes = {c.class_id for c in class_features}

    p = vdir / "units.csv"
    units = []
    for rec, row in _read_csv(p, ["unit_id", "class_id"]):
        cid = row["class_id"] or None
        if cid is not None and cid not in known_classes:
            raise ConsistencyError(f"unknown class_id {cid!r}", p, rec)
        units.append(CodeUnit(row["unit_id"], cid))
    unit_index = {u.unit_id: j for j, u in enumerate(units)}
    if len(unit_index) != len(units):
        raise ConsistencyError("duplicate unit_id", p)

    p = vdir / "tests.csv"
    tests = [TestCase(row["test_id"], k - 1) for k, row in _read_csv(p, ["test_id"])]
    test_index = {t.test_id: t.suite_index for t in tests}
    if len(test_index) != len(tests):
        raise ConsistencyError("duplicate test_id", p)

    p = vdir / "coverage.csv"
    rows, cols, vals = [], [], []
    seen = set()
    for rec, row in _read_csv(p, ["test_id", "unit_id", "fraction"]):
        tid, uid = row["test_id"], row["unit_id"]
        if tid not in test_index:
            raise ConsistencyError(f"unknown test_id {tid!r}", p, rec)
        if uid not in unit_index:
            raise ConsistencyError(f"unknown unit_id {uid!r}", p, rec)
        frac = _parse_float(row["fraction"], p, rec, "fraction")
        if not 0.0 <= frac <= 1.0:
            raise RangeError(f"coverage ({tid}, {uid}) = {row['fraction']} outside [0, 1]", p, rec)
        key = (tid, uid)
        if key in seen:
            raise ConsistencyError(f"duplicate coverage entry ({tid}, {uid})", p, rec)
        seen.add(key)
        rows.append(test_index[tid])
        cols.append(unit_index[uid])
        vals.append(frac)
    coverage = CoverageMatrix(rows, cols, vals, (len(tests), len(units)))

    p = vdir / "outcomes.csv"
    failed = set()
    for rec, row in _read_csv(p, ["test_id", "failed"]):
        tid = row["test_id"]
        if tid not in test_index:
            raise ConsistencyError(f"unknown test_id {tid!r}", p, rec)
        if _parse_flag(row["failed"], p, rec, "failed"):
            failed.add(tid)

    return VersionRecord(
        version_id=int(version_id),
        units=units,
        tests=tests,
        coverage=coverage,
        outcomes=TestOutcomes(frozenset(failed)),
        class_features=class_features,
    )


@dataclass(frozen=True)
class VersionEntry:
    version_id: int
    dirname: str
    n_tests: int | None = None
    n_units: int | None = None


def read_manifest(project_dir) -> tuple[str, list[VersionEntry]]:
    project_dir = Path(project_dir)
    p = project_dir / MANIFEST
    if not p.is_file():
        raise SchemaError("missing file", p)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", p) from None
    if not isinstance(raw, dict) or not isinstance(raw.get("versions"), list):
        raise SchemaError("manifest must be an object with a 'versions' list", p)
    entries = []
    for k, item in enumerate(raw["versions"], start=1):
        if isinstance(item, int) and not isinstance(item, bool):
            entries.append(VersionEntry(item, str(item)))
        elif isinstance(item, dict) and isinstance(item.get("id"), int):
            entries.append(
                VersionEntry(item["id"], str(item.get("dir", item["id"])), item.get("n_tests"), item.get("n_units"))
            )
        else:
            raise SchemaError(f"bad version entry {item!r}", p, k)
    ids = [e.version_id for e in entries]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise ConsistencyError("version ids must be strictly increasing", p)
    return str(raw.get("project", project_dir.name)), entries


class ProjectSource:
    """Lazy, per-version access to one project directory.

    ``tracer``, if given, is called with each version id right before that
    version's files are opened. The experiment harness relies on this to
    prove that evaluation never peeks at future versions.
    """

    def __init__(self, project_dir, tracer: Callable[[int], None] | None = None):
        self.root = Path(project_dir)
        self.project, self.entries = read_manifest(self.root)
        self._by_id = {e.version_id: e for e in self.entries}
        self._cache: dict[int, VersionRecord] = {}
        self.tracer = tracer

    @property
    def version_ids(self) -> list[int]:
        return [e.version_id for e in self.entries]

    def load(self, version_id: int) -> VersionRecord:
        if version_id in self._cache:
            return self._cache[version_id]
        entry = self._by_id[version_id]
        if self.tracer is not None:
            self.tracer(version_id)
        vdir = self.root / entry.dirname
        if not vdir.is_dir():
            raise SchemaError("missing version directory", vdir)
        record = read_version(vdir, version_id)
        if entry.n_tests is not None and entry.n_tests != record.n_tests:
            raise ConsistencyError(f"manifest says {entry.n_tests} tests, found {record.n_tests}", vdir)
        if entry.n_units is not None and entry.n_units != record.n_units:
            raise ConsistencyError(f"manifest says {entry.n_units} units, found {record.n_units}", vdir)
        self._cache[version_id] = record
        return record


def load_project(path) -> list[VersionRecord]:
    """Load and validate every version of a project, ordered by version id."""
    src = ProjectSource(path)
    return [src.load(v) for v in src.version_ids]


def find_projects(path) -> list[Path]:
    """Return project directories under ``path``: itself if it has a manifest,
    else every immediate subdirectory that does (sorted by name)."""
    path = Path(path)
    if (path / MANIFEST).is_file():
        return [path]
    projects = sorted(p for p in path.iterdir() if p.is_dir() and (p / MANIFEST).is_file()) if path.is_dir() else []
    if not projects:
        raise SchemaError(f"no {MANIFEST} found", path)
    return projects


# ---------------------------------------------------------------- CSV writing


def write_version(v: VersionRecord, vdir) -> None:
    vdir = Path(vdir)
    vdir.mkdir(parents=True, exist_ok=True)
    with open(vdir / "units.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit_id", "class_id"])
        w.writerows([u.unit_id, u.class_id or ""] for u in v.units)
    ordered = sorted(v.tests, key=lambda t: t.suite_index)
    with open(vdir / "tests.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_id"])
        w.writerows([t.test_id] for t in ordered)
    with open(vdir / "coverage.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_id", "unit_id", "fraction"])
        for r, c, val in v.coverage.triplets():
            w.writerow([ordered[r].test_id, v.units[c].unit_id, repr(val)])
    with open(vdir / "outcomes.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test_id", "failed"])
        w.writerows([t.test_id, int(t.test_id in v.outcomes.failed)] for t in ordered)
    with open(vdir / "features.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class_id", *FEATURE_COLUMNS, "is_buggy"])
        for c in v.class_features:
            w.writerow([c.class_id, *(repr(float(x)) for x in c.features), int(c.is_buggy)])


def save_project(versions: Iterable[VersionRecord], path, project: str | None = None) -> Path:
    """Write versions in the on-disk layout read by :func:`load_project`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    versions = list(versions)
    entries = []
    for v in versions:
        dirname = f"v{v.version_id:03d}"
        write_version(v, path / dirname)
        entries.append({"id": v.version_id, "dir": dirname, "n_tests": v.n_tests, "n_units": v.n_units})
    manifest = {"project": project or path.name, "versions": entries}
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
