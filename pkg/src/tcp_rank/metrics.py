"""APFD, mean relative improvement and the Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, NoFailuresError, TooFewSamplesError

#: Largest number of non-zero differences handled by the exact null distribution.
EXACT_MAX = 25


def apfd(order: Sequence[int], failed: Iterable[int], n: int | None = None) -> float:
    """Average Percentage of Faults Detected for a test ordering.

    Parameters
    ----------
    order : sequence of int
        Permutation of ``0..n-1``; ``order[k]`` is the test run at position k+1.
    failed : iterable of int
        Indices of the failing tests.
    n : int, optional
        Suite size, defaults to ``len(order)``.

    Returns
    -------
    float
        ``1 - sum(f_i) / (n * l) + 1 / (2 * n)`` where ``f_i`` are the 1-based
        positions of the ``l`` failing tests.
    """
    order = list(order)
    n = len(order) if n is None else int(n)
    if len(order) != n or sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of 0..n-1")
    failed = set(failed)
    if not failed:
        raise NoFailuresError("APFD is undefined without failing tests")
    if not failed <= set(range(n)):
        raise ValueError("failed indices outside the suite")
    position = {t: k + 1 for k, t in enumerate(order)}
    total = sum(position[t] for t in failed)
    return 1.0 - total / (n * len(failed)) + 1.0 / (2 * n)


@dataclass(frozen=True)
class PairedComparison:
    """APFD of a traditional and a modified strategy on the same versions."""

    per_version: tuple  # of (version_id, apfd_traditional, apfd_modified)

    def __post_init__(self):
        object.__setattr__(self, "per_version", tuple(tuple(p) for p in self.per_version))

    @property
    def traditional(self) -> np.ndarray:
        return np.array([p[1] for p in self.per_version], dtype=float)

    @property
    def modified(self) -> np.ndarray:
        return np.array([p[2] for p in self.per_version], dtype=float)


def _unpack(traditional, modified):
    if isinstance(traditional, PairedComparison):
        return traditional.traditional, traditional.modified
    if modified is None:
        raise TypeError("modified values required unless a PairedComparison is given")
    return np.asarray(traditional, dtype=float), np.asarray(modified, dtype=float)


def improvement(traditional, modified=None) -> float:
    """Mean over versions of ``(modified - traditional) / traditional``.

    Accepts either a :class:`PairedComparison` or two aligned sequences.
    """
    trad, mod = _unpack(traditional, modified)
    if trad.size == 0:
        raise EmptyInputError("no paired APFD values")
    if trad.shape != mod.shape:
        raise ValueError("paired sequences differ in length")
    if np.any(trad <= 0):
        raise ValueError("traditional APFD values must be positive")
    return float(np.mean((mod - trad) / trad))


def _signed_ranks(diffs):
    """Average ranks of |d| over the non-zero differences, returned doubled
    (so ties give integers) together with the sign mask."""
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    absd = np.abs(d)
    order = np.argsort(absd, kind="mergesort")
    ranks2 = np.empty(d.size, dtype=np.int64)
    sorted_abs = absd[order]
    i = 0
    while i < d.size:
        j = i
        while j + 1 < d.size and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        # mean of ranks i+1..j+1, doubled
        ranks2[order[i : j + 1]] = (i + 1) + (j + 1)
        i = j + 1
    return ranks2, d > 0


def _exact_tails(ranks2, w2):
    """P(W+ >= w) and P(W+ <= w) under the sign-flip null, with ranks doubled."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in ranks2.tolist():
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    denom = 2 ** len(ranks2)
    upper = int(sum(counts[w2:])) / denom
    lower = int(sum(counts[: w2 + 1])) / denom
    return upper, lower


def wilcoxon_signed_rank(traditional, modified=None, method: str = "auto") -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied ranks averaged. The statistic is the
    positive rank sum W+ of ``modified - traditional``. With ``method="auto"``
    the exact null distribution is used for up to ``EXACT_MAX`` non-zero pairs,
    the continuity-corrected normal approximation above that.

    Returns
    -------
    (statistic, p_value)
    """
    a, b = _unpack(traditional, modified)
    if a.shape != b.shape:
        raise ValueError("paired sequences differ in length")
    ranks2, positive = _signed_ranks(b - a)
    k = ranks2.size
    if k < 5:
        raise TooFewSamplesError(f"need at least 5 non-zero differences, got {k}")
    w2 = int(ranks2[positive].sum())
    stat = w2 / 2.0
    if method == "auto":
        method = "exact" if k <= EXACT_MAX else "normal"
    if method == "exact":
        upper, lower = _exact_tails(ranks2, w2)
        p = min(1.0, 2.0 * min(upper, lower))
    elif method == "normal":
        mean = k * (k + 1) / 4.0
        # tie correction on the variance; ranks2 groups identify ties
        _, tie_counts = np.unique(ranks2, return_counts=True)
        var = k * (k + 1) * (2 * k + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        dev = max(abs(stat - mean) - 0.5, 0.0)
        z = dev / math.sqrt(var) if var > 0 else 0.0
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return stat, p
