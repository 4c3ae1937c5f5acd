"""Coverage-based test prioritization, plain and fault-proneness weighted.

Every coverage strategy works on per-unit weights. The traditional strategies
use weight 1 everywhere; the modified ones use

    prob_j = p0 + (1 - p0) * pdp_j

where ``pdp_j`` is the defect predictor's score for unit j. ``p0 = 1`` gives
back the traditional strategies exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .data import CoverageMatrix
from .errors import DimensionError, RangeError

#: Absolute tolerance used when comparing additional-coverage scores.
TIE_TOL = 1e-12


class Strategy(str, enum.Enum):
    RANDOM = "random"
    TOTAL = "total"
    ADDITIONAL = "additional"
    MOD_TOTAL = "mod_total"
    MOD_ADDITIONAL = "mod_additional"

    @property
    def is_modified(self) -> bool:
        return self in (Strategy.MOD_TOTAL, Strategy.MOD_ADDITIONAL)

    @property
    def traditional(self) -> "Strategy":
        """The unweighted counterpart of a modified strategy (identity otherwise)."""
        return {Strategy.MOD_TOTAL: Strategy.TOTAL, Strategy.MOD_ADDITIONAL: Strategy.ADDITIONAL}.get(self, self)


@dataclass(frozen=True)
class PrioritizationResult:
    order: tuple
    strategy: Strategy
    p0: float | None = None
    seed: int | None = None

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError("order is not a permutation")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "strategy", Strategy(self.strategy))


def _as_csr(cover) -> sparse.csr_array:
    if isinstance(cover, CoverageMatrix):
        return cover.to_csr()
    if sparse.issparse(cover):
        return sparse.csr_array(cover)
    return sparse.csr_array(np.asarray(cover, dtype=float))


def _weights(probs, m: int) -> np.ndarray:
    if probs is None:
        return np.ones(m)
    w = np.asarray(probs, dtype=float)
    if w.shape != (m,):
        raise DimensionError(f"expected {m} unit weights, got shape {w.shape}")
    return w


def combine_probability(pdp, p0: float) -> np.ndarray:
    """Blend predicted fault-proneness with a constant floor ``p0``."""
    pdp = np.asarray(pdp, dtype=float)
    if not 0.0 <= p0 <= 1.0:
        raise RangeError(f"p0 = {p0!r} outside [0, 1]")
    if pdp.size and not (np.all(pdp >= 0.0) and np.all(pdp <= 1.0)):
        raise RangeError("fault-proneness scores must lie in [0, 1]")
    return p0 + (1.0 - p0) * pdp


def fault_based_cover(cover_row, probs) -> float:
    """Coverage of one test weighted by per-unit fault probability."""
    row = np.asarray(cover_row, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if row.shape != probs.shape:
        raise DimensionError(f"row length {row.shape} != probs length {probs.shape}")
    return float(row @ probs)


def prioritize_random(n: int, seed: int) -> PrioritizationResult:
    if n < 1:
        raise ValueError("need at least one test")
    order = np.random.default_rng(seed).permutation(n)
    return PrioritizationResult(order, Strategy.RANDOM, seed=seed)


def prioritize_total(cover, probs=None, *, strategy=None, p0=None) -> PrioritizationResult:
    """Sort tests by weighted total coverage, descending; ties keep suite order."""
    if isinstance(cover, CoverageMatrix) or sparse.issparse(cover):
        C = _as_csr(cover)
        n, m = C.shape
        if n < 1:
            raise ValueError("need at least one test")
        total = C @ _weights(probs, m)
    else:
        # dense input: a CSR copy would cost more than the sort; the row-wise
        # reduction (unlike BLAS gemv) gives identical rows identical totals
        C = np.asarray(cover, dtype=float)
        if C.ndim != 2 or C.shape[0] < 1:
            raise ValueError("need a non-empty 2-D coverage matrix")
        n, m = C.shape
        total = (C * _weights(probs, m)).sum(axis=1)
    order = np.lexsort((np.arange(n), -total))
    if strategy is None:
        strategy = Strategy.TOTAL if probs is None else Strategy.MOD_TOTAL
    return PrioritizationResult(order, strategy, p0=p0)


def prioritize_additional(
    cover, probs=None, *, reset_on_exhaustion: bool = False, strategy=None, p0=None
) -> PrioritizationResult:
    """Greedy additional-coverage ordering over residual unit weights.

    At each step the unselected test with the largest ``residual @ cover[i]``
    is taken; ties go to the larger weighted total coverage, then to the
    earlier suite position. The chosen test's coverage is then subtracted from
    the residual weights, clipped at zero. Once nothing is left to gain the
    remaining tests come out by total coverage. With ``reset_on_exhaustion``
    the residual is instead restored to the initial weights whenever no
    unselected test adds anything but some still cover weighted code.
    """
    C = _as_csr(cover)
    n, m = C.shape
    if n < 1:
        raise ValueError("need at least one test")
    weights = _weights(probs, m)
    total = C @ weights
    residual = weights.copy()
    available = np.ones(n, dtype=bool)
    blocked = np.zeros(n)  # -inf once selected
    indptr, indices, data = C.indptr, C.indices, C.data
    order = np.empty(n, dtype=np.int64)
    for step in range(n):
        gain = C @ residual
        if reset_on_exhaustion and gain[available].max() <= TIE_TOL and total[available].max() > TIE_TOL:
            residual = weights.copy()
            gain = C @ residual
        gain += blocked
        cand = np.flatnonzero(gain >= gain.max() - TIE_TOL)
        if cand.size > 1:
            t = total[cand]
            cand = cand[t >= t.max() - TIE_TOL]
        k = int(cand[0])
        order[step] = k
        available[k] = False
        blocked[k] = -np.inf
        lo, hi = indptr[k], indptr[k + 1]
        cols = indices[lo:hi]
        residual[cols] = np.maximum(residual[cols] - data[lo:hi], 0.0)
    if strategy is None:
        strategy = Strategy.ADDITIONAL if probs is None else Strategy.MOD_ADDITIONAL
    return PrioritizationResult(order, strategy, p0=p0)


def prioritize(strategy, cover, pdp=None, p0: float | None = None, seed: int | None = None) -> PrioritizationResult:
    """Dispatch one named strategy.

    Modified strategies need ``pdp`` (per-unit fault-proneness) and ``p0``;
    the random strategy needs ``seed``; the others ignore all three.
    """
    strategy = Strategy(strategy)
    if strategy is Strategy.RANDOM:
        n = cover.n if isinstance(cover, CoverageMatrix) else np.shape(cover)[0]
        return prioritize_random(n, seed)
    if strategy.is_modified:
        if pdp is None or p0 is None:
            raise ValueError(f"{strategy.value} needs fault-proneness scores and p0")
        probs = combine_probability(pdp, p0)
    else:
        probs, p0 = None, None
    if strategy in (Strategy.TOTAL, Strategy.MOD_TOTAL):
        return prioritize_total(cover, probs, strategy=strategy, p0=p0)
    return prioritize_additional(cover, probs, strategy=strategy, p0=p0)
