import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import algorithm1_reference, traditional_additional, traditional_total

from tcp_rank.data import CoverageMatrix
from tcp_rank.errors import DimensionError, RangeError
from tcp_rank.prioritization import (
    PrioritizationResult,
    Strategy,
    combine_probability,
    fault_based_cover,
    prioritize,
    prioritize_additional,
    prioritize_random,
    prioritize_total,
)


@st.composite
def matrices(draw, max_n=10, max_m=12, binary=False):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    if binary:
        cell = st.sampled_from([0.0, 1.0])
    else:
        # coarse values so exact ties show up often
        cell = st.sampled_from([0.0, 0.0, 0.25, 0.5, 1.0])
    return np.array(draw(st.lists(st.lists(cell, min_size=m, max_size=m), min_size=n, max_size=n)))


def test_combine_probability():
    pdp = np.array([0.0, 0.5, 0.9])
    assert combine_probability(pdp, 1.0).tolist() == [1.0, 1.0, 1.0]
    assert combine_probability(pdp, 0.0).tolist() == pdp.tolist()
    assert combine_probability([0.5], 0.3)[0] == pytest.approx(0.65)
    with pytest.raises(RangeError):
        combine_probability(pdp, 1.2)
    with pytest.raises(RangeError):
        combine_probability([1.5], 0.3)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0, 1))
def test_combined_probability_bounded_below_by_p0(pdp, p0):
    out = combine_probability(pdp, p0)
    assert np.all(out >= p0 - 1e-15) and np.all(out <= 1.0 + 1e-15)


def test_fault_based_cover():
    assert fault_based_cover([1, 0, 1], [0.5, 0.9, 0.2]) == pytest.approx(0.7)
    assert fault_based_cover([0.5, 1, 0.25], [1, 1, 1]) == 1.75
    assert fault_based_cover([0, 0, 0], [0.5, 0.9, 0.2]) == 0.0
    with pytest.raises(DimensionError):
        fault_based_cover([1, 0], [0.5, 0.5, 0.5])


def test_random_strategy():
    assert prioritize_random(1, 7).order == (0,)
    a = prioritize_random(50, 123)
    assert a.order == prioritize_random(50, 123).order
    assert a.order != prioritize_random(50, 124).order
    assert sorted(a.order) == list(range(50))


def test_total_examples():
    cover = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 1]], dtype=float)
    assert prioritize_total(cover).order == (2, 0, 1)
    same = np.tile([0.5, 1.0, 0.0], (5, 1))
    assert prioritize_total(same).order == (0, 1, 2, 3, 4)


def test_total_matches_oracle_on_random_6x8():
    rng = np.random.default_rng(5)
    for _ in range(200):
        cover = np.where(rng.random((6, 8)) < 0.5, rng.random((6, 8)), 0.0)
        probs = rng.random(8)
        expected = sorted(range(6), key=lambda i: (-sum(cover[i, j] * probs[j] for j in range(8) if cover[i, j]), i))
        assert list(prioritize_total(cover, probs).order) == expected


def test_additional_hand_traced():
    # t0={u0,u1}, t1={u2}, t2={u1,u2,u3}
    cover = np.array([[1, 1, 0, 0], [0, 0, 1, 0], [0, 1, 1, 1]], dtype=float)
    assert prioritize_additional(cover).order == (2, 0, 1)
    assert algorithm1_reference(cover.tolist(), [1.0] * 4) == [2, 0, 1]


def test_additional_dominating_test_first():
    cover = np.array([[1, 0, 0], [1, 1, 1], [0, 1, 0]], dtype=float)
    assert prioritize_additional(cover).order[0] == 1


def test_additional_tie_prefers_larger_total_then_earlier():
    # after t0, t1 and t2 both add 1 unit; t2 has the larger total
    cover = np.array([[1, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 1], [0, 0, 0, 0]], dtype=float)
    assert prioritize_additional(cover).order == (0, 2, 1, 3)
    # complete tie: suite order
    assert prioritize_additional(np.ones((4, 3))).order == (0, 1, 2, 3)


def test_additional_exhausted_falls_back_to_total():
    cover = np.array(
        [[1, 1, 1, 1], [1, 1, 0, 0], [1, 1, 1, 0], [0, 0, 0, 1]], dtype=float
    )
    # after t0 nothing is left: descending total (t2, t1, t3)
    assert prioritize_additional(cover).order == (0, 2, 1, 3)
    # the reset variant restarts greedy coverage: t2, then t3 covers the remaining unit
    assert prioritize_additional(cover, reset_on_exhaustion=True).order == (0, 2, 3, 1)


def test_additional_matches_algorithm1_reference():
    rng = np.random.default_rng(17)
    for _ in range(300):
        cover = np.where(rng.random((7, 10)) < 0.4, rng.random((7, 10)), 0.0)
        probs = rng.random(10)
        got = prioritize_additional(cover, probs).order
        assert list(got) == algorithm1_reference(cover.tolist(), probs.tolist())


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_degenerate_weights_match_traditional(cover):
    ones = np.ones(cover.shape[1])
    assert list(prioritize_total(cover, ones).order) == traditional_total(cover.tolist())
    assert list(prioritize_additional(cover, ones).order) == traditional_additional(cover.tolist())


@settings(max_examples=100, deadline=None)
@given(matrices(), st.integers(0, 6), st.data())
def test_total_order_invariant_to_scaling(cover, k, data):
    probs = np.array(data.draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
                                        min_size=cover.shape[1], max_size=cover.shape[1])))
    c = 2.0**-k  # power of two: scaling is exact in floating point
    assert prioritize_total(cover, probs).order == prioritize_total(cover, c * probs).order


@settings(max_examples=100, deadline=None)
@given(matrices(max_n=15, max_m=15), st.data())
def test_results_are_permutations(cover, data):
    probs = np.array(data.draw(st.lists(st.floats(0, 1), min_size=cover.shape[1], max_size=cover.shape[1])))
    n = cover.shape[0]
    for result in (
        prioritize_total(cover, probs),
        prioritize_additional(cover, probs),
        prioritize_additional(cover, probs, reset_on_exhaustion=True),
        prioritize_random(n, data.draw(st.integers(0, 2**32 - 1))),
    ):
        assert sorted(result.order) == list(range(n))


@settings(max_examples=100, deadline=None)
@given(matrices(binary=True))
def test_additional_first_pick_has_max_row_sum(cover):
    first = prioritize_additional(cover).order[0]
    assert cover[first].sum() == cover.sum(axis=1).max()


@settings(max_examples=100, deadline=None)
@given(matrices(), st.randoms(use_true_random=False))
def test_tie_resolution_independent_of_scan_order(cover, rnd):
    # greedy with candidates scanned in random order and ties resolved by
    # (gain, total, -index) must give the same sequence
    n, m = cover.shape
    total = cover.sum(axis=1)
    residual = np.ones(m)
    left = list(range(n))
    expected = []
    while left:
        rnd.shuffle(left)
        best = max(left, key=lambda i: (round(float(cover[i] @ residual), 9), round(float(total[i]), 9), -i))
        expected.append(best)
        left.remove(best)
        residual = np.maximum(residual - cover[best], 0.0)
    assert list(prioritize_additional(cover).order) == expected


def test_dense_all_ones_keeps_suite_order():
    cover = CoverageMatrix.from_dense(np.ones((6, 9)))
    assert prioritize_total(cover).order == tuple(range(6))
    assert prioritize_additional(cover).order == tuple(range(6))


def test_dispatch_and_p0_degeneracy():
    rng = np.random.default_rng(2)
    cover = np.where(rng.random((12, 20)) < 0.3, rng.random((12, 20)), 0.0)
    pdp = rng.random(20)
    for mod, base in ((Strategy.MOD_TOTAL, Strategy.TOTAL), (Strategy.MOD_ADDITIONAL, Strategy.ADDITIONAL)):
        assert prioritize(mod, cover, pdp, 1.0).order == prioritize(base, cover).order
        r = prioritize(mod, cover, pdp, 0.3)
        assert r.strategy is mod and r.p0 == 0.3
    assert prioritize("random", cover, seed=4).order == prioritize_random(12, 4).order
    with pytest.raises(ValueError):
        prioritize("mod_total", cover)


def test_result_validates_permutation():
    with pytest.raises(ValueError):
        PrioritizationResult((0, 0), Strategy.TOTAL)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        prioritize_total(np.ones((2, 3)), np.ones(4))


def test_random_input_sizes_fuzz():
    r = random.Random(0)
    for _ in range(50):
        n, m = r.randint(1, 20), r.randint(1, 30)
        cover = np.array([[r.choice([0, 0, r.random()]) for _ in range(m)] for _ in range(n)])
        assert list(prioritize_additional(cover).order) == traditional_additional(cover.tolist())
