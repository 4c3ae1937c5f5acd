import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from oracles import apfd_bruteforce, wilcoxon_signflip

from tcp_rank.errors import EmptyInputError, NoFailuresError, TooFewSamplesError
from tcp_rank.metrics import EXACT_MAX, PairedComparison, apfd, improvement, wilcoxon_signed_rank


@st.composite
def suites(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    order = draw(st.permutations(list(range(n))))
    failed = draw(st.sets(st.integers(0, n - 1), min_size=1))
    return list(order), failed, n


def test_apfd_single_failure_first():
    assert apfd([1, 0], {1}, 2) == 0.75


def test_apfd_all_failed_is_half():
    rng = random.Random(3)
    for n in range(1, 30):
        order = list(range(n))
        rng.shuffle(order)
        assert apfd(order, set(range(n))) == pytest.approx(0.5, abs=1e-12)


def test_apfd_no_failures():
    with pytest.raises(NoFailuresError):
        apfd([0, 1, 2], set())


def test_apfd_rejects_non_permutation():
    with pytest.raises(ValueError):
        apfd([0, 0, 1], {0})


def test_apfd_matches_bruteforce_on_six_test_instances():
    rng = random.Random(11)
    for _ in range(300):
        order = list(range(6))
        rng.shuffle(order)
        failed = set(rng.sample(range(6), 2))
        assert apfd(order, failed) == apfd_bruteforce(order, failed)


@given(suites())
def test_apfd_open_unit_interval(case):
    order, failed, n = case
    assert 0.0 < apfd(order, failed, n) < 1.0 or n == 1


@given(suites(), st.randoms())
def test_apfd_ignores_passing_test_positions(case, rnd):
    order, failed, n = case
    slots = [k for k, t in enumerate(order) if t not in failed]
    passing = [order[k] for k in slots]
    rnd.shuffle(passing)
    shuffled = list(order)
    for k, t in zip(slots, passing):
        shuffled[k] = t
    assert apfd(shuffled, failed, n) == apfd(order, failed, n)


@given(suites())
def test_moving_failed_test_earlier_increases_apfd(case):
    order, failed, n = case
    for k in range(1, n):
        if order[k] in failed and order[k - 1] not in failed:
            moved = list(order)
            moved[k - 1], moved[k] = moved[k], moved[k - 1]
            assert apfd(moved, failed, n) > apfd(order, failed, n)


@given(suites())
def test_reversed_order_complements_apfd(case):
    # sum of reversed positions is l(n+1) - sum(f), so the two APFDs add to 1
    order, failed, n = case
    rev = order[::-1]
    assert apfd_bruteforce(rev, failed) == pytest.approx(1.0 - apfd_bruteforce(order, failed), abs=1e-12)
    assert apfd(rev, failed, n) == pytest.approx(1.0 - apfd(order, failed, n), abs=1e-12)


def test_improvement_examples():
    assert improvement([0.5], [0.55]) == pytest.approx(0.10)
    assert improvement([0.4, 0.7], [0.4, 0.7]) == 0.0
    pairs = PairedComparison([(1, 0.5, 0.55), (2, 0.5, 0.45)])
    assert improvement(pairs) == pytest.approx(0.0)


def test_improvement_can_be_negative():
    assert improvement([0.8], [0.6]) == pytest.approx(-0.25)


def test_improvement_empty():
    with pytest.raises(EmptyInputError):
        improvement([], [])


def test_wilcoxon_all_positive_six():
    w, p = wilcoxon_signed_rank([0.5] * 6, [0.6] * 6)
    assert w == 21.0
    # only the all-positive and all-negative sign patterns are this extreme
    assert p == 2 / 2**6 == 0.03125
    assert wilcoxon_signflip([0.5] * 6, [0.6] * 6) == (21.0, 0.03125)


def test_wilcoxon_antisymmetric_is_centered():
    diffs = [0.1, -0.1, 0.2, -0.2, 0.3, -0.3]
    w, p = wilcoxon_signed_rank([0.0] * 6, diffs)
    assert w == 6 * 7 / 4
    assert p == pytest.approx(1.0)


def test_wilcoxon_drops_zero_differences():
    with pytest.raises(TooFewSamplesError):
        wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [1, 2, 3, 4, 5.5, 6.5])


@pytest.mark.parametrize("k", range(5, 13))
def test_wilcoxon_exact_matches_signflip_enumeration(k):
    rng = np.random.default_rng(k)
    for _ in range(4):
        # coarse grid so ties and zero differences occur
        x = rng.integers(0, 6, size=k) / 10
        y = rng.integers(0, 6, size=k) / 10
        if np.count_nonzero(y - x) < 5:
            continue
        w, p = wilcoxon_signed_rank(x, y, method="exact")
        w_ref, p_ref = wilcoxon_signflip(x.tolist(), y.tolist())
        assert w == pytest.approx(w_ref)
        assert p == pytest.approx(p_ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=5, max_size=60))
def test_wilcoxon_p_in_unit_interval(diffs):
    assume(sum(1 for d in diffs if d != 0) >= 5)
    _, p = wilcoxon_signed_rank([0.0] * len(diffs), diffs)
    assert 0.0 <= p <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=EXACT_MAX, max_size=EXACT_MAX), st.lists(st.booleans(), min_size=EXACT_MAX, max_size=EXACT_MAX))
def test_wilcoxon_exact_and_normal_agree_at_crossover(mags, signs):
    diffs = [m if s else -m for m, s in zip(mags, signs)]
    _, p_exact = wilcoxon_signed_rank([0.0] * EXACT_MAX, diffs, method="exact")
    _, p_norm = wilcoxon_signed_rank([0.0] * EXACT_MAX, diffs, method="normal")
    assert abs(p_exact - p_norm) <= 0.02


def test_wilcoxon_auto_switches_to_normal_above_crossover():
    rng = np.random.default_rng(0)
    x = rng.random(40)
    y = x + rng.normal(0.05, 0.1, size=40)
    w_auto, p_auto = wilcoxon_signed_rank(x, y)
    assert (w_auto, p_auto) == wilcoxon_signed_rank(x, y, method="normal")


def test_wilcoxon_normal_matches_closed_form_without_ties():
    k = 30
    diffs = [(j + 1) * (1 if j % 3 else -1) for j in range(k)]
    w, p = wilcoxon_signed_rank([0] * k, diffs)
    mean = k * (k + 1) / 4
    sd = math.sqrt(k * (k + 1) * (2 * k + 1) / 24)
    z = (abs(w - mean) - 0.5) / sd
    assert p == pytest.approx(math.erfc(z / math.sqrt(2)))
