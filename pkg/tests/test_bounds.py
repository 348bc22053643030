import math
import random

import mpmath
import pytest
from hypothesis import given, strategies as st

from shotgun_recon.bounds import (ZeroVerdict, exact_log2_binomial, graph_deck_count_bounds, grid_threshold,
                                  grid_zero_report, grid_zero_statement_certified, log2_binomial,
                                  log2_factorial, path_length_window)

NR, INC = ZeroVerdict.NON_RECONSTRUCTIBLE_WHP, ZeroVerdict.INCONCLUSIVE


def exact_log2(x: int) -> float:
    with mpmath.workprec(200):
        return float(mpmath.log(mpmath.mpf(x), 2))


def hp_log2(x: int):
    # oracle at a precision well beyond the certified radius
    with mpmath.workprec(256):
        return mpmath.log(mpmath.mpf(x), 2)


# --- thresholds ------------------------------------------------------------

def test_threshold_examples():
    assert grid_threshold(2, 2, 256).k_th == pytest.approx(4.0, rel=1e-13)
    assert grid_threshold(3, 2, 512).k_th == pytest.approx(3.0, rel=1e-13)
    assert grid_threshold(2, 2, 2).k_th == pytest.approx(math.sqrt(2), rel=1e-13)


@given(st.integers(2, 4), st.integers(2, 9), st.integers(2, 10**6), st.floats(0.01, 1.0))
def test_threshold_ordering(d, r, n, eps):
    rep = grid_threshold(d, r, n, eps)
    assert rep.k0 < rep.k_th < rep.k1
    assert rep.k1 - rep.k_th == pytest.approx(1 / d + eps)


def test_graph_bounds_in_report():
    rep = grid_threshold(2, 2, 1024)
    assert rep.colour_bounds == pytest.approx((math.sqrt(20), 28))
    assert rep.graph_bounds == pytest.approx((2 * math.sqrt(10), 31))


# --- binomials -------------------------------------------------------------

def test_log2_binomial_random_small_cases():
    rs = random.Random(2024)
    for _ in range(100):
        a = rs.randint(1, 5000)
        b = rs.randint(0, a)
        q = log2_binomial(a, b)
        assert q.contains(exact_log2_binomial(a, b))
        assert q.radius >= 0


@given(st.integers(1, 400), st.integers(0, 400))
def test_log2_binomial_property(a, b):
    b = min(a, b)
    assert log2_binomial(a, b).contains(hp_log2(math.comb(a, b)))


def test_log2_factorial_exact():
    for m in (0, 1, 5, 40, 41, 200):
        assert log2_factorial(m).contains(hp_log2(math.factorial(m)))


# --- zero statement ----------------------------------------------------------

def grid_decks_exact(d, r, n, k) -> float:
    N = (n - k + 1) ** d
    return exact_log2(math.comb(r ** (k ** d) + N - 1, N))


def test_zero_statement_large_n():
    assert grid_zero_statement_certified(2, 2, 2048, 2) is NR
    rep = grid_zero_report(2, 2, 2048, 2)
    assert rep.log2_decks.contains(grid_decks_exact(2, 2, 2048, 2), slack=1e-9)
    assert rep.log2_decks.log2 == pytest.approx(289.7288, abs=1e-3)


@pytest.mark.parametrize("n,verdict", [(4, INC), (6, INC), (8, INC), (9, NR), (16, NR), (64, NR)])
def test_zero_statement_frontier(n, verdict):
    # the exact deck count decides which side of r^(n^d) / 2^20 we are on
    exact = grid_decks_exact(2, 2, n, 2)
    assert (exact < n * n - 20) == (verdict is NR)
    assert grid_zero_statement_certified(2, 2, n, 2) is verdict


def test_zero_statement_single_card():
    # (n-k+1)^d = 1: r^(k^d) decks against r^(n^d) colourings, equal counts
    rep = grid_zero_report(2, 3, 5, 5)
    assert rep.log2_decks.contains(25 * math.log2(3), slack=1e-9)
    assert rep.verdict is INC


@given(st.integers(2, 3), st.integers(2, 4), st.integers(2, 40), st.integers(1, 6))
def test_zero_statement_sound_and_below_threshold(d, r, n, k):
    if k > n:
        return
    rep = grid_zero_report(d, r, n, k)
    if rep.verdict is NR:
        assert k < grid_threshold(d, r, n).k_th
        # widening the radius can only make a verdict less certain, never flip it
        assert rep.log2_decks.widened(2.0).compare(rep.log2_colourings, rep.margin) != "gt"
    if r ** (k ** d) < 10**6:
        assert rep.log2_decks.contains(grid_decks_exact(d, r, n, k), slack=1e-9)


# --- graph deck counts -------------------------------------------------------------

def classes_ceiling(k, r):
    # ceil(e^k r^k 2^C(k,2) / k^k) at high precision
    with mpmath.workdps(60):
        return int(mpmath.ceil(mpmath.e ** k * mpmath.mpf(r) ** k * mpmath.mpf(2) ** (k * (k - 1) // 2)
                               / mpmath.mpf(k) ** k))


def test_graph_counts_n1024_k4():
    rep = graph_deck_count_bounds(1024, 4, 2)
    A = classes_ceiling(4, 2)
    assert rep.log2_F.contains(exact_log2(math.comb(math.comb(1024, 4) + A, A)), slack=1e-9)
    # the coloured count far exceeds 2^n at this size, so no certificate
    assert rep.log2_F.log2 > 1024
    assert rep.colour_verdict == "inconclusive"


def test_graph_counts_k_equals_n():
    rep = graph_deck_count_bounds(12, 12, 2)
    assert rep.log2_F.log2 >= 0
    assert rep.colour_verdict == "inconclusive"


def test_graph_counts_monotone_in_k():
    n = 1024
    kmax = int(math.sqrt(2 * math.log2(n)))
    vals = [graph_deck_count_bounds(n, k, 2).log2_F.log2 for k in range(1, kmax + 1)]
    assert vals == sorted(vals)


@given(st.integers(2, 30), st.integers(1, 30), st.integers(1, 3))
def test_graph_counts_exact_small(n, k, r):
    k = min(k, n)
    if k > 6:
        return
    rep = graph_deck_count_bounds(n, k, r)
    A = classes_ceiling(k, r)
    assert rep.log2_F.contains(exact_log2(math.comb(math.comb(n, k) + A, A)), slack=1e-9)


# --- path length window ----------------------------------------------------------

def test_window_examples():
    assert path_length_window(1024) == (20, 21)
    assert path_length_window(2) == (2, 3)
    assert path_length_window(3) == (4, 5)


@given(st.integers(2, 10**12))
def test_window_matches_high_precision(n):
    with mpmath.workdps(60):
        l0 = int(mpmath.floor(2 * mpmath.log(n, 2) + mpmath.mpf("0.9")))
        l1 = int(mpmath.floor(2 * mpmath.log(n, 2) + mpmath.mpf("1.9")))
    assert path_length_window(n) == (l0, l1)
    assert l1 - l0 == 1
