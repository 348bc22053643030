from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shotgun_recon.grid import TORUS, GridColouring, GridShape, InvalidParameter, monochromatic_colouring, \
    random_grid_colouring
from shotgun_recon.rainbow import (BudgetExceeded, RainbowPath, brute_force_witness_exists, build_aux_digraph,
                                   find_rainbow_witness, find_rainbow_witness_any_direction,
                                   rainbow_expectation_bound, rainbow_expectation_bound_exact, validate_path)


def faces(c, k, axis, sign):
    """Face arrays of every origin, computed directly from the grid."""
    g = c.grid
    m = c.shape.n - k + 1
    out, back = [], []
    for i in range(m):
        for j in range(m):
            blk = g[i:i + k, j:j + k]
            lo, hi = np.take(blk, range(1, k), axis), np.take(blk, range(0, k - 1), axis)
            out.append((lo if sign > 0 else hi).reshape(-1))
            back.append((hi if sign > 0 else lo).reshape(-1))
    return np.array(out), np.array(back)


def test_monochromatic_all_pairs_red():
    c = monochromatic_colouring(GridShape(2, 6))
    aux = build_aux_digraph(c, 3)
    N = aux.m ** 2
    for x in range(N):
        expect = {y for y in range(N) if y != x and y != aux.blue(x)}
        assert set(aux.red(x)) == expect


def test_d1_example():
    c = GridColouring(GridShape(1, 3), 2, np.array([0, 1, 0]))
    aux = build_aux_digraph(c, 2)
    assert aux.blue(0) == 1 and aux.blue(1) is None
    # face of 0 towards +e equals face of 1 towards -e, but that pair is the blue edge
    assert aux.face_out[0] == aux.face_back[1]
    assert not aux.is_red(0, 1)
    # the reverse pair is a genuine red edge: [0] == [0]
    assert aux.red(1) == [0]


def test_torus_rejected():
    with pytest.raises(InvalidParameter):
        build_aux_digraph(random_grid_colouring(GridShape(2, 8, TORUS), 2, 0), 3)


@pytest.mark.parametrize("axis,sign", [(0, 1), (1, -1)])
def test_red_count_matches_pairwise_scan(axis, sign):
    c = random_grid_colouring(GridShape(2, 64), 2, 7)
    k = 6
    aux = build_aux_digraph(c, k, axis, sign)
    out, back = faces(c, k, axis, sign)
    N = out.shape[0]
    count = 0
    for lo in range(0, N, 256):
        eq = (out[lo:lo + 256, None, :] == back[None, :, :]).all(axis=2)
        for x in range(lo, min(lo + 256, N)):
            row = eq[x - lo]
            row[x] = False
            b = aux.blue(x)
            if b is not None:
                row[b] = False
            count += int(row.sum())
    assert aux.red_edge_count() == count


@given(st.integers(0, 2**32), st.integers(0, 5))
def test_red_is_face_equality_minus_blue(seed, pairs_seed):
    c = random_grid_colouring(GridShape(2, 9), 2, seed)
    aux = build_aux_digraph(c, 3, seed % 2, 1 if seed % 4 < 2 else -1)
    N = aux.m ** 2
    rs = np.random.default_rng(pairs_seed)
    for x, y in rs.integers(0, N, size=(40, 2)):
        x, y = int(x), int(y)
        same = aux.face_out[x] == aux.face_back[y]
        assert aux.is_red(x, y) == (same and y != x and y != aux.blue(x))


def test_monochromatic_witness():
    c = monochromatic_colouring(GridShape(2, 8))
    w = find_rainbow_witness(build_aux_digraph(c, 2), 2)
    assert w is not None
    assert validate_path(build_aux_digraph(c, 2), w, 2) == []


def test_no_red_edges_no_witness():
    # a grid whose rows are all distinct in a way that no two faces agree
    n, k = 6, 2
    cells = np.arange(n * n) % 7
    c = GridColouring(GridShape(2, n), 37, cells * 5 % 37 + np.arange(n * n) // 7)
    aux = build_aux_digraph(c, k)
    assert aux.red_edge_count() == 0
    assert find_rainbow_witness(aux, k) is None


@settings(max_examples=40)
@given(st.integers(0, 2**32), st.integers(6, 12), st.integers(2, 4))
def test_witness_agrees_with_brute_force(seed, n, r):
    c = random_grid_colouring(GridShape(2, n), r, seed)
    aux = build_aux_digraph(c, 3, seed % 2, 1 if (seed >> 1) % 2 else -1)
    w = find_rainbow_witness(aux, 3)
    assert (w is not None) == brute_force_witness_exists(aux, 3)
    if w is not None:
        assert validate_path(aux, w, 3) == []


def test_validate_catches_bad_path():
    c = monochromatic_colouring(GridShape(2, 8))
    aux = build_aux_digraph(c, 2)
    p = RainbowPath([(0, 0), (1, 0), (2, 0)], ["blue", "blue"])
    assert "no red edge" in validate_path(aux, p, 2)


def test_budget_exhaustion_reported():
    c = monochromatic_colouring(GridShape(2, 10))
    aux = build_aux_digraph(c, 3)
    with pytest.raises(BudgetExceeded):
        # pick a colouring where the first depth fails; a tiny budget trips at once
        find_rainbow_witness(aux, 3, budget=0)


def test_any_direction_search():
    c = random_grid_colouring(GridShape(2, 10), 2, 3)
    w = find_rainbow_witness_any_direction(c, 3)
    if w is not None:
        aux = build_aux_digraph(c, 3, *w.direction)
        assert validate_path(aux, w, 3) == []


# --- expectation bound ----------------------------------------------------------

def test_bound_value_matches_exact_sum():
    rep = rainbow_expectation_bound(2, 2, 256, 7)
    exact = rainbow_expectation_bound_exact(2, 2, 256, 7)
    assert abs(rep.value - 1.2e-3) < 0.05e-3
    assert abs(Fraction(rep.value) - exact) / exact < Fraction(1, 10**9)


def test_bound_divergent_sentinel():
    rep = rainbow_expectation_bound(2, 2, 256, 3)
    assert rep.divergent and math.isinf(rep.value) and rep.q >= 1


def test_bound_monotone_in_k():
    vals = [rainbow_expectation_bound(2, 2, 256, k) for k in range(5, 14)]
    assert all(not v.divergent for v in vals)
    assert all(a.value > b.value for a, b in zip(vals, vals[1:]))


@given(st.integers(2, 3), st.integers(2, 4), st.integers(8, 300), st.integers(2, 6))
def test_bound_matches_exact_when_convergent(d, r, n, k):
    rep = rainbow_expectation_bound(d, r, n, k)
    if rep.divergent or rep.value == 0.0 or rep.log10 < -250:
        return
    exact = rainbow_expectation_bound_exact(d, r, n, k)
    assert abs(Fraction(rep.value) - exact) / exact < Fraction(1, 10**9)
