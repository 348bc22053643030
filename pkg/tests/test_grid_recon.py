import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shotgun_recon.grid import (LATTICE, ORIENTED, TORUS, UNORIENTED, GridShape, InvalidParameter, card_key,
                                decks_equal, generate_deck, monochromatic_colouring, random_grid_colouring)
from shotgun_recon.grid_recon import (Step, NotFound, almost_white_threshold, build_key_index,
                                      choose_initial_card, direction_vectors, look_ahead_extend, naive_extend,
                                      reconstruct, reconstruct_verified, start_state)


def deck_of(n, k, seed, d=2, r=2, topology=LATTICE, mode=ORIENTED, origins=False):
    c = random_grid_colouring(GridShape(d, n, topology), r, seed)
    return c, generate_deck(c, k, mode, shuffle_seed=seed, keep_origins=origins)


# --- key index ----------------------------------------------------------------

def test_index_entry_count():
    _, deck = deck_of(5, 3, 0)
    assert build_key_index(deck).total_entries == 36


def test_monochromatic_index_collapses():
    deck = generate_deck(monochromatic_colouring(GridShape(2, 5)), 3)
    idx = build_key_index(deck)
    assert idx.total_entries == 36
    assert idx.distinct_keys() == 4


def test_index_matches_rescan():
    _, deck = deck_of(64, 6, 3)
    idx = build_key_index(deck)
    cards = deck.cards
    by_key: dict = {}
    for i, card in enumerate(cards):
        for axis in (1, 2):
            for sign in (0, 1):
                key = card_key(card, axis, sign)
                by_key.setdefault((axis, sign, key.cells.tobytes()), (key, []))[1].append(i)
    for key, members in by_key.values():
        assert idx.lookup(key) == members


# --- almost-white card ------------------------------------------------------------------

def test_almost_white_threshold_examples():
    assert almost_white_threshold(2, 256, 6, 2) == 9
    assert almost_white_threshold(1, 4, 2, 2) == 1


@given(st.integers(2, 3), st.integers(2, 6), st.integers(2, 5), st.integers(1, 500))
def test_almost_white_interval(d, k, r, extra):
    n = k + extra
    chi = almost_white_threshold(d, n, k, r)
    lo = (n / k) ** d / k
    if chi > 1 and chi < k ** d:
        assert lo <= r ** chi < r * lo
    assert almost_white_threshold(d, n + 1, k, r) >= chi


def test_almost_white_monochromatic():
    white = generate_deck(monochromatic_colouring(GridShape(2, 12)), 3)
    assert choose_initial_card(white, strategy="white") == 0
    black = generate_deck(monochromatic_colouring(GridShape(2, 12), 2, 1), 3)
    with pytest.raises(NotFound):
        choose_initial_card(black, strategy="white")


@pytest.mark.slow
def test_almost_white_frequency():
    found = 0
    for s in range(100):
        _, deck = deck_of(256, 6, s)
        try:
            choose_initial_card(deck, strategy="white")
            found += 1
        except NotFound:
            pass
    assert found >= 95


def test_exhaustive_cursor():
    _, deck = deck_of(10, 3, 0)
    assert choose_initial_card(deck, strategy="exhaustive", cursor=5) == 5


# --- single steps ----------------------------------------------------------------

def test_naive_monochromatic_ambiguous():
    # constant grid with one marked corner: the corner card is unique, its
    # neighbour is one of many blank cards
    from shotgun_recon.grid import GridColouring
    cells = np.zeros(15 * 15, dtype=int)
    cells[0] = 1
    deck = generate_deck(GridColouring(GridShape(2, 15), 2, cells), 3, keep_origins=True)
    init = int(np.nonzero((deck.origins == [0, 0]).all(axis=1))[0][0])
    state = start_state(deck, initial=init)
    assert naive_extend(state, (0, 0), 0, +1) is Step.AMBIGUOUS
    assert len(state.consumed) == 1


def test_naive_places_true_neighbour():
    _, deck = deck_of(64, 6, 1, origins=True)
    init = choose_initial_card(deck, strategy="white")
    state = start_state(deck, initial=init)
    o0 = deck.origins[init]
    sign = +1 if o0[0] < 64 - 6 else -1
    assert naive_extend(state, (0, 0), 0, sign) is Step.PLACED
    placed = state.consumed[-1]
    assert tuple(deck.origins[placed]) == (o0[0] + sign, o0[1])
    # full scan: exactly one card carries the matching face
    want = card_key(deck[init], 1, 0 if sign > 0 else 1).cells
    hits = [i for i, c in enumerate(deck.cards) if np.array_equal(card_key(c, 1, 1 if sign > 0 else 0).cells, want)]
    assert hits == [placed]
    assert len(state.consumed) == 2


def test_naive_border():
    _, deck = deck_of(64, 6, 1, origins=True)
    # the card at the lower-right corner cannot be extended to +e_0
    init = int(np.nonzero((deck.origins == [58, 58]).all(axis=1))[0][0])
    state = start_state(deck, initial=init)
    assert naive_extend(state, (0, 0), 0, +1) is Step.BORDER


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_look_ahead_places_after_k_lookups(seed):
    k = 7
    _, deck = deck_of(64, k, seed, origins=True)
    init = choose_initial_card(deck, strategy="white")
    state = start_state(deck, initial=init)
    state.run_g1()
    t = -state.g1_sign
    s = +1 if state._first_corner_open(1, +1, [0], 0, t) else -1
    fixed = list(state.lo)
    fixed[1] = state.hi[1] + 1 if s > 0 else state.lo[1] - 1
    line = state._lines([0], 0, t, fixed)[0]
    before = state.lookups
    assert look_ahead_extend(state, line[:k], 1, s, 0, t) is Step.PLACED
    assert state.lookups - before == k
    o0 = deck.origins[init]
    assert tuple(deck.origins[state.consumed[-1]]) == tuple(o0 + np.array(line[0]))


def test_look_ahead_monochromatic_ambiguous():
    # a constant block with one marked card so step 0 and G1 are well defined
    c = monochromatic_colouring(GridShape(2, 21))
    cells = c.cells.copy().reshape(21, 21)
    cells[0, :] = np.arange(21) % 2
    from shotgun_recon.grid import GridColouring
    deck = generate_deck(GridColouring(c.shape, 2, cells.reshape(-1)), 3)
    res = reconstruct(deck, strategy="random", seed=1)
    assert not res.ok


# --- full runs ----------------------------------------------------------------------

def test_monochromatic_ambiguous_early():
    deck = generate_deck(monochromatic_colouring(GridShape(2, 24)), 4)
    res = reconstruct(deck)
    assert not res.ok and res.step <= 1


def test_n_below_3k_invalid():
    _, deck = deck_of(20, 7, 0)
    with pytest.raises(InvalidParameter):
        reconstruct(deck)


def test_d1_unsupported():
    _, deck = deck_of(30, 3, 0, d=1)
    with pytest.raises(InvalidParameter):
        reconstruct(deck)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_seeded_exact_reconstruction(seed):
    c, deck = deck_of(64, 7, seed)
    res = reconstruct_verified(deck)
    assert res.ok and res.colouring == c
    assert res.stats["runs"] == 8
    assert decks_equal(generate_deck(res.colouring, 7), deck)


def test_direction_vector_count():
    assert len(direction_vectors(2)) == 8
    assert len(direction_vectors(3)) == 16


def test_every_direction_vector_agrees():
    c, deck = deck_of(64, 7, 5)
    idx = build_key_index(deck)
    init = choose_initial_card(deck, idx, "white")
    outs = [reconstruct(deck, dv, initial=init, index=idx) for dv in direction_vectors(2)]
    assert all(o.ok and o.colouring == c for o in outs)


def test_verified_fails_if_any_run_fails():
    # at k=3 on a 2-colour grid the runs are ambiguous
    _, deck = deck_of(64, 3, 0)
    assert not reconstruct_verified(deck).ok


def test_schedule_purity_and_conservation():
    _, deck = deck_of(48, 6, 9)
    idx = build_key_index(deck)
    a = reconstruct(deck, (0, 1, 0), initial=3, index=idx)
    b = reconstruct(deck, (0, 1, 0), initial=3, index=idx)
    sa, sb = dict(a.stats), dict(b.stats)
    sa.pop("runtime_ms"), sb.pop("runtime_ms")
    assert sa == sb
    state = start_state(deck, idx, initial=3, dvec=(0, 1, 0))
    state.run()
    assert len(state.consumed) + sum(state.remaining) == len(deck)
    assert sorted(state.consumed) == list(range(len(deck)))


def test_lookup_and_width_bounds():
    n, k = 128, 7
    c, deck = deck_of(n, k, 2)
    res = reconstruct(deck, strategy="white")
    assert res.ok and res.colouring == c
    assert res.stats["lookups"] <= 8 * (n - k + 1) ** 2 * k
    assert res.stats["max_width"] <= 4 * math.sqrt(math.log(n))


def test_torus_up_to_translation():
    c, deck = deck_of(30, 6, 4, topology=TORUS)
    res = reconstruct_verified(deck)
    assert res.ok and res.stats["runs"] == 1 and res.stats["consumed"] == 900
    g = res.colouring.grid
    assert any(np.array_equal(np.roll(g, (a, b), axis=(0, 1)), c.grid) for a in range(30) for b in range(30))


def test_unoriented_up_to_symmetry():
    from shotgun_recon.grid import grid_symmetries, transform_colouring
    c, deck = deck_of(48, 7, 6, mode=UNORIENTED)
    res = reconstruct_verified(deck)
    assert res.ok
    assert any(transform_colouring(res.colouring, p, f) == c for p, f in grid_symmetries(2))


@settings(max_examples=8)
@given(st.integers(0, 2**32))
def test_soundness_property(seed):
    # whatever the outcome, an output must regenerate the input deck
    n, k = 24, 4 + seed % 3
    c, deck = deck_of(n, k, seed, r=2 + seed % 2)
    res = reconstruct(deck, strategy="random", seed=seed)
    if res.ok:
        assert decks_equal(generate_deck(res.colouring, k), deck)


def test_three_dimensional_small():
    c, deck = deck_of(12, 4, 1, d=3)
    res = reconstruct_verified(deck)
    assert res.ok and res.colouring == c and res.stats["runs"] == 16
