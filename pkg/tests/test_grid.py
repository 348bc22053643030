import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shotgun_recon.grid import (LATTICE, ORIENTED, TORUS, UNORIENTED, Card, GridColouring, GridShape,
                                InvalidComparison, InvalidParameter, canonicalize_card, canonicalize_cells,
                                card_key, decks_equal, extract_card, generate_deck, grid_symmetries,
                                monochromatic_colouring, random_grid_colouring, read_colouring, read_deck,
                                reshuffle, transform_colouring, write_colouring, write_deck)


def col(d, n, cells, r=2, topology=LATTICE):
    return GridColouring(GridShape(d, n, topology), r, np.array(cells))


def all_d2_images(block):
    """The 8 images of a square block built from rotations and one reflection."""
    out = []
    for b in (block, block.T):
        for t in range(4):
            out.append(np.rot90(b, t))
    return out


# --- colourings -------------------------------------------------------------

def test_single_cell():
    c = random_grid_colouring(GridShape(1, 1), 2, 123)
    assert c.cells.shape == (1,) and int(c.cells[0]) in (0, 1)


def test_determinism():
    a = random_grid_colouring(GridShape(2, 16), 3, 99)
    b = random_grid_colouring(GridShape(2, 16), 3, 99)
    assert a == b


def test_r_below_two_rejected():
    with pytest.raises(InvalidParameter):
        random_grid_colouring(GridShape(2, 4), 1, 0)


def test_mean_colour_fraction():
    # 1000 colourings of the 64x64 grid, r=2
    means = [random_grid_colouring(GridShape(2, 64), 2, s).cells.mean() for s in range(1000)]
    assert abs(np.mean(means) - 0.5) < 0.01


# --- cards ----------------------------------------------------------------

def test_extract_examples():
    c = col(1, 3, [0, 1, 0])
    assert extract_card(c, (1,), 2).cells.tolist() == [1, 0]
    t = col(1, 3, [0, 1, 0], topology=TORUS)
    assert extract_card(t, (2,), 2).cells.tolist() == [0, 0]
    with pytest.raises(IndexError):
        extract_card(c, (2,), 2)


def test_extract_monochromatic():
    m = monochromatic_colouring(GridShape(2, 6), 3, 2)
    assert set(extract_card(m, (1, 3), 3).cells.tolist()) == {2}


def test_deck_sizes():
    c = random_grid_colouring(GridShape(2, 5), 2, 1)
    assert len(generate_deck(c, 3)) == 9
    ct = random_grid_colouring(GridShape(2, 5, TORUS), 2, 1)
    assert len(generate_deck(ct, 3)) == 25
    with pytest.raises(InvalidParameter):
        generate_deck(c, 6)


def test_monochromatic_deck_one_class():
    m = monochromatic_colouring(GridShape(2, 5))
    deck = generate_deck(m, 3)
    assert len(deck) == 9
    assert len({row.tobytes() for row in deck.cells}) == 1


@given(st.integers(1, 3), st.integers(1, 9), st.integers(0, 2**32), st.booleans())
def test_deck_count_invariant(d, n, seed, torus):
    if d == 3:
        n = min(n, 6)
    k = 1 + seed % n
    shape = GridShape(d, n, TORUS if torus else LATTICE)
    deck = generate_deck(random_grid_colouring(shape, 2, seed), k, shuffle_seed=seed)
    assert len(deck) == (n ** d if torus else (n - k + 1) ** d)


@given(st.integers(1, 3), st.integers(0, 2**32))
def test_round_trip_with_origins(d, seed):
    n = {1: 9, 2: 7, 3: 5}[d]
    k = 2 + seed % 3
    c = random_grid_colouring(GridShape(d, n), 3, seed)
    deck = generate_deck(c, k, shuffle_seed=seed + 1, keep_origins=True)
    out = np.full((n,) * d, -1)
    for cells, o in zip(deck.cells, deck.origins):
        out[tuple(slice(x, x + k) for x in o)] = cells.reshape((k,) * d)
    assert np.array_equal(out.reshape(-1), c.cells)


# --- canonical cards ------------------------------------------------------------

def test_canonical_identity_in_oriented_mode():
    card = Card(2, 2, np.array([1, 0, 0, 1]))
    assert canonicalize_card(card) is card


def test_transpose_same_class():
    a = Card(2, 2, np.array([0, 1, 2, 3]))
    b = Card(2, 2, np.array([0, 2, 1, 3]))
    assert canonicalize_card(a, UNORIENTED) == canonicalize_card(b, UNORIENTED)


@given(st.integers(0, 2**32))
def test_canonical_matches_rot90_enumeration(seed):
    cells = random_grid_colouring(GridShape(2, 3), 3, seed).cells
    canon = canonicalize_card(Card(2, 3, cells), UNORIENTED).cells.tolist()
    brute = min(np.ascontiguousarray(b).reshape(-1).tolist()
                for b in all_d2_images(cells.reshape(3, 3)))
    assert canon == brute


def test_symmetry_group_sizes():
    assert [len(grid_symmetries(d)) for d in (1, 2, 3)] == [2, 8, 48]


@pytest.mark.parametrize("d,k", [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)])
def test_canonical_constant_on_orbits_exhaustive(d, k):
    # every binary card of this size
    total = 2 ** (k ** d)
    cells = np.array(list(itertools.product((0, 1), repeat=k ** d)), dtype=np.uint8)
    canon = canonicalize_cells(cells, d, k)
    assert np.array_equal(canonicalize_cells(canon, d, k), canon)
    blocks = cells.reshape((total,) + (k,) * d)
    for perm, flips in grid_symmetries(d):
        img = np.transpose(blocks, (0,) + tuple(p + 1 for p in perm))
        for a, f in enumerate(flips):
            if f:
                img = np.flip(img, axis=a + 1)
        img = np.ascontiguousarray(img).reshape(total, -1)
        assert np.array_equal(canonicalize_cells(img, d, k), canon)


@pytest.mark.slow
def test_canonical_constant_on_orbits_d3_k3():
    rng_ = np.random.default_rng(5)
    cells = rng_.integers(0, 2, size=(300, 27)).astype(np.uint8)
    canon = canonicalize_cells(cells, 3, 3)
    blocks = cells.reshape(300, 3, 3, 3)
    for perm, flips in grid_symmetries(3):
        img = np.transpose(blocks, (0,) + tuple(p + 1 for p in perm))
        for a, f in enumerate(flips):
            if f:
                img = np.flip(img, axis=a + 1)
        assert np.array_equal(canonicalize_cells(np.ascontiguousarray(img).reshape(300, -1), 3, 3), canon)


# --- keys -----------------------------------------------------------------

def test_key_shape_and_fingerprint():
    card = Card(2, 3, np.arange(9) % 2)
    key = card_key(card, 1, 0)
    assert key.cells.size == 2 * 3
    assert key.fingerprint == card_key(card, 1, 0).fingerprint
    assert len(key.fingerprint) == 16
    assert key == card_key(card, 1, 0)
    assert key.cells.tolist() == [1, 0, 1, 0, 1, 0]
    assert key != card_key(card, 1, 1)


# --- deck equality ----------------------------------------------------------------

def test_deck_equals_its_reshuffle():
    c = random_grid_colouring(GridShape(2, 10), 2, 4)
    deck = generate_deck(c, 3, shuffle_seed=1)
    assert decks_equal(deck, reshuffle(deck, 77))
    assert decks_equal(deck, generate_deck(c, 3, shuffle_seed=2))


def test_unoriented_reflection_same_deck():
    c = random_grid_colouring(GridShape(2, 10), 2, 8)
    refl = transform_colouring(c, (0, 1), (True, False))
    assert decks_equal(generate_deck(c, 3, UNORIENTED), generate_deck(refl, 3, UNORIENTED, shuffle_seed=5))
    assert not decks_equal(generate_deck(c, 3), generate_deck(refl, 3))


def test_corner_change_detected():
    a = random_grid_colouring(GridShape(2, 4), 2, 3)
    cells = a.cells.copy()
    cells[0] = 1 - cells[0]
    b = GridColouring(a.shape, 2, cells)
    # direct enumeration of the 2x2 windows of both grids
    def windows(g):
        g = g.reshape(4, 4)
        return sorted(g[i:i + 2, j:j + 2].reshape(-1).tolist() for i in range(3) for j in range(3))
    assert windows(a.cells) != windows(b.cells)
    assert not decks_equal(generate_deck(a, 2), generate_deck(b, 2))


def test_header_mismatch():
    a = generate_deck(random_grid_colouring(GridShape(2, 6), 2, 0), 2)
    b = generate_deck(random_grid_colouring(GridShape(2, 6), 2, 0), 3)
    with pytest.raises(InvalidComparison):
        decks_equal(a, b)


@given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(0, 2**32))
def test_decks_equal_equivalence(s1, s2, s3):
    c = random_grid_colouring(GridShape(2, 5), 2, s1 % 8)
    other = random_grid_colouring(GridShape(2, 5), 2, s2 % 8)
    a, b = generate_deck(c, 2, shuffle_seed=s2), generate_deck(c, 2, shuffle_seed=s3)
    o = generate_deck(other, 2, shuffle_seed=s3)
    assert decks_equal(a, a) and decks_equal(a, b) == decks_equal(b, a)
    if decks_equal(a, o):
        assert decks_equal(b, o)


# --- files ---------------------------------------------------------------------

@pytest.mark.parametrize("r", [2, 36, 40])
def test_deck_file_round_trip(tmp_path, r):
    c = random_grid_colouring(GridShape(2, 8, TORUS), r, 11)
    deck = generate_deck(c, 3, UNORIENTED)
    p = tmp_path / "deck.txt"
    write_deck(deck, p)
    back = read_deck(p)
    assert back.header() == deck.header()
    assert np.array_equal(back.cells, deck.cells)
    first = p.read_text().splitlines()[0]
    assert '"type": "grid-deck"' in first


def test_colouring_file_round_trip(tmp_path):
    c = random_grid_colouring(GridShape(3, 4), 5, 2)
    write_colouring(c, tmp_path / "c.txt")
    assert read_colouring(tmp_path / "c.txt") == c
