"""Coloured d-dimensional grids, k-subgrid cards and decks.

Cells are stored row-major everywhere (colourings, cards and faces), which is
the only linearisation used by the package.  A deck holds its cards as one
``(N, k**d)`` array; ``deck[i]`` gives a :class:`Card` view.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng

LATTICE = "lattice"
TORUS = "torus"
ORIENTED = "oriented"
UNORIENTED = "unoriented-canonical"
MAX_COLOURS = 1 << 16


class InvalidParameter(ValueError):
    pass


class InvalidComparison(ValueError):
    pass


def colour_dtype(r: int):
    if r <= 255:
        return np.uint8
    if r <= 65535:
        return np.uint16
    return np.uint32


@dataclass(frozen=True)
class GridShape:
    d: int
    n: int
    topology: str = LATTICE

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise InvalidParameter(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        if self.topology not in (LATTICE, TORUS):
            raise InvalidParameter(f"unknown topology {self.topology!r}")

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def dims(self) -> tuple:
        return (self.n,) * self.d


@dataclass(frozen=True, eq=False)
class GridColouring:
    shape: GridShape
    r: int
    cells: np.ndarray  # flat, row-major

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 1:
            cells = cells.reshape(-1)
        if cells.size != self.shape.size:
            raise InvalidParameter(f"expected {self.shape.size} cells, got {cells.size}")
        if not 2 <= self.r <= MAX_COLOURS:
            raise InvalidParameter(f"r must be in [2, {MAX_COLOURS}], got {self.r}")
        if cells.size and (int(cells.min()) < 0 or int(cells.max()) >= self.r):
            raise InvalidParameter("cell value outside [0, r)")
        cells = cells.astype(colour_dtype(self.r), copy=True)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def grid(self) -> np.ndarray:
        """The cells as a d-dimensional (read-only) array."""
        return self.cells.reshape(self.shape.dims)

    def __eq__(self, other):
        if not isinstance(other, GridColouring):
            return NotImplemented
        return (self.shape == other.shape and self.r == other.r
                and np.array_equal(self.cells, other.cells))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Card:
    d: int
    k: int
    cells: np.ndarray
    orientation_mode: str = ORIENTED

    @property
    def block(self) -> np.ndarray:
        return np.asarray(self.cells).reshape((self.k,) * self.d)

    def __eq__(self, other):
        if not isinstance(other, Card):
            return NotImplemented
        return (self.d, self.k, self.orientation_mode) == (other.d, other.k, other.orientation_mode) \
            and np.array_equal(self.cells, other.cells)

    __hash__ = None


@dataclass(eq=False)
class GridDeck:
    """A shuffled multiset of cards.  ``origins`` is a test hook only and is
    never consulted by any reconstruction code."""
    d: int
    n: int
    k: int
    r: int
    orientation_mode: str
    topology: str
    cells: np.ndarray  # (N, k**d)
    origins: np.ndarray | None = field(default=None, repr=False)

    @property
    def oriented(self) -> bool:
        return self.orientation_mode == ORIENTED

    def header(self) -> dict:
        return {"type": "grid-deck", "d": self.d, "n": self.n, "k": self.k, "r": self.r,
                "oriented": self.oriented, "topology": self.topology}

    def __len__(self) -> int:
        return int(self.cells.shape[0])

    def __getitem__(self, i: int) -> Card:
        return Card(self.d, self.k, self.cells[i], self.orientation_mode)

    @property
    def cards(self) -> list:
        return [self[i] for i in range(len(self))]

    def blocks(self) -> np.ndarray:
        return self.cells.reshape((len(self),) + (self.k,) * self.d)


@dataclass(frozen=True, eq=False)
class Key:
    """A coloured face: the (k-1) x k^(d-1) slab of a card on one side.

    ``axis`` is 1-based; ``sign`` 0 means the face towards +e_axis and 1 the face
    towards -e_axis.
    """
    axis: int
    sign: int
    cells: np.ndarray

    @property
    def fingerprint(self) -> bytes:
        return key_fingerprint(self.axis, self.sign, self.cells)

    def __eq__(self, other):
        if not isinstance(other, Key):
            return NotImplemented
        return (self.fingerprint == other.fingerprint and self.axis == other.axis
                and self.sign == other.sign and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash(self.fingerprint)


def key_fingerprint(axis: int, sign: int, cells) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(bytes([axis & 0xFF, sign & 1]))
    h.update(np.ascontiguousarray(cells, dtype=np.uint32).tobytes())
    return h.digest()


def face_slice(d: int, k: int, axis: int, sign: int) -> tuple:
    """Index tuple (into a k^d block) of the face on ``axis`` (0-based) towards
    +e (sign 0) or -e (sign 1)."""
    sl = [slice(None)] * d
    sl[axis] = slice(1, k) if sign == 0 else slice(0, k - 1)
    return tuple(sl)


def card_key(card: Card, axis: int, sign: int) -> Key:
    """The face key of a card; ``axis`` is 1-based as in :class:`Key`."""
    if not 1 <= axis <= card.d or sign not in (0, 1):
        raise InvalidParameter("axis must be in [1, d] and sign in {0, 1}")
    face = card.block[face_slice(card.d, card.k, axis - 1, sign)]
    return Key(axis, sign, np.ascontiguousarray(face).reshape(-1))


# --- generation -----------------------------------------------------------

def random_grid_colouring(shape: GridShape, r: int, seed: int) -> GridColouring:
    if r < 2 or r > MAX_COLOURS:
        raise InvalidParameter(f"r must be in [2, {MAX_COLOURS}], got {r}")
    return GridColouring(shape, r, rng.uniform_ints(seed, shape.size, r))


def monochromatic_colouring(shape: GridShape, r: int = 2, colour: int = 0) -> GridColouring:
    return GridColouring(shape, r, np.full(shape.size, colour))


def extract_card(colouring: GridColouring, origin: Sequence[int], k: int,
                 mode: str = ORIENTED) -> Card:
    shape = colouring.shape
    if len(origin) != shape.d:
        raise InvalidParameter("origin must have d coordinates")
    if k < 1 or (shape.topology == LATTICE and k > shape.n):
        raise InvalidParameter(f"bad card size k={k}")
    g = colouring.grid
    if shape.topology == LATTICE:
        for o in origin:
            if not 0 <= o <= shape.n - k:
                raise IndexError(f"origin {tuple(origin)} out of range for n={shape.n}, k={k}")
        block = g[tuple(slice(o, o + k) for o in origin)]
    else:
        idx = [(o + np.arange(k)) % shape.n for o in origin]
        block = g[np.ix_(*idx)]
    card = Card(shape.d, k, np.ascontiguousarray(block).reshape(-1), ORIENTED)
    return canonicalize_card(card, mode) if mode == UNORIENTED else card


def _all_windows(colouring: GridColouring, k: int) -> tuple[np.ndarray, np.ndarray]:
    shape = colouring.shape
    g = colouring.grid
    if shape.topology == TORUS:
        g = np.pad(g, [(0, k - 1)] * shape.d, mode="wrap")
        m = shape.n
    else:
        m = shape.n - k + 1
    win = np.lib.stride_tricks.sliding_window_view(g, (k,) * shape.d)
    win = win[tuple(slice(0, m) for _ in range(shape.d))]
    cells = np.ascontiguousarray(win).reshape(m ** shape.d, k ** shape.d)
    origins = np.array(list(itertools.product(range(m), repeat=shape.d)), dtype=np.int64)
    return cells, origins.reshape(m ** shape.d, shape.d)


def generate_deck(colouring: GridColouring, k: int, mode: str = ORIENTED,
                  shuffle_seed: int = 0, keep_origins: bool = False) -> GridDeck:
    """All k-subgrids of ``colouring`` in a seeded random order."""
    shape = colouring.shape
    if k < 1 or (shape.topology == LATTICE and k > shape.n):
        raise InvalidParameter(f"k={k} does not fit n={shape.n}")
    if mode not in (ORIENTED, UNORIENTED):
        raise InvalidParameter(f"unknown orientation mode {mode!r}")
    cells, origins = _all_windows(colouring, k)
    order = rng.permutation(rng.derive_seed(shuffle_seed, 0xDEC), cells.shape[0])
    cells, origins = cells[order], origins[order]
    if mode == UNORIENTED:
        cells = canonicalize_cells(cells, shape.d, k)
    return GridDeck(shape.d, shape.n, k, colouring.r, mode, shape.topology,
                    np.ascontiguousarray(cells), origins if keep_origins else None)


def reshuffle(deck: GridDeck, seed: int) -> GridDeck:
    order = rng.permutation(rng.derive_seed(seed, 0x5AF), len(deck))
    return GridDeck(deck.d, deck.n, deck.k, deck.r, deck.orientation_mode, deck.topology,
                    deck.cells[order],
                    None if deck.origins is None else deck.origins[order])


# --- symmetries ---------------------------------------------------------------

def grid_symmetries(d: int) -> list:
    """All 2^d * d! (axis permutation, flip mask) pairs; identity first."""
    return [(perm, flips) for perm in itertools.permutations(range(d))
            for flips in itertools.product((False, True), repeat=d)]


def apply_symmetry(block: np.ndarray, perm, flips, batch: bool = False) -> np.ndarray:
    """Permute then reflect the axes of a block (or of a batch of blocks)."""
    off = 1 if batch else 0
    out = np.transpose(block, tuple(range(off)) + tuple(p + off for p in perm))
    flip_axes = tuple(i + off for i, f in enumerate(flips) if f)
    return np.flip(out, axis=flip_axes) if flip_axes else out


def canonicalize_cells(cells: np.ndarray, d: int, k: int) -> np.ndarray:
    """Row-wise lexicographic minimum over all grid symmetries."""
    cells = np.asarray(cells)
    n_cards = cells.shape[0]
    if n_cards == 0:
        return cells.copy()
    blocks = cells.reshape((n_cards,) + (k,) * d)
    best = cells.copy()
    for perm, flips in grid_symmetries(d)[1:]:
        cand = np.ascontiguousarray(apply_symmetry(blocks, perm, flips, batch=True)).reshape(n_cards, -1)
        # lexicographic comparison: first differing column decides
        diff = cand != best
        has = diff.any(axis=1)
        first = diff.argmax(axis=1)
        rows = np.nonzero(has)[0]
        cols = first[rows]
        smaller = cand[rows, cols] < best[rows, cols]
        best[rows[smaller]] = cand[rows[smaller]]
    return best


def canonicalize_card(card: Card, mode: str | None = None) -> Card:
    mode = card.orientation_mode if mode is None else mode
    if mode == ORIENTED:
        return card
    cells = canonicalize_cells(np.asarray(card.cells)[None, :], card.d, card.k)[0]
    return Card(card.d, card.k, cells, UNORIENTED)


def transform_colouring(colouring: GridColouring, perm, flips) -> GridColouring:
    g = apply_symmetry(colouring.grid, perm, flips)
    return GridColouring(colouring.shape, colouring.r, np.ascontiguousarray(g).reshape(-1))


# --- deck equality --------------------------------------------------------

def _multiset(deck: GridDeck) -> Counter:
    cells = deck.cells
    if deck.orientation_mode == UNORIENTED:
        cells = canonicalize_cells(cells, deck.d, deck.k)
    cells = np.ascontiguousarray(cells.astype(np.uint32))
    L = cells.shape[1] * 4
    buf = cells.tobytes()
    return Counter(buf[i:i + L] for i in range(0, len(buf), L))


def decks_equal(a: GridDeck, b: GridDeck) -> bool:
    if a.header() != b.header():
        raise InvalidComparison(f"header mismatch: {a.header()} vs {b.header()}")
    if len(a) != len(b):
        return False
    return _multiset(a) == _multiset(b)


# --- file formats -----------------------------------------------------------

_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"
_B36_LUT = {c: i for i, c in enumerate(_B36)}


def _encode_row(row, r: int) -> str:
    if r <= 36:
        return "".join(_B36[int(v)] for v in row)
    return json.dumps([int(v) for v in row])


def _decode_row(line: str, r: int) -> list:
    line = line.strip()
    if line.startswith("["):
        return json.loads(line)
    return [_B36_LUT[c] for c in line]


def write_deck(deck: GridDeck, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(deck.header()) + "\n")
        for row in deck.cells:
            fh.write(_encode_row(row, deck.r) + "\n")


def read_deck(path) -> GridDeck:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "grid-deck":
            raise InvalidParameter("not a grid deck file")
        rows = [_decode_row(line, header["r"]) for line in fh if line.strip()]
    d, k, r = header["d"], header["k"], header["r"]
    cells = np.array(rows, dtype=np.int64).reshape(len(rows), k ** d)
    if cells.size and (cells.min() < 0 or cells.max() >= r):
        raise InvalidParameter("card cell outside [0, r)")
    mode = ORIENTED if header["oriented"] else UNORIENTED
    return GridDeck(d, header["n"], k, r, mode, header["topology"],
                    cells.astype(colour_dtype(r)))


def write_colouring(col: GridColouring, path) -> None:
    header = {"type": "grid-colouring", "d": col.shape.d, "n": col.shape.n,
              "r": col.r, "topology": col.shape.topology}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        fh.write(_encode_row(col.cells, col.r) + "\n")


def read_colouring(path) -> GridColouring:
    with open(path) as fh:
        header = json.loads(fh.readline())
        cells = _decode_row(fh.readline(), header["r"])
    shape = GridShape(header["d"], header["n"], header.get("topology", LATTICE))
    return GridColouring(shape, header["r"], np.array(cells, dtype=np.int64))


def deck_from_cards(cards: Iterable[Card], n: int, r: int, topology: str = LATTICE) -> GridDeck:
    cards = list(cards)
    if not cards:
        raise InvalidParameter("empty card list")
    c0 = cards[0]
    cells = np.stack([np.asarray(c.cells) for c in cards]).astype(colour_dtype(r))
    return GridDeck(c0.d, n, c0.k, r, c0.orientation_mode, topology, cells)
