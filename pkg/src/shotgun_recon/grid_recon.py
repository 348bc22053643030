"""Reconstruction of a grid colouring from its deck of k-subgrids.

The run places one card per step.  Step 0 places an initial card; G1 performs
2k naive extensions along axis 0; the growth phases then add whole layers
of cards (G2 along axis 1, G3 along axis 0, G4 along axes 2..d-1) using
look-ahead extensions: a position is filled only if every surviving chain of
up to k face-compatible cards running along the layer agrees on its first card.

Positions are integer tuples relative to the initial card.  On a lattice they
stay inside [-(m-1), m-1]^d with m = n-k+1; on a torus they are read modulo n.
"""
from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from ._kernels import window_ok, window_write
from .grid import (LATTICE, ORIENTED, TORUS, GridColouring, GridDeck, GridShape, InvalidParameter, Key,
                   apply_symmetry, colour_dtype, face_slice, grid_symmetries)

DEFAULT_MAX_WIDTH = 4096


class Step(enum.Enum):
    PLACED = "placed"
    BORDER = "border"
    AMBIGUOUS = "ambiguous"


class NotFound(LookupError):
    pass


class MergeConflict(RuntimeError):
    """A placed card disagrees with already restored cells (must never happen)."""


def fid(axis: int, sign: int) -> int:
    """Face id: 2*axis for the face towards +e_axis, 2*axis+1 towards -e_axis."""
    return 2 * axis + (0 if sign > 0 else 1)


# --- key index ----------------------------------------------------------------

@dataclass(eq=False)
class KeyIndex:
    """The map from face keys to the cards (and card orientations) carrying them.

    Cards with identical content form a class; a *variant* is one placement
    orientation of a class (a single one in oriented mode, every distinct
    symmetry image in unoriented mode).  ``tables[fid]`` maps exact face bytes
    to the list of variants whose face ``fid`` has those cells.
    """
    d: int
    k: int
    n_cards: int
    class_members: list          # class -> sorted card indices
    card_class: np.ndarray       # card -> class
    variants: np.ndarray         # (V, k, ..., k)
    var_class: np.ndarray        # variant -> class
    class_variant0: np.ndarray   # class -> variant in the deck's own orientation
    faces: list                  # fid -> list of bytes per variant
    tables: list                 # fid -> dict bytes -> list of variants
    total_entries: int = 0

    def lookup(self, key: Key) -> list:
        """Card indices whose face (key.axis, key.sign) equals the key cells."""
        f = fid(key.axis - 1, +1 if key.sign == 0 else -1)
        want = np.asarray(key.cells).astype(self.variants.dtype).tobytes()
        out = set()
        for v in self.tables[f].get(want, ()):
            out.update(self.class_members[int(self.var_class[v])])
        return sorted(out)

    def distinct_keys(self) -> int:
        return sum(len(t) for t in self.tables)


def build_key_index(deck: GridDeck) -> KeyIndex:
    d, k = deck.d, deck.k
    cells = np.ascontiguousarray(deck.cells)
    L = cells.shape[1] * cells.itemsize
    buf = cells.tobytes()
    class_of: dict = {}
    members: list = []
    card_class = np.empty(len(deck), dtype=np.int64)
    for i in range(len(deck)):
        b = buf[i * L:(i + 1) * L]
        c = class_of.get(b)
        if c is None:
            c = class_of[b] = len(members)
            members.append([])
        members[c].append(i)
        card_class[i] = c
    firsts = np.array([m[0] for m in members], dtype=np.int64)
    blocks = cells[firsts].reshape((len(members),) + (k,) * d)

    if deck.orientation_mode == ORIENTED:
        variants = blocks
        var_class = np.arange(len(members))
        class_variant0 = np.arange(len(members))
    else:
        # every distinct symmetry image of each class; identity image first
        images = [np.ascontiguousarray(apply_symmetry(blocks, p, f, batch=True)).reshape(len(members), -1)
                  for p, f in grid_symmetries(d)]
        keep_v, keep_c = [], []
        for c in range(len(members)):
            seen = set()
            for t, img in enumerate(images):
                b = img[c].tobytes()
                if b not in seen:
                    seen.add(b)
                    keep_v.append((t, c))
                    keep_c.append(c)
        stacked = np.stack(images)  # (T, C, k^d)
        variants = np.stack([stacked[t, c] for t, c in keep_v]).reshape((len(keep_v),) + (k,) * d)
        var_class = np.array(keep_c, dtype=np.int64)
        class_variant0 = np.zeros(len(members), dtype=np.int64)
        class_variant0[var_class[::-1]] = np.arange(len(var_class))[::-1]
    variants = np.ascontiguousarray(variants)
    nv = variants.shape[0]

    faces, tables = [], []
    for axis in range(d):
        for sign in (+1, -1):
            sl = (slice(None),) + face_slice(d, k, axis, 0 if sign > 0 else 1)
            fa = np.ascontiguousarray(variants[sl]).reshape(nv, -1)
            fl = fa.shape[1] * fa.itemsize
            fb = fa.tobytes()
            rows = [fb[i * fl:(i + 1) * fl] for i in range(nv)]
            tbl: dict = {}
            for v, b in enumerate(rows):
                lst = tbl.get(b)
                if lst is None:
                    tbl[b] = [v]
                else:
                    lst.append(v)
            faces.append(rows)
            tables.append(tbl)
    mult = np.array([len(m) for m in members], dtype=np.int64)
    total = 2 * d * int(mult[var_class].sum())
    return KeyIndex(d, k, len(deck), members, card_class, variants, var_class, class_variant0,
                    faces, tables, total)


# --- initial card -------------------------------------------------------------

def almost_white_threshold(d: int, n: int, k: int, r: int) -> int:
    """Smallest chi with r^chi >= (n/k)^d / k, clamped to [1, k^d].

    Exact integer arithmetic: r^chi * k^(d+1) >= n^d.  Since the target
    interval spans a factor r, this chi is its unique member.
    """
    if not (n > k >= 2 and r >= 2):
        raise InvalidParameter("need n > k >= 2 and r >= 2")
    target = n ** d
    chi, p = 0, k ** (d + 1)
    while p < target:
        p *= r
        chi += 1
    return min(max(chi, 1), k ** d)


def choose_initial_card(deck: GridDeck, index: KeyIndex | None = None, strategy: str = "random",
                        seed: int = 0, cursor: int = 0) -> int:
    """Pick the card placed at step 0.

    ``random``: uniform under ``seed``; ``white``: lowest index whose first chi
    cells are colour 0 (raises NotFound if none); ``exhaustive``: the card at
    ``cursor``.
    """
    N = len(deck)
    if N == 0:
        raise InvalidParameter("empty deck")
    if strategy == "random":
        return int(rng.uniform_ints(rng.derive_seed(seed, 0x1417), 1, N)[0])
    if strategy in ("white", "almost-white"):
        chi = almost_white_threshold(deck.d, deck.n, deck.k, deck.r) if deck.n > deck.k else 1
        ok = np.nonzero((deck.cells[:, :chi] == 0).all(axis=1))[0]
        if ok.size == 0:
            raise NotFound("no almost-white card")
        return int(ok[0])
    if strategy in ("exhaustive", "exhaustive-next"):
        if not 0 <= cursor < N:
            raise IndexError("cursor out of range")
        return int(cursor)
    raise InvalidParameter(f"unknown strategy {strategy!r}")


# --- results ------------------------------------------------------------------

@dataclass
class ReconResult:
    colouring: GridColouring | None
    step: int = -1
    reason: str = ""
    stage: str = ""
    stats: dict = field(default_factory=dict)
    initial: int = -1
    dvec: tuple = ()

    @property
    def ok(self) -> bool:
        return self.colouring is not None

    @property
    def outcome(self) -> str:
        return "colouring" if self.ok else "ambiguous"


class _Ambiguous(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def direction_vectors(d: int) -> list:
    """All 2^(d+1) direction vectors (bits for G1, G2, G3 and each G4 run)."""
    return list(itertools.product((0, 1), repeat=d + 1))


# --- engine -------------------------------------------------------------------

class ReconState:
    """Partially restored region of one reconstruction run."""

    def __init__(self, deck: GridDeck, index: KeyIndex, initial: int, dvec=None,
                 max_width: int = DEFAULT_MAX_WIDTH):
        self.d, self.n, self.k, self.r = deck.d, deck.n, deck.k, deck.r
        self.torus = deck.topology == TORUS
        self.index = index
        self.dvec = tuple(dvec) if dvec is not None else (0,) * (self.d + 1)
        if len(self.dvec) != self.d + 1:
            raise InvalidParameter(f"direction vector must have {self.d + 1} bits")
        self.max_width = max_width
        d, k, n = self.d, self.k, self.n
        self.m = n if self.torus else n - k + 1
        dt = index.variants.dtype
        self.unset = np.iinfo(dt).max
        if self.torus:
            self.off = 0
            self.canvas = np.full((n,) * d, self.unset, dtype=dt)
        else:
            self.off = self.m - 1
            self.canvas = np.full((2 * self.m + k - 2,) * d, self.unset, dtype=dt)
        self._flat = self.canvas.reshape(-1)
        self._side = self.canvas.shape[0]
        self._vflat = index.variants.reshape(index.variants.shape[0], -1)
        self.remaining = [len(mem) for mem in index.class_members]
        self.used_count = [0] * len(index.class_members)
        self.consumed: list = []
        self.placed: dict = {}
        self.step = 0
        self.phase = "step0"
        self.lookups = 0
        self.max_seen_width = 0
        self.chain_steps = 0
        self.naive_collisions = 0
        origin = (0,) * d
        self.lo = list(origin)
        self.hi = list(origin)
        self.g1_sign = +1
        c0 = int(index.card_class[initial])
        self.initial = initial
        self._ar = np.arange(k)
        if self.remaining[c0] >= 2:
            raise _Ambiguous("step0 duplicate")
        self._place(origin, int(index.class_variant0[c0]))

    # canvas access
    def _index(self, p):
        if self.torus:
            n = self.n
            return np.ix_(*[(c + self._ar) % n for c in p])
        off, k = self.off, self.k
        return tuple(slice(c + off, c + off + k) for c in p)

    def fits(self, v: int, p) -> bool:
        return window_ok(self._flat, self._vflat, v, p, self.k, self.off, self._side,
                         self.torus, self.unset)

    def _place(self, p, v: int):
        if not window_write(self._flat, self._vflat, v, p, self.k, self.off, self._side,
                            self.torus, self.unset):
            raise MergeConflict(f"conflict placing variant {v} at {p}")
        self.placed[p] = v
        c = int(self.index.var_class[v])
        self.remaining[c] -= 1
        self.consumed.append(self.index.class_members[c][self.used_count[c]])
        self.used_count[c] += 1
        self.step += 1

    @staticmethod
    def _shift(p, axis: int, s: int):
        return p[:axis] + (p[axis] + s,) + p[axis + 1:]

    # single steps
    def naive_candidates(self, p, axis: int, s: int) -> list:
        """Available variants extending the card at p one step along s*e_axis."""
        ix = self.index
        v = self.placed[p]
        q = self._shift(p, axis, s)
        self.lookups += 1
        raw = ix.tables[fid(axis, -s)].get(ix.faces[fid(axis, s)][v], ())
        return [c for c in raw if self.remaining[ix.var_class[c]] > 0 and self.fits(c, q)]

    def naive_extend(self, p, axis: int, s: int) -> Step:
        cands = self.naive_candidates(p, axis, s)
        if not cands:
            return Step.BORDER
        if len(cands) > 1 or self.remaining[self.index.var_class[cands[0]]] > 1:
            self.naive_collisions += 1
            return Step.AMBIGUOUS
        self._place(self._shift(p, axis, s), cands[0])
        return Step.PLACED

    def _layer_candidates(self, q, pred, g: int, s: int, f: int, t: int) -> list:
        """Variants that may sit at q: face-match with the card below (q - s e_g),
        face-match with the chain predecessor ``pred`` at q - t e_f, and agree
        with every restored cell in q's window."""
        ix = self.index
        below = self.placed[q[:g] + (q[g] - s,) + q[g + 1:]]
        self.lookups += 1
        raw = ix.tables[2 * g + (1 if s > 0 else 0)].get(ix.faces[2 * g + (0 if s > 0 else 1)][below])
        if not raw:
            return []
        if pred is not None:
            pf = ix.faces[2 * f + (0 if t > 0 else 1)][pred]
            back = ix.faces[2 * f + (1 if t > 0 else 0)]
            raw = [c for c in raw if back[c] == pf]
            if not raw:
                return []
        return [c for c in raw if window_ok(self._flat, self._vflat, c, q, self.k, self.off,
                                            self._side, self.torus, self.unset)]

    def _extend_paths(self, paths: list, q, cands) -> list:
        var_class = self.index.var_class
        remaining = self.remaining
        new = []
        for path, cls in paths:
            for v in cands(q, path[-1]):
                c = int(var_class[v])
                if remaining[c] > cls.count(c):
                    new.append((path + (v,), cls + (c,)))
        if len(new) > self.max_width:
            self.max_seen_width = max(self.max_seen_width, len(new))
            raise _Ambiguous("branch explosion")
        if len(new) > self.max_seen_width:
            self.max_seen_width = len(new)
        return new

    def _memo_cands(self, memo, g, s, f, t):
        def cands(q, pred):
            key = (q, pred, t)
            lst = memo.get(key)
            if lst is None:
                lst = memo[key] = self._layer_candidates(q, pred, g, s, f, t)
            return lst
        return cands

    def _decide(self, paths: list, pos):
        if not paths:
            raise _Ambiguous("no chain")
        h1 = paths[0][0][0]
        for path, _ in paths:
            if path[0] != h1:
                raise _Ambiguous("look-ahead")
        self._place(pos, h1)
        return h1

    def look_ahead_extend(self, chain: list, pred0, g: int, s: int, f: int, t: int,
                          memo: dict | None = None) -> list:
        """Place a card at chain[0] if all surviving chains along ``chain`` agree on it.

        ``chain`` lists the unplaced positions y_1, y_2, ... (consecutive along
        t*e_f); ``pred0`` is the variant already placed at y_1 - t*e_f, if any.
        Returns the surviving chains (as (variants, classes) pairs); raises
        _Ambiguous on failure.
        """
        cands = self._memo_cands({} if memo is None else memo, g, s, f, t)
        var_class = self.index.var_class
        paths = [((v,), (int(var_class[v]),)) for v in cands(chain[0], pred0)
                 if self.remaining[var_class[v]] > 0]
        self.max_seen_width = max(self.max_seen_width, len(paths))
        for q in chain[1:]:
            if not paths:
                break
            paths = self._extend_paths(paths, q, cands)
        self.chain_steps += len(chain)
        self._decide(paths, chain[0])
        return paths

    # phases
    def run_g1(self):
        self.phase = "G1"
        k = self.k
        s = +1 if self.dvec[0] == 0 else -1
        flipped = False
        origin = (0,) * self.d
        cur = origin
        for _ in range(2 * k):
            res = self.naive_extend(cur, 0, s)
            if res is Step.BORDER and not self.torus:
                if flipped:
                    raise _Ambiguous("double border")
                flipped = True
                s = -s
                cur = self._shift(origin, 0, self.lo[0] if s < 0 else self.hi[0])
                res = self.naive_extend(cur, 0, s)
                if res is Step.BORDER:
                    raise _Ambiguous("double border")
            if res is Step.BORDER:
                raise _Ambiguous("no extension")
            if res is Step.AMBIGUOUS:
                raise _Ambiguous("naive collision")
            cur = self._shift(cur, 0, s)
            if s > 0:
                self.hi[0] += 1
            else:
                self.lo[0] -= 1
        self.g1_sign = s

    def _lines(self, layer_axes, f, t, fixed):
        """Lines of a layer: lists of positions along f from end A to end B."""
        others = [a for a in layer_axes if a != f]
        ranges = [range(self.lo[a], self.hi[a] + 1) for a in others]
        fr = list(range(self.lo[f], self.hi[f] + 1))
        if t < 0:
            fr.reverse()
        out = []
        for combo in itertools.product(*ranges):
            base = list(fixed)
            for a, c in zip(others, combo):
                base[a] = c
            line = []
            for c in fr:
                base[f] = c
                line.append(tuple(base))
            out.append(line)
        return out

    def _first_corner_open(self, g, s, layer_axes, f, t) -> bool:
        pos = list(self.lo)
        pos[g] = self.hi[g] + 1 if s > 0 else self.lo[g] - 1
        if t < 0:
            pos[f] = self.hi[f]
        q = tuple(pos)
        return any(self.remaining[self.index.var_class[v]] > 0
                   for v in self._layer_candidates(q, None, g, s, f, t))

    def _fill_line(self, line, g, s, f, t):
        k = self.k
        L = len(line)
        self.look_ahead_extend(line[:k], None, g, s, f, t)
        if L == 1:
            return
        self.look_ahead_extend(line[L - 1:max(0, L - k - 1):-1], None, g, s, f, -t)
        # Interior sweep.  The chains surviving one step, minus their placed
        # first card, are exactly the chains for the next position, so only
        # the newly exposed end position needs a fresh lookup.
        memo: dict = {}
        cands = self._memo_cands(memo, g, s, f, t)
        paths = None
        prev_end = 0
        for i in range(1, L - 1):
            end = min(i + k, L - 1)
            if paths is None or not paths[0][0]:
                paths = self.look_ahead_extend(line[i:end], self.placed[line[i - 1]], g, s, f, t, memo)
            else:
                if end > prev_end:
                    paths = self._extend_paths(paths, line[end - 1], cands)
                self.chain_steps += 1
                self._decide(paths, line[i])
            h1 = paths[0][0][0]
            paths = [(p[1:], c[1:]) for p, c in paths if p[0] == h1]
            prev_end = end

    def run_growth(self, name: str, g: int, layer_axes: list, f: int, t: int, bit: int):
        self.phase = name
        s = +1 if bit == 0 else -1
        need = self.m - (self.hi[g] - self.lo[g] + 1)
        flipped = False
        for _ in range(need):
            if not self.torus and not flipped and not self._first_corner_open(g, s, layer_axes, f, t):
                flipped = True
                s = -s
                if not self._first_corner_open(g, s, layer_axes, f, t):
                    raise _Ambiguous("double border")
            fixed = list(self.lo)
            fixed[g] = self.hi[g] + 1 if s > 0 else self.lo[g] - 1
            for line in self._lines(layer_axes, f, t, fixed):
                self._fill_line(line, g, s, f, t)
            if s > 0:
                self.hi[g] += 1
            else:
                self.lo[g] -= 1

    def run(self):
        d = self.d
        self.run_g1()
        self.run_growth("G2", 1, [0], 0, -self.g1_sign, self.dvec[1])
        self.run_growth("G3", 0, [1], 1, +1, self.dvec[2])
        for g in range(2, d):
            self.run_growth(f"G4.{g}", g, list(range(g)), 0, +1, self.dvec[g + 1])
        self.phase = "done"

    def output(self) -> GridColouring:
        if any(self.remaining):
            raise _Ambiguous("cards left over")
        if self.torus:
            grid = self.canvas
        else:
            grid = self.canvas[tuple(slice(lo + self.off, lo + self.off + self.n) for lo in self.lo)]
        if (grid == self.unset).any():
            raise _Ambiguous("unassigned cells")
        shape = GridShape(self.d, self.n, TORUS if self.torus else LATTICE)
        return GridColouring(shape, self.r, np.ascontiguousarray(grid).reshape(-1))

    def stats(self) -> dict:
        return {"steps": self.step, "lookups": self.lookups, "max_width": self.max_seen_width,
                "chain_steps": self.chain_steps, "naive_collisions": self.naive_collisions,
                "consumed": len(self.consumed)}


def _check_params(deck: GridDeck):
    if deck.d < 2:
        raise InvalidParameter("reconstruction is implemented for d >= 2")
    if deck.k < 2:
        raise InvalidParameter("need k >= 2")
    if deck.n < 3 * deck.k:
        raise InvalidParameter(f"need n >= 3k, got n={deck.n}, k={deck.k}")
    if deck.r > 65535:
        raise InvalidParameter("r too large for the reconstruction canvas")


def naive_extend(state: ReconState, pos, axis: int, sign: int) -> Step:
    """One naive extension of the card at ``pos`` along sign*e_axis."""
    return state.naive_extend(pos, axis, sign)


def look_ahead_extend(state: ReconState, chain: list, growth_axis: int, growth_sign: int,
                      fill_axis: int, fill_sign: int, pred=None) -> Step:
    """One look-ahead extension; returns PLACED or AMBIGUOUS (never raises)."""
    try:
        state.look_ahead_extend(chain, pred, growth_axis, growth_sign, fill_axis, fill_sign)
        return Step.PLACED
    except _Ambiguous as exc:
        state.last_reason = exc.reason
        return Step.AMBIGUOUS


def start_state(deck: GridDeck, index: KeyIndex | None = None, initial: int = 0, dvec=None,
                max_width: int = DEFAULT_MAX_WIDTH) -> ReconState:
    index = build_key_index(deck) if index is None else index
    return ReconState(deck, index, initial, dvec, max_width)


def reconstruct(deck: GridDeck, dvec=None, strategy: str = "random", seed: int = 0,
                initial: int | None = None, index: KeyIndex | None = None,
                max_width: int = DEFAULT_MAX_WIDTH) -> ReconResult:
    """One run from one initial card under one direction vector."""
    _check_params(deck)
    t0 = time.perf_counter()
    index = build_key_index(deck) if index is None else index
    if initial is None:
        try:
            initial = choose_initial_card(deck, index, strategy, seed)
        except NotFound:
            return ReconResult(None, 0, "no almost-white card", "step0",
                               {"runtime_ms": (time.perf_counter() - t0) * 1e3})
    dvec = tuple(dvec) if dvec is not None else (0,) * (deck.d + 1)
    state = None
    try:
        state = ReconState(deck, index, initial, dvec, max_width)
        state.run()
        col = state.output()
        st = state.stats()
        st["runtime_ms"] = (time.perf_counter() - t0) * 1e3
        return ReconResult(col, state.step, "", "done", st, initial, dvec)
    except _Ambiguous as exc:
        st = state.stats() if state is not None else {"steps": 0, "lookups": 0, "max_width": 0}
        st["runtime_ms"] = (time.perf_counter() - t0) * 1e3
        step = state.step if state is not None else 0
        stage = state.phase if state is not None else "step0"
        return ReconResult(None, step, exc.reason, stage, st, initial, dvec)


def reconstruct_verified(deck: GridDeck, strategy: str = "white", seed: int = 0,
                         index: KeyIndex | None = None, max_attempts: int = 1,
                         max_width: int = DEFAULT_MAX_WIDTH) -> ReconResult:
    """Run every direction vector from the same initial card and require that all
    runs output the same colouring.  On a torus a single run is made.

    With ``max_attempts`` > 1 the driver retries further initial cards: first
    the one given by ``strategy`` (the almost-white card falls back to
    exhaustive order when absent), then the deck in index order.
    """
    _check_params(deck)
    t0 = time.perf_counter()
    index = build_key_index(deck) if index is None else index
    tried: list = []
    try:
        first = choose_initial_card(deck, index, strategy, seed)
    except NotFound:
        first = 0
    order = itertools.chain([first], (i for i in range(len(deck)) if i != first))
    dvecs = [(0,) * (deck.d + 1)] if deck.topology == TORUS else direction_vectors(deck.d)
    totals = {"lookups": 0, "max_width": 0, "runs": 0}
    last = None
    for attempt, init in enumerate(order):
        if attempt >= max_attempts:
            break
        tried.append(init)
        ref = None
        failed = None
        for dv in dvecs:
            res = reconstruct(deck, dv, initial=init, index=index, max_width=max_width)
            totals["runs"] += 1
            totals["lookups"] += res.stats.get("lookups", 0)
            totals["max_width"] = max(totals["max_width"], res.stats.get("max_width", 0))
            if not res.ok:
                failed = res
                break
            if ref is None:
                ref = res
            elif ref.colouring != res.colouring:
                failed = ReconResult(None, res.step, "verification mismatch", "verify", res.stats, init, dv)
                break
        if failed is None:
            stats = dict(ref.stats)
            stats.update(totals)
            stats["attempts"] = attempt + 1
            stats["runtime_ms"] = (time.perf_counter() - t0) * 1e3
            return ReconResult(ref.colouring, ref.step, "", "done", stats, init, ref.dvec)
        last = failed
    stats = dict(last.stats) if last is not None else {}
    stats.update(totals)
    stats["attempts"] = len(tried)
    stats["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    return ReconResult(None, last.step if last else 0, last.reason if last else "no attempt",
                       last.stage if last else "step0", stats, tried[-1] if tried else -1,
                       last.dvec if last else ())
