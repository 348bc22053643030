"""Vertex-coloured simple graphs, canonical forms and full k-decks.

Adjacency is kept as a tuple of Python ints, one bitmask row per vertex.  An
uncoloured graph is the special case where every vertex has colour 0, so the
same code handles both.

The canonical form is found by individualisation and refinement: the vertex
partition is seeded with colour classes, refined until equitable, and the
search tree of individualisations is explored with automorphism pruning.  The
lexicographically smallest relabelled adjacency among the leaves wins.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import rng
from ._kernels import induced_path_search
from .grid import InvalidParameter

CANON_LIMIT = 28
DECK_BUDGET = 10_000_000


class SizeLimitExceeded(InvalidParameter):
    pass


class DeckBudgetExceeded(InvalidParameter):
    def __init__(self, n, k, count, budget):
        super().__init__(f"C({n},{k}) = {count} subsets exceeds the deck budget {budget}")
        self.count = count


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True, eq=False)
class ColouredGraph:
    n: int
    adj: tuple          # bitmask rows
    colours: tuple
    r: int = 0          # 0 means "max colour + 1"

    def __post_init__(self):
        if len(self.adj) != self.n or len(self.colours) != self.n:
            raise InvalidParameter("adjacency/colour length does not match n")
        for v, row in enumerate(self.adj):
            if row >> v & 1:
                raise InvalidParameter(f"self-loop at {v}")
            if row >> self.n:
                raise InvalidParameter(f"row {v} mentions a vertex >= n")
            for u in _bits(row):
                if not self.adj[u] >> v & 1:
                    raise InvalidParameter(f"adjacency not symmetric at ({v},{u})")
        r = self.r or (max(self.colours) + 1 if self.n else 1)
        object.__setattr__(self, "r", r)
        if any(c < 0 or c >= r for c in self.colours):
            raise InvalidParameter("colour out of range")

    @classmethod
    def from_edges(cls, n, edges, colours=None, r=0):
        rows = [0] * n
        for u, v in edges:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows), tuple(colours) if colours is not None else (0,) * n, r)

    @classmethod
    def from_matrix(cls, matrix, colours=None, r=0):
        m = np.asarray(matrix, dtype=bool)
        n = m.shape[0]
        rows = tuple(sum(1 << j for j in np.flatnonzero(m[i])) for i in range(n))
        return cls(n, rows, tuple(int(c) for c in colours) if colours is not None else (0,) * n, r)

    def has_edge(self, u, v) -> bool:
        return bool(self.adj[u] >> v & 1)

    def edges(self):
        return [(u, v) for u in range(self.n) for v in _bits(self.adj[u]) if v > u]

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges():
            m[u, v] = m[v, u] = True
        return m

    def induced(self, vertices) -> "ColouredGraph":
        vs = list(vertices)
        return ColouredGraph(len(vs), _induced_rows(self.adj, vs), tuple(self.colours[v] for v in vs), self.r)

    def permuted(self, perm) -> "ColouredGraph":
        """Relabel vertex v as perm[v]."""
        rows = [0] * self.n
        cols = [0] * self.n
        for v in range(self.n):
            rows[perm[v]] = sum(1 << perm[u] for u in _bits(self.adj[v]))
            cols[perm[v]] = self.colours[v]
        return ColouredGraph(self.n, tuple(rows), tuple(cols), self.r)

    def uncoloured(self) -> "ColouredGraph":
        return ColouredGraph(self.n, self.adj, (0,) * self.n, 1)

    def __eq__(self, other):
        return (isinstance(other, ColouredGraph) and self.n == other.n
                and self.adj == other.adj and self.colours == other.colours)

    def __hash__(self):
        return hash((self.n, self.adj, self.colours))


def _induced_rows(adj, vs) -> tuple:
    rows = []
    for v in vs:
        a = adj[v]
        row = 0
        for j, u in enumerate(vs):
            if a >> u & 1:
                row |= 1 << j
        rows.append(row)
    return tuple(rows)


def random_coloured_graph(n: int, r: int, seed: int) -> ColouredGraph:
    """G(n, 1/2) with independent uniform vertex colours in [0, r)."""
    if n < 1 or r < 1:
        raise InvalidParameter(f"need n >= 1 and r >= 1, got n={n}, r={r}")
    npairs = n * (n - 1) // 2
    coin = rng.bits(rng.derive_seed(seed, 1), npairs)
    rows = [0] * n
    t = 0
    for u in range(n):
        for v in range(u + 1, n):
            if coin[t]:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
            t += 1
    cols = rng.uniform_ints(rng.derive_seed(seed, 2), n, r)
    return ColouredGraph(n, tuple(rows), tuple(int(c) for c in cols), r)


# --- canonical form -------------------------------------------------------------

def _refine(cells, adj):
    """Refine an ordered partition to the coarsest equitable one below it.

    Cells are split by their neighbour counts into every current cell, and the
    pieces are ordered by that count vector, so the result does not depend on
    the vertex labels.
    """
    while True:
        masks = []
        for c in cells:
            m = 0
            for v in c:
                m |= 1 << v
            masks.append(m)
        new = []
        changed = False
        for c in cells:
            if len(c) == 1:
                new.append(c)
                continue
            sig: dict = {}
            for v in c:
                a = adj[v]
                sig.setdefault(tuple((a & m).bit_count() for m in masks), []).append(v)
            if len(sig) == 1:
                new.append(c)
            else:
                changed = True
                for s in sorted(sig):
                    new.append(sig[s])
        cells = new
        if not changed:
            return cells


class _Find:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)


class _CanonSearch:
    def __init__(self, g: ColouredGraph):
        self.g = g
        self.adj = g.adj
        self.n = g.n
        self.first = None       # (key, order, path)
        self.best = None
        self.autos: list = []   # generators as lists v -> image
        self.leaves = 0

    def leaf_key(self, order):
        pos = [0] * self.n
        for i, v in enumerate(order):
            pos[v] = i
        adj = self.adj
        rows = []
        for v in order:
            row = 0
            for u in _bits(adj[v]):
                row |= 1 << pos[u]
            rows.append(row)
        return tuple(rows)

    def _auto(self, o1, o2):
        gamma = [0] * self.n
        for a, b in zip(o1, o2):
            gamma[a] = b
        if any(gamma[v] != v for v in range(self.n)):
            self.autos.append(gamma)

    def _orbits(self, prefix):
        fixed = set(prefix)
        uf = _Find(self.n)
        for gamma in self.autos:
            if all(gamma[v] == v for v in fixed):
                for v in range(self.n):
                    uf.union(v, gamma[v])
        return uf

    @staticmethod
    def _common(a, b):
        c = 0
        for x, y in zip(a, b):
            if x != y:
                break
            c += 1
        return c

    def search(self, cells, path):
        target = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if target is None:
            self.leaves += 1
            order = [c[0] for c in cells]
            key = self.leaf_key(order)
            if self.first is None:
                self.first = self.best = (key, order, path)
                return None
            if key == self.first[0]:
                self._auto(self.first[1], order)
                return self._common(path, self.first[2])
            if key == self.best[0]:
                self._auto(self.best[1], order)
                return self._common(path, self.best[2])
            if key < self.best[0]:
                self.best = (key, order, path)
            return None
        depth = len(path)
        done_roots: set = set()
        nauto = -1
        uf = None
        for v in cells[target]:
            if len(self.autos) != nauto:
                nauto = len(self.autos)
                uf = self._orbits(path)
                done_roots = {uf.find(u) for u in done_roots}
            root = uf.find(v)
            if root in done_roots:
                continue
            done_roots.add(root)
            rest = [u for u in cells[target] if u != v]
            child = cells[:target] + [[v], rest] + cells[target + 1:]
            jump = self.search(_refine(child, self.adj), path + [v])
            if jump is not None and jump < depth:
                return jump
        return None


def _initial_cells(g: ColouredGraph):
    by: dict = {}
    for v in range(g.n):
        by.setdefault((g.colours[v], g.adj[v].bit_count()), []).append(v)
    return [by[key] for key in sorted(by)]


def _run_search(g: ColouredGraph, limit: int) -> _CanonSearch:
    if g.n > limit:
        raise SizeLimitExceeded(f"graph has {g.n} vertices, limit is {limit}")
    s = _CanonSearch(g)
    if g.n == 0:
        s.best = ((), [], [])
        return s
    s.search(_refine(_initial_cells(g), g.adj), [])
    return s


def _encode(n, colours, rows) -> bytes:
    """n (2 bytes), colours (2 bytes each), then the packed upper triangle."""
    out = bytearray(n.to_bytes(2, "big"))
    for c in colours:
        out += int(c).to_bytes(2, "big")
    acc = 0
    nb = 0
    for i in range(n):
        for j in range(i + 1, n):
            acc = acc << 1 | (rows[i] >> j & 1)
            nb += 1
    pad = (-nb) % 8
    out += (acc << pad).to_bytes((nb + pad) // 8, "big")
    return bytes(out)


def decode_canonical(code: bytes, r: int = 0) -> ColouredGraph:
    n = int.from_bytes(code[:2], "big")
    cols = tuple(int.from_bytes(code[2 + 2 * i:4 + 2 * i], "big") for i in range(n))
    body = code[2 + 2 * n:]
    nb = n * (n - 1) // 2
    acc = int.from_bytes(body, "big") >> ((-nb) % 8) if body else 0
    rows = [0] * n
    t = nb - 1
    for i in range(n):
        for j in range(i + 1, n):
            if acc >> t & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
            t -= 1
    return ColouredGraph(n, tuple(rows), cols, r)


def canonical_labelling(g: ColouredGraph, limit: int = CANON_LIMIT) -> list:
    """The canonical vertex order: position i holds the original vertex."""
    return list(_run_search(g, limit).best[1])


def canonical_form(g: ColouredGraph, limit: int = CANON_LIMIT) -> bytes:
    s = _run_search(g, limit)
    order = s.best[1]
    return _encode(g.n, [g.colours[v] for v in order], s.best[0])


def automorphism_generators(g: ColouredGraph, limit: int = CANON_LIMIT) -> list:
    return list(_run_search(g, limit).autos)


def is_asymmetric(g: ColouredGraph, limit: int = CANON_LIMIT) -> bool:
    # Without a known automorphism nothing is pruned, so the whole search tree
    # is visited and any non-trivial automorphism would show up as two equal leaves.
    return not _run_search(g, limit).autos


def canonical_form_bruteforce(g: ColouredGraph) -> bytes:
    """Minimum over all n! labellings.  It picks a different representative than
    the refinement search, so only its equality classes are comparable."""
    best = None
    for perm in itertools.permutations(range(g.n)):
        h = g.permuted(perm)
        key = (h.colours, h.adj)
        if best is None or key < best:
            best = key
    return _encode(g.n, best[0], best[1])


def is_asymmetric_bruteforce(g: ColouredGraph) -> bool:
    ident = tuple(range(g.n))
    for perm in itertools.permutations(range(g.n)):
        if perm != ident and g.permuted(perm) == g:
            return False
    return True


# --- decks -------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphCard:
    canon: bytes
    mult: int

    def graph(self, r: int = 0) -> ColouredGraph:
        return decode_canonical(self.canon, r)


@dataclass(eq=False)
class GraphDeck:
    n: int
    k: int
    r: int
    cards: list = field(default_factory=list)   # GraphCard, sorted by canon

    def __post_init__(self):
        self.cards = sorted(self.cards, key=lambda c: c.canon)
        total = sum(c.mult for c in self.cards)
        if self.cards and total != math.comb(self.n, self.k):
            raise InvalidParameter(f"multiplicities sum to {total}, expected C({self.n},{self.k})")
        if any(c.mult < 1 for c in self.cards):
            raise InvalidParameter("multiplicities must be positive")

    def header(self):
        return {"type": "graph-deck", "n": self.n, "k": self.k, "r": self.r}

    def counter(self) -> Counter:
        return Counter({c.canon: c.mult for c in self.cards})

    def __len__(self):
        return sum(c.mult for c in self.cards)

    def __eq__(self, other):
        return (isinstance(other, GraphDeck) and (self.n, self.k) == (other.n, other.k)
                and self.counter() == other.counter())


def full_k_deck(g: ColouredGraph, k: int, budget: int = DECK_BUDGET, r: int = 0) -> GraphDeck:
    if not 1 <= k <= g.n:
        raise InvalidParameter(f"need 1 <= k <= n, got k={k}, n={g.n}")
    count = math.comb(g.n, k)
    if count > budget:
        raise DeckBudgetExceeded(g.n, k, count, budget)
    cnt: Counter = Counter()
    adj, cols = g.adj, g.colours
    for sub in itertools.combinations(range(g.n), k):
        h = ColouredGraph.__new__(ColouredGraph)
        object.__setattr__(h, "n", k)
        object.__setattr__(h, "adj", _induced_rows(adj, sub))
        object.__setattr__(h, "colours", tuple(cols[v] for v in sub))
        object.__setattr__(h, "r", g.r)
        cnt[canonical_form(h)] += 1
    return GraphDeck(g.n, k, r or g.r, [GraphCard(c, m) for c, m in cnt.items()])


# --- induced paths ------------------------------------------------------------------

@dataclass(frozen=True)
class InducedPath:
    vertices: tuple

    def __len__(self):
        return len(self.vertices)

    def is_induced_in(self, g: ColouredGraph) -> bool:
        vs = self.vertices
        if len(set(vs)) != len(vs):
            return False
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                if g.has_edge(vs[i], vs[j]) != (j == i + 1):
                    return False
        return True


def _extend_paths(adj, n, path, pmask, blocked, target, out, best):
    """Depth-first extension of an induced path.  ``blocked`` is the union of
    closed neighbourhoods of every path vertex except the last."""
    last = path[-1]
    free = ~(blocked | pmask) & ((1 << n) - 1)
    cand = adj[last] & free
    if not cand:
        return
    nb_last = adj[last] | (1 << last)
    for u in _bits(cand):
        # vertices still usable after u is appended
        room = free & ~nb_last & ~(1 << u)
        length = len(path) + 1
        if target is not None:
            if length == target:
                out.append(tuple(path) + (u,))
                continue
            if length + room.bit_count() < target:
                continue
        else:
            if length > best[0]:
                best[0] = length
                best[1] = tuple(path) + (u,)
            if length + room.bit_count() <= best[0]:
                continue
        path.append(u)
        _extend_paths(adj, n, path, pmask | 1 << u, blocked | nb_last, target, out, best)
        path.pop()


def _adj_array(g: ColouredGraph) -> np.ndarray:
    return np.array(g.adj, dtype=np.int64)


def longest_induced_path(g: ColouredGraph, limit: int = CANON_LIMIT):
    if g.n > limit:
        raise SizeLimitExceeded(f"graph has {g.n} vertices, limit is {limit}")
    if g.n == 0:
        return 0, InducedPath(())
    out = np.zeros((1, g.n), np.int64)
    L = int(induced_path_search(_adj_array(g), g.n, 0, 0, out))
    return L, InducedPath(tuple(int(v) for v in out[0, :L]))


def max_induced_path_length(graphs, lower: int = 0) -> int:
    """Largest induced path length over many graphs, pruning with the running maximum."""
    best = lower
    for g in graphs:
        out = np.zeros((1, max(g.n, 1)), np.int64)
        best = max(best, int(induced_path_search(_adj_array(g), g.n, 0, best, out)))
    return best


def induced_paths(g: ColouredGraph, length: int) -> list:
    """Every induced path with exactly ``length`` vertices, each listed once
    (in the orientation whose first vertex is smaller than its last)."""
    if length < 1 or length > g.n:
        return []
    adj = _adj_array(g)
    room = 64
    while True:
        out = np.zeros((room, length), np.int64)
        cnt = int(induced_path_search(adj, g.n, length, 0, out))
        if cnt <= room:
            return [tuple(int(v) for v in row) for row in out[:cnt]]
        room = cnt


def induced_paths_python(g: ColouredGraph, length: int) -> list:
    """Pure-Python reference for :func:`induced_paths`."""
    if length == 1:
        return [(v,) for v in range(g.n)]
    out: list = []
    for s in range(g.n):
        _extend_paths(g.adj, g.n, [s], 1 << s, 0, length, out, None)
    return [p for p in out if p[0] < p[-1]]


def longest_induced_path_bruteforce(g: ColouredGraph) -> int:
    best = 1 if g.n else 0
    for size in range(2, g.n + 1):
        found = False
        for sub in itertools.combinations(range(g.n), size):
            for perm in itertools.permutations(sub):
                if perm[0] < perm[-1] and InducedPath(perm).is_induced_in(g):
                    found = True
                    break
            if found:
                break
        # an induced path contains induced paths of every shorter length
        if not found:
            break
        best = size
    return best


# --- file formats -------------------------------------------------------------------

def graph_to_json(g: ColouredGraph) -> dict:
    acc = 0
    nb = 0
    for i in range(g.n):
        for j in range(i + 1, g.n):
            acc = acc << 1 | (g.adj[i] >> j & 1)
            nb += 1
    pad = (-nb) % 8
    return {"n": g.n, "adj": (acc << pad).to_bytes((nb + pad) // 8, "big").hex(),
            "colours": list(g.colours), "r": g.r}


def graph_from_json(obj: dict) -> ColouredGraph:
    n = int(obj["n"])
    cols = [int(c) for c in obj.get("colours", [0] * n)]
    code = n.to_bytes(2, "big") + b"".join(c.to_bytes(2, "big") for c in cols) + bytes.fromhex(obj["adj"])
    g = decode_canonical(code, int(obj.get("r", 0)))
    return g


def write_graph(path, g: ColouredGraph):
    with open(path, "w") as fh:
        json.dump(graph_to_json(g), fh)
        fh.write("\n")


def read_graph(path) -> ColouredGraph:
    with open(path) as fh:
        return graph_from_json(json.load(fh))


def write_graph_deck(path, deck: GraphDeck):
    with open(path, "w") as fh:
        fh.write(json.dumps(deck.header()) + "\n")
        for c in deck.cards:
            fh.write(json.dumps({"canon": c.canon.hex(), "mult": c.mult}) + "\n")


def read_graph_deck(path) -> GraphDeck:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise InvalidParameter("empty deck file")
    head = json.loads(lines[0])
    if head.get("type") != "graph-deck":
        raise InvalidParameter("not a graph deck file")
    cards = []
    for ln in lines[1:]:
        obj = json.loads(ln)
        cards.append(GraphCard(bytes.fromhex(obj["canon"]), int(obj["mult"])))
    return GraphDeck(int(head["n"]), int(head["k"]), int(head["r"]), cards)
