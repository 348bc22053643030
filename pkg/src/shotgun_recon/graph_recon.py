"""Reconstruction of coloured and uncoloured graphs from their full k-decks.

Both algorithms look for an anchor: a small asymmetric induced subgraph H that
sits in exactly the cards containing its vertex set, once per card.  For colour
reconstruction H is a longest induced path made asymmetric by its colours; for
graph reconstruction it is a longest induced path plus three vertices that
break its reversal.  Inside every anchored card each remaining vertex gets a
signature, the bitmask of its neighbours among the anchor's labelled vertices.
Signatures seen by exactly one vertex of the hidden graph are recovered
directly.  Signatures shared by two vertices come in pairs that are told apart
by a witness.  All edges are then read off suitable cards.

Every output is checked by regenerating its full k-deck, so a Reconstructed
result is always consistent with the input deck.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

from .graphs import (ColouredGraph, GraphDeck, InvalidParameter, canonical_form, canonical_labelling,
                     decode_canonical, full_k_deck, induced_paths, is_asymmetric, longest_induced_path,
                     max_induced_path_length)

RECONSTRUCTED = "Reconstructed"
REJECT = "Reject"


@dataclass(frozen=True)
class Constants:
    c1: float = 0.9     # fraction of vertices distinguishable by the anchor
    c2: float = 0.2     # neighbours of u not adjacent to v, as a fraction of n
    slack_a: int = 6    # algorithm A needs l <= k - slack_a
    slack_b: int = 9


@dataclass
class GraphReconResult:
    outcome: str
    graph: ColouredGraph | None = None
    stage: str = ""
    reason: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.outcome == RECONSTRUCTED


class _Reject(Exception):
    def __init__(self, stage, reason):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage
        self.reason = reason


@dataclass
class _Card:
    idx: int
    g: ColouredGraph
    mult: int


@dataclass
class NeighbourhoodClass:
    signature: int      # mask over anchor labels
    members: list       # output vertex ids (1 or 2)
    colours: list


def _deck_cards(deck: GraphDeck) -> list:
    if sum(c.mult for c in deck.cards) != math.comb(deck.n, deck.k):
        raise InvalidParameter("deck multiplicities do not sum to C(n,k)")
    return [_Card(i, decode_canonical(c.canon, deck.r), c.mult) for i, c in enumerate(deck.cards)]


def _max_path_length(cards) -> int:
    return max_induced_path_length(c.g for c in cards)


def _rev_mask(m: int, length: int) -> int:
    out = 0
    for i in range(length):
        if m >> i & 1:
            out |= 1 << (length - 1 - i)
    return out


def _mask_on(adj_row: int, verts) -> int:
    m = 0
    for i, v in enumerate(verts):
        if adj_row >> v & 1:
            m |= 1 << i
    return m


# --- shared steps A3 to A8 ---------------------------------------------------------

@dataclass
class _Anchored:
    card: _Card
    anchor: tuple               # card vertex for each anchor label
    sig: dict                   # signature -> list of card vertices


def _anchor_cards(d0) -> list:
    out = []
    for card, anchor in d0:
        aset = set(anchor)
        sig: dict = {}
        for x in range(card.g.n):
            if x not in aset:
                sig.setdefault(_mask_on(card.g.adj[x], anchor), []).append(x)
        out.append(_Anchored(card, tuple(anchor), sig))
    return out


def _extend_from_anchor(H: ColouredGraph, d0, n: int, k: int, consts: Constants, stats: dict) -> ColouredGraph:
    """Steps A3-A8 for an anchor graph H whose labelled copy is known in every card of d0."""
    a = H.n
    if a == n:
        return H
    if a >= k:
        raise _Reject("A3", "the anchor fills every card")
    cards = _anchor_cards(d0)
    for ac in cards:
        if any(len(v) > 2 for v in ac.sig.values()):
            raise _Reject("A2-violation", "three vertices share a neighbourhood in the anchor")

    # A3: signatures carried by a single vertex of the hidden graph
    need = math.comb(n - a - 1, k - a - 1)
    seen: Counter = Counter()
    doubled = set()
    colour: dict = {}
    for ac in cards:
        for s, xs in ac.sig.items():
            seen[s] += ac.card.mult
            if len(xs) == 2:
                doubled.add(s)
    single = sorted(s for s, c in seen.items() if c == need and s not in doubled)
    for s in single:
        cols = {ac.card.g.colours[ac.sig[s][0]] for ac in cards if s in ac.sig}
        if len(cols) != 1:
            raise _Reject("A3", f"inconsistent colour for signature {s:#x}")
        colour[s] = cols.pop()
    stats["distinguishable"] = len(single)
    if len(single) < consts.c1 * n:
        raise _Reject("A3", f"{len(single)} distinguishable vertices < {consts.c1} * {n}")

    # output labels: anchor, then single signatures, then pairs
    vid = {s: a + i for i, s in enumerate(single)}
    rows = [0] * n
    cols = [0] * n
    if a + len(single) > n:
        raise _Reject("A3", "more vertices than n")

    def edge(u, v):
        rows[u] |= 1 << v
        rows[v] |= 1 << u

    for u in range(a):
        rows[u] = H.adj[u]
        cols[u] = H.colours[u]
    for s in single:
        cols[vid[s]] = colour[s]
        for i in range(a):
            if s >> i & 1:
                edge(vid[s], i)

    # A4: edges inside the distinguishable set, from the first card holding both ends
    todo = set(itertools.combinations(single, 2))
    for ac in cards:
        if not todo:
            break
        here = [s for s in single if s in ac.sig]
        for s, t in itertools.combinations(here, 2):
            if (s, t) in todo:
                todo.discard((s, t))
                if ac.card.g.has_edge(ac.sig[s][0], ac.sig[t][0]):
                    edge(vid[s], vid[t])
    if todo:
        raise _Reject("A4", f"{len(todo)} pairs of distinguishable vertices never share a card")

    # A5: signatures shared by two vertices
    pairs = sorted(doubled)
    unexplained = set(seen) - set(single) - doubled
    if unexplained:
        raise _Reject("A5", f"{len(unexplained)} neighbourhood classes are neither single nor paired")
    if a + len(single) + 2 * len(pairs) != n:
        raise _Reject("A5", f"vertex count {a + len(single) + 2 * len(pairs)} != {n}")
    stats["pairs"] = len(pairs)
    base = a + len(single)
    pid = {s: (base + 2 * i, base + 2 * i + 1) for i, s in enumerate(pairs)}
    for s in pairs:
        for i in range(a):
            if s >> i & 1:
                edge(pid[s][0], i)
                edge(pid[s][1], i)

    # A6: a distinguishable witness adjacent to exactly one member of each pair
    witness: dict = {}
    for s in pairs:
        for ac in cards:
            xs = ac.sig.get(s)
            if xs is None or len(xs) != 2:
                continue
            g = ac.card.g
            for w in single:
                if w in ac.sig:
                    y = ac.sig[w][0]
                    e0, e1 = g.has_edge(xs[0], y), g.has_edge(xs[1], y)
                    if e0 != e1:
                        u1, u2 = (xs[0], xs[1]) if e0 else (xs[1], xs[0])
                        witness[s] = w
                        cols[pid[s][0]] = g.colours[u1]
                        cols[pid[s][1]] = g.colours[u2]
                        edge(pid[s][0], vid[w])
                        if g.has_edge(u1, u2):
                            edge(pid[s][0], pid[s][1])
                        break
            if s in witness:
                break
        if s not in witness:
            raise _Reject("A6", f"no witness for the pair with signature {s:#x}")

    def oriented(ac, s):
        # members of pair s in this card, first one adjacent to the witness
        xs = ac.sig[s]
        y = ac.sig[witness[s]][0]
        return (xs[0], xs[1]) if ac.card.g.has_edge(xs[0], y) else (xs[1], xs[0])

    def holds(ac, s):
        xs = ac.sig.get(s)
        return xs is not None and len(xs) == 2 and witness[s] in ac.sig

    # A7: pair members against distinguishable vertices
    for s in pairs:
        for u in single:
            if u == witness[s]:
                continue
            for ac in cards:
                if u in ac.sig and holds(ac, s):
                    y = ac.sig[u][0]
                    for j, x in enumerate(oriented(ac, s)):
                        if ac.card.g.has_edge(x, y):
                            edge(pid[s][j], vid[u])
                    break
            else:
                raise _Reject("A7", f"no card holds pair {s:#x}, its witness and {u:#x}")

    # A8: pair members against each other
    for s, t in itertools.combinations(pairs, 2):
        for ac in cards:
            if holds(ac, s) and holds(ac, t):
                ps, pt = oriented(ac, s), oriented(ac, t)
                for i, x in enumerate(ps):
                    for j, y in enumerate(pt):
                        if ac.card.g.has_edge(x, y):
                            edge(pid[s][i], pid[t][j])
                break
        else:
            raise _Reject("A8", f"no card holds pairs {s:#x} and {t:#x} with their witnesses")

    return ColouredGraph(n, tuple(rows), tuple(cols), H.r)


def _self_check(out: ColouredGraph, deck: GraphDeck):
    if full_k_deck(out, deck.k, r=deck.r) != deck:
        raise _Reject("self-check", "the output's deck differs from the input deck")


# --- algorithm A ------------------------------------------------------------------

def _a2_candidates(cards, ell):
    """Coloured l-path classes, keyed by the colour sequence read in its
    smaller direction; asymmetric classes only."""
    occ: dict = {}
    for c in cards:
        cols = c.g.colours
        for p in induced_paths(c.g, ell):
            seq = tuple(cols[v] for v in p)
            rev = seq[::-1]
            if seq == rev:
                continue
            if rev < seq:
                seq, p = rev, p[::-1]
            occ.setdefault(seq, {}).setdefault(c.idx, []).append(p)
    return occ


def algorithm_A(deck: GraphDeck, constants: Constants | None = None, self_check: bool = True) -> GraphReconResult:
    consts = constants or Constants()
    n, k = deck.n, deck.k
    stats: dict = {}
    cards = _deck_cards(deck)
    ell = _max_path_length(cards)
    stats["ell"] = ell
    if ell > k - consts.slack_a:
        return GraphReconResult(REJECT, stage="A1", reason=f"l={ell} > k-{consts.slack_a}={k - consts.slack_a}",
                                stats=stats)
    occ = _a2_candidates(cards, ell)
    need = math.comb(n - ell, k - ell)
    last = _Reject("A2", "no coloured path class qualifies")
    tried = 0
    for seq in sorted(occ):
        where = occ[seq]
        if any(len(ps) != 1 for ps in where.values()):
            continue
        if sum(cards[i].mult for i in where) != need:
            continue
        tried += 1
        H = ColouredGraph.from_edges(ell, [(i, i + 1) for i in range(ell - 1)], seq, deck.r)
        d0 = [(cards[i], where[i][0]) for i in sorted(where)]
        try:
            out = _extend_from_anchor(H, d0, n, k, consts, stats)
            if self_check:
                _self_check(out, deck)
        except _Reject as e:
            last = e
            continue
        stats["candidates_tried"] = tried
        stats["anchor"] = list(seq)
        return GraphReconResult(RECONSTRUCTED, graph=out, stats=stats)
    stats["candidates_tried"] = tried
    return GraphReconResult(REJECT, stage=last.stage, reason=last.reason, stats=stats)


# --- algorithm B ------------------------------------------------------------------

def _path_classes(g, P):
    """Neighbourhood mask (in P's order) of every vertex outside P, and the
    reversal-invariant class key of each."""
    pset = set(P)
    L = len(P)
    masks = {}
    for x in range(g.n):
        if x not in pset:
            masks[x] = _mask_on(g.adj[x], P)
    keys = {x: min(m, _rev_mask(m, L)) for x, m in masks.items()}
    return masks, keys


def _triple_key(ms, L):
    fwd = tuple(sorted(ms))
    rev = tuple(sorted(_rev_mask(m, L) for m in ms))
    return min(fwd, rev)


def _triple_occurs(T, masks_present: set, L) -> bool:
    for orient in (T, tuple(_rev_mask(m, L) for m in T)):
        if all(m in masks_present for m in orient):
            return True
    return False


def algorithm_B(deck: GraphDeck, constants: Constants | None = None, self_check: bool = True) -> GraphReconResult:
    consts = constants or Constants()
    n, k = deck.n, deck.k
    stats: dict = {}
    cards = _deck_cards(deck)
    if any(any(c.g.colours) for c in cards):
        raise InvalidParameter("algorithm B expects an uncoloured deck")
    ell = _max_path_length(cards)
    stats["ell"] = ell
    if ell > k - consts.slack_b:
        return GraphReconResult(REJECT, stage="B1", reason=f"l={ell} > k-{consts.slack_b}={k - consts.slack_b}",
                                stats=stats)
    if ell + 3 > k:
        return GraphReconResult(REJECT, stage="B2", reason="no card has room for the path and three witnesses",
                                stats=stats)
    L = ell
    occ: dict = {}          # triple key -> list of (card idx, P, (u1,u2,u3))
    per_card = []           # (card, [(P, set of masks present)], clean)
    for c in cards:
        paths = induced_paths(c.g, ell)
        info = []
        for P in paths:
            masks, keys = _path_classes(c.g, P)
            info.append((P, set(masks.values()) | {_rev_mask(m, L) for m in masks.values()}))
        per_card.append((c, info))
        if len(paths) != 1:
            continue
        P = paths[0]
        masks, keys = _path_classes(c.g, P)
        kc = Counter(keys.values())
        uniq = [x for x in sorted(masks) if kc[keys[x]] == 1]
        for tri in itertools.combinations(uniq, 3):
            T = _triple_key([masks[x] for x in tri], L)
            occ.setdefault(T, []).append((c.idx, P, tri))
    need = math.comb(n - ell - 3, k - ell - 3)
    last = _Reject("B2", "no path-and-witness anchor qualifies")
    tried = 0
    for T in sorted(occ):
        hits = occ[T]
        where = {}
        for i, P, tri in hits:
            where.setdefault(i, []).append((P, tri))
        if any(len(v) != 1 for v in where.values()):
            continue
        if sum(cards[i].mult for i in where) != need:
            continue
        # no foreign card may contain the same path-and-witness pattern
        if any(c.idx not in where and any(_triple_occurs(T, ms, L) for _, ms in info)
               for c, info in per_card):
            continue
        # no three vertices identical with respect to P, asymmetric anchor graph
        ok = True
        forms = set()
        d0 = []
        for i in sorted(where):
            P, tri = where[i][0]
            g = cards[i].g
            _, keys = _path_classes(g, P)
            if max(Counter(keys.values()).values(), default=0) > 2:
                ok = False
                break
            verts = list(P) + list(tri)
            Hd = g.induced(verts)
            if not is_asymmetric(Hd):
                ok = False
                break
            forms.add(canonical_form(Hd))
            lab = canonical_labelling(Hd)
            d0.append((cards[i], tuple(verts[j] for j in lab)))
        if not ok or len(forms) != 1:
            continue
        tried += 1
        H = decode_canonical(forms.pop(), deck.r)
        try:
            out = _extend_from_anchor(H, d0, n, k, consts, stats)
            if self_check:
                _self_check(out, deck)
        except _Reject as e:
            last = e
            continue
        stats["candidates_tried"] = tried
        return GraphReconResult(RECONSTRUCTED, graph=out, stats=stats)
    stats["candidates_tried"] = tried
    return GraphReconResult(REJECT, stage=last.stage if tried else "B2", reason=last.reason, stats=stats)


# --- preconditions -----------------------------------------------------------------

@dataclass
class PreconditionReport:
    predicates: dict            # name -> bool
    evidence: dict
    constants: Constants

    @property
    def passed(self) -> bool:
        return all(self.predicates.values())


def _neighbourhood_difference(g: ColouredGraph, c2: float):
    need = c2 * g.n
    worst = None
    for u in range(g.n):
        for v in range(g.n):
            if u != v:
                cnt = (g.adj[u] & ~g.adj[v] & ~(1 << v)).bit_count()
                if worst is None or cnt < worst[0]:
                    worst = (cnt, u, v)
    if worst is None:
        return True, None
    return worst[0] >= need, worst


def _p_stats(g, P):
    """Distinguishable vertices and the largest identical class w.r.t. P."""
    masks, keys = _path_classes(g, P)
    kc = Counter(keys.values())
    dist = [x for x in masks if kc[keys[x]] == 1]
    return dist, max(kc.values(), default=0), masks, keys


def check_colour_preconditions(g: ColouredGraph, k: int, constants: Constants | None = None) -> PreconditionReport:
    consts = constants or Constants()
    ell, _ = longest_induced_path(g)
    paths = induced_paths(g, ell)
    seqs = Counter()
    for p in paths:
        s = tuple(g.colours[v] for v in p)
        seqs[min(s, s[::-1])] += 1
    best = None
    for p in sorted(paths, key=lambda p: min(tuple(g.colours[v] for v in p), tuple(g.colours[v] for v in p[::-1]))):
        s = tuple(g.colours[v] for v in p)
        uniq = s != s[::-1] and seqs[min(s, s[::-1])] == 1
        dist, top, _, _ = _p_stats(g, p)
        preds = (uniq, len(dist) >= consts.c1 * g.n, top <= 2)
        score = sum(preds)
        if best is None or score > best[0]:
            best = (score, p, preds, len(dist), top)
        if all(preds):
            break
    nd_ok, worst = _neighbourhood_difference(g, consts.c2)
    _, p, preds, ndist, top = best
    return PreconditionReport(
        {"path_length": ell <= k - consts.slack_a,
         "path_unique_asymmetric": preds[0],
         "distinguishable": preds[1],
         "no_triple": preds[2],
         "neighbourhood_difference": nd_ok},
        {"ell": ell, "path": list(p), "distinguishable": ndist, "largest_class": top,
         "worst_pair": worst, "n_paths": len(paths)},
        consts)


def check_graph_preconditions(g: ColouredGraph, k: int, constants: Constants | None = None) -> PreconditionReport:
    consts = constants or Constants()
    g = g.uncoloured()
    ell, _ = longest_induced_path(g)
    paths = induced_paths(g, ell)
    best = None
    for P in paths:
        pset = set(P)
        others = [Q for Q in paths if Q != P]
        overlap_ok = all(len(pset & set(Q)) <= 1 for Q in others)
        dist, top, masks, keys = _p_stats(g, P)
        found = None
        for tri in itertools.combinations(sorted(dist), 3):
            vs = set(P) | set(tri)
            if not is_asymmetric(g.induced(list(P) + list(tri))):
                continue
            if any(len(vs | set(Q)) <= k for Q in others):
                continue
            # every other path fails to see at least one witness
            sep = True
            for Q in others:
                _, qkeys = _path_classes(g, Q)
                present = set(qkeys.values())
                if all(keys[u] in present for u in tri):
                    sep = False
                    break
            if sep:
                found = tri
                break
        preds = (overlap_ok, found is not None, len(dist) >= consts.c1 * g.n, top <= 2)
        score = sum(preds)
        if best is None or score > best[0]:
            best = (score, P, found, preds, len(dist), top)
        if all(preds):
            break
    nd_ok, worst = _neighbourhood_difference(g, consts.c2)
    if best is None:
        best = (0, (), None, (False,) * 4, 0, 0)
    _, P, found, preds, ndist, top = best
    return PreconditionReport(
        {"path_length": ell <= k - consts.slack_b,
         "paths_overlap": preds[0],
         "witnesses": preds[1],
         "distinguishable": preds[2],
         "no_triple": preds[3],
         "neighbourhood_difference": nd_ok},
        {"ell": ell, "path": list(P), "witnesses": list(found) if found else None,
         "distinguishable": ndist, "largest_class": top, "worst_pair": worst, "n_paths": len(paths)},
        consts)


# --- oracle ------------------------------------------------------------------------

def oracle_reconstructible(g: ColouredGraph, k: int, r: int | None = None, budget: int = 10_000_000) -> bool:
    """True iff every colouring of g's underlying graph with the same full k-deck
    is colour-isomorphic to g."""
    r = r or g.r
    cost = r ** g.n * math.comb(g.n, k)
    if cost > budget:
        raise InvalidParameter(f"oracle cost {cost} exceeds budget {budget}")
    target = full_k_deck(g, k, r=r)
    form = canonical_form(g)
    counts = Counter(g.colours)
    for cols in itertools.product(range(r), repeat=g.n):
        # every vertex lies in the same number of cards, so the deck fixes colour counts
        if Counter(cols) != counts:
            continue
        h = ColouredGraph(g.n, g.adj, cols, r)
        if full_k_deck(h, k, r=r) == target and canonical_form(h) != form:
            return False
    return True
