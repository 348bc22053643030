"""The auxiliary digraph on subgrid origins and its rainbow paths.

Vertices are the origins of k-subgrids of a lattice colouring.  For a signed
unit vector e there is a blue edge x -> x+e, and a red edge x -> y whenever the
face of x towards e equals the face of y towards -e (and y is neither x nor
x+e).  A rainbow path uses both colours.  Short rainbow paths that return to
the neighbourhood of their start are what makes look-ahead extensions fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import LATTICE, GridColouring, InvalidParameter, _all_windows, face_slice

DEFAULT_BUDGET = 10_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass(eq=False)
class AuxDigraph:
    d: int
    n: int
    k: int
    axis: int           # 0-based
    sign: int           # +1 or -1
    m: int              # origins per axis
    face_out: list      # x -> bytes of x's face towards e
    face_in: dict       # bytes of y's face towards -e -> list of y
    coords: np.ndarray  # flat id -> origin tuple
    face_back: list     # y -> bytes of y's face towards -e

    def blue(self, x: int) -> int | None:
        c = int(self.coords[x, self.axis]) + self.sign
        if 0 <= c < self.m:
            return x + self.sign * self.m ** (self.d - 1 - self.axis)
        return None

    def red(self, x: int) -> list:
        b = self.blue(x)
        return [y for y in self.face_in.get(self.face_out[x], ()) if y != x and y != b]

    def is_red(self, x: int, y: int) -> bool:
        return y in self.red(x)

    def red_edge_count(self) -> int:
        return sum(len(self.red(x)) for x in range(self.m ** self.d))

    def in_neighbourhood(self, x: int, y: int) -> bool:
        """True iff the k-subgrids at x and y share a cell."""
        return bool(np.abs(self.coords[x] - self.coords[y]).max() <= self.k - 1)

    def origin(self, x: int) -> tuple:
        return tuple(int(c) for c in self.coords[x])

    def vertex(self, origin) -> int:
        v = 0
        for c in origin:
            v = v * self.m + int(c)
        return v


def build_aux_digraph(colouring: GridColouring, k: int, axis: int = 0, sign: int = +1) -> AuxDigraph:
    shape = colouring.shape
    if shape.topology != LATTICE:
        raise InvalidParameter("the auxiliary digraph is defined for lattices only")
    if not 1 <= k <= shape.n:
        raise InvalidParameter(f"need 1 <= k <= n, got k={k}")
    if sign not in (+1, -1) or not 0 <= axis < shape.d:
        raise InvalidParameter("bad direction")
    d = shape.d
    cells, origins = _all_windows(colouring, k)
    N = cells.shape[0]
    blocks = cells.reshape((N,) + (k,) * d)

    def rows(face_sign):
        sl = (slice(None),) + face_slice(d, k, axis, 0 if face_sign > 0 else 1)
        fa = np.ascontiguousarray(blocks[sl]).reshape(N, -1)
        L = fa.shape[1] * fa.itemsize
        buf = fa.tobytes()
        return [buf[i * L:(i + 1) * L] for i in range(N)]

    out, back = rows(sign), rows(-sign)
    face_in: dict = {}
    for y, b in enumerate(back):
        face_in.setdefault(b, []).append(y)
    return AuxDigraph(d, shape.n, k, axis, sign, shape.n - k + 1, out, face_in, origins, back)


@dataclass
class RainbowPath:
    vertices: list                 # origin tuples x_1 .. x_l
    colours: list                  # "blue" / "red" per edge
    blue_runs: list = field(default_factory=list)
    h: int = 0
    direction: tuple = (0, 1)      # (axis, sign)

    def __post_init__(self):
        runs, cur = [], 0
        for c in self.colours:
            if c == "blue":
                cur += 1
            else:
                runs.append(cur)
                cur = 0
        runs.append(cur)
        self.blue_runs = runs
        self.h = sum(1 for c in self.colours if c == "red")


def validate_path(aux: AuxDigraph, path: RainbowPath, k: int) -> list:
    """Independent re-check of a witness; returns the list of violated conditions."""
    bad = []
    vs = [aux.vertex(o) for o in path.vertices]
    if len(path.colours) != len(vs) - 1:
        bad.append("colour count")
    if "blue" not in path.colours:
        bad.append("no blue edge")
    if "red" not in path.colours:
        bad.append("no red edge")
    if len(vs) > 3 * k:
        bad.append("too long")
    if len(set(vs)) != len(vs):
        bad.append("repeated vertex")
    for (x, y), c in zip(zip(vs, vs[1:]), path.colours):
        if c == "blue" and aux.blue(x) != y:
            bad.append(f"not blue {x}->{y}")
        if c == "red" and not (aux.face_out[x] == aux.face_back[y] and y != x and y != aux.blue(x)):
            bad.append(f"not red {x}->{y}")
    if vs and not aux.in_neighbourhood(vs[0], vs[-1]):
        bad.append("endpoint outside neighbourhood")
    return bad


def find_rainbow_witness(aux: AuxDigraph, k: int, budget: int = DEFAULT_BUDGET) -> RainbowPath | None:
    """Exhaustive bounded search for a rainbow path of at most 3k vertices whose
    last vertex lies in the neighbourhood of the first.

    Every such path has a first red edge (a, b) and everything before it is a
    blue run ending at a.  The search enumerates red edges and runs a
    depth-first search over continuations from b, trying every blue prefix
    length at each node.  Suffix lengths are deepened one at a time so short
    witnesses are found first.  Raises BudgetExceeded after ``budget`` nodes.
    """
    L = 3 * k
    N = aux.m ** aux.d
    direction = (aux.axis, aux.sign)
    step = aux.sign * aux.m ** (aux.d - 1 - aux.axis)
    edges = []
    for a in range(N):
        reds = aux.red(a)
        if reds:
            c = int(aux.coords[a, aux.axis])
            prefix = [a]
            t = 1
            while t <= L - 2 and 0 <= c - aux.sign * t < aux.m:
                prefix.append(a - step * t)
                t += 1
            edges.append((a, prefix, reds))
    nodes = 0
    for depth in range(1, L):
        for a, prefix, reds in edges:
            if 1 + depth > L:
                continue
            for b in reds:
                stack = [([b], ["red"])]
                while stack:
                    suf, cols = stack.pop()
                    nodes += 1
                    if nodes > budget:
                        raise BudgetExceeded(f"node budget {budget} exhausted")
                    v = suf[-1]
                    if len(suf) < depth:
                        nxt = []
                        bl = aux.blue(v)
                        if bl is not None:
                            nxt.append((bl, "blue"))
                        nxt.extend((y, "red") for y in aux.red(v))
                        for y, col in nxt:
                            if y != a and y not in suf:
                                stack.append((suf + [y], cols + [col]))
                        continue
                    suf_blue = "blue" in cols
                    sufset = set(suf)
                    for t in range(len(prefix)):
                        if t + 1 + len(suf) > L:
                            break
                        if t > 0 and prefix[t] in sufset:
                            break
                        if (t >= 1 or suf_blue) and aux.in_neighbourhood(prefix[t], v):
                            verts = prefix[t::-1] + suf
                            return RainbowPath([aux.origin(x) for x in verts], ["blue"] * t + cols,
                                               direction=direction)
    return None


def find_rainbow_witness_any_direction(colouring: GridColouring, k: int,
                                       budget: int = DEFAULT_BUDGET) -> RainbowPath | None:
    """Search all 2d signed directions; return the first witness found."""
    for axis in range(colouring.shape.d):
        for sign in (+1, -1):
            w = find_rainbow_witness(build_aux_digraph(colouring, k, axis, sign), k, budget)
            if w is not None:
                return w
    return None


def brute_force_witness_exists(aux: AuxDigraph, k: int) -> bool:
    """Enumerate every simple path of at most 3k vertices (small instances only)."""
    L = 3 * k
    N = aux.m ** aux.d

    def succ(v):
        out = []
        bl = aux.blue(v)
        if bl is not None:
            out.append((bl, True))
        out.extend((y, False) for y in aux.red(v))
        return out

    for s in range(N):
        stack = [(s, (s,), False, False)]
        while stack:
            v, path, hb, hr = stack.pop()
            if hb and hr and aux.in_neighbourhood(s, v):
                return True
            if len(path) >= L:
                continue
            for y, is_blue in succ(v):
                if y not in path:
                    stack.append((y, path + (y,), hb or is_blue, hr or not is_blue))
    return False


# --- expectation bound --------------------------------------------------------

@dataclass
class BoundReport:
    value: float        # +inf when q >= 1
    log10: float
    q: float
    log10_q: float
    divergent: bool


def rainbow_expectation_bound(d: int, r: int, n: int, k: int) -> BoundReport:
    """(2k)^d * sum_{l=1}^{3k} sum_{h=1}^{l-1} q^h with q = 3k n^d r^-(k^d - k^(d-1)).

    Evaluated in log domain with closed-form geometric sums.
    """
    if min(d, r, n, k) < 1:
        raise InvalidParameter("parameters must be positive")
    ln_q = math.log(3 * k) + d * math.log(n) - (k ** d - k ** (d - 1)) * math.log(r)
    log10_q = ln_q / math.log(10)
    if ln_q >= 0:
        return BoundReport(math.inf, math.inf, math.exp(min(ln_q, 700.0)), log10_q, True)
    q = math.exp(ln_q)
    # sum_{h=1}^{l-1} q^h = q (1 - q^(l-1)) / (1 - q); expm1/log1p keep tiny q exact
    total = 0.0
    for ell in range(2, 3 * k + 1):
        total += -math.expm1((ell - 1) * ln_q)
    ln_val = d * math.log(2 * k) + ln_q - math.log1p(-q) + math.log(total)
    return BoundReport(math.exp(ln_val), ln_val / math.log(10), q, log10_q, False)


def rainbow_expectation_bound_exact(d: int, r: int, n: int, k: int) -> Fraction:
    """Direct double summation in exact rational arithmetic (test oracle)."""
    q = Fraction(3 * k * n ** d, r ** (k ** d - k ** (d - 1)))
    s = Fraction(0)
    for ell in range(1, 3 * k + 1):
        for h in range(1, ell):
            s += q ** h
    return (2 * k) ** d * s
