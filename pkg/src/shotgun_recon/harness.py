"""Seeded Monte Carlo trials, the tiny-grid exhaustive oracle and a jigsaw
enumerator used as an independent check on small grids."""
from __future__ import annotations

import csv
import io
import itertools
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .graph_recon import Constants, algorithm_A, algorithm_B, check_colour_preconditions, check_graph_preconditions
from .graphs import canonical_form, full_k_deck, random_coloured_graph
from .grid import (LATTICE, ORIENTED, TORUS, UNORIENTED, GridColouring, GridShape, InvalidParameter,
                   decks_equal, generate_deck, grid_symmetries, monochromatic_colouring,
                   random_grid_colouring, transform_colouring)
from .grid_recon import reconstruct, reconstruct_verified
from .rainbow import BudgetExceeded, find_rainbow_witness_any_direction

GRID_MODES = ("grid", "grid-torus", "grid-unoriented")
GRAPH_MODES = ("graph-colour", "graph-uncoloured")
CSV_COLUMNS = ["mode", "d", "n", "k", "r", "seed", "outcome", "stage", "runtime_ms", "lookups", "max_width"]


class FalsePositive(AssertionError):
    pass


@dataclass
class TrialConfig:
    mode: str = "grid"
    d: int = 2
    n: int = 64
    k: int = 7
    r: int = 2
    trials: int = 10
    seed: int = 0
    strategy: str = "white"
    max_attempts: int = 1
    verify: bool = True             # torus trials skip verification by default
    inject: str = ""                # "monochromatic" forces constant colourings
    rainbow: bool = False           # search for a rainbow witness on each colouring
    algorithm: str = "A"            # graph modes: "A" or "B"
    constants: Constants = field(default_factory=Constants)
    workers: int = 1

    def validate(self):
        if self.mode not in GRID_MODES + GRAPH_MODES:
            raise InvalidParameter(f"unknown mode {self.mode!r}")
        if self.trials < 0:
            raise InvalidParameter("trials must be >= 0")
        if self.mode in GRID_MODES:
            if self.n < 3 * self.k:
                raise InvalidParameter(f"need n >= 3k, got n={self.n}, k={self.k}")
            if self.d < 2 or self.r < 2:
                raise InvalidParameter("grid trials need d >= 2 and r >= 2")
        else:
            if not 1 <= self.k <= self.n:
                raise InvalidParameter("need 1 <= k <= n")
            if self.algorithm not in ("A", "B"):
                raise InvalidParameter("algorithm must be A or B")


@dataclass
class TrialRecord:
    seed: int
    outcome: str            # success / ambiguous / reject / error / false-positive
    stage: str = ""
    reason: str = ""
    runtime_ms: float = 0.0
    lookups: int = 0
    max_width: int = 0
    rainbow: bool | None = None
    precondition: bool | None = None


@dataclass
class TrialReport:
    config: TrialConfig
    records: list = field(default_factory=list)

    def _rate(self, what):
        return sum(r.outcome == what for r in self.records) / len(self.records) if self.records else 0.0

    @property
    def successes(self) -> int:
        return sum(r.outcome == "success" for r in self.records)

    @property
    def success_rate(self) -> float:
        return self._rate("success")

    @property
    def ambiguity_rate(self) -> float:
        return self._rate("ambiguous")

    @property
    def false_positives(self) -> int:
        return sum(r.outcome == "false-positive" for r in self.records)

    @property
    def mean_runtime_ms(self) -> float:
        return float(np.mean([r.runtime_ms for r in self.records])) if self.records else 0.0

    def to_json(self, timing: bool = True) -> str:
        recs = []
        for r in self.records:
            d = asdict(r)
            if not timing:
                d.pop("runtime_ms")
            recs.append(d)
        cfg = asdict(self.config)
        agg = {"trials": len(self.records), "success_rate": self.success_rate,
               "ambiguity_rate": self.ambiguity_rate, "false_positives": self.false_positives}
        if timing:
            agg["mean_runtime_ms"] = self.mean_runtime_ms
        return json.dumps({"config": cfg, "aggregates": agg, "records": recs}, sort_keys=True)

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        c = self.config
        graph = c.mode in GRAPH_MODES
        for r in self.records:
            w.writerow([c.mode, "" if graph else c.d, c.n, c.k, c.r, r.seed, r.outcome, r.stage,
                        f"{r.runtime_ms:.3f}" if timing else "", r.lookups, r.max_width])
        return buf.getvalue()


def trial_seed(master: int, i: int) -> int:
    return rng.derive_seed(master, i)


def _map(fn, items, workers):
    # results come back in submission order, so reports do not depend on scheduling
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# --- grids ---------------------------------------------------------------------------

def _same_up_to_symmetry(a: GridColouring, b: GridColouring) -> bool:
    for perm, flips in grid_symmetries(a.shape.d):
        if transform_colouring(a, perm, flips) == b:
            return True
    return False


def _same_up_to_translation(a: GridColouring, b: GridColouring) -> bool:
    ga, gb = a.grid, b.grid
    d = a.shape.d
    for shift in itertools.product(range(a.shape.n), repeat=d):
        if np.array_equal(np.roll(ga, shift, axis=tuple(range(d))), gb):
            return True
    return False


def _grid_trial(args) -> TrialRecord:
    cfg, i = args
    s = trial_seed(cfg.seed, i)
    t0 = time.perf_counter()
    topology = TORUS if cfg.mode == "grid-torus" else LATTICE
    mode = UNORIENTED if cfg.mode == "grid-unoriented" else ORIENTED
    shape = GridShape(cfg.d, cfg.n, topology)
    rec = TrialRecord(seed=s, outcome="error")
    try:
        if cfg.inject == "monochromatic":
            truth = monochromatic_colouring(shape, cfg.r)
        else:
            truth = random_grid_colouring(shape, cfg.r, rng.derive_seed(s, 1))
        deck = generate_deck(truth, cfg.k, mode, shuffle_seed=rng.derive_seed(s, 2))
        if cfg.rainbow and topology == LATTICE:
            try:
                rec.rainbow = find_rainbow_witness_any_direction(truth, cfg.k) is not None
            except BudgetExceeded:
                rec.rainbow = None
        if topology == TORUS and not cfg.verify:
            res = reconstruct(deck, strategy=cfg.strategy, seed=s)
        else:
            res = reconstruct_verified(deck, cfg.strategy, seed=s, max_attempts=cfg.max_attempts)
        rec.lookups = int(res.stats.get("lookups", 0))
        rec.max_width = int(res.stats.get("max_width", 0))
        rec.stage = res.stage
        rec.reason = res.reason
        if not res.ok:
            rec.outcome = "ambiguous"
        else:
            out = res.colouring
            if mode == UNORIENTED:
                good = _same_up_to_symmetry(truth, out)
            elif topology == TORUS:
                good = _same_up_to_translation(truth, out)
            else:
                good = out == truth
            good = good and decks_equal(generate_deck(out, cfg.k, mode), deck)
            rec.outcome = "success" if good else "false-positive"
    except Exception as exc:  # recorded, never aborts the sweep
        rec.outcome = "error"
        rec.reason = f"{type(exc).__name__}: {exc}"
    rec.runtime_ms = (time.perf_counter() - t0) * 1e3
    return rec


def _check_false_positives(report: TrialReport):
    if report.false_positives:
        bad = [r.seed for r in report.records if r.outcome == "false-positive"]
        raise FalsePositive(f"{len(bad)} trials produced a wrong output: seeds {bad}")


def run_grid_trials(config: TrialConfig, strict: bool = True) -> TrialReport:
    config.validate()
    if config.mode not in GRID_MODES:
        raise InvalidParameter(f"{config.mode} is not a grid mode")
    recs = _map(_grid_trial, [(config, i) for i in range(config.trials)], config.workers)
    report = TrialReport(config, recs)
    if strict:
        _check_false_positives(report)
    return report


# --- graphs ---------------------------------------------------------------------------

def _graph_trial(args) -> TrialRecord:
    cfg, i = args
    s = trial_seed(cfg.seed, i)
    t0 = time.perf_counter()
    rec = TrialRecord(seed=s, outcome="error")
    try:
        coloured = cfg.mode == "graph-colour"
        g = random_coloured_graph(cfg.n, cfg.r if coloured else 1, s)
        deck = full_k_deck(g, cfg.k)
        if cfg.algorithm == "A":
            rec.precondition = check_colour_preconditions(g, cfg.k, cfg.constants).passed
            res = algorithm_A(deck, cfg.constants)
        else:
            rec.precondition = check_graph_preconditions(g, cfg.k, cfg.constants).passed
            res = algorithm_B(deck, cfg.constants)
        rec.stage = res.stage
        rec.reason = res.reason
        if res.ok:
            good = (canonical_form(res.graph) == canonical_form(g)
                    and full_k_deck(res.graph, cfg.k) == deck)
            rec.outcome = "success" if good else "false-positive"
        else:
            rec.outcome = "reject"
    except Exception as exc:
        rec.outcome = "error"
        rec.reason = f"{type(exc).__name__}: {exc}"
    rec.runtime_ms = (time.perf_counter() - t0) * 1e3
    return rec


def run_graph_trials(config: TrialConfig, strict: bool = True) -> TrialReport:
    config.validate()
    if config.mode not in GRAPH_MODES:
        raise InvalidParameter(f"{config.mode} is not a graph mode")
    recs = _map(_graph_trial, [(config, i) for i in range(config.trials)], config.workers)
    report = TrialReport(config, recs)
    if strict:
        _check_false_positives(report)
    return report


def run_trials(config: TrialConfig, strict: bool = True) -> TrialReport:
    if config.mode in GRID_MODES:
        return run_grid_trials(config, strict)
    return run_graph_trials(config, strict)


# --- tiny-grid oracle --------------------------------------------------------------------

@dataclass
class OracleTable:
    n: int
    k: int
    r: int
    codes: np.ndarray           # colouring id -> flat cells (row-major, base r digits)
    deck_class: np.ndarray      # colouring id -> class id
    reconstructible: np.ndarray # colouring id -> bool

    @property
    def fraction(self) -> float:
        return float(self.reconstructible.mean())

    def index_of(self, colouring: GridColouring) -> int:
        v = 0
        for c in colouring.cells:
            v = v * self.r + int(c)
        return v


def exhaustive_grid_oracle(n: int, k: int, r: int, d: int = 2, budget: int = 1 << 20) -> OracleTable:
    """Group every r-colouring of the n x n lattice by its oriented k-deck and mark
    a colouring reconstructible iff every colouring sharing its deck is one of its
    2^d d! symmetric images."""
    if d != 2:
        raise InvalidParameter("the exhaustive oracle is implemented for d = 2")
    total = r ** (n * n)
    if total > budget:
        raise InvalidParameter(f"{total} colourings exceed the oracle budget {budget}")
    if not 1 <= k <= n:
        raise InvalidParameter("need 1 <= k <= n")
    ids = np.arange(total, dtype=np.int64)
    cells = np.zeros((total, n * n), dtype=np.int64)
    x = ids.copy()
    for j in range(n * n - 1, -1, -1):
        cells[:, j] = x % r
        x //= r
    grids = cells.reshape(total, n, n)
    m = n - k + 1
    # each card as one integer, then the sorted card list as the deck key
    weights = r ** np.arange(k * k - 1, -1, -1, dtype=np.int64)
    cards = np.empty((total, m * m), dtype=np.int64)
    t = 0
    for i in range(m):
        for j in range(m):
            cards[:, t] = grids[:, i:i + k, j:j + k].reshape(total, k * k) @ weights
            t += 1
    cards.sort(axis=1)
    _, deck_class = np.unique(cards, axis=0, return_inverse=True)
    deck_class = deck_class.reshape(-1)
    # symmetric images as colouring ids
    gw = r ** np.arange(n * n - 1, -1, -1, dtype=np.int64)
    images = []
    for perm, flips in grid_symmetries(2):
        g = np.transpose(grids, (0,) + tuple(p + 1 for p in perm))
        for a in range(2):
            if flips[a]:
                g = np.flip(g, axis=a + 1)
        images.append(g.reshape(total, n * n) @ gw)
    images = np.stack(images, axis=1)
    rec = np.ones(total, dtype=bool)
    order = np.argsort(deck_class, kind="stable")
    bounds = np.flatnonzero(np.diff(deck_class[order])) + 1
    for grp in np.split(order, bounds):
        if len(grp) == 1:
            continue
        members = set(grp.tolist())
        for c in grp:
            if not members <= set(images[c].tolist()):
                rec[c] = False
    return OracleTable(n, k, r, cells, deck_class, rec)


# --- jigsaw enumeration ----------------------------------------------------------------

def jigsaw_solutions(deck, limit: int = 1000, budget: int = 5_000_000) -> list:
    """All lattice colourings (up to ``limit``) whose oriented deck equals ``deck``.

    Cards are placed at origins in row-major order; each placement must agree
    with the cells already fixed.  Independent of the key-index machinery.
    Raises BudgetExceeded after ``budget`` placements.
    """
    if deck.topology != LATTICE or deck.orientation_mode != ORIENTED:
        raise InvalidParameter("jigsaw enumeration needs an oriented lattice deck")
    d, n, k = deck.d, deck.n, deck.k
    if d != 2:
        raise InvalidParameter("jigsaw enumeration is implemented for d = 2")
    m = n - k + 1
    counts = Counter(tuple(int(c) for c in row) for row in deck.cells)
    kinds = sorted(counts)
    blocks = {t: np.array(t).reshape(k, k) for t in kinds}
    canvas = -np.ones((n, n), dtype=np.int64)
    out: list = []
    nodes = [0]

    def place(pos):
        if len(out) >= limit:
            return
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded(f"jigsaw budget {budget} exhausted")
        if pos == m * m:
            out.append(GridColouring(GridShape(2, n), deck.r, canvas.reshape(-1).copy()))
            return
        i, j = divmod(pos, m)
        win = canvas[i:i + k, j:j + k]
        for t in kinds:
            if counts[t] == 0:
                continue
            b = blocks[t]
            fixed = win >= 0
            if np.any(win[fixed] != b[fixed]):
                continue
            saved = win.copy()
            win[...] = b
            counts[t] -= 1
            place(pos + 1)
            counts[t] += 1
            win[...] = saved

    place(0)
    return out
