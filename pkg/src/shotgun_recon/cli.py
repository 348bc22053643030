"""Command line entry point: ``shotgun-recon <subcommand>``.

Exit codes: 0 success, 2 ambiguous or rejected, 3 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import bounds, rng
from .graph_recon import Constants, algorithm_A, algorithm_B, oracle_reconstructible
from .graphs import (full_k_deck, graph_to_json, random_coloured_graph, read_graph, read_graph_deck,
                     write_graph, write_graph_deck)
from .grid import (LATTICE, ORIENTED, TORUS, UNORIENTED, GridShape, InvalidParameter, generate_deck,
                   random_grid_colouring, read_colouring, read_deck, write_colouring, write_deck)
from .grid_recon import reconstruct, reconstruct_verified
from .harness import TrialConfig, exhaustive_grid_oracle, run_trials
from .rainbow import (BudgetExceeded, build_aux_digraph, find_rainbow_witness_any_direction,
                      rainbow_expectation_bound)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 2, 3


def _emit(args, obj):
    text = json.dumps(obj, indent=2, default=str)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _constants(text):
    if not text:
        return Constants()
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 2:
        raise InvalidParameter("--constants expects c1,c2")
    return Constants(c1=parts[0], c2=parts[1])


# --- subcommands -----------------------------------------------------------------

def cmd_grid_deck(args):
    shape = GridShape(args.d, args.n, TORUS if args.torus else LATTICE)
    col = random_grid_colouring(shape, args.r, args.seed)
    deck = generate_deck(col, args.k, UNORIENTED if args.unoriented else ORIENTED,
                         shuffle_seed=rng.derive_seed(args.seed, 2))
    if not args.out:
        raise InvalidParameter("grid-deck needs --out")
    write_deck(deck, args.out)
    if args.colouring_out:
        write_colouring(col, args.colouring_out)
    return EXIT_OK


def cmd_grid_recon(args):
    deck = read_deck(args.deck)
    if args.no_verify:
        res = reconstruct(deck, strategy=args.strategy, seed=args.seed)
    else:
        res = reconstruct_verified(deck, args.strategy, seed=args.seed, max_attempts=args.max_attempts)
    if args.stats:
        with open(args.stats, "w") as fh:
            json.dump({"outcome": res.outcome, "stage": res.stage, "reason": res.reason, **res.stats}, fh)
    if not res.ok:
        print(f"ambiguous at {res.stage}: {res.reason}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        write_colouring(res.colouring, args.out)
    else:
        print(json.dumps({"d": deck.d, "n": deck.n, "r": deck.r, "cells": res.colouring.cells.tolist()}))
    return EXIT_OK


def _trials(args, mode):
    cfg = TrialConfig(mode=mode, d=args.d, n=args.n, k=args.k, r=args.r, trials=args.trials,
                      seed=args.seed, workers=args.workers)
    if mode.startswith("grid"):
        cfg.strategy = args.strategy
        cfg.inject = args.inject
        cfg.rainbow = args.rainbow
        cfg.verify = not args.no_verify
        cfg.max_attempts = args.max_attempts
    else:
        cfg.algorithm = args.algorithm
        cfg.constants = _constants(args.constants)
    report = run_trials(cfg)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_grid_trials(args):
    return _trials(args, args.mode)


def cmd_graph_trials(args):
    return _trials(args, args.mode)


def cmd_graph_deck(args):
    g = read_graph(args.graph) if args.graph else random_coloured_graph(args.n, args.r, args.seed)
    deck = full_k_deck(g, args.k)
    if not args.out:
        raise InvalidParameter("graph-deck needs --out")
    write_graph_deck(args.out, deck)
    if args.graph_out:
        write_graph(args.graph_out, g)
    return EXIT_OK


def _graph_recon(args, algo):
    deck = read_graph_deck(args.deck)
    res = algo(deck, _constants(args.constants))
    if args.stats:
        with open(args.stats, "w") as fh:
            json.dump({"outcome": res.outcome, "stage": res.stage, "reason": res.reason, **res.stats}, fh)
    if not res.ok:
        print(f"reject at {res.stage}: {res.reason}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        write_graph(args.out, res.graph)
    else:
        print(json.dumps(graph_to_json(res.graph)))
    return EXIT_OK


def cmd_graph_recon_colour(args):
    return _graph_recon(args, algorithm_A)


def cmd_graph_recon_graph(args):
    return _graph_recon(args, algorithm_B)


def cmd_bounds(args):
    out = {}
    if args.kind in ("threshold", "grid-threshold"):
        out = asdict(bounds.grid_threshold(args.d, args.r, args.n, args.eps))
    elif args.kind == "grid-zero":
        rep = bounds.grid_zero_report(args.d, args.r, args.n, args.k)
        out = {"verdict": rep.verdict.value, "log2_decks": float(rep.log2_decks.log2),
               "log2_decks_radius": float(rep.log2_decks.radius), "log2_colourings": rep.log2_colourings,
               "margin": rep.margin}
    elif args.kind in ("graph-count", "graph-counts"):
        rep = bounds.graph_deck_count_bounds(args.n, args.k, args.r)
        out = {"log2_F": float(rep.log2_F.log2), "log2_F_tilde": float(rep.log2_F_tilde.log2),
               "colour_verdict": rep.colour_verdict, "graph_verdict": rep.graph_verdict}
    elif args.kind == "path-window":
        out = {"window": list(bounds.path_length_window(args.n))}
    _emit(args, out)
    return EXIT_OK


def cmd_rainbow_check(args):
    if args.colouring:
        col = read_colouring(args.colouring)
    else:
        col = random_grid_colouring(GridShape(args.d, args.n), args.r, args.seed)
    d, n, r = col.shape.d, col.shape.n, col.r
    b = rainbow_expectation_bound(d, r, n, args.k)
    try:
        w = find_rainbow_witness_any_direction(col, args.k, args.budget)
        found = w is not None
        wit = None if w is None else {"vertices": [list(v) for v in w.vertices], "colours": w.colours,
                                      "direction": list(w.direction)}
    except BudgetExceeded as exc:
        found, wit = None, str(exc)
    _emit(args, {"witness_found": found, "witness": wit, "bound": b.value, "log10_bound": b.log10,
                 "red_edges": build_aux_digraph(col, args.k).red_edge_count()})
    return EXIT_OK


def cmd_oracle(args):
    if args.kind == "grid":
        t = exhaustive_grid_oracle(args.n, args.k, args.r)
        _emit(args, {"colourings": int(len(t.reconstructible)), "reconstructible_fraction": t.fraction,
                     "deck_classes": int(t.deck_class.max() + 1)})
        return EXIT_OK
    if not args.graph:
        raise InvalidParameter("oracle --kind graph needs --graph")
    g = read_graph(args.graph)
    ok = oracle_reconstructible(g, args.k)
    _emit(args, {"reconstructible": ok})
    return EXIT_OK if ok else EXIT_FAIL


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(defaults):
        g = argparse.ArgumentParser(add_help=False)
        # subcommands repeat the flags with suppressed defaults so either position works
        pick = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        g.add_argument("--seed", type=int, default=pick(0))
        g.add_argument("--workers", type=int, default=pick(1))
        g.add_argument("--out", default=pick(None))
        g.add_argument("--format", choices=("json", "csv"), default=pick("json"))
        return g

    common = global_flags(False)
    p = argparse.ArgumentParser(prog="shotgun-recon", parents=[global_flags(True)],
                                description="Reconstruct grid colourings and graphs from decks.")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_params(sp, n=64, k=7):
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--n", type=int, default=n)
        sp.add_argument("--k", type=int, default=k)
        sp.add_argument("--r", type=int, default=2)

    sp = sub.add_parser("grid-deck", parents=[common])
    grid_params(sp)
    sp.add_argument("--torus", action="store_true")
    sp.add_argument("--unoriented", action="store_true")
    sp.add_argument("--colouring-out", default=None)
    sp.set_defaults(fn=cmd_grid_deck)

    sp = sub.add_parser("grid-recon", parents=[common])
    sp.add_argument("--deck", required=True)
    sp.add_argument("--strategy", default="white",
                    choices=("random", "white", "almost-white", "exhaustive", "exhaustive-next"))
    sp.add_argument("--verify", dest="no_verify", action="store_false", default=False)
    sp.add_argument("--no-verify", dest="no_verify", action="store_true")
    sp.add_argument("--max-attempts", type=int, default=1)
    sp.add_argument("--stats", default=None)
    sp.set_defaults(fn=cmd_grid_recon)

    sp = sub.add_parser("grid-trials", parents=[common])
    grid_params(sp)
    sp.add_argument("--mode", choices=("grid", "grid-torus", "grid-unoriented"), default="grid")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--strategy", default="white")
    sp.add_argument("--inject", choices=("", "monochromatic"), default="")
    sp.add_argument("--rainbow", action="store_true")
    sp.add_argument("--no-verify", action="store_true")
    sp.add_argument("--max-attempts", type=int, default=1)
    sp.set_defaults(fn=cmd_grid_trials)

    sp = sub.add_parser("graph-deck", parents=[common])
    sp.add_argument("--graph", default=None, help="graph file; a random graph is drawn otherwise")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--graph-out", default=None)
    sp.set_defaults(fn=cmd_graph_deck)

    for name, fn in (("graph-recon-colour", cmd_graph_recon_colour), ("graph-recon-graph", cmd_graph_recon_graph)):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--deck", required=True)
        sp.add_argument("--constants", default=None, help="c1,c2")
        sp.add_argument("--stats", default=None)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("graph-trials", parents=[common])
    sp.add_argument("--mode", choices=("graph-colour", "graph-uncoloured"), default="graph-colour")
    sp.add_argument("--algorithm", choices=("A", "B"), default="A")
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--k", type=int, default=14)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--d", type=int, default=0, help=argparse.SUPPRESS)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--constants", default=None, help="c1,c2")
    sp.set_defaults(fn=cmd_graph_trials)

    sp = sub.add_parser("bounds", parents=[common])
    sp.add_argument("--kind", choices=("threshold", "grid-threshold", "grid-zero", "graph-count",
                                       "graph-counts", "path-window"), default="threshold")
    grid_params(sp, n=256, k=2)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("rainbow-check", parents=[common])
    grid_params(sp, n=256, k=7)
    sp.add_argument("--colouring", default=None)
    sp.add_argument("--budget", type=int, default=10_000_000)
    sp.add_argument("--report", dest="out", default=argparse.SUPPRESS, help="same as --out")
    sp.set_defaults(fn=cmd_rainbow_check)

    sp = sub.add_parser("oracle", parents=[common])
    sp.add_argument("--kind", choices=("grid", "graph"), default="grid")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--graph", default=None)
    sp.set_defaults(fn=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except (InvalidParameter, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
