"""Reconstruction of random grid colourings and random graphs from decks of
small pieces, with the matching counting bounds and a Monte Carlo harness."""

from .grid import (GridColouring, GridDeck, GridShape, InvalidComparison, InvalidParameter, decks_equal,
                   generate_deck, random_grid_colouring)
from .grid_recon import build_key_index, reconstruct, reconstruct_verified
from .graphs import ColouredGraph, GraphDeck, canonical_form, full_k_deck, random_coloured_graph
from .graph_recon import Constants, algorithm_A, algorithm_B

__version__ = "0.1.0"
