"""Strand-displacement event recorders: gate compilation, reaction
dynamics, sequencing-style readout and preorder reconstruction."""

from .model import (
    Domain,
    Duplex,
    Soup,
    Species,
    Strand,
    canonicalize,
    parse_species,
    render_ascii,
    render_species,
)
from .engine import RateClass, Reaction, apply, enumerate_reactions, reachable_final_soups

__all__ = [
    "Domain",
    "Duplex",
    "Soup",
    "Species",
    "Strand",
    "canonicalize",
    "parse_species",
    "render_ascii",
    "render_species",
    "RateClass",
    "Reaction",
    "apply",
    "enumerate_reactions",
    "reachable_final_soups",
]

__version__ = "0.1.0"
