"""Closure expansion of a species set into an indexed reaction network.

The simulator drivers (stochastic and exhaustive) run over integer
count vectors against this fixed table instead of re-enumerating
structures, so the hot loop is pure array arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import BoundExceeded, RateClass, Reaction, _pair, finalize
from .model import Soup, Species, Strand, canonicalize, render_species


@dataclass
class IndexedReaction:
    r0: int
    r1: int
    products: tuple[int, ...]
    rate: float
    irreversible: bool
    mechanism: str
    text: str


class ReactionNetwork:
    """All species and composite reactions reachable from a seed set."""

    def __init__(self, species: list[Species], reactions: list[IndexedReaction]):
        self.species = species
        self.index = {render_species(s): i for i, s in enumerate(species)}
        self.reactions = reactions
        n, m = len(species), len(reactions)
        self.r0 = np.array([r.r0 for r in reactions], dtype=np.int32)
        self.r1 = np.array([r.r1 for r in reactions], dtype=np.int32)
        self.same = np.array([r.r0 == r.r1 for r in reactions], dtype=np.uint8)
        self.rate = np.array([r.rate for r in reactions], dtype=np.float64)
        self.irrev = np.array([r.irreversible for r in reactions], dtype=np.uint8)
        upd_off = [0]
        upd_idx: list[int] = []
        upd_val: list[int] = []
        self.delta = np.zeros((m, n), dtype=np.int64) if m * n <= 4_000_000 else None
        for k, r in enumerate(reactions):
            d: dict[int, int] = {}
            d[r.r0] = d.get(r.r0, 0) - 1
            d[r.r1] = d.get(r.r1, 0) - 1
            for p in r.products:
                d[p] = d.get(p, 0) + 1
            items = sorted((i, v) for i, v in d.items() if v)
            for i, v in items:
                upd_idx.append(i)
                upd_val.append(v)
                if self.delta is not None:
                    self.delta[k, i] = v
            upd_off.append(len(upd_idx))
        self.upd_off = np.array(upd_off, dtype=np.int32)
        self.upd_idx = np.array(upd_idx, dtype=np.int32)
        self.upd_val = np.array(upd_val, dtype=np.int64)
        self.irrev_idx = np.nonzero(self.irrev)[0]
        self.rev_idx = np.nonzero(~self.irrev.astype(bool))[0]
        self.need0 = np.where(self.same, 2, 1).astype(np.int64)

    def idx(self, sp: Species) -> int:
        return self.index[render_species(canonicalize(sp))]

    def counts_of(self, soup: Soup) -> np.ndarray:
        v = np.zeros(len(self.species), dtype=np.int64)
        for sp, n in soup.items():
            v[self.idx(sp)] = n
        return v

    def to_soup(self, counts: np.ndarray) -> Soup:
        return Soup({self.species[i]: int(n) for i, n in enumerate(counts) if n})

    def free_marker_indices(self, label: str = "F") -> np.ndarray:
        out = [
            i
            for i, sp in enumerate(self.species)
            if isinstance(sp, Strand) and (sp.m5 == label or sp.m3 == label)
        ]
        return np.array(out, dtype=np.int32)


def build_network(
    seeds: list[Species],
    rates: RateClass = RateClass(),
    max_species: int = 4000,
    max_reactions: int = 40_000,
) -> ReactionNetwork:
    species: list[Species] = []
    seen: dict[str, int] = {}

    def intern(sp: Species) -> int:
        c = canonicalize(sp)
        key = render_species(c)
        if key not in seen:
            seen[key] = len(species)
            species.append(c)
            if len(species) > max_species:
                raise BoundExceeded(f"network exceeded {max_species} species")
        return seen[key]

    for s in seeds:
        intern(s)
    raw: dict = {}
    done_pairs: set[tuple[int, int]] = set()
    work = True
    while work:
        work = False
        snapshot = list(range(len(species)))
        for x in snapshot:
            for y in snapshot:
                if y < x or (x, y) in done_pairs:
                    continue
                done_pairs.add((x, y))
                for r in _pair(species[x], species[y]):
                    if r.key in raw:
                        continue
                    raw[r.key] = r
                    if len(raw) > max_reactions:
                        raise BoundExceeded(f"network exceeded {max_reactions} reactions")
                    for p in r.products:
                        before = len(species)
                        intern(p)
                        if len(species) != before:
                            work = True

    fwd_of_pair: dict = {}
    indexed: list[IndexedReaction] = []
    for key in sorted(raw.keys()):
        r = finalize(Reaction(raw[key].reactants, raw[key].products, raw[key].mechanism))
        if r.mechanism == "four_way":
            k = rates.k_4way
        elif not r.reversible:
            k = rates.k_3way_fwd
        else:
            pair_id = tuple(sorted([r.key, r.reverse.key]))
            if pair_id not in fwd_of_pair:
                fwd_of_pair[pair_id] = r.key  # first of the pair in key order
            k = rates.k_3way_fwd if fwd_of_pair[pair_id] == r.key else rates.k_3way_rev
        rs = [seen[render_species(x)] for x in r.reactants]
        ps = [seen[render_species(x)] for x in r.products]
        indexed.append(
            IndexedReaction(
                r0=rs[0],
                r1=rs[1] if len(rs) > 1 else rs[0],
                products=tuple(ps),
                rate=k,
                irreversible=not r.reversible,
                mechanism=r.mechanism,
                text=str(r),
            )
        )
    return ReactionNetwork(species, indexed)
