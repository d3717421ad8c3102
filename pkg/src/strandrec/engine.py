"""Composite displacement reactions over soups.

Two rules are enumerated, both bimolecular:

  M3  a free strand with a terminal toehold binds a complementary open
      toehold on a duplex and branch-migrates across its long domains,
      releasing the top fragments it fully displaces (a displaced
      terminal toehold dissociates within the composite step).

  M4  two duplexes exposing complementary open toeholds exchange a run
      of identical long domains bounded by nicks or strand ends on the
      exchanged strands, resolving into exactly two product duplexes.
      A terminal toehold trailing the displaced run unpairs within the
      step and is kept as an overhang on the leaving duplex.

A reaction is classified reversible exactly when enumerating over its
products finds a reaction restoring the reactants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .model import (
    BOTTOM_ONLY,
    PAIRED,
    TOP_ONLY,
    Column,
    Domain,
    Duplex,
    Soup,
    Species,
    Strand,
    canonicalize,
    parse_species,
    render_species,
    rotate,
    species_key,
)


class EngineError(ValueError):
    pass


class InsufficientCount(EngineError):
    pass


class BoundExceeded(EngineError):
    pass


@dataclass(frozen=True)
class RateClass:
    """Abstract rate constants; 4-way exchange is slower than 3-way by
    default."""

    k_3way_fwd: float = 1.0
    k_3way_rev: float = 1.0
    k_4way: float = 0.1

    def __post_init__(self):
        if min(self.k_3way_fwd, self.k_3way_rev, self.k_4way) <= 0:
            raise EngineError("rates must be positive")


class Reaction:
    """A composite displacement step (bind + migrate + resolve)."""

    __slots__ = ("reactants", "products", "mechanism", "reversible", "reverse", "_key")

    def __init__(self, reactants, products, mechanism):
        self.reactants: tuple[Species, ...] = tuple(
            sorted((canonicalize(r) for r in reactants), key=species_key)
        )
        self.products: tuple[Species, ...] = tuple(
            sorted((canonicalize(p) for p in products), key=species_key)
        )
        self.mechanism = mechanism  # "three_way" | "four_way"
        self.reversible = False
        self.reverse: Optional["Reaction"] = None
        self._key = (
            tuple(species_key(r) for r in self.reactants),
            tuple(species_key(p) for p in self.products),
            mechanism,
        )

    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Reaction) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __str__(self):
        arrow = "<=>" if self.reversible else "=>"
        lhs = " + ".join(render_species(r) for r in self.reactants)
        rhs = " + ".join(render_species(p) for p in self.products)
        return f"{lhs} {arrow} {rhs} [{self.mechanism}]"


# ---------------------------------------------------------------------------
# fragment-level view: a duplex as column domains plus top/bottom fragment
# spans, each span carrying its end markers.  Frag = (start, end, m5, m3).


def _frag_view(d: Duplex):
    mm = {(s, c, e): lab for s, c, e, lab in d.markers}
    doms = [c.dom for c in d.columns]
    top, bot = [], []
    start = None
    for i, c in enumerate(d.columns):
        if c.has_top and start is None:
            start = i
        if c.has_top and (c.nick_top or i == len(doms) - 1 or not d.columns[i + 1].has_top):
            top.append((start, i, mm.get(("t", start, "5")), mm.get(("t", i, "3"))))
            start = None
    start = None
    for i, c in enumerate(d.columns):
        if c.has_bottom and start is None:
            start = i
        if c.has_bottom and (c.nick_bottom or i == len(doms) - 1 or not d.columns[i + 1].has_bottom):
            bot.append((start, i, mm.get(("b", i, "5")), mm.get(("b", start, "3"))))
            start = None
    return doms, top, bot


def _build_duplex(doms, top, bot) -> Duplex:
    n = len(doms)
    has_top = [False] * n
    has_bot = [False] * n
    for i, j, _, _ in top:
        for k in range(i, j + 1):
            has_top[k] = True
    for i, j, _, _ in bot:
        for k in range(i, j + 1):
            has_bot[k] = True
    # columns left bare at the edges simply vanish from the product
    lo = 0
    hi = n - 1
    while lo <= hi and not (has_top[lo] or has_bot[lo]):
        lo += 1
    while hi >= lo and not (has_top[hi] or has_bot[hi]):
        hi -= 1
    if lo > 0 or hi < n - 1:
        doms = doms[lo : hi + 1]
        has_top = has_top[lo : hi + 1]
        has_bot = has_bot[lo : hi + 1]
        top = _shift([f for f in top], -lo)
        bot = _shift([f for f in bot], -lo)
        n = len(doms)
    t_start = {f[0] for f in top}
    t_end = {f[1] for f in top}
    b_start = {f[0] for f in bot}
    b_end = {f[1] for f in bot}
    cols = []
    for i in range(n):
        if has_top[i] and has_bot[i]:
            occ = PAIRED
        elif has_top[i]:
            occ = TOP_ONLY
        elif has_bot[i]:
            occ = BOTTOM_ONLY
        else:
            raise EngineError("empty column in product")
        nt = i in t_end and (i + 1) in t_start
        nb = i in b_end and (i + 1) in b_start
        cols.append(Column(doms[i], occ, nt, nb))
    marks = set()
    for i, j, m5, m3 in top:
        if m5:
            marks.add(("t", i, "5", m5))
        if m3:
            marks.add(("t", j, "3", m3))
    for i, j, m5, m3 in bot:
        if m5:
            marks.add(("b", j, "5", m5))
        if m3:
            marks.add(("b", i, "3", m3))
    return Duplex(tuple(cols), frozenset(marks))


def _frag_strand(doms, frag) -> Strand:
    i, j, m5, m3 = frag
    return Strand(tuple(doms[i : j + 1]), m5=m5, m3=m3)


def _shift(frags, off):
    return [(i + off, j + off, m5, m3) for i, j, m5, m3 in frags]


def _presentations(d: Duplex) -> list[Duplex]:
    r = rotate(d)
    return [d] if r == d else [d, r]


# ---------------------------------------------------------------------------
# M3: strand invasion


def _try_m3(strand: Strand, dup: Duplex) -> list[Reaction]:
    out = []
    doms, top, bot = _frag_view(dup)
    n = len(doms)
    heads = []
    if strand.domains[0].toehold and len(strand.domains) > 1:
        heads.append((+1, strand.domains[0], strand.domains[1:]))
    if strand.domains[-1].toehold and len(strand.domains) > 1:
        heads.append((-1, strand.domains[-1], tuple(reversed(strand.domains[:-1]))))
    for j in range(n):
        col = dup.columns[j]
        if col.occ != BOTTOM_ONLY or not col.dom.toehold:
            continue
        for step, head, body in heads:
            if head != col.dom:
                continue
            k = len(body)
            path = [j + step * (t + 1) for t in range(k)]
            if not (0 <= path[-1] < n):
                continue
            if not all(dup.columns[p].occ == PAIRED and doms[p] == body[t] for t, p in enumerate(path)):
                continue
            lo, hi = min(path), max(path)
            displaced, keep = [], []
            ok = True
            for f in top:
                s, e = f[0], f[1]
                if e < lo or s > hi:
                    keep.append(f)
                    continue
                if s < lo or e > hi:
                    # may stick out by exactly one terminal toehold on the
                    # far side of the migration
                    far_ok = (
                        (step == 1 and s >= lo and e == hi + 1 and doms[e].toehold)
                        or (step == -1 and e <= hi and s == lo - 1 and doms[s].toehold)
                    )
                    if far_ok:
                        displaced.append(f)
                    else:
                        ok = False
                        break
                else:
                    displaced.append(f)
            if not ok or not displaced:
                continue
            inv_lo, inv_hi = min(j, lo), max(j, hi)
            new_top = keep + [(inv_lo, inv_hi, strand.m5, strand.m3)]
            released = [_frag_strand(doms, f) for f in sorted(displaced)]
            try:
                prod = _build_duplex(doms, new_top, bot)
            except Exception:
                continue
            out.append(Reaction([strand, dup], [prod] + released, "three_way"))
    return out


# ---------------------------------------------------------------------------
# M4: open four-way exchange


def _try_m4(a: Duplex, b: Duplex) -> list[Reaction]:
    """Exchanges with `a` exposing the top toehold and `b` the bottom."""
    out = []
    an = len(a.columns)
    for i, ac in enumerate(a.columns):
        if ac.occ != TOP_ONLY or not ac.dom.toehold:
            continue
        for step in (+1, -1):
            # the exposed toehold must sit at the invading edge of `a`
            if step == 1 and i != 0:
                continue
            if step == -1 and i != an - 1:
                continue
            for j, bc in enumerate(b.columns):
                if bc.occ != BOTTOM_ONLY or bc.dom != ac.dom:
                    continue
                rxn = _resolve_m4(a, i, b, j, step)
                if rxn is not None:
                    out.append(rxn)
    return out


def _resolve_m4(a: Duplex, i: int, b: Duplex, j: int, step: int) -> Optional[Reaction]:
    adoms, atop, abot = _frag_view(a)
    bdoms, btop, bbot = _frag_view(b)
    an, bn = len(adoms), len(bdoms)
    fa = next((f for f in atop if (step == 1 and f[0] == i) or (step == -1 and f[1] == i)), None)
    if fa is None:
        return None
    # walk the run until both exchanged strands can resolve
    t = 0
    run = None
    toe = None
    while True:
        t += 1
        ap, bp = i + step * t, j + step * t
        if not (0 <= ap < an and 0 <= bp < bn):
            return None
        if adoms[ap].toehold or a.columns[ap].occ != PAIRED:
            return None
        if b.columns[bp].occ != PAIRED or bdoms[bp] != adoms[ap]:
            return None
        if not (fa[0] <= ap <= fa[1]):
            return None  # a's top strand must carry the whole run
        fb = next((f for f in abot if f[0] <= ap <= f[1]), None)
        g = next((f for f in btop if f[0] <= bp <= f[1]), None)
        if fb is None or g is None:
            return None
        a_done = fb[1] == ap if step == 1 else fb[0] == ap
        a_start_ok = fb[0] == i + step if step == 1 else fb[1] == i + step
        g_exact = (g[1] == bp and g[0] == j + step) if step == 1 else (g[0] == bp and g[1] == j + step)
        g_toe = (
            (g[1] == bp + 1 and g[0] == j + step and bdoms[bp + 1].toehold and b.columns[bp + 1].occ == PAIRED)
            if step == 1
            else (g[0] == bp - 1 and g[1] == j + step and bdoms[bp - 1].toehold and b.columns[bp - 1].occ == PAIRED)
        )
        if not a_start_ok:
            return None
        if a_done and (g_exact or g_toe):
            run = t
            fb_run = fb
            g_frag = g
            toe = (bp + step) if g_toe else None
            break
    # geometry: a's remainder and b's columns beyond the run cannot both
    # exist (the product would be branched)
    a_rest = list(range(i + step * (run + 1), an)) if step == 1 else list(range(0, i - run))
    b_far = list(range(j + run + 1, bn)) if step == 1 else list(range(0, j - run))
    if a_rest and b_far:
        return None

    shift_b = max(0, (an - 1) - j) if step == -1 else 0
    shift_a = (j + shift_b) - i  # fused coordinate of a col c is c + shift_a

    doms: dict[int, Domain] = {}
    for c in range(bn):
        doms[c + shift_b] = bdoms[c]
    for c in range(an):
        doms[c + shift_a] = adoms[c]
    nfused = max(doms) + 1
    dom_list = [doms[c] for c in range(nfused)]

    new_top = [f for f in _shift(btop, shift_b) if f[:2] != (g_frag[0] + shift_b, g_frag[1] + shift_b)]
    new_top += _shift(atop, shift_a)
    new_bot = _shift(bbot, shift_b)
    new_bot += [f for f in _shift(abot, shift_a) if f[:2] != (fb_run[0] + shift_a, fb_run[1] + shift_a)]

    try:
        fused = _build_duplex(dom_list, new_top, new_bot)
    except Exception:
        return None

    # leaving duplex: b's displaced fragment over a's bottom run
    lo = g_frag[0]
    hi = g_frag[1]
    leave_doms = [bdoms[c] for c in range(lo, hi + 1)]
    leave_top = [(0, hi - lo, g_frag[2], g_frag[3])]
    run_lo_b = j + 1 if step == 1 else j - run
    off = run_lo_b - lo
    leave_bot = [(off, off + run - 1, fb_run[2], fb_run[3])]
    try:
        leaving = _build_duplex(leave_doms, leave_top, leave_bot)
    except Exception:
        return None
    return Reaction([a, b], [fused, leaving], "four_way")


# ---------------------------------------------------------------------------
# enumeration over soups


@lru_cache(maxsize=200_000)
def _pair_reactions_cached(ka: str, kb: str) -> tuple:
    a = parse_species(ka)
    b = parse_species(kb)
    out: dict = {}
    if isinstance(a, Strand) and isinstance(b, Duplex):
        for pres in _presentations(b):
            for r in _try_m3(a, pres):
                out[r.key] = r
    elif isinstance(a, Duplex) and isinstance(b, Strand):
        for pres in _presentations(a):
            for r in _try_m3(b, pres):
                out[r.key] = r
    elif isinstance(a, Duplex) and isinstance(b, Duplex):
        for pa in _presentations(a):
            for pb in _presentations(b):
                for r in _try_m4(pa, pb):
                    out[r.key] = r
                for r in _try_m4(pb, pa):
                    out[r.key] = r
    return tuple(out.values())


def _pair(a: Species, b: Species) -> tuple:
    ka = render_species(canonicalize(a))
    kb = render_species(canonicalize(b))
    if ka > kb:
        ka, kb = kb, ka
    return _pair_reactions_cached(ka, kb)


def pair_reactions(a: Species, b: Species) -> tuple:
    """Raw candidate reactions between one copy of `a` and one of `b`."""
    return _pair(a, b)


def _classify_reversibility(rxn: Reaction) -> Optional[Reaction]:
    prods = list(rxn.products)
    want_r = tuple(species_key(p) for p in rxn.products)
    want_p = tuple(species_key(r) for r in rxn.reactants)
    cand: dict = {}
    for x in range(len(prods)):
        for y in range(x, len(prods)):
            if x == y and prods.count(prods[x]) < 2:
                continue
            for r in _pair(prods[x], prods[y]):
                cand[r.key] = r
    for r in cand.values():
        if (
            tuple(species_key(z) for z in r.reactants) == want_r
            and tuple(species_key(z) for z in r.products) == want_p
        ):
            return r
    return None


def finalize(rxn: Reaction) -> Reaction:
    rev = _classify_reversibility(rxn)
    if rev is not None:
        rxn.reversible = True
        rev.reversible = True
        rxn.reverse = rev
        rev.reverse = rxn
    return rxn


def enumerate_reactions(soup: Soup) -> list[Reaction]:
    """Every composite reaction enabled in the soup, reversibility
    classified; deterministic order."""
    species = sorted(soup.species(), key=species_key)
    seen: dict = {}
    for x in range(len(species)):
        for y in range(x, len(species)):
            if x == y and soup.count(species[x]) < 2:
                continue
            for r in _pair(species[x], species[y]):
                if r.key not in seen:
                    seen[r.key] = finalize(Reaction(r.reactants, r.products, r.mechanism))
    return sorted(seen.values(), key=lambda r: r.key)


def apply(rxn: Reaction, soup: Soup) -> Soup:
    """Fire one occurrence of the reaction."""
    out = soup
    for r in rxn.reactants:
        if out.count(r) < 1:
            raise InsufficientCount(f"missing reactant {render_species(r)}")
        out = out.remove(r)
    for p in rxn.products:
        out = out.add(p)
    return out


def reachable_final_soups(
    soup: Soup, max_states: int = 50_000, absorb: frozenset = frozenset()
) -> set[Soup]:
    """Exhaustive search over apply-sequences.

    Returns the soups from which no irreversible progress remains,
    keeping only endpoints of maximal irreversible progress (the
    long-run outcome; low-progress kinetic traps are dropped).  Species
    in `absorb` are deleted after every step.
    """

    def sink(s: Soup) -> Soup:
        for sp in absorb:
            s = s.without(sp)
        return s

    start = sink(soup)
    progress: dict[Soup, int] = {start: 0}
    edges: dict[Soup, list[tuple[Soup, bool]]] = {}
    work = [start]
    while work:
        cur = work.pop()
        if len(progress) > max_states:
            raise BoundExceeded(f"state space exceeded {max_states} soups")
        outs = []
        for rxn in enumerate_reactions(cur):
            nxt = sink(apply(rxn, cur))
            outs.append((nxt, not rxn.reversible))
            if nxt not in progress:
                progress[nxt] = 0
                work.append(nxt)
        edges[cur] = outs
    changed = True
    passes = 0
    while changed:
        passes += 1
        if passes > len(progress) + 2:
            raise BoundExceeded("irreversible progress does not converge (cyclic)")
        changed = False
        for s, outs in edges.items():
            base = progress[s]
            for nxt, irrev in outs:
                v = base + (1 if irrev else 0)
                if v > progress[nxt]:
                    progress[nxt] = v
                    changed = True
    can_progress: set[Soup] = {s for s, outs in edges.items() if any(ir for _, ir in outs)}
    changed = True
    while changed:
        changed = False
        for s, outs in edges.items():
            if s not in can_progress and any(nxt in can_progress for nxt, _ in outs):
                can_progress.add(s)
                changed = True
    finals = [s for s in progress if s not in can_progress]
    if not finals:
        return set()
    best = max(progress[s] for s in finals)
    return {s for s in finals if progress[s] == best}


def shortest_pathway(soup: Soup, final: Soup) -> list[Reaction]:
    """Fewest composite steps from `soup` to `final` (golden-test aid)."""
    from collections import deque

    prev: dict[Soup, tuple[Soup, Reaction]] = {}
    seen = {soup}
    q = deque([soup])
    while q:
        cur = q.popleft()
        if cur == final:
            path = []
            while cur in prev:
                cur, rxn = prev[cur]
                path.append(rxn)
            return list(reversed(path))
        for rxn in enumerate_reactions(cur):
            nxt = apply(rxn, cur)
            if nxt not in seen:
                seen.add(nxt)
                prev[nxt] = (cur, rxn)
                q.append(nxt)
    raise EngineError("final soup not reachable")


def trace_export(reactions: Iterable[Reaction]) -> str:
    """Line-delimited record per reaction for golden files."""
    lines = []
    for r in reactions:
        lines.append(
            "\t".join(
                [
                    "+".join(render_species(x) for x in r.reactants),
                    "+".join(render_species(x) for x in r.products),
                    r.mechanism,
                    "rev" if r.reversible else "irrev",
                ]
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
