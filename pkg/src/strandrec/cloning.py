"""Laying gate structures out on one long double strand and cutting
them back out with blunt and nicking enzymes.

Every duplex in a library becomes one unit on the template, separated
by spacers.  Nicking sites sit on the strand opposite the nick they
make, at a toehold length from their footprint; blunt cutters sit in
the spacers.  Digestion recomputes every cut position from the site
footprints, splits both strands, reassembles the fragments into
species, and drops lone covering toeholds (they dissociate).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .gates import GateLibrary
from .model import (
    BOTTOM_ONLY,
    PAIRED,
    TOP_ONLY,
    Column,
    Duplex,
    Soup,
    Species,
    Strand,
    canonicalize,
    render_species,
)


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Geometry:
    len_toehold: int = 5
    len_long: int = 20
    len_site: int = 6
    spacer_len: int = 30
    offsets: dict = field(default_factory=lambda: {"B": 8, "SC": 8})

    def __post_init__(self):
        if not (0 < self.len_toehold < self.len_long):
            raise LayoutError("need 0 < len_toehold < len_long")
        if self.len_site > self.len_long:
            raise LayoutError("site longer than a long domain")
        if self.spacer_len < self.offsets.get("B", 8) + self.len_site:
            raise LayoutError("spacer too short for blunt-cut sites")


@dataclass(frozen=True)
class Enzyme:
    kind: str  # blunt_B | nick_L | nick_R | stagger_SC
    site: str  # footprint label: B, L, R, SC


ENZYMES = {
    "B": Enzyme("blunt_B", "B"),
    "L": Enzyme("nick_L", "L"),
    "R": Enzyme("nick_R", "R"),
    "SC": Enzyme("stagger_SC", "SC"),
}


@dataclass(frozen=True)
class Segment:
    label: str  # domain name, "^", or "spacer"
    kind: str  # long | toehold | spacer
    start: int
    end: int
    unit: int  # -1 for spacers
    col: int  # column index within the unit, -1 for spacers


@dataclass(frozen=True)
class Site:
    enzyme: str  # key into ENZYMES
    strand: str  # top | bottom
    start: int
    end: int
    d_top: Optional[int] = None  # stagger-cutter cut offsets from `end`
    d_bot: Optional[int] = None


@dataclass
class Template:
    geometry: Geometry
    segments: list[Segment]
    sites: list[Site]
    units: list[tuple[str, int, int]]  # canonical species text, start, end
    total: int

    def coordinate_table(self) -> str:
        lines = ["segment\tstart\tend\tstrand\tsite\tcut"]
        for s in self.segments:
            lines.append(f"{s.label}\t{s.start}\t{s.end}\t.\t.\t.")
        for s in self.sites:
            for strand, pos in _site_cuts(s, self.geometry):
                lines.append(f".\t{s.start}\t{s.end}\t{s.strand}\t{s.enzyme}\t{strand}:{pos}")
        return "\n".join(lines) + "\n"


def _site_cuts(site: Site, g: Geometry) -> list[tuple[str, int]]:
    """(strand, position) cuts produced by one site instance."""
    if site.enzyme == "L":
        # nick on the opposite strand, a toehold past the footprint in
        # the 3' direction of the carrying strand
        pos = site.end + g.len_toehold if site.strand == "top" else site.start - g.len_toehold
        return [("bottom" if site.strand == "top" else "top", pos)]
    if site.enzyme == "R":
        pos = site.start - g.len_toehold if site.strand == "top" else site.end + g.len_toehold
        return [("bottom" if site.strand == "top" else "top", pos)]
    if site.enzyme == "B":
        pos = site.start - g.offsets["B"] if site.strand == "top" else site.end + g.offsets["B"]
        return [("top", pos), ("bottom", pos)]
    if site.enzyme == "SC":
        return [("top", site.end + site.d_top), ("bottom", site.end + site.d_bot)]
    raise LayoutError(f"unknown enzyme {site.enzyme!r}")


def _unit_segments(d: Duplex, g: Geometry, unit: int, x0: int) -> list[Segment]:
    out = []
    x = x0
    for i, c in enumerate(d.columns):
        w = g.len_toehold if c.dom.toehold else g.len_long
        kind = "toehold" if c.dom.toehold else "long"
        out.append(Segment(str(c.dom), kind, x, x + w, unit, i))
        x += w
    return out


def _required_cuts(d: Duplex, segs: list[Segment]) -> tuple[set[int], set[int]]:
    """Top and bottom strand cut positions that carve this unit out of a
    fully double-stranded template."""
    top_cuts: set[int] = set()
    bot_cuts: set[int] = set()
    n = len(d.columns)

    def span(i):
        return segs[i].start, segs[i].end

    top_cols = [i for i, c in enumerate(d.columns) if c.has_top]
    bot_cols = [i for i, c in enumerate(d.columns) if c.has_bottom]
    top_cuts.add(span(top_cols[0])[0])
    top_cuts.add(span(top_cols[-1])[1])
    bot_cuts.add(span(bot_cols[0])[0])
    bot_cuts.add(span(bot_cols[-1])[1])
    for i, c in enumerate(d.columns):
        if c.nick_top:
            top_cuts.add(span(i)[1])
        if c.nick_bottom:
            bot_cuts.add(span(i)[1])
        if i > 0:
            prev = d.columns[i - 1]
            if c.has_top and not prev.has_top and i - 1 >= top_cols[0]:
                # internal absent-top run ends here: excise its cover
                top_cuts.add(span(i)[0])
            if not c.has_top and prev.has_top and i <= top_cols[-1]:
                top_cuts.add(span(i)[0])
                if not c.dom.toehold:
                    raise LayoutError("excised top cover longer than a toehold")
            if c.has_bottom and not prev.has_bottom and i - 1 >= bot_cols[0]:
                bot_cuts.add(span(i)[0])
            if not c.has_bottom and prev.has_bottom and i <= bot_cols[-1]:
                bot_cuts.add(span(i)[0])
                if not c.dom.toehold:
                    raise LayoutError("excised bottom cover longer than a toehold")
    return top_cuts, bot_cuts


def _place_nick_site(pos: int, target: str, segs: list[Segment], g: Geometry) -> Site:
    """A site on the strand opposite `target` whose nick lands at pos."""
    carrier = "bottom" if target == "top" else "top"

    def fits(a: int, b: int) -> int:
        # 2 = inside a long domain (preferred), 1 = inside a spacer
        for s in segs:
            if s.start <= a and b <= s.end:
                if s.kind == "long":
                    return 2
                if s.kind == "spacer":
                    return 1
        return 0

    cands = []
    if carrier == "bottom":
        # L footprint right of the nick, R footprint left of it
        cands.append(("L", pos + g.len_toehold, pos + g.len_toehold + g.len_site))
        cands.append(("R", pos - g.len_toehold - g.len_site, pos - g.len_toehold))
    else:
        cands.append(("L", pos - g.len_toehold - g.len_site, pos - g.len_toehold))
        cands.append(("R", pos + g.len_toehold, pos + g.len_toehold + g.len_site))
    best = None
    for enz, a, b in cands:
        score = fits(a, b)
        if score and (best is None or score > best[0]):
            best = (score, enz, a, b)
    if best is None:
        raise LayoutError(f"no room for a nicking site targeting {target}:{pos}")
    _, enz, a, b = best
    return Site(enz, carrier, a, b)


def layout_template(library: GateLibrary, geom: Geometry = Geometry(), cap_cut: str = "cooperative") -> Template:
    """One template covering every copy of every duplex in the library."""
    if cap_cut not in ("cooperative", "staggered_cutter"):
        raise LayoutError(f"unknown cap_cut variant {cap_cut!r}")
    items = sorted(library.species_counts.items(), key=lambda kv: render_species(kv[0]))
    if not items:
        raise LayoutError("empty library")
    segments: list[Segment] = []
    sites: list[Site] = []
    units: list[tuple[str, int, int]] = []
    x = 0
    unit_no = 0

    def add_spacer():
        nonlocal x
        segments.append(Segment("spacer", "spacer", x, x + geom.spacer_len, -1, -1))
        x += geom.spacer_len

    add_spacer()
    for sp, count in items:
        if isinstance(sp, Strand):
            raise LayoutError(f"free strand {render_species(sp)} cannot be cut from a double strand")
        for _ in range(count):
            segs = _unit_segments(sp, geom, unit_no, x)
            segments.extend(segs)
            u_start, u_end = segs[0].start, segs[-1].end
            x = u_end
            units.append((render_species(canonicalize(sp)), u_start, u_end))
            top_cuts, bot_cuts = _required_cuts(sp, segs)
            blunt = sorted(top_cuts & bot_cuts)
            for pos in blunt:
                if pos <= u_start:
                    sites.append(Site("B", "bottom", pos - geom.offsets["B"] - geom.len_site, pos - geom.offsets["B"]))
                else:
                    sites.append(Site("B", "top", pos + geom.offsets["B"], pos + geom.offsets["B"] + geom.len_site))
            # edge cuts that are not blunt pair up into staggered edges
            edge_top = {p for p in top_cuts if not (u_start < p < u_end)} - bot_cuts
            edge_bot = {p for p in bot_cuts if not (u_start < p < u_end)} - top_cuts
            inner_top = {p for p in top_cuts - bot_cuts if u_start < p < u_end}
            inner_bot = {p for p in bot_cuts - top_cuts if u_start < p < u_end}
            # a staggered edge is one top cut and one bottom cut within a
            # toehold of each other at the unit boundary
            used_t, used_b = set(), set()
            for pt in sorted(edge_top):
                match = [pb for pb in sorted(edge_bot) if abs(pb - pt) == geom.len_toehold and pb not in used_b]
                if match:
                    pb = match[0]
                    used_t.add(pt)
                    used_b.add(pb)
                    if cap_cut == "staggered_cutter":
                        left = min(pt, pb)
                        anchor = left - geom.offsets["SC"] - geom.len_site
                        sites.append(
                            Site(
                                "SC",
                                "top",
                                anchor,
                                anchor + geom.len_site,
                                d_top=pt - (anchor + geom.len_site),
                                d_bot=pb - (anchor + geom.len_site),
                            )
                        )
                    else:
                        sites.append(_place_nick_site(pt, "top", segments, geom))
                        sites.append(_place_nick_site(pb, "bottom", segments, geom))
            for pt in sorted(edge_top - used_t):
                sites.append(_place_nick_site(pt, "top", segments, geom))
            for pb in sorted(edge_bot - used_b):
                sites.append(_place_nick_site(pb, "bottom", segments, geom))
            for pos in sorted(inner_top):
                sites.append(_place_nick_site(pos, "top", segments, geom))
            for pos in sorted(inner_bot):
                sites.append(_place_nick_site(pos, "bottom", segments, geom))
            unit_no += 1
            add_spacer()
    return Template(geom, segments, sites, units, x)


def digest(template: Template, enzymes: Optional[Iterable[Enzyme]] = None) -> tuple[Soup, list[tuple[int, int]]]:
    """Apply every site of the given enzymes; returns the gate species
    soup and the spacer-waste spans."""
    g = template.geometry
    kinds = {e.site for e in (enzymes if enzymes is not None else ENZYMES.values())}
    top_cuts = {0, template.total}
    bot_cuts = {0, template.total}
    for site in template.sites:
        if site.enzyme not in kinds:
            continue
        for strand, pos in _site_cuts(site, g):
            if not (0 <= pos <= template.total):
                raise LayoutError(f"cut at {pos} outside the template")
            (top_cuts if strand == "top" else bot_cuts).add(pos)
    boundaries = {s.start for s in template.segments} | {template.total}
    for pos in sorted(top_cuts | bot_cuts):
        if pos not in boundaries:
            raise LayoutError(f"cut at {pos} does not land on a domain boundary")

    def pieces(cuts):
        cs = sorted(cuts)
        return [(cs[i], cs[i + 1]) for i in range(len(cs) - 1)]

    top_pieces = pieces(top_cuts)
    bot_pieces = pieces(bot_cuts)
    segs_sorted = sorted(template.segments, key=lambda s: s.start)

    def overlap_has_long(a: int, b: int) -> bool:
        for s in segs_sorted:
            if s.start < b and a < s.end and s.kind != "toehold":
                return True
        return False

    # pieces stay together only where they pair over more than a
    # toehold; toehold-only junctions between complexes fall apart
    parent: dict = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        parent[find(a)] = find(b)

    for p in top_pieces:
        parent[("t", p)] = ("t", p)
    for p in bot_pieces:
        parent[("b", p)] = ("b", p)
    for tp in top_pieces:
        for bp in bot_pieces:
            a, b = max(tp[0], bp[0]), min(tp[1], bp[1])
            if a < b and overlap_has_long(a, b):
                union(("t", tp), ("b", bp))
    comps: dict = {}
    for key in parent:
        comps.setdefault(find(key), []).append(key)

    counts: dict[Species, int] = {}
    waste: list[tuple[int, int]] = []
    for members in comps.values():
        lo = min(p[0] for _, p in members)
        hi = max(p[1] for _, p in members)
        segs = [s for s in template.segments if s.start >= lo and s.end <= hi]
        if not segs or any(s.kind == "spacer" for s in segs):
            waste.append((lo, hi))
            continue
        sp = _component_species(segs, members, g)
        if sp is None or (isinstance(sp, Strand) and len(sp) == 1 and sp.domains[0].toehold):
            waste.append((lo, hi))
            continue
        c = canonicalize(sp)
        counts[c] = counts.get(c, 0) + 1
    return Soup(counts), waste


def _component_species(segs, members, g: Geometry) -> Optional[Species]:
    from .model import TOEHOLD, Domain, long_domain

    segs = sorted(segs, key=lambda s: s.start)
    tops = sorted(p for side, p in members if side == "t")
    bots = sorted(p for side, p in members if side == "b")

    def covered(pieces, a, b):
        return any(p0 <= a and b <= p1 for p0, p1 in pieces)

    doms = []
    has_t = []
    has_b = []
    for s in segs:
        doms.append(TOEHOLD if s.kind == "toehold" else long_domain(s.label.rstrip("*"), s.label.endswith("*")))
        has_t.append(covered(tops, s.start, s.end))
        has_b.append(covered(bots, s.start, s.end))
        if not (has_t[-1] or has_b[-1]):
            return None
    cols = []
    for i, s in enumerate(segs):
        occ = PAIRED if (has_t[i] and has_b[i]) else (TOP_ONLY if has_t[i] else BOTTOM_ONLY)
        last = i == len(segs) - 1
        nt = (
            not last
            and has_t[i]
            and has_t[i + 1]
            and any(p1 == s.end for p0, p1 in tops)
        )
        nb = (
            not last
            and has_b[i]
            and has_b[i + 1]
            and any(p1 == s.end for p0, p1 in bots)
        )
        cols.append([doms[i], occ, nt, nb])
    try:
        if all(c[1] == TOP_ONLY for c in cols):
            return Strand(tuple(c[0] for c in cols))
        if all(c[1] == BOTTOM_ONLY for c in cols):
            return Strand(tuple(c[0].comp for c in reversed(cols)))
        return Duplex(tuple(Column(c[0], c[1], c[2], c[3]) for c in cols))
    except Exception as exc:
        raise LayoutError(f"digest produced an invalid fragment: {exc}") from exc


def verify_roundtrip(
    library: GateLibrary, geom: Geometry = Geometry(), cap_cut: str = "cooperative"
) -> dict:
    """Digest the layout and compare against the library species."""
    template = layout_template(library, geom, cap_cut)
    got, waste = digest(template)
    want = library.species_counts
    missing = []
    extra = []
    for sp, n in want.items():
        if got.count(sp) != n:
            missing.append((render_species(sp), n, got.count(sp)))
    for sp, n in got.items():
        if want.count(sp) != n:
            extra.append((render_species(sp), want.count(sp), n))
    return {
        "ok": not missing and not extra,
        "missing": missing,
        "extra": extra,
        "waste_spans": len(waste),
        "template_length": template.total,
    }
