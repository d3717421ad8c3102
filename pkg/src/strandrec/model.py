"""Core representation of domains, strands and linear nicked duplexes.

A species is either a free single strand or a duplex made of columns.
Each column stores one domain identity (as read on the top strand,
5'->3' left to right; the bottom strand implicitly carries the
complement), an occupancy, and nick flags for the boundary to the right
of the column.  This column model makes pseudoknot freedom structural:
everything representable here is a linear nicked double strand.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

NAME_RE = re.compile(r"[a-z][a-z0-9_]*")
TOEHOLD_NAME = "^"

PAIRED = "p"
TOP_ONLY = "t"
BOTTOM_ONLY = "b"

# marker tuple: (side 't'|'b', column index, end '5'|'3', label)
Marker = tuple[str, int, str, str]


class ModelError(ValueError):
    pass


class ParseError(ModelError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


@dataclass(frozen=True, order=True)
class Domain:
    """An abstract hybridization unit; toeholds bind reversibly."""

    name: str
    toehold: bool = False
    star: bool = False

    def __post_init__(self):
        if self.toehold:
            if self.name != TOEHOLD_NAME:
                raise ModelError("the toehold is nameless, use '^'")
        elif not NAME_RE.fullmatch(self.name):
            raise ModelError(f"bad domain name {self.name!r}")

    @property
    def comp(self) -> "Domain":
        return Domain(self.name, self.toehold, not self.star)

    def __str__(self) -> str:
        return self.name + ("*" if self.star else "")


TOEHOLD = Domain(TOEHOLD_NAME, toehold=True)


def long_domain(name: str, star: bool = False) -> Domain:
    return Domain(name, False, star)


def complement(d: Domain) -> Domain:
    return d.comp


@dataclass(frozen=True)
class Strand:
    """A free single strand, domains listed 5'->3'."""

    domains: tuple[Domain, ...]
    m5: Optional[str] = None  # fluorophore/quencher label at the 5' end
    m3: Optional[str] = None

    def __post_init__(self):
        if not self.domains:
            raise ModelError("empty strand")
        for a, b in zip(self.domains, self.domains[1:]):
            if a.toehold and b.toehold:
                raise ModelError("adjacent toeholds on one strand")

    def __len__(self) -> int:
        return len(self.domains)

    def __str__(self) -> str:
        return render_species(self)


@dataclass(frozen=True)
class Column:
    dom: Domain
    occ: str  # PAIRED | TOP_ONLY | BOTTOM_ONLY
    nick_top: bool = False  # nick on the top strand after this column
    nick_bottom: bool = False

    @property
    def has_top(self) -> bool:
        return self.occ in (PAIRED, TOP_ONLY)

    @property
    def has_bottom(self) -> bool:
        return self.occ in (PAIRED, BOTTOM_ONLY)


@dataclass(frozen=True)
class Duplex:
    """A linear nicked duplex; at least one column is paired."""

    columns: tuple[Column, ...]
    markers: frozenset[Marker] = frozenset()

    def __post_init__(self):
        cols = self.columns
        if not any(c.occ == PAIRED for c in cols):
            raise ModelError("duplex needs at least one paired column")
        n = len(cols)
        for i, c in enumerate(cols):
            if c.occ not in (PAIRED, TOP_ONLY, BOTTOM_ONLY):
                raise ModelError(f"bad occupancy {c.occ!r}")
            nxt = cols[i + 1] if i + 1 < n else None
            if c.nick_top and (nxt is None or not (c.has_top and nxt.has_top)):
                raise ModelError(f"top nick after column {i} with absent side")
            if c.nick_bottom and (nxt is None or not (c.has_bottom and nxt.has_bottom)):
                raise ModelError(f"bottom nick after column {i} with absent side")
            if nxt is not None:
                top_spans = c.has_top and nxt.has_top and not c.nick_top
                bot_spans = c.has_bottom and nxt.has_bottom and not c.nick_bottom
                if not (top_spans or bot_spans):
                    raise ModelError(f"disconnected at column boundary {i}|{i + 1}")
        for side, col, end, _ in self.markers:
            if side not in "tb" or end not in "53" or not (0 <= col < n):
                raise ModelError("bad marker")
        # fragment extraction re-checks the adjacent-toehold invariant
        top_strands(self)
        bottom_strands(self)

    def __len__(self) -> int:
        return len(self.columns)

    def __str__(self) -> str:
        return render_species(self)


Species = Union[Strand, Duplex]


def rotate(d: Duplex) -> Duplex:
    """The 180-degree presentation: order reversed, sides swapped,
    complements toggled."""
    n = len(d.columns)
    occ_swap = {PAIRED: PAIRED, TOP_ONLY: BOTTOM_ONLY, BOTTOM_ONLY: TOP_ONLY}
    cols = []
    for i in range(n):
        old = d.columns[n - 1 - i]
        nick_top = d.columns[n - 2 - i].nick_bottom if i < n - 1 else False
        nick_bottom = d.columns[n - 2 - i].nick_top if i < n - 1 else False
        cols.append(Column(old.dom.comp, occ_swap[old.occ], nick_top, nick_bottom))
    marks = frozenset(
        ("b" if side == "t" else "t", n - 1 - col, end, lab)
        for side, col, end, lab in d.markers
    )
    return Duplex(tuple(cols), marks)


def _star_count(d: Duplex) -> int:
    return sum(1 for c in d.columns if c.dom.star)


def canonicalize(s: Species) -> Species:
    """Unique representative per molecule; free strands are canonical as
    written, a duplex and its rotation map to the same object."""
    if isinstance(s, Strand):
        return s
    r = rotate(s)
    if (_star_count(s), render_species(s)) <= (_star_count(r), render_species(r)):
        return s
    return r


def species_key(s: Species) -> tuple:
    c = canonicalize(s)
    return (0 if isinstance(c, Strand) else 1, render_species(c))


# ---------------------------------------------------------------------------
# fragment extraction


def _top_runs(d: Duplex) -> Iterator[tuple[int, int]]:
    start = None
    for i, c in enumerate(d.columns):
        if c.has_top and start is None:
            start = i
        if c.has_top and (c.nick_top or i == len(d.columns) - 1 or not d.columns[i + 1].has_top):
            yield (start, i)
            start = None


def _bottom_runs(d: Duplex) -> Iterator[tuple[int, int]]:
    start = None
    for i, c in enumerate(d.columns):
        if c.has_bottom and start is None:
            start = i
        if c.has_bottom and (
            c.nick_bottom or i == len(d.columns) - 1 or not d.columns[i + 1].has_bottom
        ):
            yield (start, i)
            start = None


def _marker_at(d: Duplex, side: str, col: int, end: str) -> Optional[str]:
    for s, c, e, lab in d.markers:
        if (s, c, e) == (side, col, end):
            return lab
    return None


def top_strands(d: Duplex) -> list[Strand]:
    """Top fragments left to right, each 5'->3'."""
    out = []
    for i, j in _top_runs(d):
        doms = tuple(d.columns[k].dom for k in range(i, j + 1))
        out.append(Strand(doms, m5=_marker_at(d, "t", i, "5"), m3=_marker_at(d, "t", j, "3")))
    return out


def bottom_strands(d: Duplex) -> list[Strand]:
    """Bottom fragments left to right by position, each 5'->3'
    (antiparallel, so domain order is right-to-left)."""
    out = []
    for i, j in _bottom_runs(d):
        doms = tuple(d.columns[k].dom.comp for k in range(j, i - 1, -1))
        out.append(Strand(doms, m5=_marker_at(d, "b", j, "5"), m3=_marker_at(d, "b", i, "3")))
    return out


def all_domains(s: Species) -> list[Domain]:
    """Every domain instance in the molecule (both strands of a duplex)."""
    if isinstance(s, Strand):
        return list(s.domains)
    out = []
    for st in top_strands(s) + bottom_strands(s):
        out.extend(st.domains)
    return out


# ---------------------------------------------------------------------------
# canonical textual notation
#
#   species := "ss(" token+ ")" | "dx(" column ("," column)* ")"
#   token   := "^" | NAME | NAME "*"          (also "^*" on rotated presentations)
#   column  := token ":" occ ["'"] [","]      ("'" top nick after, "," bottom)
#   an optional "{...}" suffix carries fluorophore/quencher markers


def _render_token(d: Domain) -> str:
    return str(d)


def _render_markers_duplex(marks: frozenset[Marker]) -> str:
    if not marks:
        return ""
    parts = [f"{side}{col}.{end}:{lab}" for side, col, end, lab in sorted(marks)]
    return " {" + ", ".join(parts) + "}"


def render_species(s: Species) -> str:
    if isinstance(s, Strand):
        txt = "ss(" + " ".join(_render_token(d) for d in s.domains) + ")"
        marks = []
        if s.m5:
            marks.append(f"5:{s.m5}")
        if s.m3:
            marks.append(f"3:{s.m3}")
        return txt + (" {" + ", ".join(marks) + "}" if marks else "")
    cols = []
    for c in s.columns:
        t = _render_token(c.dom) + ":" + c.occ
        if c.nick_top:
            t += "'"
        if c.nick_bottom:
            t += ","
        cols.append(t)
    return "dx(" + ", ".join(cols) + ")" + _render_markers_duplex(s.markers)


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, lit: str):
        self.skip_ws()
        if not self.text.startswith(lit, self.pos):
            raise ParseError(f"expected {lit!r}", self.pos)
        self.pos += len(lit)

    def name(self) -> str:
        self.skip_ws()
        m = NAME_RE.match(self.text, self.pos)
        if not m:
            raise ParseError("expected a domain name", self.pos)
        self.pos = m.end()
        return m.group(0)

    def token(self) -> Domain:
        self.skip_ws()
        if self.peek() == TOEHOLD_NAME:
            self.pos += 1
            star = self.peek() == "*"
            if star:
                self.pos += 1
            d = TOEHOLD
            return d.comp if star else d
        nm = self.name()
        star = self.peek() == "*"
        if star:
            self.pos += 1
        return Domain(nm, False, star)


def _parse_marker_suffix(lx: _Lexer) -> list[str]:
    out = []
    if lx.peek() == "{":
        lx.expect("{")
        while True:
            lx.skip_ws()
            start = lx.pos
            while lx.pos < len(lx.text) and lx.text[lx.pos] not in ",}":
                lx.pos += 1
            out.append(lx.text[start:lx.pos].strip())
            if lx.peek() == ",":
                lx.expect(",")
                continue
            lx.expect("}")
            break
    return out


def parse_species(text: str) -> Species:
    """Parse the canonical notation; inverse of render_species."""
    lx = _Lexer(text)
    lx.skip_ws()
    if lx.text.startswith("ss(", lx.pos):
        lx.expect("ss(")
        doms = []
        while lx.peek() != ")":
            doms.append(lx.token())
        lx.expect(")")
        m5 = m3 = None
        for m in _parse_marker_suffix(lx):
            end, _, lab = m.partition(":")
            if end == "5":
                m5 = lab
            elif end == "3":
                m3 = lab
            else:
                raise ParseError(f"bad strand marker {m!r}", lx.pos)
        lx.skip_ws()
        if lx.pos != len(lx.text):
            raise ParseError("trailing input", lx.pos)
        try:
            return Strand(tuple(doms), m5, m3)
        except ModelError as e:
            raise ParseError(str(e), 0) from None
    if not lx.text.startswith("dx(", lx.pos):
        raise ParseError("expected 'ss(' or 'dx('", lx.pos)
    lx.expect("dx(")
    cols: list[Column] = []
    while True:
        dom = lx.token()
        lx.expect(":")
        occ = lx.peek()
        if occ not in (PAIRED, TOP_ONLY, BOTTOM_ONLY):
            raise ParseError("occupancy must be p, t or b", lx.pos)
        lx.pos += 1
        nick_top = False
        nick_bottom = False
        if lx.peek() == "'":
            lx.expect("'")
            nick_top = True
        # a comma is a nick flag when another comma or ')' follows it
        lx.skip_ws()
        if lx.peek() == ",":
            save = lx.pos
            lx.pos += 1
            if lx.peek() in (",", ")"):
                nick_bottom = True
            else:
                lx.pos = save
        cols.append(Column(dom, occ, nick_top, nick_bottom))
        if lx.peek() == ",":
            lx.expect(",")
            continue
        break
    lx.expect(")")
    marks = set()
    for m in _parse_marker_suffix(lx):
        mm = re.fullmatch(r"([tb])(\d+)\.([53]):(.+)", m)
        if not mm:
            raise ParseError(f"bad duplex marker {m!r}", lx.pos)
        marks.add((mm.group(1), int(mm.group(2)), mm.group(3), mm.group(4)))
    lx.skip_ws()
    if lx.pos != len(lx.text):
        raise ParseError("trailing input", lx.pos)
    try:
        return Duplex(tuple(cols), frozenset(marks))
    except ModelError as e:
        raise ParseError(str(e), 0) from None


# ---------------------------------------------------------------------------
# two-row ascii diagram rendering


def _widths(s: Species) -> tuple[int, int]:
    longs = [d for d in all_domains(s) if not d.toehold]
    w = max([5] + [len(str(d).rstrip("*")) for d in longs])
    return 1, w


def render_ascii(s: Species) -> str:
    """Two-row (plus label) diagram in the classic dash/arrow style."""
    wt, wl = _widths(s)
    if isinstance(s, Strand):
        cols = [Column(d, TOP_ONLY) for d in s.domains]
        dup = None
    else:
        dup = s
        cols = list(s.columns)
    n = len(cols)
    width = lambda c: wt if c.dom.toehold else wl
    starts = []
    x = 1
    for c in cols:
        starts.append(x)
        x += width(c) + 1
    total = x

    def blank():
        return [" "] * (total + 2)

    label = blank()
    top = blank()
    bot = blank()
    for i, c in enumerate(cols):
        x0 = starts[i]
        w = width(c)
        if not c.dom.toehold:
            nm = str(c.dom)
            off = max(0, (w - len(nm)) // 2)
            for k, ch in enumerate(nm):
                label[x0 + off + k] = ch
        has_top = c.has_top if dup else True
        has_bot = c.has_bottom if dup else False
        if has_top:
            for k in range(w):
                top[x0 + k] = "-"
            prev = cols[i - 1] if i else None
            prev_top = (prev.has_top if dup else True) if prev else False
            if not prev_top:
                top[x0 - 1] = "+"
            elif prev.nick_top:
                top[x0 - 1] = ">"
            else:
                top[x0 - 1] = "+"
            nxt = cols[i + 1] if i + 1 < n else None
            nxt_top = (nxt.has_top if dup else True) if nxt else False
            if not nxt_top:
                top[x0 + w] = ">"
        if has_bot:
            for k in range(w):
                bot[x0 + k] = "-"
            prev = cols[i - 1] if i else None
            prev_bot = prev.has_bottom if (dup and prev) else False
            if not prev_bot:
                bot[x0 - 1] = "<"
            elif prev.nick_bottom:
                bot[x0 - 1] = "<"
            else:
                bot[x0 - 1] = "+"
            nxt = cols[i + 1] if i + 1 < n else None
            nxt_bot = nxt.has_bottom if (dup and nxt) else False
            if not nxt_bot:
                bot[x0 + w] = "+"
    if isinstance(s, Strand):
        if s.m5:
            top[0] = s.m5[0]
        if s.m3:
            top[starts[-1] + width(cols[-1]) + 1] = s.m3[0]
    else:
        for side, col, end, lab in sorted(s.markers):
            row = top if side == "t" else bot
            x0 = starts[col]
            w = width(cols[col])
            at_right = (side == "t" and end == "3") or (side == "b" and end == "5")
            row[x0 + w + 1 if at_right else x0 - 2] = lab[0]
    lines = ["".join(label).rstrip(), "".join(top).rstrip()]
    if dup is not None:
        lines.append("".join(bot).rstrip())
    return "\n".join(ln for ln in lines if ln.strip()) if dup is None else "\n".join(lines)


# ---------------------------------------------------------------------------
# soups


class Soup:
    """A multiset of canonical species with positive integer counts."""

    __slots__ = ("_counts", "_sig")

    def __init__(self, counts: Optional[dict[Species, int]] = None):
        self._counts: dict[Species, int] = {}
        self._sig = None
        if counts:
            for sp, n in counts.items():
                if n < 0:
                    raise ModelError("negative count")
                if n:
                    c = canonicalize(sp)
                    self._counts[c] = self._counts.get(c, 0) + n

    def items(self):
        return self._counts.items()

    def species(self):
        return self._counts.keys()

    def count(self, sp: Species) -> int:
        return self._counts.get(canonicalize(sp), 0)

    def total(self) -> int:
        return sum(self._counts.values())

    def add(self, sp: Species, n: int = 1) -> "Soup":
        out = dict(self._counts)
        c = canonicalize(sp)
        out[c] = out.get(c, 0) + n
        if out[c] < 0:
            raise ModelError(f"insufficient count of {render_species(c)}")
        if out[c] == 0:
            del out[c]
        s = Soup()
        s._counts = out
        return s

    def remove(self, sp: Species, n: int = 1) -> "Soup":
        return self.add(sp, -n)

    def without(self, sp: Species) -> "Soup":
        out = dict(self._counts)
        out.pop(canonicalize(sp), None)
        s = Soup()
        s._counts = out
        return s

    def merge(self, other: "Soup") -> "Soup":
        out = dict(self._counts)
        for sp, n in other.items():
            out[sp] = out.get(sp, 0) + n
        s = Soup()
        s._counts = out
        return s

    def signature(self) -> tuple:
        if self._sig is None:
            self._sig = tuple(sorted((species_key(sp), n) for sp, n in self._counts.items()))
        return self._sig

    def __eq__(self, other) -> bool:
        return isinstance(other, Soup) and self.signature() == other.signature()

    def __hash__(self) -> int:
        return hash(self.signature())

    def __len__(self) -> int:
        return len(self._counts)

    def __str__(self) -> str:
        return "\n".join(
            f"{n}\t{render_species(sp)}" for sp, n in sorted(self.items(), key=lambda kv: species_key(kv[0]))
        )

    @staticmethod
    def parse(text: str) -> "Soup":
        counts: dict[Species, int] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ns, _, sp = line.partition("\t")
            counts[parse_species(sp)] = counts.get(parse_species(sp), 0) + int(ns)
        return Soup(counts)
