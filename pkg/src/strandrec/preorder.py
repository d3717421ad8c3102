"""First-occurrence preorder inference from classified reads.

The count matrix accumulates directional evidence; inference thresholds
turn it into arrived signals, coincidence classes and a strict order
between classes; transitive reduction gives the minimal class-level
relation whose closure equals the inferred order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterable, Optional

from .readout import ReadRecord


class PreorderError(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    arrival_min: int = 1  # reflexive evidence needed to count as arrived
    coincide_fraction: float = 0.2  # both directions at >= this share => together
    noise_floor: int = 1  # pair totals below this are treated as zero

    def __post_init__(self):
        if not (0 < self.coincide_fraction <= 0.5):
            raise PreorderError("coincide_fraction must be in (0, 0.5]")
        if self.arrival_min < 1 or self.noise_floor < 1:
            raise PreorderError("thresholds must be positive")


SSA_THRESHOLDS = Thresholds(arrival_min=5, coincide_fraction=0.2, noise_floor=1)


class CountMatrix:
    """C[x, y] counts reads evidencing first(x) <= first(y)."""

    def __init__(self, signals: Iterable[str]):
        self.signals = tuple(sorted(set(signals)))
        self._c: dict[tuple[str, str], int] = {}

    def add(self, x: str, y: str, n: int = 1):
        if x not in self.signals or y not in self.signals:
            raise PreorderError(f"undeclared signal in ({x}, {y})")
        if n:
            self._c[(x, y)] = self._c.get((x, y), 0) + n

    def get(self, x: str, y: str) -> int:
        return self._c.get((x, y), 0)

    def merge(self, other: "CountMatrix") -> "CountMatrix":
        out = CountMatrix(self.signals)
        for (x, y), n in self._c.items():
            out.add(x, y, n)
        for (x, y), n in other._c.items():
            out.add(x, y, n)
        return out

    def tsv(self) -> str:
        header = "\t" + "\t".join(self.signals)
        rows = [header]
        for x in self.signals:
            rows.append(x + "\t" + "\t".join(str(self.get(x, y)) for y in self.signals))
        return "\n".join(rows) + "\n"

    def __eq__(self, other):
        return (
            isinstance(other, CountMatrix)
            and self.signals == other.signals
            and self._c == other._c
        )


def accumulate(records: Iterable[ReadRecord], signals: Iterable[str]) -> CountMatrix:
    """Sum outcome evidence into a count matrix."""
    m = CountMatrix(signals)
    for rec in records:
        if rec.kind in ("outcome", "arrival") and rec.relation:
            lo, hi = rec.relation
            m.add(lo, hi, rec.count)
        elif rec.kind == "coincidence" and rec.pair:
            x, y = sorted(rec.pair)
            m.add(x, y, rec.count)
            m.add(y, x, rec.count)
    return m


@dataclass(frozen=True)
class Preorder:
    """Reflexive transitive order on the arrived signals, with
    coincidence classes; absent signals sit above everything arrived."""

    signals: tuple[str, ...]
    arrived: frozenset[str]
    leq: frozenset[tuple[str, str]]
    diagnostics: tuple[str, ...] = ()

    @property
    def absent(self) -> frozenset[str]:
        return frozenset(self.signals) - self.arrived

    @property
    def open_ended(self) -> frozenset[tuple[str, str]]:
        return frozenset((x, y) for x in self.arrived for y in sorted(self.absent))

    def same_class(self, x: str, y: str) -> bool:
        return (x, y) in self.leq and (y, x) in self.leq

    def classes(self) -> list[tuple[str, ...]]:
        rest = sorted(self.arrived)
        out = []
        while rest:
            x = rest[0]
            cls = tuple(sorted(y for y in self.arrived if self.same_class(x, y)))
            out.append(cls)
            rest = [y for y in rest if y not in cls]
        return sorted(out)

    def class_edges(self) -> set[tuple[tuple[str, ...], tuple[str, ...]]]:
        cls = self.classes()
        out = set()
        for u, v in product(cls, cls):
            if u != v and (u[0], v[0]) in self.leq:
                out.add((u, v))
        return out

    def matches(self, other: "Preorder") -> bool:
        return (
            frozenset(self.signals) == frozenset(other.signals)
            and self.arrived == other.arrived
            and self.leq == other.leq
        )


def _closure(pairs: set[tuple[str, str]], elems) -> set[tuple[str, str]]:
    elems = list(elems)
    out = set(pairs)
    changed = True
    while changed:
        changed = False
        for x, y in list(out):
            for z in elems:
                if (y, z) in out and (x, z) not in out:
                    out.add((x, z))
                    changed = True
    return out


def infer_preorder(m: CountMatrix, t: Thresholds = Thresholds()) -> Preorder:
    arrived = frozenset(x for x in m.signals if m.get(x, x) >= t.arrival_min)
    leq: set[tuple[str, str]] = {(x, x) for x in arrived}
    for i, x in enumerate(sorted(arrived)):
        for y in sorted(arrived)[i + 1 :]:
            cxy, cyx = m.get(x, y), m.get(y, x)
            total = cxy + cyx
            if total < t.noise_floor:
                continue
            if min(cxy, cyx) >= t.coincide_fraction * total:
                leq.add((x, y))
                leq.add((y, x))
            elif cxy > cyx:
                leq.add((x, y))
            else:
                leq.add((y, x))
    diags = _transitivity_gaps(leq, arrived)
    return Preorder(m.signals, arrived, frozenset(leq), tuple(diags))


def _transitivity_gaps(leq, elems) -> list[str]:
    out = []
    for x, z in sorted(_closure(set(leq), elems) - set(leq)):
        out.append(f"missing transitive edge {x}<={z}")
    return out


def check_transitive_closure(p: Preorder) -> list[str]:
    """Empty when the relation is transitively closed."""
    return list(_transitivity_gaps(set(p.leq), p.arrived))


def transitive_reduction(p: Preorder) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """Minimal class-level edges whose closure is the class order."""
    if check_transitive_closure(p):
        raise PreorderError("relation is not transitively closed; fix diagnostics first")
    cls = p.classes()
    order = p.class_edges()
    keep = []
    for u, v in sorted(order):
        if not any((u, w) in order and (w, v) in order for w in cls if w not in (u, v)):
            keep.append((u, v))
    return keep


def ground_truth_preorder(schedule, signals: Optional[Iterable[str]] = None) -> Preorder:
    """Oracle from the schedule alone: first epoch of each signal."""
    first: dict[str, int] = {}
    for e_no, epoch in enumerate(schedule.epochs):
        for ev in epoch:
            if ev[0] == "inject" and ev[1] not in first:
                first[ev[1]] = e_no
    sigs = tuple(sorted(set(signals) if signals is not None else set(first)))
    arrived = frozenset(first)
    leq = frozenset(
        (x, y) for x in arrived for y in arrived if first[x] <= first[y]
    )
    return Preorder(sigs, arrived, leq)


# --------------------------------------------------------------------------
# reporting


def report_text(p: Preorder, matrix: Optional[CountMatrix] = None) -> str:
    lines = ["# preorder report"]
    lines.append("arrived\t" + (",".join(sorted(p.arrived)) if p.arrived else "-"))
    lines.append("absent\t" + (",".join(sorted(p.absent)) if p.absent else "-"))
    for cls in p.classes():
        if len(cls) > 1:
            lines.append("together\t" + "~".join(cls))
    try:
        red = transitive_reduction(p)
        for u, v in red:
            lines.append("before\t{%s} < {%s}" % (",".join(u), ",".join(v)))
    except PreorderError:
        pass
    for x, y in sorted(p.open_ended):
        lines.append(f"open\t{x} <= {y} (never arrived)")
    for d in p.diagnostics:
        lines.append(f"diagnostic\t{d}")
    if matrix is not None:
        lines.append("# counts")
        lines.append(matrix.tsv().rstrip("\n"))
    return "\n".join(lines) + "\n"


def to_dot(p: Preorder) -> str:
    def node(cls):
        return "{" + ",".join(cls) + "}"

    lines = ["digraph preorder {"]
    for cls in p.classes():
        lines.append(f'  "{node(cls)}";')
    try:
        for u, v in transitive_reduction(p):
            lines.append(f'  "{node(u)}" -> "{node(v)}";')
    except PreorderError:
        for u, v in sorted(p.class_edges()):
            lines.append(f'  "{node(u)}" -> "{node(v)}";  // unreduced')
    lines.append("}")
    return "\n".join(lines) + "\n"
