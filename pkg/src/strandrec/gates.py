"""Gate construction and library compilation.

Families: yes (occurrence), fluorescent yes, join (coincidence), and
the two choice variants (economical crosstalking, and the composite
domain one that does not crosstalk).  A compiled library carries the
initial soup, read signatures for every lockable outcome, and the long
domain budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .model import (
    NAME_RE,
    Soup,
    Species,
    canonicalize,
    parse_species,
    render_species,
)

RESERVED = {"s", "p", "q", "r", "u", "v"}

FAMILIES = ("yes", "yes_fluorescent", "join", "choice_crosstalk", "choice_proper")
RECORDERS = ("occurrence", "coincidence", "preorder")
VARIANTS = ("crosstalk", "proper")


class CompileError(ValueError):
    pass


class UnknownSignal(CompileError):
    pass


class GateConflict(CompileError):
    pass


@dataclass(frozen=True)
class GateSpec:
    family: str
    signals: tuple[str, ...]  # (x,) or (x, y)
    catalytic: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise CompileError(f"unknown gate family {self.family!r}")
        if self.family == "join" and len(set(self.signals)) == 1:
            raise GateConflict(
                f"join({self.signals[0]},{self.signals[0]}) is not allowed; "
                "use a non-catalytic yes gate for the reflexive role"
            )


def _check_name(x: str):
    if not NAME_RE.fullmatch(x):
        raise UnknownSignal(f"bad signal name {x!r}")
    if x in RESERVED:
        raise UnknownSignal(f"signal name {x!r} collides with an auxiliary domain")


def signal(x: str, declared=None) -> Species:
    """The input strand for signal x: ss(^ x)."""
    _check_name(x)
    if declared is not None and x not in declared:
        raise UnknownSignal(f"signal {x!r} is not declared")
    return parse_species(f"ss(^ {x})")


def leftover(x: str) -> Species:
    """The right-toehold strand released when a gate absorbs ss(^ x)."""
    _check_name(x)
    return parse_species(f"ss({x} ^)")


def composite(x: str, y: str) -> str:
    """Pair-specific domain name used by the non-crosstalking choice."""
    return f"{x}x{y}"


# structure templates, canonical notation -----------------------------------

QR_CAP = "dx(^:t, q:p,, r:p)"
SP_CAP = "dx(s:p,, p:p, ^:t)"
U_CAP = "dx(u:p, ^:t)"
V_CAP = "dx(v:p, ^:t)"


def yes_gate(x: str, catalytic: bool = False) -> dict[str, Species]:
    """Main duplex plus its universal cap; catalytic adds the recycler."""
    _check_name(x)
    out = {
        "main": parse_species(f"dx(^:b, {x}:p, ^:p', q:p)"),
        "qr_cap": parse_species(QR_CAP),
    }
    if catalytic:
        out["u_structure"] = parse_species(f"dx(u:p', ^:p, {x}:p, ^:b)")
        out["u_cap"] = parse_species(U_CAP)
    return out


def yes_gate_fluorescent(x: str) -> dict[str, Species]:
    """Fluorophore/quencher variant; the lockdown strand is ss(^ q)."""
    _check_name(x)
    return {
        "main": parse_species(f"dx(^:b, {x}:p, ^:p', q:p) {{b3.5:Q, t3.3:F}}"),
        "aux": parse_species("ss(^ q)"),
    }


def join_gate(x: str, y: str, catalytic: bool = False) -> dict[str, Species]:
    """Two-input gate accepting ss(^ x) first, then ss(^ y)."""
    _check_name(x)
    _check_name(y)
    if x == y:
        raise GateConflict("join(x,x) is not allowed; use yes(x)")
    out = {
        "main": parse_species(f"dx(^:b, {x}:p, ^:p', {y}:p, ^:p', q:p)"),
        "qr_cap": parse_species(QR_CAP),
    }
    if catalytic:
        out["v_structure"] = parse_species(f"dx(v:p', ^:p, {y}:p', ^:p, {x}:p, ^:b)")
        out["v_cap"] = parse_species(V_CAP)
    return out


def _choice_main(x: str, y: str) -> Species:
    return parse_species(f"dx(p:p', ^:p, {x}:p, ^:b, {y}:p, ^:p', q:p)")


def choice_crosstalk(x: str, y: str) -> dict[str, Species | list[Species]]:
    """The economical order detector; for x == y the two halves are the
    same species and ship at doubled count."""
    _check_name(x)
    _check_name(y)
    return {
        "mains": [_choice_main(x, y), _choice_main(y, x)],
        "sp_cap": parse_species(SP_CAP),
        "qr_cap": parse_species(QR_CAP),
    }


def _proper_main(x: str, y: str) -> Species:
    cxy, cyx = composite(x, y), composite(y, x)
    return parse_species(
        f"dx(p:p', ^:p, {cxy}:p, ^:b, {y}:p, ^:p', {cyx}:p, ^:p', q:p)"
    )


def _proper_parts(x: str, y: str) -> dict:
    return {
        "mains": [_proper_main(x, y), _proper_main(y, x)],
        "translators": [
            parse_species(f"dx(^:t, {composite(y, x)}:p)"),
            parse_species(f"dx(^:t, {composite(x, y)}:p)"),
        ],
        "sp_cap": parse_species(SP_CAP),
        "qr_cap": parse_species(QR_CAP),
    }


def choice_proper(x: str, y: str) -> dict:
    """Non-crosstalking choice over pair-specific composite domains."""
    _check_name(x)
    _check_name(y)
    if x == y:
        raise GateConflict("reflexive proper choice is built at library level")
    return _proper_parts(x, y)


# locked-state reads ---------------------------------------------------------


def choice_r_read(x: str, y: str) -> tuple[str, ...]:
    return ("p", "^", x, "^", y, "^", "q", "r")


def choice_s_read(x: str, y: str) -> tuple[str, ...]:
    return ("s", "p", "^", x, "^", y, "^", "q")


def proper_r_read(x: str, y: str) -> tuple[str, ...]:
    return ("p", "^", composite(x, y), "^", y, "^", composite(y, x), "^", "q", "r")


def proper_s_read(x: str, y: str) -> tuple[str, ...]:
    return ("s", "p", "^", composite(x, y), "^", y, "^", composite(y, x), "^", "q")


def yes_r_read(x: str) -> tuple[str, ...]:
    return ("^", x, "^", "q", "r")


def join_r_read(x: str, y: str) -> tuple[str, ...]:
    return ("^", x, "^", y, "^", "q", "r")


@dataclass
class GateLibrary:
    """Compiled recorder: initial species with stoichiometry, outcome
    signatures, and bookkeeping for the readout classifier."""

    signals: tuple[str, ...]
    recorder: str
    variant: str
    catalytic: bool
    copies_per_gate: int
    species_counts: Soup
    signatures: dict[str, tuple[str, ...]]
    domain_budget: frozenset[str]
    roles: dict[str, str] = field(default_factory=dict)  # canonical text -> role

    def signal(self, x: str) -> Species:
        return signal(x, declared=self.signals)

    @property
    def main_species(self) -> list[Species]:
        return [parse_species(t) for t, role in self.roles.items() if role.startswith("main")]

    def initial_reads(self) -> set[tuple[str, ...]]:
        from .readout import read_of_species

        return {read_of_species(sp) for sp in self.species_counts.species()}

    def to_manifest(self) -> str:
        lines = [
            "# strandrec gate library",
            f"signals\t{','.join(self.signals)}",
            f"recorder\t{self.recorder}",
            f"variant\t{self.variant}",
            f"catalytic\t{'true' if self.catalytic else 'false'}",
            f"copies\t{self.copies_per_gate}",
        ]
        for sp, n in sorted(self.species_counts.items(), key=lambda kv: render_species(kv[0])):
            role = self.roles.get(render_species(sp), "")
            lines.append(f"species\t{n}\t{render_species(sp)}\t{role}")
        for label, read in sorted(self.signatures.items()):
            lines.append(f"signature\t{label}\t{' '.join(read)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_manifest(text: str) -> "GateLibrary":
        meta = {}
        counts: dict[Species, int] = {}
        roles = {}
        signatures = {}
        for line in text.splitlines():
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if parts[0] == "species":
                sp = parse_species(parts[2])
                counts[sp] = counts.get(sp, 0) + int(parts[1])
                if len(parts) > 3 and parts[3]:
                    roles[render_species(canonicalize(sp))] = parts[3]
            elif parts[0] == "signature":
                signatures[parts[1]] = tuple(parts[2].split())
            else:
                meta[parts[0]] = parts[1]
        signals = tuple(s for s in meta["signals"].split(",") if s)
        lib = GateLibrary(
            signals=signals,
            recorder=meta["recorder"],
            variant=meta["variant"],
            catalytic=meta["catalytic"] == "true",
            copies_per_gate=int(meta["copies"]),
            species_counts=Soup(counts),
            signatures=signatures,
            domain_budget=_budget_of(Soup(counts)),
            roles=roles,
        )
        return lib


def _budget_of(soup: Soup) -> frozenset[str]:
    from .model import all_domains

    names = set()
    for sp in soup.species():
        for d in all_domains(sp):
            if not d.toehold:
                names.add(d.name)
    return frozenset(names)


def validate_gate_specs(specs: list[GateSpec]):
    """Reject gate combinations that would record false positives."""
    cat_yes = {g.signals[0] for g in specs if g.family == "yes" and g.catalytic}
    for g in specs:
        if g.family == "join" and g.catalytic:
            for x in g.signals:
                if x in cat_yes:
                    raise GateConflict(
                        f"catalytic yes({x}) cannot coexist with catalytic "
                        f"join{g.signals}: the join would lock on its first input"
                    )


def compile_library(
    signals,
    recorder: str = "preorder",
    variant: str = "crosstalk",
    catalytic: bool | None = None,
    copies_per_gate: int = 1,
) -> GateLibrary:
    """Build the full detector collection for a signal alphabet."""
    signals = tuple(sorted(set(signals)))
    if not signals:
        raise CompileError("empty signal set")
    for x in signals:
        _check_name(x)
    if recorder not in RECORDERS:
        raise CompileError(f"unknown recorder {recorder!r}")
    if variant not in VARIANTS:
        raise CompileError(f"unknown variant {variant!r}")
    if copies_per_gate < 1:
        raise CompileError("copies_per_gate must be at least 1")
    cp = copies_per_gate
    n = len(signals)

    counts: dict[Species, int] = {}
    roles: dict[str, str] = {}
    signatures: dict[str, tuple[str, ...]] = {}

    def add(sp: Species, k: int, role: str):
        c = canonicalize(sp)
        counts[c] = counts.get(c, 0) + k
        roles.setdefault(render_species(c), role)

    if recorder == "occurrence":
        cat = bool(catalytic)
        specs = [GateSpec("yes", (x,), cat) for x in signals]
        validate_gate_specs(specs)
        for x in signals:
            g = yes_gate(x, catalytic=cat)
            add(g["main"], cp, f"main:yes:{x}")
            signatures[f"{x}+"] = yes_r_read(x)
            if cat:
                add(g["u_structure"], cp, f"aux:u:{x}")
        add(parse_species(QR_CAP), cp * n, "cap:qr")
        if cat:
            add(parse_species(U_CAP), cp * n, "cap:u")

    elif recorder == "coincidence":
        cat = bool(catalytic)
        specs = [GateSpec("yes", (x,), False) for x in signals]
        specs += [
            GateSpec("join", (x, y), cat)
            for x, y in combinations_with_replacement(signals, 2)
            if x != y
        ]
        validate_gate_specs(specs)
        mains = 0
        for x in signals:
            add(yes_gate(x)["main"], cp, f"main:yes:{x}")
            signatures[f"{x}+"] = yes_r_read(x)
            mains += cp
        for x, y in combinations_with_replacement(signals, 2):
            if x == y:
                continue
            for a, b in ((x, y), (y, x)):  # both orders for symmetric kinetics
                g = join_gate(a, b, catalytic=cat)
                add(g["main"], cp, f"main:join:{a}:{b}")
                signatures[f"{a}&{b}"] = join_r_read(a, b)
                if cat:
                    add(g["v_structure"], cp, f"aux:v:{a}:{b}")
                mains += cp
        add(parse_species(QR_CAP), mains, "cap:qr")
        if cat:
            add(parse_species(V_CAP), mains, "cap:v")

    else:  # preorder
        if variant == "crosstalk":
            # these gates recycle their inputs by construction
            for x, y in combinations_with_replacement(signals, 2):
                for a, b in ((x, y), (y, x)):
                    add(_choice_main(a, b), cp, f"main:choice:{a}:{b}")
                    signatures[f"{a}>={b}"] = choice_r_read(a, b)
                    signatures[f"{a}<={b}"] = choice_s_read(a, b)
            total = cp * (n * n + n)
            add(parse_species(SP_CAP), total, "cap:sp")
            add(parse_species(QR_CAP), total, "cap:qr")
            budget = _budget_of(Soup(counts))
            assert budget == frozenset(signals) | {"s", "p", "q", "r"}, "domain budget"
            assert len(budget) == n + 4, "domain budget"
            n_mains = sum(1 for t, role in roles.items() if role.startswith("main"))
            assert n_mains == n * n, "main species count"
        else:
            if catalytic:
                raise CompileError(
                    "catalytic proper choice gates are not compiled: the "
                    "recycler structures would exceed the domain budget"
                )
            for x, y in combinations_with_replacement(signals, 2):
                for a, b in ((x, y), (y, x)):
                    add(_proper_main(a, b), cp, f"main:choice_proper:{a}:{b}")
                    add(parse_species(f"dx(^:t, {composite(b, a)}:p)"), cp, f"aux:translator:{b}:{a}")
                    signatures[f"{a}>={b}"] = proper_r_read(a, b)
                    signatures[f"{a}<={b}"] = proper_s_read(a, b)
            total = cp * (n * n + n)
            add(parse_species(SP_CAP), total, "cap:sp")
            add(parse_species(QR_CAP), total, "cap:qr")
            budget = _budget_of(Soup(counts))
            comps = {composite(x, y) for x in signals for y in signals}
            if len(comps) != n * n:
                raise CompileError("composite domain name collision; rename signals")
            assert budget == frozenset(signals) | comps | {"s", "p", "q", "r"}, "domain budget"
            assert len(budget) == n + n * n + 4, "domain budget"

    reads = list(signatures.values())
    if len(set(reads)) != len(reads):
        raise CompileError("outcome signatures are not injective")

    return GateLibrary(
        signals=signals,
        recorder=recorder,
        variant=variant,
        catalytic=bool(catalytic) if catalytic is not None else (recorder == "preorder" and variant == "crosstalk"),
        copies_per_gate=cp,
        species_counts=Soup(counts),
        signatures=signatures,
        domain_budget=_budget_of(Soup(counts)),
        roles=roles,
    )
