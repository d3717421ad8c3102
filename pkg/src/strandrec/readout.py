"""Ligation-and-sequencing emulation plus read classification.

A read is the domain string of a molecule after nicks are ligated and
open domains filled in: for a duplex that is simply its column identity
string in canonical orientation; free strands read as written.
Classification is a function of the domain string alone, guided by the
library's signature map.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .gates import GateLibrary
from .model import Duplex, Soup, Species, Strand, canonicalize, render_species


@dataclass(frozen=True)
class Read:
    domains: tuple[str, ...]
    count: int = 1

    def text(self) -> str:
        return " ".join(self.domains)


@dataclass(frozen=True)
class ReadRecord:
    kind: str  # outcome | arrival | coincidence | untriggered | byproduct | unknown
    label: str
    evidence: tuple[str, ...]
    count: int = 1
    relation: Optional[tuple[str, str]] = None  # (lo, hi): first(lo) <= first(hi)
    pair: Optional[frozenset] = None


def read_of_species(sp: Species) -> tuple[str, ...]:
    c = canonicalize(sp)
    if isinstance(c, Strand):
        return tuple(str(d) for d in c.domains)
    return tuple(str(col.dom) for col in c.columns)


def sequence_soup(soup: Soup) -> list[Read]:
    """One read per molecule copy, aggregated and sorted."""
    agg: dict[tuple[str, ...], int] = {}
    for sp, n in soup.items():
        r = read_of_species(sp)
        agg[r] = agg.get(r, 0) + n
    return [Read(doms, n) for doms, n in sorted(agg.items())]


def read_table(reads: list[Read]) -> str:
    lines = [f"{r.count}\t{r.text()}" for r in sorted(reads, key=lambda r: r.domains)]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_read_table(text: str) -> list[Read]:
    out = []
    for line in text.splitlines():
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        n, _, doms = line.partition("\t")
        out.append(Read(tuple(doms.split()), int(n)))
    return out


def _outcome_record(label: str, read: Read) -> ReadRecord:
    if ">=" in label:
        hi, lo = label.split(">=")
    else:
        lo, hi = label.split("<=")
    return ReadRecord("outcome", label, read.domains, read.count, relation=(lo, hi))


def classify(read: Read, library: GateLibrary) -> ReadRecord:
    """Map one read to a recorder outcome."""
    doms = read.domains
    by_read = {tuple(v): k for k, v in library.signatures.items()}
    label = by_read.get(doms)
    if label is not None:
        if label.endswith("+"):
            return ReadRecord("arrival", label, doms, read.count, relation=(label[:-1], label[:-1]))
        if "&" in label:
            x, y = label.split("&")
            return ReadRecord("coincidence", label, doms, read.count, pair=frozenset((x, y)))
        return _outcome_record(label, read)
    sig = set(library.signals)
    n = len(doms)
    # crosstalk-shaped patterns, for reads outside the signature map
    if n == 8 and doms[0] == "p" and doms[-2:] == ("q", "r") and doms[2] in sig and doms[4] in sig:
        return _outcome_record(f"{doms[2]}>={doms[4]}", read)
    if n == 8 and doms[:2] == ("s", "p") and doms[-1] == "q" and doms[3] in sig and doms[5] in sig:
        return _outcome_record(f"{doms[3]}<={doms[5]}", read)
    if n == 5 and doms[0] == "^" and doms[1] in sig and doms[-2:] == ("q", "r"):
        return ReadRecord("arrival", f"{doms[1]}+", doms, read.count, relation=(doms[1], doms[1]))
    if n == 7 and doms[0] == "^" and doms[1] in sig and doms[3] in sig and doms[-2:] == ("q", "r"):
        return ReadRecord(
            "coincidence", f"{doms[1]}&{doms[3]}", doms, read.count, pair=frozenset((doms[1], doms[3]))
        )
    initial = library.initial_reads()
    if doms in initial:
        role = ""
        for text, r in library.roles.items():
            from .model import parse_species

            if read_of_species(parse_species(text)) == doms:
                role = r
                break
        if role.startswith("main"):
            return ReadRecord("untriggered", role, doms, read.count)
        return ReadRecord("byproduct", role, doms, read.count)
    if n == 1 or (n == 2 and "^" in doms):
        return ReadRecord("byproduct", "", doms, read.count)
    return ReadRecord("unknown", "", doms, read.count)


def classify_reads(
    reads: list[Read],
    library: GateLibrary,
    noise: float = 0.0,
    rng: Optional[random.Random] = None,
) -> list[ReadRecord]:
    """Classify a read multiset; with noise, individual reads drop to
    unknown with the given probability."""
    out = []
    if noise and rng is None:
        rng = random.Random(0)
    for r in reads:
        if noise:
            lost = sum(1 for _ in range(r.count) if rng.random() < noise)
            if r.count - lost:
                out.append(classify(Read(r.domains, r.count - lost), library))
            if lost:
                out.append(ReadRecord("unknown", "", r.domains, lost))
        else:
            out.append(classify(r, library))
    return out
