"""Test-only helpers: species shorthands and an ascii diagram parser
used to round-trip render_ascii."""

from __future__ import annotations

import random

from strandrec.model import (
    BOTTOM_ONLY,
    PAIRED,
    TOP_ONLY,
    TOEHOLD,
    Column,
    Domain,
    Duplex,
    Species,
    Strand,
    long_domain,
)


def ss(text: str) -> Strand:
    """ss("^ a") -> Strand; '^' is the toehold, 'a*' a starred long."""
    doms = []
    for tok in text.split():
        if tok == "^":
            doms.append(TOEHOLD)
        elif tok == "^*":
            doms.append(TOEHOLD.comp)
        else:
            star = tok.endswith("*")
            doms.append(long_domain(tok.rstrip("*"), star))
    return Strand(tuple(doms))


def parse_ascii(text: str) -> Species:
    """Invert render_ascii for standard-width diagrams."""
    lines = text.split("\n")
    if len(lines) == 1:
        label, top, bot = "", lines[0], ""
    elif len(lines) == 2:
        label, top = lines
        bot = ""
    else:
        label, top, bot = lines
    width = max(len(label), len(top), len(bot))
    label = label.ljust(width)
    top = top.ljust(width)
    bot = bot.ljust(width)
    # column spans: separated by non-dash glyphs in either strand row
    spans = []
    x = 1
    while x < width:
        if top[x] == "-" or bot[x] == "-":
            x0 = x
            while x < width and (top[x] == "-" or bot[x] == "-"):
                x += 1
            spans.append((x0, x - 1))
        else:
            x += 1
    cols = []
    for x0, x1 in spans:
        w = x1 - x0 + 1
        nm = label[x0 : x1 + 1].strip()
        dom = TOEHOLD if not nm and w == 1 else long_domain(nm.rstrip("*"), nm.endswith("*"))
        if not nm and w != 1:
            raise ValueError("unlabeled long domain")
        has_top = top[x0] == "-"
        has_bot = bot[x0] == "-"
        occ = PAIRED if (has_top and has_bot) else (TOP_ONLY if has_top else BOTTOM_ONLY)
        cols.append([dom, occ, False, False])
    for k in range(len(spans) - 1):
        gap = spans[k][1] + 1
        top_both = cols[k][1] in (PAIRED, TOP_ONLY) and cols[k + 1][1] in (PAIRED, TOP_ONLY)
        bot_both = cols[k][1] in (PAIRED, BOTTOM_ONLY) and cols[k + 1][1] in (PAIRED, BOTTOM_ONLY)
        if top[gap] == ">" and top_both:
            cols[k][2] = True
        if bot[gap] == "<" and bot_both:
            cols[k][3] = True
    if not bot.strip():
        return Strand(tuple(c[0] for c in cols))
    return Duplex(tuple(Column(*c) for c in cols))


def random_species(rng: random.Random, names=("a", "b", "c", "q", "r")) -> Species:
    """A random valid species for round-trip corpora."""
    if rng.random() < 0.3:
        doms = []
        last_toe = False
        for _ in range(rng.randint(1, 5)):
            if not last_toe and rng.random() < 0.35:
                doms.append(TOEHOLD)
                last_toe = True
            else:
                doms.append(long_domain(rng.choice(names), rng.random() < 0.15))
                last_toe = False
        if not doms:
            doms = [long_domain(rng.choice(names))]
        return Strand(tuple(doms))
    while True:
        n = rng.randint(1, 6)
        cols = []
        for i in range(n):
            toe = rng.random() < 0.3
            dom = TOEHOLD if toe else long_domain(rng.choice(names), rng.random() < 0.1)
            occ = rng.choice([PAIRED, PAIRED, PAIRED, TOP_ONLY, BOTTOM_ONLY])
            cols.append([dom, occ, False, False])
        if not any(c[1] == PAIRED for c in cols):
            continue
        for i in range(n - 1):
            a, b = cols[i], cols[i + 1]
            top_both = a[1] in (PAIRED, TOP_ONLY) and b[1] in (PAIRED, TOP_ONLY)
            bot_both = a[1] in (PAIRED, BOTTOM_ONLY) and b[1] in (PAIRED, BOTTOM_ONLY)
            if top_both and rng.random() < 0.3:
                a[2] = True
            if bot_both and rng.random() < 0.3:
                a[3] = True
        try:
            return Duplex(tuple(Column(*c) for c in cols))
        except Exception:
            continue


# the gate structures, in canonical notation ------------------

YES_MAIN = "dx(^:b, {x}:p, ^:p', q:p)"
QR_CAP = "dx(^:t, q:p,, r:p)"
SP_CAP = "dx(s:p,, p:p, ^:t)"
U_STRUCT = "dx(u:p', ^:p, {x}:p, ^:b)"
U_CAP = "dx(u:p, ^:t)"
JOIN_MAIN = "dx(^:b, {x}:p, ^:p', {y}:p, ^:p', q:p)"
V_STRUCT = "dx(v:p', ^:p, {y}:p', ^:p, {x}:p, ^:b)"
V_CAP = "dx(v:p, ^:t)"
CHOICE_MAIN = "dx(p:p', ^:p, {x}:p, ^:b, {y}:p, ^:p', q:p)"
