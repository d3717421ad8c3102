from collections import Counter

import pytest

from strandrec.engine import (
    InsufficientCount,
    apply,
    enumerate_reactions,
    pair_reactions,
    reachable_final_soups,
)
from strandrec.model import Soup, all_domains, parse_species, render_species

from helpers import ss


def soup(*pairs):
    return Soup({parse_species(t): n for t, n in pairs})


YES_A = "dx(^:b, a:p, ^:p', q:p)"
YES_A_MID = "dx(^:p, a:p, ^:b, q:p)"
YES_A_LOCKED = "dx(^:p, a:p', ^:p, q:p,, r:p)"
QR = "dx(^:t, q:p,, r:p)"
SP = "dx(s:p,, p:p, ^:t)"
BLUNT_Q = "dx(q:p)"
BLUNT_P = "dx(p:p)"


def domain_count(s: Soup) -> Counter:
    c = Counter()
    for sp, n in s.items():
        for d in all_domains(sp):
            c[str(d)] += n
    return c


def test_yes_first_step_reversible_three_way():
    s = soup((YES_A, 1), ("ss(^ a)", 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1
    r = rxns[0]
    assert r.mechanism == "three_way" and r.reversible
    prods = {render_species(p) for p in r.products}
    assert prods == {YES_A_MID, "ss(a ^)"}
    assert r.reverse is not None
    # applying forward then the reverse restores the soup
    s2 = apply(r, s)
    assert apply(r.reverse, s2) == s


def test_yes_second_step_irreversible_four_way():
    s = soup((YES_A_MID, 1), (QR, 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1
    r = rxns[0]
    assert r.mechanism == "four_way" and not r.reversible
    prods = sorted(render_species(p) for p in r.products)
    assert prods == sorted([YES_A_LOCKED, BLUNT_Q])


def test_untriggered_yes_alone_is_inert():
    assert enumerate_reactions(soup((YES_A, 1))) == []
    assert enumerate_reactions(soup((YES_A, 1), (QR, 1))) == []


def test_apply_needs_reactants():
    s = soup((YES_A, 1), ("ss(^ a)", 1))
    r = enumerate_reactions(s)[0]
    with pytest.raises(InsufficientCount):
        apply(r, soup((YES_A, 1)))


def test_domain_conservation_along_yes_pathway():
    s = soup((YES_A, 1), (QR, 1), ("ss(^ a)", 1))
    before = domain_count(s)
    r1 = enumerate_reactions(s)[0]
    s = apply(r1, s)
    r2 = [r for r in enumerate_reactions(s) if r.mechanism == "four_way"][0]
    s = apply(r2, s)
    assert domain_count(s) == before


def test_yes_full_pathway_final_soup():
    start = soup((YES_A, 1), (QR, 1), ("ss(^ a)", 1))
    finals = reachable_final_soups(start)
    assert finals == {soup((YES_A_LOCKED, 1), (BLUNT_Q, 1), ("ss(a ^)", 1))}


def test_yes_no_input_final_is_initial():
    start = soup((YES_A, 1), (QR, 1))
    assert reachable_final_soups(start) == {start}


U_STRUCT = "dx(u:p', ^:p, a:p, ^:b)"
U_MID = "dx(u:p, ^:b, a:p, ^:p)"
U_LOCKED = "dx(u:p, ^:p', a:p, ^:p)"
U_CAP = "dx(u:p, ^:t)"
BLUNT_U = "dx(u:p)"


def test_catalytic_yes_extra_reactions():
    s = soup((U_STRUCT, 1), ("ss(a ^)", 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1 and rxns[0].reversible and rxns[0].mechanism == "three_way"
    prods = {render_species(p) for p in rxns[0].products}
    assert prods == {U_MID, "ss(^ a)"}
    s2 = soup((U_MID, 1), (U_CAP, 1))
    rxns2 = enumerate_reactions(s2)
    assert len(rxns2) == 1 and not rxns2[0].reversible and rxns2[0].mechanism == "four_way"
    prods2 = sorted(render_species(p) for p in rxns2[0].products)
    assert prods2 == sorted([U_LOCKED, BLUNT_U])


def test_catalytic_yes_regenerates_input():
    start = soup(
        (YES_A, 1), (QR, 1), (U_STRUCT, 1), (U_CAP, 1), ("ss(^ a)", 1)
    )
    finals = reachable_final_soups(start)
    assert len(finals) == 1
    final = next(iter(finals))
    assert final.count(parse_species("ss(^ a)")) == 1
    assert final.count(parse_species(BLUNT_U)) == 1
    assert final.count(parse_species(YES_A_LOCKED)) == 1


JOIN_AB = "dx(^:b, a:p, ^:p', b:p, ^:p', q:p)"
JOIN_AB_MID1 = "dx(^:p, a:p, ^:b, b:p, ^:p', q:p)"
JOIN_AB_MID2 = "dx(^:p, a:p', ^:p, b:p, ^:b, q:p)"
JOIN_AB_LOCKED = "dx(^:p, a:p', ^:p, b:p', ^:p, q:p,, r:p)"


def test_join_pathway_steps():
    s = soup((JOIN_AB, 1), ("ss(^ a)", 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1 and rxns[0].reversible
    assert {render_species(p) for p in rxns[0].products} == {JOIN_AB_MID1, "ss(a ^)"}

    s = soup((JOIN_AB_MID1, 1), ("ss(^ b)", 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1 and rxns[0].reversible
    assert {render_species(p) for p in rxns[0].products} == {JOIN_AB_MID2, "ss(b ^)"}

    s = soup((JOIN_AB_MID2, 1), (QR, 1))
    rxns = enumerate_reactions(s)
    assert len(rxns) == 1 and not rxns[0].reversible
    assert {render_species(p) for p in rxns[0].products} == {JOIN_AB_LOCKED, BLUNT_Q}


def test_join_wrong_first_input_no_reaction():
    assert enumerate_reactions(soup((JOIN_AB, 1), ("ss(^ b)", 1))) == []


def test_join_without_second_signal_cannot_lock():
    start = soup((JOIN_AB, 1), (QR, 1), ("ss(^ a)", 1))
    finals = reachable_final_soups(start)
    locked_read = ("b", "^", "q", "r")
    for f in finals:
        for sp, _ in f.items():
            assert "b:p', ^:p, q:p" not in render_species(sp)


V_STRUCT = "dx(v:p', ^:p, b:p', ^:p, a:p, ^:b)"
V_CAP = "dx(v:p, ^:t)"
V_LOCKED = "dx(v:p, ^:p', b:p, ^:p', a:p, ^:p)"
BLUNT_V = "dx(v:p)"


def test_catalytic_join_net_conversion():
    start = soup((V_STRUCT, 1), (V_CAP, 1), ("ss(a ^)", 1), ("ss(b ^)", 1))
    finals = reachable_final_soups(start)
    assert len(finals) == 1
    final = next(iter(finals))
    assert final.count(ss("^ a")) == 1
    assert final.count(ss("^ b")) == 1
    assert final.count(parse_species(V_LOCKED)) == 1
    assert final.count(parse_species(BLUNT_V)) == 1


CHOICE_AB = "dx(p:p', ^:p, a:p, ^:b, b:p, ^:p', q:p)"  # [a?b|
CHOICE_BA = "dx(p:p', ^:p, b:p, ^:b, a:p, ^:p', q:p)"  # |b?a]
R_LOCK_AB = "dx(p:p', ^:p, a:p', ^:p, b:p', ^:p, q:p,, r:p)"
S_LOCK_BA = "dx(s:p,, p:p, ^:p', b:p, ^:p', a:p, ^:p', q:p)"


def test_choice_crosstalk_full_pathway_for_b_input():
    start = soup((CHOICE_AB, 1), (CHOICE_BA, 1), (SP, 1), (QR, 1), ("ss(^ b)", 1))
    finals = reachable_final_soups(start)
    assert len(finals) == 1
    final = next(iter(finals))
    assert final.count(parse_species(R_LOCK_AB)) == 1
    assert final.count(parse_species(S_LOCK_BA)) == 1
    assert final.count(parse_species(BLUNT_Q)) == 1
    assert final.count(parse_species(BLUNT_P)) == 1
    # catalytic: the input comes back
    assert final.count(ss("^ b")) == 1


def test_choice_reflexive_both_lockdowns():
    start = soup(("dx(p:p', ^:p, a:p, ^:b, a:p, ^:p', q:p)", 2), (SP, 1), (QR, 1), ("ss(^ a)", 1))
    finals = reachable_final_soups(start)
    assert len(finals) == 1
    final = next(iter(finals))
    r_lock = "dx(p:p', ^:p, a:p', ^:p, a:p', ^:p, q:p,, r:p)"
    s_lock = "dx(s:p,, p:p, ^:p', a:p, ^:p', a:p, ^:p', q:p)"
    assert final.count(parse_species(r_lock)) == 1
    assert final.count(parse_species(s_lock)) == 1
    assert final.count(ss("^ a")) == 1


def test_every_reversible_reaction_has_enumerable_reverse():
    for start in [
        soup((YES_A, 1), (QR, 1), ("ss(^ a)", 1)),
        soup((JOIN_AB, 1), (QR, 1), ("ss(^ a)", 1), ("ss(^ b)", 1)),
        soup((CHOICE_AB, 1), (CHOICE_BA, 1), (SP, 1), (QR, 1), ("ss(^ b)", 1)),
    ]:
        seen = set()
        frontier = [start]
        while frontier:
            cur = frontier.pop()
            if cur in seen or len(seen) > 500:
                continue
            seen.add(cur)
            for r in enumerate_reactions(cur):
                if r.reversible:
                    nxt = apply(r, cur)
                    back = [
                        x
                        for x in enumerate_reactions(nxt)
                        if x.products == r.reactants and x.reactants == r.products
                    ]
                    assert back, f"missing reverse for {r}"
                else:
                    assert r.reverse is None
                frontier.append(apply(r, cur))


def test_domain_conservation_property_random_pathways():
    import random

    rng = random.Random(11)
    start = soup(
        (CHOICE_AB, 1), (CHOICE_BA, 1), (SP, 2), (QR, 2), ("ss(^ b)", 1), ("ss(^ a)", 1)
    )
    for _ in range(30):
        cur = start
        before = domain_count(cur)
        for _ in range(rng.randint(1, 8)):
            rxns = enumerate_reactions(cur)
            if not rxns:
                break
            cur = apply(rng.choice(rxns), cur)
        assert domain_count(cur) == before


def test_no_reactions_between_inert_species():
    # blunt ends and covered toeholds never react
    inert = soup((BLUNT_Q, 2), (BLUNT_P, 2), ("dx(u:p)", 1), ("ss(a ^)", 1), ("ss(^ b)", 1))
    assert enumerate_reactions(inert) == []


def test_trace_export_format():
    from strandrec.engine import trace_export

    s = soup((YES_A, 1), ("ss(^ a)", 1))
    rxns = enumerate_reactions(s)
    text = trace_export(rxns)
    line = text.splitlines()[0].split("\t")
    assert len(line) == 4
    assert line[2] == "three_way" and line[3] == "rev"
    assert trace_export([]) == ""
