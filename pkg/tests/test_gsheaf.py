from __future__ import annotations

from itertools import islice

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import sheaves_st, spaces
from localgpd.errors import AssocViolation
from localgpd.fintop import discrete, sierpinski
from localgpd.groupoid import cyclic_group, null_groupoid, pair_groupoid, pair_with_group
from localgpd.gsheaf import (
    GroupoidAction,
    QPair,
    RStructure,
    STransport,
    action_failures,
    actions,
    constant_action,
    is_functor,
    is_locally_transitive,
    is_valid_action,
    lift_r_action,
    q_failure,
    q_pairs,
    r_structure_check,
    r_structures,
    s_transport_check,
    s_transports,
    unique_transport,
    validate_action,
)
from localgpd.localsub import glob, is_globally_coherent, loc, local_subgroupoids
from localgpd.presheaf import constant_presheaf, sheafify
from localgpd.sweep import sheaves

D2 = discrete(["1", "2"])


def const_sheaf(sp):
    return sheafify(constant_presheaf(sp, ["0", "1"]))


def by_id(f, gid):
    return f.germ_index[gid]


def test_pair_groupoid_acts_on_constant_sheaf_by_labels():
    for sp in (D2, sierpinski()):
        g, f = pair_groupoid(sp), const_sheaf(sp)
        act = validate_action(constant_action(g, f))
        assert is_functor(act)


def test_null_groupoid_acts_trivially():
    for sp in (D2, sierpinski()):
        g = null_groupoid(sp)
        f = const_sheaf(sp)
        act = GroupoidAction(g, f, g.all_arrows, {(g.ident[f.proj[e]], e): e for e in range(f.total.size)})
        assert is_valid_action(act)


def test_collapsing_one_arrow_breaks_associativity():
    g, f = pair_groupoid(D2), const_sheaf(D2)
    table = dict(constant_action(g, f).table)
    a = g.arrow("(2,1)")
    for e in ("1:0", "1:1"):
        table[(a, by_id(f, e))] = by_id(f, "2:0")
    with pytest.raises(AssocViolation) as err:
        validate_action(GroupoidAction(g, f, g.all_arrows, table))
    assert sorted(err.value.witness["pair"]) == ["(1,2)", "(2,1)"]


def test_q_pairs_over_one_point():
    x = discrete(["1"])
    f = const_sheaf(x)
    pairs = q_pairs(f, x.whole)
    assert pairs == [QPair(1, (1,), (1, 2))]
    assert q_failure(f, x.whole, (1,), (3,)) is not None


def test_diagonal_structure_over_the_diagonal_relation():
    sp = sierpinski()
    g, f = pair_groupoid(sp), const_sheaf(sp)
    r = loc(g, g.identities)
    charts = []
    for x in range(sp.size):
        m = sp.mn[x]
        germs = [e for y in range(sp.size) if m >> y & 1 for e in f.fibers[y]]
        charts.append(QPair(m, tuple(sorted(1 << y for y in range(sp.size) if m >> y & 1)),
                            tuple(sorted(1 << e for e in germs))))
    t = RStructure(f, tuple(charts))
    assert r_structure_check(f, t, r)[0]
    act = lift_r_action(f, t, g)
    assert act.arrows == g.identities and all(r == e for (_, e), r in act.table.items())


def test_transport_counts():
    g, f = pair_groupoid(D2), const_sheaf(D2)
    s = loc(g, g.all_arrows)
    assert is_locally_transitive(s)
    assert unique_transport(s, f)[0] == 1
    n = null_groupoid(D2)
    assert unique_transport(loc(n, n.all_arrows), f)[0] >= 1


def test_disagreeing_charts_are_not_a_transport():
    x = discrete(["1"])
    g, f = pair_with_group(x, cyclic_group(2)), const_sheaf(x)
    trivial, swap = (dict(a.table) for a in actions(g, f))
    t = STransport(f, ((1, g.all_arrows, trivial), (1, g.all_arrows, swap)))
    assert not s_transport_check(f, t, loc(g, g.all_arrows))


def test_two_transports_for_a_nontrivial_vertex_group():
    x = discrete(["1"])
    g, f = pair_with_group(x, cyclic_group(2)), const_sheaf(x)
    s = loc(g, g.all_arrows)
    assert is_locally_transitive(s)
    assert unique_transport(s, f)[0] == 2


def test_at_most_one_transport_with_a_nontrivial_vertex_group():
    # expected to fail: the swap and the trivial action are both transports
    x = discrete(["1"])
    g, f = pair_with_group(x, cyclic_group(2)), const_sheaf(x)
    assert unique_transport(loc(g, g.all_arrows), f)[0] <= 1


def label_structure(f, crossed: bool):
    sp = f.base
    m = {e: f.germs[e].elem for e in range(f.total.size)}
    blocks = {}
    for e in range(f.total.size):
        lab = m[e]
        if crossed and f.proj[e] == 1:
            lab = "1" if lab == "0" else "0"
        blocks[lab] = blocks.get(lab, 0) | 1 << e
    return RStructure(f, (QPair(sp.whole, (sp.whole,), tuple(sorted(blocks.values()))),))


def test_label_lifts_on_discrete_pair():
    g, f = pair_groupoid(D2), const_sheaf(D2)
    r = loc(g, g.all_arrows)
    straight, crossed = label_structure(f, False), label_structure(f, True)
    assert r_structure_check(f, straight, r)[0] and r_structure_check(f, crossed, r)[0]
    a = lift_r_action(f, straight, g, g.all_arrows)
    b = lift_r_action(f, crossed, g, g.all_arrows)
    assert a.table == constant_action(g, f).table
    assert is_valid_action(a) and is_valid_action(b) and a.table != b.table


# -- properties ---------------------------------------------------------------


@st.composite
def action_tables(draw):
    sp = draw(spaces(2))
    g = pair_groupoid(sp)
    f = draw(sheaves_st(max_size=2, space=sp))
    valid = list(islice(actions(g, f, continuous=False), 20))
    if valid and draw(st.booleans()):
        return draw(st.sampled_from(valid))
    table = {}
    for a in range(len(g.arrows)):
        for e in f.fibers[g.src[a]]:
            table[(a, e)] = draw(st.sampled_from(f.fibers[g.tgt[a]]))
    return GroupoidAction(g, f, g.all_arrows, table)


@given(action_tables())
def test_action_axioms_match_stalk_functor(act):
    algebraic = [k for k, _ in action_failures(act) if k != "continuity"]
    assert (not algebraic) == is_functor(act)
    if not algebraic:
        g = act.groupoid
        for a in range(len(g.arrows)):
            for h in range(len(g.arrows)):
                if g.src[h] == g.tgt[a]:
                    ha, ma, mh = act.stalk_map(g.comp[(h, a)]), act.stalk_map(a), act.stalk_map(h)
                    assert ha == {e: mh[ma[e]] for e in ma}
                    assert sorted(ma.values()) == sorted(act.sheaf.fibers[g.tgt[a]])


@given(spaces(2), st.data())
def test_lifts_round_trip(sp, data):
    g = pair_groupoid(sp)
    f = data.draw(sheaves_st(max_size=2, space=sp))
    for r in local_subgroupoids(g):
        if not is_globally_coherent(r):
            continue
        for t in r_structures(f, r):
            if r_structure_check(f, t, r)[0]:
                assert is_valid_action(lift_r_action(f, t, g, glob(r)))


@given(spaces(3), st.data())
def test_transports_are_glued_local_actions(sp, data):
    g = pair_groupoid(sp)
    f = data.draw(st.sampled_from(list(islice(sheaves(sp, 2), 30))))
    s = data.draw(st.sampled_from(local_subgroupoids(g)))
    opts = [[dict(a.table) for a in actions(g, f, s.germs[x])] for x in range(sp.size)]
    if not all(opts):
        assert s_transports(s, f) == []
        return
    picks = [data.draw(st.sampled_from(o)) for o in opts]
    agree = all(
        {k: v for k, v in picks[x].items() if g.full_mask(sp.mn[y]) >> k[0] & 1} == picks[y]
        for x in range(sp.size) for y in range(sp.size) if sp.mn[x] >> y & 1
    )
    t = STransport(f, tuple((sp.mn[x], s.germs[x], picks[x]) for x in range(sp.size)))
    assert s_transport_check(f, t, s) == agree
    glued = {tuple(tuple(sorted(c[2].items())) for c in tr.charts) for tr in s_transports(s, f)}
    assert (tuple(tuple(sorted(p.items())) for p in picks) in glued) == agree


@given(spaces(3), st.data())
def test_locally_transitive_pair_subgroupoids_have_at_most_one_transport(sp, data):
    g = pair_groupoid(sp)
    f = data.draw(st.sampled_from(list(islice(sheaves(sp, 2), 30))))
    for s in local_subgroupoids(g):
        if is_locally_transitive(s):
            assert unique_transport(s, f)[0] <= 1
