from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import spaces
from localgpd.errors import BaseMismatch, Incompatible, NotWide
from localgpd.fintop import FinSpace, discrete, indiscrete, sierpinski
from localgpd.groupoid import (
    action_groupoid,
    cyclic_group,
    is_morphism,
    null_groupoid,
    pair_groupoid,
    pair_with_group,
    wide_subgroupoids,
    x_morphisms,
)
from localgpd.localsub import (
    adjunction_check,
    coherence,
    coherence_h,
    common_refinement_exists,
    equal,
    germ_le,
    glob,
    glob_by_covers,
    glob_by_definition,
    is_coherent,
    ler_from_closure,
    ler_times_group,
    loc,
    local_subgroupoids,
    point_atlases,
    project_to_ler,
    restrict,
    theorem_bench,
    validate_atlas,
)

LINE = FinSpace.from_opens(["1", "2", "3"], [0b010, 0b011, 0b110])


def two_chart_atlas():
    g = pair_groupoid(LINE)
    a = (LINE.mask("12"), g.full_mask(LINE.mask("12")))
    b = (LINE.mask("23"), g.full_mask(LINE.mask("23")))
    return g, validate_atlas(g, [a, b])


def trivial_bundle(sp: FinSpace):
    z2 = cyclic_group(2)
    act = {(e, x): x for e in z2.elements for x in sp.points}
    return action_groupoid(z2, sp, act)


def test_two_full_charts_glob_is_everything():
    g, s = two_chart_atlas()
    assert glob(s) == g.all_arrows and len(g.arrows) == 9
    assert glob_by_covers(s) == glob_by_definition(s) == g.all_arrows


def test_diagonal_and_full_charts_are_incompatible():
    s = sierpinski()
    g = pair_groupoid(s)
    with pytest.raises(Incompatible) as err:
        validate_atlas(g, [(s.whole, g.identities), (s.whole, g.all_arrows)])
    assert err.value.witness["point"] == "b"


def test_single_chart_always_valid():
    g = pair_groupoid(sierpinski())
    for h in wide_subgroupoids(g):
        validate_atlas(g, [(g.object_space.whole, h)])


def test_loc_requires_wide():
    g = pair_groupoid(sierpinski())
    with pytest.raises(NotWide):
        loc(g, g.arrow("(b,a)"))


def test_germ_order_examples():
    sp = sierpinski()
    g = pair_groupoid(sp)
    diag, full = loc(g, g.identities), loc(g, g.all_arrows)
    assert germ_le(diag, diag) and germ_le(diag, full)
    assert not germ_le(full, diag)
    assert full.germs == (g.full_mask(sp.mask("a")), g.all_arrows)
    assert all(m == g.identities & g.full_mask(sp.mn[x]) for x, m in enumerate(diag.germs))


def test_base_mismatch():
    a = loc(pair_groupoid(sierpinski()), 0b1111)
    b = loc(pair_groupoid(discrete(["1", "2", "3"])), 0b111111111)
    with pytest.raises(BaseMismatch):
        germ_le(a, b)


def test_loc_restricts_to_every_open():
    g, _ = two_chart_atlas()
    s = loc(g, g.all_arrows)
    for u in LINE.opens:
        if u:
            r = restrict(s, u)
            assert equal(r, loc(r.groupoid, r.groupoid.all_arrows))


def test_glob_of_diagonal_and_bundles():
    g = pair_groupoid(LINE)
    assert glob(loc(g, g.identities)) == g.identities
    for sp in (discrete(["1", "2"]), sierpinski(), indiscrete(["1", "2"])):
        b = trivial_bundle(sp)
        s = loc(b, b.all_arrows)
        assert glob(s) == b.all_arrows
        assert coherence(s)["globally_coherent"]


def test_strict_counit_on_discrete_pair():
    g = pair_groupoid(discrete(["1", "2"]))
    assert glob(loc(g, g.all_arrows)) == g.identities
    rep = adjunction_check(g)
    assert rep.ok and len(rep.strict_counit) == 1
    assert coherence_h(g, g.identities) == {"locally_coherent": True, "coherent": True}


def test_adjunction_on_sierpinski():
    rep = adjunction_check(pair_groupoid(sierpinski()))
    assert rep.ok and rep.wide == 2 and not rep.strict_counit


def test_full_pair_on_sierpinski_is_coherent():
    g = pair_groupoid(sierpinski())
    assert coherence_h(g, g.all_arrows)["coherent"]


def test_theorem_bench_on_line():
    rep = theorem_bench(pair_groupoid(LINE))
    assert rep.ok
    assert rep.hypothesis_true["clopen_components"] == rep.checked["clopen_components"]


def test_closure_relations():
    s = ler_from_closure(sierpinski())
    g = s.groupoid
    assert s.germs == (g.mask_of(["(a,a)"]), g.identities)
    i = ler_from_closure(indiscrete(["1", "2"]))
    assert i.germs == (i.groupoid.all_arrows,) * 2


def test_project_forgets_the_group():
    sp = sierpinski()
    big = pair_with_group(sp, cyclic_group(2))
    p = project_to_ler(loc(big, big.all_arrows))
    assert equal(p, loc(p.groupoid, p.groupoid.all_arrows))
    r = ler_from_closure(sp)
    assert equal(project_to_ler(ler_times_group(r, cyclic_group(2))), r)


def test_initial_and_final_objects():
    for sp in (sierpinski(), discrete(["1", "2"]), LINE):
        for g in (pair_groupoid(sp), trivial_bundle(sp)):
            into = x_morphisms(null_groupoid(sp), g)
            out = x_morphisms(g, pair_groupoid(sp))
            assert len(into) == 1 and len(out) == 1
            assert is_morphism(into[0]) and is_morphism(out[0])


# -- properties ---------------------------------------------------------------


groupoid_kinds = st.sampled_from(["pair", "bundle"])


def build(kind, sp):
    return pair_groupoid(sp) if kind == "pair" else trivial_bundle(sp)


@given(spaces(3), groupoid_kinds)
def test_glob_matches_both_oracles(sp, kind):
    g = build(kind, sp)
    wides = wide_subgroupoids(g)
    for s in local_subgroupoids(g):
        want = glob(s)
        assert glob_by_covers(s) == want
        assert glob_by_definition(s, wides) == want


@given(spaces(3), groupoid_kinds)
def test_unit_and_counit(sp, kind):
    g = build(kind, sp)
    for h in wide_subgroupoids(g):
        assert glob(loc(g, h)) & ~h == 0
    for s in local_subgroupoids(g):
        assert germ_le(s, loc(g, glob(s)))
        assert is_coherent(s)


@given(spaces(3), st.data())
def test_germ_order_is_partial_and_equal_means_common_refinement(sp, data):
    g = pair_groupoid(sp)
    ss = local_subgroupoids(g)
    a, b, c = (data.draw(st.sampled_from(ss)) for _ in range(3))
    assert germ_le(a, a)
    if germ_le(a, b) and germ_le(b, a):
        assert equal(a, b)
    if germ_le(a, b) and germ_le(b, c):
        assert germ_le(a, c)
    assert equal(a, b) == common_refinement_exists(a, b)


@given(spaces(3))
def test_point_atlases_reproduce_every_local_subgroupoid(sp):
    g = pair_groupoid(sp)
    tables = {s.germs for s in local_subgroupoids(g)}
    assert {s.germs for s in point_atlases(g)} == tables


@given(spaces(3), groupoid_kinds)
def test_coherence_statements_have_no_witnesses(sp, kind):
    # the leaves statement is exercised in test_foliate
    rep = theorem_bench(build(kind, sp))
    assert {k: v for k, v in rep.witnesses.items() if k != "leaves_are_components" and v} == {}
