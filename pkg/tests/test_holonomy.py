from __future__ import annotations

from itertools import islice

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import spaces
from localgpd.errors import NotAdmissible, NotStrictlyRegular
from localgpd.fintop import FinSpace, discrete, sierpinski
from localgpd.groupoid import cyclic_group, null_groupoid, pair_groupoid, pair_with_group
from localgpd.holonomy import (
    AdmissibleSection,
    admissible_sections,
    atlas_regularity,
    build_locally_top_from_s,
    check_locally_top,
    germ_of,
    holonomy_groupoid,
    identity_section,
    is_isomorphic_to_h,
    lemma_germ_independence,
    locally_sectionable,
    section_inverse,
    section_product,
    sigma_chart_value,
    verify_holonomy,
)
from localgpd.localsub import glob, loc, point_atlases, validate_atlas

LINE = FinSpace.from_opens(["1", "2", "3"], [0b010, 0b011, 0b110])


def test_identity_section_is_idempotent():
    g = pair_groupoid(LINE)
    for u in LINE.opens:
        e = identity_section(g, u)
        assert section_product(e, e) == e


def test_single_point_section_and_inverse():
    g = pair_groupoid(discrete(["1", "2"]))
    k = AdmissibleSection.from_dict(g, {"1": "(2,1)"})
    inv = section_inverse(k)
    assert inv.as_dict() == {"2": "(1,2)"}
    assert section_product(inv, k) == identity_section(g, 0b01)


def test_swap_on_sierpinski_is_not_a_homeomorphism():
    g = pair_groupoid(sierpinski())
    with pytest.raises(NotAdmissible) as err:
        AdmissibleSection.from_dict(g, {"a": "(b,a)", "b": "(a,b)"})
    assert err.value.witness["reason"] == "homeo"


def test_locally_top_examples():
    n = null_groupoid(sierpinski())
    assert check_locally_top(n, n.identities).ok
    d = pair_groupoid(discrete(["1", "2"]))
    assert locally_sectionable(d, d.all_arrows)[0]
    assert check_locally_top(d, d.all_arrows).ok
    s = pair_groupoid(sierpinski())
    rep = check_locally_top(s, s.all_arrows)
    assert rep.g2 and rep.g5


def test_regularity_examples():
    g = pair_groupoid(LINE)
    diag = loc(g, g.identities)
    rep = atlas_regularity(diag)
    assert rep.weakly_adaptable and rep.strictly_regular
    full = loc(g, g.all_arrows)
    assert glob(full) == g.all_arrows and atlas_regularity(full).weakly_adaptable
    ab = validate_atlas(g, [(LINE.mask("12"), g.full_mask(LINE.mask("12"))),
                            (LINE.mask("23"), g.full_mask(LINE.mask("23")))])
    assert atlas_regularity(ab).weakly_adaptable


def test_build_from_diagonal_charts():
    g = pair_groupoid(sierpinski())
    lt = build_locally_top_from_s(loc(g, g.identities))
    assert lt.H == lt.W == g.identities and lt.report.ok


def test_build_refuses_irregular_atlas():
    g = pair_groupoid(LINE)
    ab = validate_atlas(g, [(LINE.mask("12"), g.full_mask(LINE.mask("12"))),
                            (LINE.mask("23"), g.full_mask(LINE.mask("23")))])
    rep = atlas_regularity(ab)
    assert not rep.charts_sectionable and not rep.strictly_regular
    with pytest.raises(NotStrictlyRegular):
        build_locally_top_from_s(ab)


@pytest.mark.parametrize("sp", [sierpinski(), discrete(["1", "2"]), LINE])
def test_diagonal_holonomy_is_h(sp):
    g = pair_groupoid(sp)
    hol = holonomy_groupoid(g, g.identities, g.identities)
    assert hol.size == sp.size and is_isomorphic_to_h(hol)
    assert all(verify_holonomy(hol).values())


def test_discrete_pair_holonomy_is_h():
    g = pair_groupoid(discrete(["1", "2"]))
    hol = holonomy_groupoid(g, g.all_arrows, g.all_arrows)
    assert is_isomorphic_to_h(hol) and hol.size == 4
    assert lemma_germ_independence(hol)[0]
    hol.as_groupoid()


def test_sigma_of_identity_section_is_the_class_itself():
    g = pair_groupoid(discrete(["1", "2"]))
    hol = holonomy_groupoid(g, g.all_arrows, g.all_arrows)
    idx = hol.germ_index()
    for w in range(len(g.arrows)):
        k = identity_section(g, g.object_space.whole)
        c, unique = sigma_chart_value(hol, k, w)
        assert unique and c == hol.embedding[w]
        f = next(a for a in hol.generators if hol.phi[hol.class_of[idx[a]]] == w)
        assert c == hol.class_of[idx[f]]


# -- properties ---------------------------------------------------------------


def all_sections(g):
    sp = g.object_space
    out = []
    for u in sp.opens:
        out.extend(islice(admissible_sections(g, u), 40))
    return out


@given(spaces(3), st.data())
def test_inverse_semigroup_laws(sp, data):
    g = pair_groupoid(sp)
    secs = all_sections(g)
    k = data.draw(st.sampled_from(secs))
    assert section_product(section_product(k, section_inverse(k)), k) == k
    assert section_inverse(section_inverse(k)) == k
    e = section_product(section_inverse(k), k)
    f = data.draw(st.sampled_from(secs))
    f = section_product(section_inverse(f), f)
    assert section_product(e, e) == e
    assert section_product(e, f) == section_product(f, e)


@given(spaces(3), st.sampled_from(["pair", "z2"]))
def test_holonomy_postconditions_on_strictly_regular_atlases(sp, kind):
    if kind == "z2" and sp.size > 2:
        kind = "pair"
    g = pair_groupoid(sp) if kind == "pair" else pair_with_group(sp, cyclic_group(2))
    for s in islice(point_atlases(g), 150):
        if not atlas_regularity(s).strictly_regular:
            continue
        lt = build_locally_top_from_s(s)
        hol = holonomy_groupoid(g, lt.H, lt.W)
        assert hol.j0_normal and hol.kernel == hol.j0
        assert all(verify_holonomy(hol).values())
        for c in range(hol.size):
            assert (hol.src[c], hol.tgt[c]) == (g.src[hol.phi[c]], g.tgt[hol.phi[c]])
        hol.as_groupoid()


@given(spaces(3))
def test_germs_depend_only_on_minimal_neighbourhoods(sp):
    g = pair_groupoid(sp)
    for k in all_sections(g):
        for x in range(sp.size):
            if k.domain >> x & 1:
                assert germ_of(k, x) == germ_of(k.restrict(sp.mn[x]), x)
