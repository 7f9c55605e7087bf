from __future__ import annotations

from itertools import product as cartesian

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import presheaves_st, sheaves_st, spaces
from localgpd.errors import CompositionLawViolation, IncompatibleAtlas
from localgpd.fintop import (
    PointMap,
    bits,
    discrete,
    indiscrete,
    is_continuous_fast,
    is_local_homeomorphism,
    sierpinski,
    subspace,
)
from localgpd.presheaf import (
    Chart,
    Presheaf,
    Section,
    atlas_to_section,
    canonical_presheaf,
    check_adjunction,
    check_sheaf,
    common_refinement_exists,
    constant_presheaf,
    direct_image,
    equivalence_presheaf,
    functions_presheaf,
    gluings,
    global_section_atlases_oracle,
    inverse_image,
    is_compatible_family,
    is_open_germ_map,
    is_section,
    is_sheaf,
    is_sheaf_morphism,
    maps_sections_to_sections,
    mu,
    mu_bijective,
    mu_bijective_fast,
    restrict_to,
    same_section,
    section_image,
    section_to_atlas,
    sections,
    sheaf_morphisms,
    sheafify,
    sheafify_by_basis,
    stalk,
    stalk_preserving_maps,
    validate_atlas,
    validate_presheaf,
)

X3 = discrete(["1", "2", "3"])


def test_constant_and_functions_presheaves_are_lawful():
    validate_presheaf(constant_presheaf(sierpinski(), ["0", "1"]))
    validate_presheaf(functions_presheaf(sierpinski(), ["0", "1"]))


def test_composition_violation_detected():
    # F(empty) has two elements; X -> empty swaps them while X -> {a} -> empty does not
    s = sierpinski()
    p = constant_presheaf(s, ["0", "1"])
    restr = dict(p.restr)
    restr[(s.whole, 0)] = (1, 0)
    with pytest.raises(CompositionLawViolation):
        validate_presheaf(Presheaf(s, p.elems, restr))


def test_equivalence_presheaf_fails_gluing_with_the_triangle_family():
    e = equivalence_presheaf(X3)
    rep = check_sheaf(e)
    assert not rep.f2
    members = [X3.mask("12"), X3.mask("23"), X3.mask("13")]
    family = ["1,2", "2,3", "1|3"]
    assert is_compatible_family(e, members, family)
    assert gluings(e, members, family) == []


def test_equivalence_presheaf_also_fails_locality():
    # {1},{2} covers {1,2}; the full and diagonal relations on {1,2} agree on both pieces
    rep = check_sheaf(equivalence_presheaf(X3))
    assert not rep.f1
    assert rep.f1_witness["open"] == ["1", "2"]


def test_equivalence_presheaf_sizes_match_oracle():
    e = equivalence_presheaf(X3)
    for u in X3.opens:
        assert len(e.elems[u]) == len(oracles.equivalence_relations(X3.ids(u)))


def test_sheaf_examples():
    assert check_sheaf(constant_presheaf(sierpinski(), ["0", "1"])).is_sheaf is False  # F(empty) has 2 elements
    assert is_sheaf(functions_presheaf(sierpinski(), ["0", "1"]))


@pytest.mark.parametrize("sp", [sierpinski(), X3, indiscrete(["1", "2", "3"])])
def test_functions_presheaf_is_a_sheaf(sp):
    assert check_sheaf(functions_presheaf(sp, ["0", "1"])).is_sheaf


def test_stalk_examples():
    s = sierpinski()
    p = functions_presheaf(s, ["0", "1"])
    assert len(stalk(p, "b")) == 4
    assert len(stalk(p, "a")) == 2
    c = constant_presheaf(X3, ["0", "1"])
    assert all(len(stalk(c, x)) == 2 for x in X3.points)


def test_constant_sheaf_on_discrete_two_points():
    d = discrete(["1", "2"])
    e = sheafify(constant_presheaf(d, ["0", "1"]))
    assert e.total.size == 4
    assert all(e.total.mn[g] == 1 << g for g in range(4))
    assert [len(f) for f in e.fibers] == [2, 2]


def test_equivalence_sheafification_has_one_global_section():
    e = equivalence_presheaf(X3)
    sh = sheafify(e)
    assert [len(f) for f in sh.fibers] == [1, 1, 1]
    assert len(sections(sh, X3.whole)) == 1
    m = mu(e, X3.whole, sh)
    assert len(set(m.values())) == 1 and len(m) == 5  # surjective, not injective
    assert not mu_bijective(e, X3.whole, sh)


def test_triangle_atlas_is_a_section_no_element_induces():
    e = equivalence_presheaf(X3)
    charts = [Chart(X3.mask("12"), "1,2"), Chart(X3.mask("23"), "2,3"), Chart(X3.mask("13"), "1|3")]
    validate_atlas(e, charts)
    sec = atlas_to_section(e, charts)
    assert sec.domain == X3.whole
    assert global_section_atlases_oracle(e, charts)


def test_atlas_examples():
    s = sierpinski()
    p = functions_presheaf(s, ["0", "1"])
    f = p.elems[s.whole][0]
    single = [Chart(s.whole, f)]
    two = [Chart(s.mask("a"), p.res(s.whole, s.mask("a"), f)), Chart(s.whole, f)]
    assert same_section(p, single, two)
    assert atlas_to_section(p, single) == atlas_to_section(p, two)
    other = p.elems[s.whole][-1]
    with pytest.raises(IncompatibleAtlas):
        validate_atlas(p, [Chart(s.whole, f), Chart(s.whole, other)])


def test_direct_image_to_a_point():
    d = discrete(["1", "2"])
    pt = discrete(["*"])
    f = PointMap(d, pt, (0, 0))
    pushed = direct_image(f, sheafify(constant_presheaf(d, ["0", "1"])))
    assert len(pushed.elems[pt.whole]) == 4


def test_identity_images():
    s = sierpinski()
    e = sheafify(functions_presheaf(s, ["0", "1"]))
    ident = PointMap(s, s, (0, 1))
    assert inverse_image(ident, e).total.size == e.total.size
    assert sheafify(direct_image(ident, e)).total.size == e.total.size
    assert check_adjunction(ident, e, e).ok


# -- properties ---------------------------------------------------------------


@given(presheaves_st())
def test_sheaf_conditions_equal_mu_bijective(p):
    full = check_sheaf(p)
    assert full.equalizer_agrees
    conj = full.is_sheaf
    assert check_sheaf(p, irredundant=True).is_sheaf == conj
    assert is_sheaf(p) == conj
    e = sheafify(p)
    assert all(mu_bijective(p, u, e) for u in p.base.opens) == conj
    assert all(mu_bijective_fast(p, u) for u in p.base.opens) == conj


@given(presheaves_st())
def test_stalks_match_colimit_oracle(p):
    sp = p.base
    sets = {frozenset(sp.ids(u)): list(p.elems[u]) for u in sp.opens}
    key = {frozenset(sp.ids(u)): u for u in sp.opens}

    def res(u, w, s):
        return p.res(key[u], key[w], s)

    for x in sp.points:
        assert len(stalk(p, x)) == oracles.stalk_size(sets, sets, res, x)


@given(presheaves_st())
def test_sheafification_is_etale_and_its_sections_form_a_sheaf(p):
    e = sheafify(p)
    assert e.is_etale()
    g = canonical_presheaf(e)
    assert check_sheaf(g).is_sheaf
    again = sheafify(g)
    assert [len(f) for f in again.fibers] == [len(f) for f in e.fibers]
    b = sheafify_by_basis(p)
    assert b.total == e.total


@given(sheaves_st())
def test_section_images_are_open_and_project_homeomorphically(e):
    for u in e.base.opens:
        for sec in sections(e, u):
            img = section_image(sec)
            assert e.total.is_open(img)
            sub = subspace(e.total, img)
            proj = tuple(e.proj[g] for g in bits(img))
            base = subspace(e.base, u)
            pos = {x: i for i, x in enumerate(bits(u))}
            f = PointMap(sub, base, tuple(pos[x] for x in proj))
            assert is_local_homeomorphism(f) and len(set(proj)) == len(proj)


@given(sheaves_st(max_size=2), st.data())
def test_morphisms_equivalent_characterisations(e1, data):
    e2 = data.draw(sheaves_st(max_size=2, space=e1.base))
    conts = set(sheaf_morphisms(e1, e2))
    for eta in stalk_preserving_maps(e1, e2):
        good = maps_sections_to_sections(e1, e2, eta)
        assert good == (eta in conts) == is_sheaf_morphism(e1, e2, eta)
        if good:
            assert is_open_germ_map(e1, e2, eta)


@given(presheaves_st())
def test_atlas_section_round_trip(p):
    e = sheafify(p)
    for sec in sections(e, p.base.whole):
        charts = section_to_atlas(p, sec, e)
        assert atlas_to_section(p, charts, e) == sec


@given(presheaves_st(max_size=2), st.data())
def test_same_section_matches_common_refinement(p, data):
    e = sheafify(p)
    secs = sections(e, p.base.whole)
    if not secs:
        return
    a = section_to_atlas(p, data.draw(st.sampled_from(secs)), e)
    b = section_to_atlas(p, data.draw(st.sampled_from(secs)), e)
    assert same_section(p, a, b) == common_refinement_exists(p, a, b)
    assert same_section(p, a, a)


@given(spaces(2), spaces(2), st.data())
def test_image_adjunction_on_random_maps(x, y, data):
    mapping = tuple(data.draw(st.integers(0, y.size - 1)) for _ in range(x.size))
    f = PointMap(x, y, mapping)
    if not is_continuous_fast(f):
        return
    from localgpd.sweep import sheaves

    g = data.draw(st.sampled_from(list(sheaves(y, 2))))
    h = data.draw(st.sampled_from(list(sheaves(x, 2))))
    assert check_adjunction(f, g, h).ok


@given(sheaves_st(), st.data())
def test_restriction_to_a_subset(e, data):
    y = data.draw(st.integers(0, e.base.whole))
    r = restrict_to(e, y)
    assert r.is_etale()
    assert r.total.size == sum(len(e.fibers[x]) for x in bits(y))


def test_sections_are_continuous_choices():
    e = sheafify(functions_presheaf(sierpinski(), ["0", "1"]))
    s = e.base
    valid = sections(e, s.whole)
    allc = [Section(s.whole, v) for v in cartesian(*(e.fibers[x] for x in range(s.size)))]
    assert {c for c in allc if is_section(e, c)} == set(valid)
    assert len(valid) == 4
