from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import spaces
from localgpd.errors import ClosureViolation, DuplicateOpen, MissingEmptyOrWhole
from localgpd.fintop import (
    Cover,
    FinSpace,
    PointMap,
    bits,
    closure,
    common_refinement,
    connected_components,
    covers,
    discrete,
    indiscrete,
    is_connected,
    is_continuous,
    is_continuous_fast,
    is_local_homeomorphism,
    is_open_map,
    is_sober,
    min_nbhd,
    product,
    refines,
    sierpinski,
    subspace,
    validate_space,
)


def opens_as_sets(sp: FinSpace) -> set[frozenset]:
    return {frozenset(sp.ids(u)) for u in sp.opens}


def test_sierpinski_valid():
    sp = validate_space(["a", "b"], [[], ["a"], ["a", "b"]])
    assert sp.size == 2 and len(sp.opens) == 3


def test_missing_union_rejected():
    with pytest.raises(ClosureViolation):
        validate_space(["a", "b"], [[], ["a"], ["b"]])


def test_discrete_three_points():
    all8 = [list(s) for s in oracles.subsets("123")]
    sp = validate_space(["1", "2", "3"], all8)
    assert sp == discrete(["1", "2", "3"])


def test_duplicate_open_rejected():
    with pytest.raises(DuplicateOpen):
        validate_space(["a", "b"], [[], ["a"], ["a"], ["a", "b"]])


def test_missing_whole_rejected():
    with pytest.raises(MissingEmptyOrWhole):
        validate_space(["a", "b"], [[], ["a"]])


def test_min_nbhd_examples():
    s = sierpinski()
    assert s.ids(min_nbhd(s, "a")) == ["a"]
    assert s.ids(min_nbhd(s, "b")) == ["a", "b"]
    d = discrete(["1", "2", "3"])
    assert d.ids(min_nbhd(d, "2")) == ["2"]


def test_closure_and_components_examples():
    s = sierpinski()
    assert s.ids(closure(s, s.mask(["a"]))) == ["a", "b"]
    assert [s.ids(c) for c in connected_components(s)] == [["a", "b"]]
    d = discrete(["1", "2", "3"])
    assert sorted(d.ids(c) for c in connected_components(d)) == [["1"], ["2"], ["3"]]


def test_sober_examples():
    assert is_sober(discrete(["1", "2", "3"]))
    assert not is_sober(indiscrete(["1", "2"]))
    assert is_sober(sierpinski())


def test_refinement_examples():
    s = sierpinski()
    a = Cover(s, s.whole, (s.mask("a"), s.whole))
    b = Cover(s, s.whole, (s.whole,))
    assert refines(a, b)
    d = discrete(["1", "2", "3"])
    c1 = Cover(d, d.whole, (d.mask("12"), d.mask("23")))
    c2 = Cover(d, d.whole, (d.whole,))
    assert common_refinement(c1, c2).members == c1.members
    assert not refines(c2, c1)


def test_map_examples():
    s = sierpinski()
    ident = PointMap(s, s, (0, 1))
    assert is_continuous(ident) and is_open_map(ident)
    f = PointMap.from_dict(discrete(["1", "2"]), s, {"1": "a", "2": "b"})
    assert is_continuous(f) and not is_open_map(f)
    assert subspace(s, s.mask("b")).size == 1


@given(spaces())
def test_min_nbhd_is_least_open(sp):
    ops = opens_as_sets(sp)
    assert ops == oracles.topology_closure(sp.points, ops)
    for x in range(sp.size):
        assert sp.is_open(sp.mn[x]) and sp.mn[x] >> x & 1
        for u in sp.opens_containing(x):
            assert sp.mn[x] & ~u == 0
        assert frozenset(sp.ids(sp.mn[x])) == oracles.min_open(ops, sp.points[x])


@given(spaces(), st.data())
def test_closure_is_a_closure_operator(sp, data):
    a = data.draw(st.integers(0, sp.whole))
    b = data.draw(st.integers(0, sp.whole))
    ca = closure(sp, a)
    assert a & ~ca == 0
    assert closure(sp, ca) == ca
    assert closure(sp, a & b) & ~closure(sp, a) == 0


@given(spaces())
def test_components_partition_and_connected(sp):
    comps = connected_components(sp)
    union = 0
    for c in comps:
        assert union & c == 0
        union |= c
        assert is_connected(sp, c)
    assert union == sp.whole
    got = {frozenset(sp.ids(c)) for c in comps}
    assert got == oracles.components(sp.points, opens_as_sets(sp))


@given(spaces(4), st.data())
def test_refinement_preorder_and_meet(sp, data):
    opens = [u for u in sp.opens if u]
    covs = [Cover(sp, sp.whole, c) for c in covers(sp, sp.whole, irredundant=False)]
    a, b, c = (data.draw(st.sampled_from(covs)) for _ in range(3))
    assert refines(a, a)
    if refines(a, b) and refines(b, c):
        assert refines(a, c)
    m = common_refinement(a, b)
    assert refines(m, a) and refines(m, b)
    if refines(c, a) and refines(c, b):
        assert refines(c, m)
    assert opens


@given(spaces(4), spaces(3), st.data())
def test_continuity_fast_path_matches_definition(x, y, data):
    mapping = tuple(data.draw(st.integers(0, y.size - 1)) for _ in range(x.size))
    f = PointMap(x, y, mapping)
    assert is_continuous(f) == is_continuous_fast(f)
    d = {x.points[i]: y.points[j] for i, j in enumerate(mapping)}
    assert is_continuous(f) == oracles.is_continuous(opens_as_sets(x), opens_as_sets(y), d)
    assert is_open_map(f) == oracles.is_open_map(x.points, opens_as_sets(x), opens_as_sets(y), d)


@given(spaces(3), spaces(3))
def test_product_projection_is_continuous_and_open(a, b):
    p = product(a, b)
    first = PointMap(p, a, tuple(i // b.size for i in range(p.size)))
    assert is_continuous(first) and is_open_map(first)


def test_local_homeomorphism_examples():
    s = sierpinski()
    d = discrete(["1", "2"])
    assert is_local_homeomorphism(PointMap(d, d, (1, 0)))
    assert not is_local_homeomorphism(PointMap(s, indiscrete(["x"]), (0, 0)))
    assert list(bits(0b101)) == [0, 2]
