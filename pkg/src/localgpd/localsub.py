"""Local subgroupoids, the germ order, loc and glob, and coherence.

A local subgroupoid is carried by the atlas it was given with and by its
canonical germ table: the germ at ``x`` is the chart subgroupoid restricted to
the minimal neighbourhood of ``x``, stored as an arrow mask of the ambient
groupoid.  Charts are ``(open mask, arrow mask)`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Iterator, Sequence

from .errors import (
    BaseMismatch,
    CoverIncomplete,
    Incompatible,
    NotSubgroupoid,
    NotWide,
    ResourceCap,
    TopologyRequired,
)
from .fintop import FinSpace, bits, closure, connected_components, is_closed, is_connected, popcount
from .groupoid import (
    FinGroup,
    FinGroupoid,
    GroupoidMorphism,
    Subgroupoid,
    components,
    full_restriction,
    generate,
    image_mask,
    is_subgroupoid,
    pair_groupoid,
    pair_with_group,
    restrict_mask,
    upsilon,
    wide_subgroupoids,
    wide_subgroupoids_on,
)
from .presheaf import EtaleSheaf, Presheaf, sheafify

Chart = tuple[int, int]


def _space(g: FinGroupoid) -> FinSpace:
    if g.object_space is None:
        raise TopologyRequired("local subgroupoids need a topology on the objects")
    return g.object_space


@dataclass(frozen=True, eq=False)
class LocalSubgroupoid:
    groupoid: FinGroupoid
    charts: tuple[Chart, ...]
    germs: tuple[int, ...]

    @property
    def space(self) -> FinSpace:
        return _space(self.groupoid)

    def chart_names(self) -> list[dict]:
        sp, g = self.space, self.groupoid
        return [{"open": sp.ids(u), "arrows": g.names(h)} for u, h in self.charts]


def validate_atlas(g: FinGroupoid, charts: Sequence[Chart]) -> LocalSubgroupoid:
    sp = _space(g)
    union = 0
    for i, (u, h) in enumerate(charts):
        if not sp.is_open(u):
            raise NotSubgroupoid(f"chart {i} domain is not open", witness=i)
        if h & ~g.full_mask(u):
            raise NotSubgroupoid(f"chart {i} has arrows outside G|U", witness=i)
        if not is_subgroupoid(g, h, u):
            missing_ids = [x for x in bits(u) if not h >> g.ident[x] & 1]
            if missing_ids:
                raise NotWide(f"chart {i} misses identities", witness=i)
            raise NotSubgroupoid(f"chart {i} is not closed under composition and inverse", witness=i)
        union |= u
    if union != sp.whole:
        raise CoverIncomplete("charts do not cover the space", witness=sp.ids(sp.whole & ~union))
    for i, (u, h) in enumerate(charts):
        for j in range(i + 1, len(charts)):
            v, k = charts[j]
            for x in bits(u & v):
                w = g.full_mask(sp.mn[x])
                if h & w != k & w:
                    raise Incompatible(
                        f"charts {i} and {j} disagree near {sp.points[x]}",
                        witness={"charts": [i, j], "point": sp.points[x]},
                    )
    germs = []
    for x in range(sp.size):
        best = None
        for u, h in charts:
            if u >> x & 1 and (best is None or popcount(u) < popcount(best[0])):
                best = (u, h)
        assert best is not None
        germs.append(best[1] & g.full_mask(sp.mn[x]))
    return LocalSubgroupoid(g, tuple(charts), tuple(germs))


def from_germs(g: FinGroupoid, germs: Sequence[int]) -> LocalSubgroupoid:
    sp = _space(g)
    return validate_atlas(g, [(sp.mn[x], germs[x]) for x in range(sp.size)])


def loc(g: FinGroupoid, h: int) -> LocalSubgroupoid:
    sp = _space(g)
    if not is_subgroupoid(g, h, g.all_objects):
        if any(not h >> i & 1 for i in g.ident):
            raise NotWide("loc needs a wide subgroupoid")
        raise NotSubgroupoid("loc needs a subgroupoid")
    return LocalSubgroupoid(g, ((sp.whole, h),), tuple(h & g.full_mask(m) for m in sp.mn))


def glob(s: LocalSubgroupoid) -> int:
    """Wide subgroupoid generated by the canonical germs."""
    g = s.groupoid
    seed = 0
    for m in s.germs:
        seed |= m
    return generate(g, seed, g.all_objects)


def glob_subgroupoid(s: LocalSubgroupoid) -> Subgroupoid:
    g = s.groupoid
    return Subgroupoid(g, glob(s), g.all_objects)


def _same_base(s: LocalSubgroupoid, t: LocalSubgroupoid) -> None:
    if s.groupoid is not t.groupoid and s.groupoid.signature() != t.groupoid.signature():
        raise BaseMismatch("local subgroupoids of different groupoids")


def germ_le(s: LocalSubgroupoid, t: LocalSubgroupoid) -> bool:
    _same_base(s, t)
    return all(a & ~b == 0 for a, b in zip(s.germs, t.germs))


def equal(s: LocalSubgroupoid, t: LocalSubgroupoid) -> bool:
    _same_base(s, t)
    return s.germs == t.germs


def common_refinement_exists(s: LocalSubgroupoid, t: LocalSubgroupoid) -> bool:
    """Oracle for :func:`equal`: the two atlases together still form an atlas."""
    _same_base(s, t)
    try:
        validate_atlas(s.groupoid, list(s.charts) + list(t.charts))
    except Incompatible:
        return False
    return True


def restrict(s: LocalSubgroupoid, u: int) -> LocalSubgroupoid:
    """s|U over G|U on the subspace U; charts are intersected with U."""
    g, sp = s.groupoid, s.space
    if not sp.is_open(u):
        raise BaseMismatch("restriction needs an open set", witness=sp.ids(u))
    sub, keep = full_restriction(g, u)
    opos = list(bits(u))
    from .fintop import reindex

    charts = []
    for v, h in s.charts:
        w = v & u
        if w:
            charts.append((reindex(w, opos), reindex(h & g.full_mask(w), keep)))
    return validate_atlas(sub, charts)


# -- coherence ----------------------------------------------------------------


def is_coherent(s: LocalSubgroupoid) -> bool:
    return germ_le(s, loc(s.groupoid, glob(s)))


def is_globally_coherent(s: LocalSubgroupoid) -> bool:
    return equal(s, loc(s.groupoid, glob(s)))


def is_totally_coherent(s: LocalSubgroupoid) -> bool:
    sp = s.space
    return all(is_coherent(restrict(s, u)) for u in sp.opens if u)


def coherence(s: LocalSubgroupoid) -> dict[str, bool]:
    return {
        "coherent": is_coherent(s),
        "globally_coherent": is_globally_coherent(s),
        "totally_coherent": is_totally_coherent(s),
    }


def coherence_h(g: FinGroupoid, h: int) -> dict[str, bool]:
    s = loc(g, h)
    return {"locally_coherent": is_coherent(s), "coherent": glob(s) == h}


# -- oracles for glob ---------------------------------------------------------


def glob_by_covers(s: LocalSubgroupoid) -> int:
    """Intersect H_V over every refinement V of the atlas.

    A refinement picks for each point x a chart (U_i, H_i) containing it and an
    open V_x with x in V_x inside U_i; H_V is generated by the H_i|V_x.
    """
    g, sp = s.groupoid, s.space
    options = []
    for x in range(sp.size):
        opts = []
        for u, h in s.charts:
            if u >> x & 1:
                for v in sp.opens_containing(x):
                    if v & ~u == 0:
                        opts.append(h & g.full_mask(v))
        options.append(sorted(set(opts)))
    out = g.all_arrows
    for pick in cartesian(*options):
        seed = 0
        for m in pick:
            seed |= m
        out &= generate(g, seed, g.all_objects)
    return out


def germ_le_by_definition(s: LocalSubgroupoid, h: int) -> bool:
    """s <= loc(H) checked literally: some open W around x inside a chart has H_x|W in H|W."""
    g, sp = s.groupoid, s.space
    for x in range(sp.size):
        found = False
        for u, k in s.charts:
            if not u >> x & 1:
                continue
            for w in sp.opens_containing(x):
                if w & ~u == 0:
                    full = g.full_mask(w)
                    if k & full & ~(h & full) == 0:
                        found = True
                        break
            if found:
                break
        if not found:
            return False
    return True


def glob_by_definition(s: LocalSubgroupoid, candidates: Sequence[int] | None = None) -> int:
    """Intersection of all wide H with s <= loc(H)."""
    g = s.groupoid
    candidates = wide_subgroupoids(g) if candidates is None else candidates
    out = g.all_arrows
    for h in candidates:
        if germ_le_by_definition(s, h):
            out &= h
    return out


# -- enumeration --------------------------------------------------------------


def local_subgroupoids(g: FinGroupoid) -> list[LocalSubgroupoid]:
    """Every local subgroupoid, as a compatible table of germs on minimal neighbourhoods."""
    sp = _space(g)
    order = sorted(range(sp.size), key=lambda x: (popcount(sp.mn[x]), x))
    cache: dict[int, list[int]] = {}
    for m in set(sp.mn):
        cache[m] = wide_subgroupoids_on(g, m)
    germs = [0] * sp.size
    out = []

    def rec(k: int) -> None:
        if k == len(order):
            out.append(from_germs(g, germs))
            return
        x = order[k]
        mx = sp.mn[x]
        for h in cache[mx]:
            good = True
            for y in order[:k]:
                if mx >> y & 1 and h & g.full_mask(sp.mn[y]) != germs[y]:
                    good = False
                    break
            if good:
                germs[x] = h
                rec(k + 1)
        germs[x] = 0

    rec(0)
    return out


def point_atlases(g: FinGroupoid, limit: int | None = None) -> Iterator[LocalSubgroupoid]:
    """Every point-indexed atlas {(U_x, H_x)} with x in U_x, pairwise compatible."""
    sp = _space(g)
    per_point = []
    for x in range(sp.size):
        opts = []
        for u in sp.opens_containing(x):
            for h in wide_subgroupoids_on(g, u):
                opts.append((u, h))
        per_point.append(opts)
    chosen: list[Chart] = []
    count = 0

    def compatible(c: Chart) -> bool:
        u, h = c
        for v, k in chosen:
            for y in bits(u & v):
                w = g.full_mask(sp.mn[y])
                if h & w != k & w:
                    return False
        return True

    def rec(x: int) -> Iterator[LocalSubgroupoid]:
        nonlocal count
        if x == sp.size:
            count += 1
            if limit is not None and count > limit:
                raise ResourceCap("too many atlases", witness=limit)
            yield validate_atlas(g, list(chosen))
            return
        for c in per_point[x]:
            if compatible(c):
                chosen.append(c)
                yield from rec(x + 1)
                chosen.pop()

    yield from rec(0)


# -- adjunction and theorem bench ---------------------------------------------


@dataclass
class AdjunctionReport:
    wide: int = 0
    local: int = 0
    counit_violations: list = field(default_factory=list)
    unit_violations: list = field(default_factory=list)
    monotone_violations: list = field(default_factory=list)
    triangle_violations: list = field(default_factory=list)
    strict_counit: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.counit_violations or self.unit_violations
                    or self.monotone_violations or self.triangle_violations)


def adjunction_check(g: FinGroupoid, max_arrows: int = 64) -> AdjunctionReport:
    if len(g.arrows) > max_arrows:
        raise ResourceCap("groupoid too large for the exhaustive adjunction check",
                          witness=len(g.arrows))
    rep = AdjunctionReport()
    wides = wide_subgroupoids(g)
    rep.wide = len(wides)
    locs = {h: loc(g, h) for h in wides}
    for h in wides:
        gl = glob(locs[h])
        if gl & ~h:
            rep.counit_violations.append(g.names(h))
        elif gl != h:
            rep.strict_counit.append({"H": g.names(h), "glob_loc_H": g.names(gl)})
        # loc o glob o loc = loc on locally coherent H
        if is_coherent(locs[h]) and not equal(loc(g, gl), locs[h]):
            rep.triangle_violations.append(["loc", g.names(h)])
    for h in wides:
        for k in wides:
            if h & ~k == 0 and not germ_le(locs[h], locs[k]):
                rep.monotone_violations.append(["loc", g.names(h), g.names(k)])
    ss = local_subgroupoids(g)
    rep.local = len(ss)
    globs = [glob(s) for s in ss]
    for s, gl in zip(ss, globs):
        if not germ_le(s, loc(g, gl)):
            rep.unit_violations.append(s.chart_names())
        # glob o loc o glob = glob on coherent s
        if is_coherent(s) and glob(loc(g, gl)) != gl:
            rep.triangle_violations.append(["glob", s.chart_names()])
    for i, s in enumerate(ss):
        for j, t in enumerate(ss):
            if germ_le(s, t) and globs[i] & ~globs[j]:
                rep.monotone_violations.append(["glob", s.chart_names(), t.chart_names()])
    return rep


def _components_connected(sp: FinSpace, g: FinGroupoid, h: int, objs: int) -> bool:
    return all(is_connected(sp, c) for c in components(g, h, objs))


def _components_closed(sp: FinSpace, g: FinGroupoid, h: int) -> bool:
    return all(is_closed(sp, c) for c in components(g, h))


def _relatively_clopen(sp: FinSpace, part: int, whole: int) -> bool:
    """``part`` is open and closed in the subspace ``whole``."""
    opened = any(v & whole == part for v in sp.opens)
    closed = closure(sp, part) & whole == part
    return opened and closed


def point_covers(sp: FinSpace) -> Iterator[tuple[int, ...]]:
    """Families (V_x) of opens with x in V_x."""
    yield from cartesian(*(sp.opens_containing(x) for x in range(sp.size)))


def cover_generated(g: FinGroupoid, h: int, cover: Sequence[int]) -> int:
    seed = 0
    for v in cover:
        seed |= h & g.full_mask(v)
    return generate(g, seed, g.all_objects)


@dataclass
class BenchReport:
    checked: dict[str, int] = field(default_factory=dict)
    hypothesis_true: dict[str, int] = field(default_factory=dict)
    witnesses: dict[str, list] = field(default_factory=dict)

    def record(self, name: str, hypothesis: bool, conclusion: bool, witness) -> None:
        self.checked[name] = self.checked.get(name, 0) + 1
        self.witnesses.setdefault(name, [])
        if hypothesis:
            self.hypothesis_true[name] = self.hypothesis_true.get(name, 0) + 1
            if not conclusion:
                self.witnesses[name].append(witness)

    def merge(self, other: "BenchReport") -> None:
        for k, v in other.checked.items():
            self.checked[k] = self.checked.get(k, 0) + v
        for k, v in other.hypothesis_true.items():
            self.hypothesis_true[k] = self.hypothesis_true.get(k, 0) + v
        for k, v in other.witnesses.items():
            self.witnesses.setdefault(k, []).extend(v)

    @property
    def ok(self) -> bool:
        return not any(self.witnesses.values())


STATEMENTS = (
    "clopen_components",
    "connected_locally_implies_coherent",
    "connected_locally_implies_totally_coherent",
    "connected_implies_coherent_H",
    "coherent_closed_implies_connected",
    "restriction_globally_coherent",
    "local_total_coherence",
    "leaves_are_components",
)


def theorem_bench(g: FinGroupoid, max_arrows: int = 64) -> BenchReport:
    """Hypothesis/conclusion sweep for the coherence statements on one groupoid."""
    from .foliate import leaves_match

    if len(g.arrows) > max_arrows:
        raise ResourceCap("groupoid too large for the theorem bench", witness=len(g.arrows))
    sp = _space(g)
    rep = BenchReport()
    wides = wide_subgroupoids(g)
    covers = list(point_covers(sp))
    for h in wides:
        s = loc(g, h)
        comps = components(g, h)
        # transitivity components of H_V are clopen inside those of H
        for cov in covers:
            hv = cover_generated(g, h, cov)
            ok = True
            for m in comps:
                for c in components(g, hv, m):
                    if not _relatively_clopen(sp, c, m):
                        ok = False
            rep.record("clopen_components", True, ok,
                       {"H": g.names(h), "cover": [sp.ids(v) for v in cov]})
        hyp = all(
            any(_components_connected(sp, g, restrict_mask(g, h, w), w) for w in sp.opens_containing(x))
            for x in range(sp.size)
        )
        rep.record("connected_locally_implies_coherent", hyp, is_coherent(s), {"H": g.names(h)})
        connected = _components_connected(sp, g, h, g.all_objects)
        gl = glob(s)
        rep.record("connected_implies_coherent_H", connected, gl == h, {"H": g.names(h)})
        rep.record("coherent_closed_implies_connected", gl == h and _components_closed(sp, g, h),
                   connected, {"H": g.names(h)})
    for s in point_atlases(g):
        charts = s.charts
        hyp = True
        for a in range(sp.size):
            ua, ha = charts[a]
            for v in sp.opens_containing(a):
                if v & ~ua:
                    continue
                if not any(
                    w & ~v == 0 and _components_connected(sp, g, restrict_mask(g, ha, w), w)
                    for w in sp.opens_containing(a)
                ):
                    hyp = False
        total = is_totally_coherent(s)
        rep.record("connected_locally_implies_totally_coherent", hyp, total, s.chart_names())
        glob_coh = is_globally_coherent(s)
        restr_ok = all(is_globally_coherent(restrict(s, u)) for u in sp.opens if u)
        rep.record("restriction_globally_coherent", glob_coh and total, restr_ok, s.chart_names())
        locally = any(
            all(is_globally_coherent(restrict(s, v)) and is_totally_coherent(restrict(s, v))
                for v in cov)
            for cov in covers
        )
        rep.record("local_total_coherence", locally, total, s.chart_names())
        ok, witness = leaves_match(s)
        rep.record("leaves_are_components", is_coherent(s), ok,
                   {"atlas": s.chart_names(), **witness})
    return rep


# -- local equivalence relations ----------------------------------------------


def ler_from_closure(space: FinSpace) -> LocalSubgroupoid:
    """On each open U relate x, y when their closures inside U agree."""
    g = pair_groupoid(space)
    n = space.size
    charts = []
    for u in space.opens:
        if not u:
            continue
        cl = {x: closure(space, 1 << x) & u for x in bits(u)}
        h = 0
        for x in bits(u):
            for y in bits(u):
                if cl[x] == cl[y]:
                    h |= 1 << (y * n + x)
        charts.append((u, h))
    return validate_atlas(g, charts)


def ler_times_group(r: LocalSubgroupoid, k: FinGroup) -> LocalSubgroupoid:
    """Each chart R_i becomes R_i x K inside X x X x K."""
    sp = r.space
    big = pair_with_group(sp, k)
    n, m = sp.size, k.order
    charts = []
    for u, h in r.charts:
        out = 0
        for a in bits(h):
            for e in range(m):
                out |= 1 << (a * m + e)
        charts.append((u, out))
    del n
    return validate_atlas(big, charts)


def project_to_ler(s: LocalSubgroupoid) -> LocalSubgroupoid:
    """Apply (tgt, src) chartwise, landing in the pair groupoid."""
    ups = upsilon(s.groupoid)
    return validate_atlas(ups.target, [(u, image_mask(ups, h)) for u, h in s.charts])


def is_local_equivalence_relation(s: LocalSubgroupoid) -> bool:
    g = s.groupoid
    n = len(g.objects)
    return len(g.arrows) == n * n and all(g.src[a] == a % n and g.tgt[a] == a // n
                                          for a in range(n * n))


# -- the sheaf of wide subgroupoids --------------------------------------------


def subgroupoid_presheaf(g: FinGroupoid) -> tuple[Presheaf, dict[int, list[int]]]:
    """L_G(U) = wide subgroupoids of G|U, restriction H |-> H|V; also the masks per open."""
    sp = _space(g)
    tables = {u: wide_subgroupoids_on(g, u) for u in sp.opens}
    elems = {u: tuple("{" + " ".join(g.names(h)) + "}" for h in hs) for u, hs in tables.items()}
    restr = {}
    for u in sp.opens:
        for v in sp.opens_within(u):
            pos = {h: i for i, h in enumerate(tables[v])}
            restr[(u, v)] = tuple(pos[h & g.full_mask(v)] for h in tables[u])
    return Presheaf(sp, elems, restr), tables


def induced_germ_map(phi: GroupoidMorphism) -> tuple[EtaleSheaf, EtaleSheaf, tuple[int, ...]]:
    """The sheaf map (U, A)_x |-> (U, phi(A))_x for an X-morphism phi: G -> K."""
    s, t = phi.source, phi.target
    sp = _space(s)
    ps, ts = subgroupoid_presheaf(s)
    pt, tt = subgroupoid_presheaf(t)
    es, et = sheafify(ps), sheafify(pt)
    where = {(gm.point, gm.elem): k for k, gm in enumerate(et.germs)}
    out = []
    for gm in es.germs:
        m = sp.mn[sp.idx(gm.point)]
        a = ts[m][ps.elems[m].index(gm.elem)]
        img = generate(t, image_mask(phi, a), m)
        out.append(where[(gm.point, pt.elems[m][tt[m].index(img)])])
    return es, et, tuple(out)

