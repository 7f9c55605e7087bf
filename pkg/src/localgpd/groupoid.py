"""Finite groupoids, optionally topological, with the standard example families.

Arrow sets are bitmasks over ``G.arrows``; object sets are bitmasks over
``G.objects`` (the points of the object space when there is one).  Composition
``f o g`` is defined when ``src(f) == tgt(g)`` and has the source of ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as cartesian
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    AxiomViolation,
    NotAction,
    NotContinuous,
    NotEquivalence,
    TopologyRequired,
    UnknownObject,
)
from .fintop import (
    FinSpace,
    PointMap,
    bits,
    discrete,
    is_continuous_fast,
    is_local_homeomorphism,
    is_open_map,
    popcount,
    product,
)


@dataclass(frozen=True)
class FinGroup:
    elements: tuple[str, ...]
    mul: tuple[tuple[int, ...], ...]  # mul[a][b] = a*b

    @cached_property
    def unit(self) -> int:
        for e in range(len(self.elements)):
            if all(self.mul[e][a] == a == self.mul[a][e] for a in range(len(self.elements))):
                return e
        raise AxiomViolation("group has no unit")

    def inv(self, a: int) -> int:
        for b in range(len(self.elements)):
            if self.mul[a][b] == self.unit:
                return b
        raise AxiomViolation("element has no inverse", witness=self.elements[a])

    def validate(self) -> "FinGroup":
        n = len(self.elements)
        for a, b, c in cartesian(range(n), repeat=3):
            if self.mul[self.mul[a][b]][c] != self.mul[a][self.mul[b][c]]:
                raise AxiomViolation("group law is not associative",
                                     witness=[self.elements[i] for i in (a, b, c)])
        for a in range(n):
            self.inv(a)
        return self

    @property
    def order(self) -> int:
        return len(self.elements)


def cyclic_group(n: int) -> FinGroup:
    names = ("e",) + tuple("g" if n == 2 else f"g{k}" for k in range(1, n))
    return FinGroup(names, tuple(tuple((a + b) % n for b in range(n)) for a in range(n)))


def trivial_group() -> FinGroup:
    return FinGroup(("e",), ((0,),))


@dataclass(frozen=True, eq=False)
class FinGroupoid:
    objects: tuple[str, ...]
    arrows: tuple[str, ...]
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    comp: Mapping[tuple[int, int], int]
    inv: tuple[int, ...]
    ident: tuple[int, ...]
    object_space: FinSpace | None = None
    arrow_space: FinSpace | None = None

    @cached_property
    def arrow_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.arrows)}

    @cached_property
    def object_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.objects)}

    def arrow(self, name: str) -> int:
        try:
            return self.arrow_index[name]
        except KeyError:
            raise UnknownObject(f"unknown arrow {name!r}", witness=name) from None

    def obj(self, name: str) -> int:
        try:
            return self.object_index[name]
        except KeyError:
            raise UnknownObject(f"unknown object {name!r}", witness=name) from None

    @property
    def all_arrows(self) -> int:
        return (1 << len(self.arrows)) - 1

    @property
    def all_objects(self) -> int:
        return (1 << len(self.objects)) - 1

    @cached_property
    def identities(self) -> int:
        m = 0
        for a in self.ident:
            m |= 1 << a
        return m

    @property
    def is_topological(self) -> bool:
        return self.arrow_space is not None and self.object_space is not None

    def require_topology(self) -> None:
        if not self.is_topological:
            raise TopologyRequired("this operation needs arrow and object topologies")

    def names(self, mask: int) -> list[str]:
        return [self.arrows[i] for i in bits(mask)]

    def mask_of(self, names: Iterable[str]) -> int:
        m = 0
        for a in names:
            m |= 1 << self.arrow(a)
        return m

    def full_mask(self, objs: int) -> int:
        """Arrows with source and target inside ``objs``."""
        cache = self.__dict__.setdefault("_full_cache", {})
        hit = cache.get(objs)
        if hit is None:
            hit = 0
            for a in range(len(self.arrows)):
                if objs >> self.src[a] & 1 and objs >> self.tgt[a] & 1:
                    hit |= 1 << a
            cache[objs] = hit
        return hit

    def hom(self, x: int, y: int, within: int | None = None) -> list[int]:
        within = self.all_arrows if within is None else within
        return [a for a in bits(within) if self.src[a] == x and self.tgt[a] == y]

    def signature(self) -> tuple:
        return (self.objects, self.arrows, self.src, self.tgt, tuple(sorted(self.comp.items())),
                self.inv, self.ident, self.object_space, self.arrow_space)


def validate_groupoid(
    objects: Sequence[str],
    arrows: Sequence[tuple[str, str, str]],
    compose: Iterable[tuple[str, str, str]],
    identities: Mapping[str, str],
    inverses: Mapping[str, str],
    object_space: FinSpace | None = None,
    arrow_opens: Iterable[Iterable[str]] | None = None,
) -> FinGroupoid:
    """Build from raw tables and check every groupoid law exhaustively."""
    objs = tuple(objects)
    oidx = {x: i for i, x in enumerate(objs)}
    if len(oidx) != len(objs):
        raise AxiomViolation("duplicate object id", witness=list(objs))
    names = tuple(a for a, _, _ in arrows)
    aidx = {a: i for i, a in enumerate(names)}
    if len(aidx) != len(names):
        raise AxiomViolation("duplicate arrow id", witness=list(names))

    def A(name: str) -> int:
        if name not in aidx:
            raise UnknownObject(f"unknown arrow {name!r}", witness=name)
        return aidx[name]

    def O(name: str) -> int:
        if name not in oidx:
            raise UnknownObject(f"unknown object {name!r}", witness=name)
        return oidx[name]

    src = tuple(O(s) for _, s, _ in arrows)
    tgt = tuple(O(t) for _, _, t in arrows)
    comp: dict[tuple[int, int], int] = {}
    for f, g, fg in compose:
        key = (A(f), A(g))
        if key in comp and comp[key] != A(fg):
            raise AxiomViolation("composite listed twice with different values", witness=[f, g])
        comp[key] = A(fg)
    missing = [x for x in objs if x not in identities]
    if missing:
        raise AxiomViolation("identity missing", witness=missing)
    ident = tuple(A(identities[x]) for x in objs)
    if set(inverses) != set(names):
        raise AxiomViolation("inverse table is not total", witness=sorted(set(names) - set(inverses)))
    inv = tuple(A(inverses[a]) for a in names)
    check_axioms(FinGroupoid(objs, names, src, tgt, comp, inv, ident))
    if object_space is not None and object_space.points != objs:
        raise UnknownObject("objects must be the points of the space, in order", witness=list(objs))
    arrow_space = None
    if arrow_opens is not None:
        if object_space is None:
            raise TopologyRequired("an arrow topology needs an object space")
        from .fintop import validate_space

        arrow_space = validate_space(names, arrow_opens)
    g = FinGroupoid(objs, names, src, tgt, comp, inv, ident, object_space, arrow_space)
    if arrow_space is not None:
        check_continuity(g)
    return g


def check_axioms(g: FinGroupoid) -> None:
    n = len(g.arrows)
    nm = g.arrows
    for (f, h), fh in g.comp.items():
        if g.src[f] != g.tgt[h]:
            raise AxiomViolation("composite given for a non-composable pair", witness=[nm[f], nm[h]])
        if g.src[fh] != g.src[h] or g.tgt[fh] != g.tgt[f]:
            raise AxiomViolation("composite has wrong source or target", witness=[nm[f], nm[h], nm[fh]])
    for f in range(n):
        for h in range(n):
            if g.src[f] == g.tgt[h] and (f, h) not in g.comp:
                raise AxiomViolation("composite missing", witness=[nm[f], nm[h]])
    for x, i in enumerate(g.ident):
        if g.src[i] != x or g.tgt[i] != x:
            raise AxiomViolation("identity has wrong endpoints", witness=nm[i])
    for f in range(n):
        if g.comp[(f, g.ident[g.src[f]])] != f or g.comp[(g.ident[g.tgt[f]], f)] != f:
            raise AxiomViolation("unit law fails", witness=nm[f])
        fi = g.inv[f]
        if g.src[fi] != g.tgt[f] or g.tgt[fi] != g.src[f]:
            raise AxiomViolation("inverse has wrong endpoints", witness=nm[f])
        if g.comp[(f, fi)] != g.ident[g.tgt[f]] or g.comp[(fi, f)] != g.ident[g.src[f]]:
            raise AxiomViolation("inverse law fails", witness=nm[f])
    by_src: dict[int, list[int]] = {}
    for f in range(n):
        by_src.setdefault(g.tgt[f], []).append(f)
    for f in range(n):
        for h in by_src.get(g.src[f], []):
            for k in by_src.get(g.src[h], []):
                if g.comp[(g.comp[(f, h)], k)] != g.comp[(f, g.comp[(h, k)])]:
                    raise AxiomViolation("associativity fails", witness=[nm[f], nm[h], nm[k]])


def _composable_space(g: FinGroupoid) -> tuple[list[tuple[int, int]], FinSpace]:
    """G x_X G = {(f, h) : src f = tgt h} with the subspace topology of G x G."""
    assert g.arrow_space is not None
    pairs = [(f, h) for f in range(len(g.arrows)) for h in range(len(g.arrows)) if g.src[f] == g.tgt[h]]
    pos = {p: k for k, p in enumerate(pairs)}
    mn = []
    A = g.arrow_space.mn
    for f, h in pairs:
        m = 0
        for f2 in bits(A[f]):
            for h2 in bits(A[h]):
                k = pos.get((f2, h2))
                if k is not None:
                    m |= 1 << k
        mn.append(m)
    names = tuple(f"({g.arrows[f]},{g.arrows[h]})" for f, h in pairs)
    return pairs, FinSpace(names, tuple(mn))


def continuity_report(g: FinGroupoid) -> dict[str, bool]:
    g.require_topology()
    assert g.arrow_space is not None and g.object_space is not None
    out = {
        "src": is_continuous_fast(PointMap(g.arrow_space, g.object_space, g.src)),
        "tgt": is_continuous_fast(PointMap(g.arrow_space, g.object_space, g.tgt)),
        "inv": is_continuous_fast(PointMap(g.arrow_space, g.arrow_space, g.inv)),
        "ident": is_continuous_fast(PointMap(g.object_space, g.arrow_space, g.ident)),
    }
    pairs, space = _composable_space(g)
    out["comp"] = is_continuous_fast(PointMap(space, g.arrow_space, tuple(g.comp[p] for p in pairs)))
    return out


def check_continuity(g: FinGroupoid) -> None:
    for name, ok in continuity_report(g).items():
        if not ok:
            raise NotContinuous(f"structure map {name} is not continuous", witness=name)


def is_etale(g: FinGroupoid) -> bool:
    g.require_topology()
    assert g.arrow_space is not None and g.object_space is not None
    return is_local_homeomorphism(PointMap(g.arrow_space, g.object_space, g.src))


def is_open_groupoid(g: FinGroupoid) -> bool:
    g.require_topology()
    assert g.arrow_space is not None and g.object_space is not None
    return is_open_map(PointMap(g.arrow_space, g.object_space, g.src)) and is_open_map(
        PointMap(g.arrow_space, g.object_space, g.tgt)
    )


# -- constructors -------------------------------------------------------------


def _assemble(
    objects: Sequence[str],
    names: Sequence[str],
    src: Sequence[int],
    tgt: Sequence[int],
    mul,
    inv: Sequence[int],
    ident: Sequence[int],
    space: FinSpace | None,
    arrow_space: FinSpace | None,
) -> FinGroupoid:
    comp = {}
    n = len(names)
    for f in range(n):
        for h in range(n):
            if src[f] == tgt[h]:
                comp[(f, h)] = mul(f, h)
    return FinGroupoid(tuple(objects), tuple(names), tuple(src), tuple(tgt), comp,
                       tuple(inv), tuple(ident), space, arrow_space)


def pair_groupoid(space: FinSpace) -> FinGroupoid:
    """X x X; the arrow ``(y,x)`` goes from x to y and sits at index ``y*n + x``."""
    n = space.size
    pts = space.points
    names = [f"({pts[y]},{pts[x]})" for y in range(n) for x in range(n)]
    src = [a % n for a in range(n * n)]
    tgt = [a // n for a in range(n * n)]
    inv = [(a % n) * n + a // n for a in range(n * n)]
    ident = [x * n + x for x in range(n)]
    arrow_space = product(space, space, lambda y, x: f"({y},{x})")
    return _assemble(pts, names, src, tgt, lambda f, h: (f // n) * n + h % n, inv, ident,
                     space, arrow_space)


def null_groupoid(space: FinSpace) -> FinGroupoid:
    n = space.size
    pts = space.points
    names = [f"({x},{x})" for x in pts]
    ids = list(range(n))
    return _assemble(pts, names, ids, ids, lambda f, h: f, ids, ids, space,
                     FinSpace(tuple(names), space.mn))


def pair_with_group(space: FinSpace, k: FinGroup) -> FinGroupoid:
    """X x X x K with (z,y,h)(y,x,g) = (z,x,hg); K carries the discrete topology."""
    n, m = space.size, k.order
    pts = space.points

    def code(y: int, x: int, g: int) -> int:
        return (y * n + x) * m + g

    def decode(a: int) -> tuple[int, int, int]:
        return a // m // n, a // m % n, a % m

    total = n * n * m
    names = []
    for a in range(total):
        y, x, g = decode(a)
        names.append(f"({pts[y]},{pts[x]},{k.elements[g]})")
    src = [decode(a)[1] for a in range(total)]
    tgt = [decode(a)[0] for a in range(total)]
    inv = []
    for a in range(total):
        y, x, g = decode(a)
        inv.append(code(x, y, k.inv(g)))
    ident = [code(x, x, k.unit) for x in range(n)]

    def mul(f: int, h: int) -> int:
        z, _, hh = decode(f)
        _, x, gg = decode(h)
        return code(z, x, k.mul[hh][gg])

    xx = product(space, space)
    arrow_space = product(xx, discrete(k.elements))
    arrow_space = FinSpace(tuple(names), arrow_space.mn)
    return _assemble(pts, names, src, tgt, mul, inv, ident, space, arrow_space)


def from_equiv_relation(space: FinSpace, blocks: Sequence[Iterable[str]]) -> FinGroupoid:
    """The equivalence relation as a groupoid, topologized inside X x X."""
    mask = equivalence_mask(pair_groupoid(space), space, blocks)
    return full_subgroupoid_as_groupoid(pair_groupoid(space), mask)


def equivalence_mask(pair: FinGroupoid, space: FinSpace, blocks: Sequence[Iterable[str]]) -> int:
    n = space.size
    seen: set[str] = set()
    label = [-1] * n
    for b, block in enumerate(blocks):
        for x in block:
            if x in seen:
                raise NotEquivalence("blocks overlap", witness=x)
            seen.add(x)
            label[space.idx(x)] = b
    if len(seen) != n:
        raise NotEquivalence("blocks do not cover the space",
                             witness=[p for p in space.points if p not in seen])
    m = 0
    for y in range(n):
        for x in range(n):
            if label[x] == label[y]:
                m |= 1 << (y * n + x)
    return m


def action_groupoid(k: FinGroup, space: FinSpace, action: Mapping[tuple[str, str], str]) -> FinGroupoid:
    """K acting on X: arrows (g,x) from x to gx, with (h,gx)(g,x) = (hg,x)."""
    n, m = space.size, k.order
    pts = space.points
    act = [[0] * n for _ in range(m)]
    for g in range(m):
        for x in range(n):
            key = (k.elements[g], pts[x])
            if key not in action:
                raise NotAction("action is not total", witness=list(key))
            act[g][x] = space.idx(action[key])
    for x in range(n):
        if act[k.unit][x] != x:
            raise NotAction("unit does not act trivially", witness=pts[x])
    for g in range(m):
        for h in range(m):
            for x in range(n):
                if act[h][act[g][x]] != act[k.mul[h][g]][x]:
                    raise NotAction("action is not compatible with multiplication",
                                    witness=[k.elements[h], k.elements[g], pts[x]])
    names = [f"({k.elements[g]},{pts[x]})" for g in range(m) for x in range(n)]
    src = [a % n for a in range(m * n)]
    tgt = [act[a // n][a % n] for a in range(m * n)]
    inv = [k.inv(a // n) * n + act[a // n][a % n] for a in range(m * n)]
    ident = [k.unit * n + x for x in range(n)]

    def mul(f: int, h: int) -> int:
        return k.mul[f // n][h // n] * n + h % n

    arrow_space = product(discrete(k.elements), space)
    arrow_space = FinSpace(tuple(names), arrow_space.mn)
    return _assemble(pts, names, src, tgt, mul, inv, ident, space, arrow_space)


# -- subgroupoids -------------------------------------------------------------


@dataclass(frozen=True)
class Subgroupoid:
    parent: FinGroupoid = field(compare=False)
    arrows: int
    objects: int

    @property
    def wide(self) -> bool:
        return self.objects == self.parent.all_objects

    @property
    def size(self) -> int:
        return popcount(self.arrows)

    def names(self) -> list[str]:
        return self.parent.names(self.arrows)


def subgroupoid_objects(g: FinGroupoid, mask: int) -> int:
    m = 0
    for a in bits(mask):
        m |= 1 << g.src[a] | 1 << g.tgt[a]
    return m


def is_subgroupoid(g: FinGroupoid, mask: int, objects: int | None = None) -> bool:
    objs = subgroupoid_objects(g, mask) if objects is None else objects
    if subgroupoid_objects(g, mask) & ~objs:
        return False
    for x in bits(objs):
        if not mask >> g.ident[x] & 1:
            return False
    for a in bits(mask):
        if not mask >> g.inv[a] & 1:
            return False
        for b in bits(mask):
            if g.src[a] == g.tgt[b] and not mask >> g.comp[(a, b)] & 1:
                return False
    return True


def is_wide_subgroupoid(g: FinGroupoid, mask: int) -> bool:
    return is_subgroupoid(g, mask, g.all_objects)


def restrict_full(g: FinGroupoid, objs: int) -> Subgroupoid:
    if objs & ~g.all_objects:
        raise UnknownObject("object set not inside the groupoid", witness=objs)
    return Subgroupoid(g, g.full_mask(objs), objs)


def restrict_mask(g: FinGroupoid, h: int, objs: int) -> int:
    """H|U for an arrow set H."""
    return h & g.full_mask(objs)


def generated_subgroupoid(g: FinGroupoid, seed: int, objects: int = 0) -> Subgroupoid:
    """Least subgroupoid containing ``seed`` and the identities of ``objects``."""
    if seed & ~g.all_arrows:
        raise UnknownObject("seed arrows not in the groupoid", witness=seed)
    return Subgroupoid(g, generate(g, seed, objects), objects | subgroupoid_objects(g, seed))


def generate(g: FinGroupoid, seed: int, objects: int = 0) -> int:
    objs = objects | subgroupoid_objects(g, seed)
    mask = seed
    for x in bits(objs):
        mask |= 1 << g.ident[x]
    for a in bits(seed):
        mask |= 1 << g.inv[a]
    # fixpoint over composites; each round adds every defined product
    frontier = mask
    while frontier:
        new = 0
        for a in bits(mask):
            for b in bits(frontier):
                if g.src[a] == g.tgt[b]:
                    new |= 1 << g.comp[(a, b)]
                if g.src[b] == g.tgt[a]:
                    new |= 1 << g.comp[(b, a)]
        frontier = new & ~mask
        mask |= new
    return mask


def generated_bruteforce(g: FinGroupoid, seed: int, objects: int = 0) -> int:
    """Intersection of all subgroupoids containing the seed (test oracle, <= 16 arrows)."""
    n = len(g.arrows)
    objs = objects | subgroupoid_objects(g, seed)
    out = g.all_arrows
    for mask in range(1 << n):
        if mask & seed != seed:
            continue
        if is_subgroupoid(g, mask, objs | subgroupoid_objects(g, mask)):
            if all(mask >> g.ident[x] & 1 for x in bits(objs)):
                out &= mask
    return out


def wide_subgroupoids(g: FinGroupoid, within: int | None = None) -> list[int]:
    """All wide subgroupoids of G (contained in ``within`` when given)."""
    within = g.all_arrows if within is None else within
    base = generate(g, 0, g.all_objects)
    seen = {base}
    stack = [base]
    while stack:
        h = stack.pop()
        for a in bits(within & ~h):
            k = generate(g, h | 1 << a, g.all_objects)
            if k & ~within == 0 and k not in seen:
                seen.add(k)
                stack.append(k)
    return sorted(seen)


def transitivity_component(g: FinGroupoid, a: int, within: int | None = None) -> int:
    """Objects reachable from ``a`` by arrows of ``within`` (an arrow set of a subgroupoid)."""
    within = g.all_arrows if within is None else within
    out = 0
    for f in bits(within):
        if g.src[f] == a:
            out |= 1 << g.tgt[f]
    return out | (1 << a)


def components(g: FinGroupoid, within: int | None = None, objects: int | None = None) -> list[int]:
    objects = g.all_objects if objects is None else objects
    out: list[int] = []
    left = objects
    while left:
        a = (left & -left).bit_length() - 1
        c = transitivity_component(g, a, within) & objects
        out.append(c)
        left &= ~c
    return out


def is_transitive(g: FinGroupoid, within: int | None = None, objects: int | None = None) -> bool:
    objects = g.all_objects if objects is None else objects
    return len(components(g, within, objects)) == 1 and objects != 0


def vertex_group(g: FinGroupoid, x: int, within: int | None = None) -> list[int]:
    return g.hom(x, x, within)


def full_subgroupoid_as_groupoid(g: FinGroupoid, mask: int) -> FinGroupoid:
    """Re-package a wide subgroupoid as a groupoid in its own right (subspace topology)."""
    keep = list(bits(mask))
    pos = {a: i for i, a in enumerate(keep)}
    comp = {(pos[f], pos[h]): pos[fh] for (f, h), fh in g.comp.items() if f in pos and h in pos}
    arrow_space = None
    if g.arrow_space is not None:
        from .fintop import subspace

        arrow_space = subspace(g.arrow_space, mask)
    return FinGroupoid(
        g.objects,
        tuple(g.arrows[a] for a in keep),
        tuple(g.src[a] for a in keep),
        tuple(g.tgt[a] for a in keep),
        comp,
        tuple(pos[g.inv[a]] for a in keep),
        tuple(pos[i] for i in g.ident),
        g.object_space,
        arrow_space,
    )


# -- morphisms ---------------------------------------------------------------


@dataclass(frozen=True)
class GroupoidMorphism:
    source: FinGroupoid = field(compare=False)
    target: FinGroupoid = field(compare=False)
    on_objects: tuple[int, ...]
    on_arrows: tuple[int, ...]

    @property
    def is_x_morphism(self) -> bool:
        return self.on_objects == tuple(range(len(self.source.objects)))


def is_morphism(m: GroupoidMorphism) -> bool:
    s, t = m.source, m.target
    for a in range(len(s.arrows)):
        b = m.on_arrows[a]
        if t.src[b] != m.on_objects[s.src[a]] or t.tgt[b] != m.on_objects[s.tgt[a]]:
            return False
    for x, i in enumerate(s.ident):
        if m.on_arrows[i] != t.ident[m.on_objects[x]]:
            return False
    for (f, h), fh in s.comp.items():
        if t.comp[(m.on_arrows[f], m.on_arrows[h])] != m.on_arrows[fh]:
            return False
    return True


def upsilon(g: FinGroupoid, pair: FinGroupoid | None = None) -> GroupoidMorphism:
    """g |-> (tgt g, src g) into the pair groupoid on the objects."""
    n = len(g.objects)
    if pair is None:
        if g.object_space is not None:
            pair = pair_groupoid(g.object_space)
        else:
            pair = pair_groupoid(discrete(g.objects))
    arrows = tuple(g.tgt[a] * n + g.src[a] for a in range(len(g.arrows)))
    m = GroupoidMorphism(g, pair, tuple(range(n)), arrows)
    if not is_morphism(m):
        raise AxiomViolation("anchor map is not a morphism")
    return m


def image_mask(m: GroupoidMorphism, mask: int) -> int:
    out = 0
    for a in bits(mask):
        out |= 1 << m.on_arrows[a]
    return out



def wide_subgroupoids_on(g: FinGroupoid, objs: int) -> list[int]:
    """Wide subgroupoids of G|U as arrow masks in G."""
    within = g.full_mask(objs)
    base = generate(g, 0, objs)
    seen = {base}
    stack = [base]
    while stack:
        h = stack.pop()
        for a in bits(within & ~h):
            k = generate(g, h | 1 << a, objs)
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return sorted(seen)


def full_restriction(g: FinGroupoid, objs: int) -> tuple[FinGroupoid, list[int]]:
    """G|U as a groupoid over the subspace U, with the arrow positions it came from."""
    from .fintop import subspace

    keep = list(bits(g.full_mask(objs)))
    opos = list(bits(objs))
    onew = {x: i for i, x in enumerate(opos)}
    apos = {a: i for i, a in enumerate(keep)}
    comp = {(apos[f], apos[h]): apos[fh] for (f, h), fh in g.comp.items() if f in apos and h in apos}
    object_space = subspace(g.object_space, objs) if g.object_space is not None else None
    arrow_space = subspace(g.arrow_space, g.full_mask(objs)) if g.arrow_space is not None else None
    sub = FinGroupoid(
        tuple(g.objects[x] for x in opos),
        tuple(g.arrows[a] for a in keep),
        tuple(onew[g.src[a]] for a in keep),
        tuple(onew[g.tgt[a]] for a in keep),
        comp,
        tuple(apos[g.inv[a]] for a in keep),
        tuple(apos[g.ident[x]] for x in opos),
        object_space,
        arrow_space,
    )
    return sub, keep


def x_morphisms(s: FinGroupoid, t: FinGroupoid) -> list[GroupoidMorphism]:
    """Every groupoid morphism that is the identity on objects."""
    if s.objects != t.objects:
        raise UnknownObject("groupoids have different objects")
    n = len(s.arrows)
    ident = tuple(range(len(s.objects)))
    choices = [t.hom(s.src[a], s.tgt[a]) for a in range(n)]
    out = []
    for arrows in cartesian(*choices):
        m = GroupoidMorphism(s, t, ident, tuple(arrows))
        if is_morphism(m):
            out.append(m)
    return out
