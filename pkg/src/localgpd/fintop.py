"""Finite topological spaces.

Point sets are plain ``int`` bitmasks over the declared point order: bit ``i``
stands for ``space.points[i]``.  A finite topology is determined by the
minimal open neighbourhood of each point, so that is what a :class:`FinSpace`
stores; the full open-set lattice is materialized lazily.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    ClosureViolation,
    DuplicateOpen,
    MissingEmptyOrWhole,
    TargetMismatch,
    UnknownPoint,
)


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def reindex(mask: int, positions: Sequence[int]) -> int:
    """Re-express ``mask`` over a sub-order: bit ``j`` of the result is bit ``positions[j]``."""
    out = 0
    for j, p in enumerate(positions):
        if mask >> p & 1:
            out |= 1 << j
    return out


def expand(mask: int, positions: Sequence[int]) -> int:
    """Inverse of :func:`reindex`."""
    out = 0
    for j in bits(mask):
        out |= 1 << positions[j]
    return out


@dataclass(frozen=True)
class FinSpace:
    points: tuple[str, ...]
    mn: tuple[int, ...]
    index: dict[str, int] = field(compare=False, repr=False, hash=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {p: i for i, p in enumerate(self.points)})

    @classmethod
    def from_min_nbhds(cls, points: Sequence[str], mn: Sequence[int]) -> "FinSpace":
        n = len(points)
        if len(set(points)) != n:
            raise UnknownPoint("duplicate point ids", witness=list(points))
        for i, m in enumerate(mn):
            if not m >> i & 1:
                raise ClosureViolation(f"min nbhd of {points[i]} misses the point")
            for j in bits(m):
                if mn[j] & ~m:
                    raise ClosureViolation(
                        f"min nbhd of {points[j]} not inside min nbhd of {points[i]}"
                    )
        return cls(tuple(points), tuple(mn))

    @classmethod
    def from_opens(cls, points: Sequence[str], opens: Iterable[int]) -> "FinSpace":
        """Topology *generated* by ``opens`` (used as a subbasis)."""
        n = len(points)
        whole = (1 << n) - 1
        mn = [whole] * n
        for u in opens:
            for i in bits(u):
                mn[i] &= u
        return cls(tuple(points), tuple(mn))

    # -- basic accessors -------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def whole(self) -> int:
        return (1 << len(self.points)) - 1

    def mask(self, ids: Iterable[str]) -> int:
        out = 0
        for p in ids:
            try:
                out |= 1 << self.index[p]
            except KeyError:
                raise UnknownPoint(f"unknown point {p!r}", witness=p) from None
        return out

    def ids(self, mask: int) -> list[str]:
        return [self.points[i] for i in bits(mask)]

    def idx(self, p: str) -> int:
        try:
            return self.index[p]
        except KeyError:
            raise UnknownPoint(f"unknown point {p!r}", witness=p) from None

    def is_open(self, mask: int) -> bool:
        return all(self.mn[i] & ~mask == 0 for i in bits(mask))

    def interior(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            if self.mn[i] & ~mask == 0:
                out |= 1 << i
        return out

    @cached_property
    def opens(self) -> tuple[int, ...]:
        """All open sets, sorted by size then mask value."""
        found = {0}
        frontier = [0]
        mns = sorted(set(self.mn))
        while frontier:
            nxt = []
            for u in frontier:
                for m in mns:
                    v = u | m
                    if v not in found:
                        found.add(v)
                        nxt.append(v)
            frontier = nxt
        return tuple(sorted(found, key=lambda u: (popcount(u), u)))

    def opens_containing(self, i: int) -> list[int]:
        return [u for u in self.opens if u >> i & 1]

    def opens_within(self, mask: int) -> list[int]:
        return [u for u in self.opens if u & ~mask == 0]

    @cached_property
    def is_t0(self) -> bool:
        return len(set(self.mn)) == len(self.mn)

    def __str__(self) -> str:
        ops = ", ".join("{" + ",".join(self.ids(u)) + "}" for u in self.opens)
        return f"FinSpace({list(self.points)}; {ops})"


def validate_space(points: Sequence[str], opens: Iterable[Iterable[str]]) -> FinSpace:
    """Check the open-set axioms exactly as given; nothing is completed."""
    points = list(points)
    if len(set(points)) != len(points):
        raise UnknownPoint("duplicate point ids", witness=points)
    index = {p: i for i, p in enumerate(points)}
    masks: list[int] = []
    for u in opens:
        u = list(u)
        m = 0
        for p in u:
            if p not in index:
                raise UnknownPoint(f"unknown point {p!r} in open set", witness=p)
            m |= 1 << index[p]
        if len(u) != len(set(u)):
            raise DuplicateOpen(f"repeated point inside open {u}", witness=u)
        masks.append(m)
    if len(set(masks)) != len(masks):
        raise DuplicateOpen("open set listed twice")
    whole = (1 << len(points)) - 1
    family = set(masks)
    ordered = sorted(family)
    for a, b in combinations(ordered, 2):
        if a | b not in family:
            raise ClosureViolation(
                "union missing", witness=[_ids(points, a), _ids(points, b), "union"]
            )
        if a & b not in family:
            raise ClosureViolation(
                "intersection missing",
                witness=[_ids(points, a), _ids(points, b), "intersection"],
            )
    # pairwise closure is reported first, so a missing union of listed opens wins
    if 0 not in family or whole not in family:
        raise MissingEmptyOrWhole("the empty set and the whole space must be open")
    return FinSpace.from_opens(points, family)


def _ids(points: Sequence[str], mask: int) -> list[str]:
    return [points[i] for i in bits(mask)]


def discrete(points: Sequence[str]) -> FinSpace:
    return FinSpace(tuple(points), tuple(1 << i for i in range(len(points))))


def indiscrete(points: Sequence[str]) -> FinSpace:
    whole = (1 << len(points)) - 1
    return FinSpace(tuple(points), tuple(whole for _ in points))


def sierpinski(a: str = "a", b: str = "b") -> FinSpace:
    return validate_space([a, b], [[], [a], [a, b]])


def min_nbhd(space: FinSpace, x: str) -> int:
    return space.mn[space.idx(x)]


def closure(space: FinSpace, s: int) -> int:
    """Smallest closed superset: points whose minimal neighbourhood meets ``s``."""
    if s & ~space.whole:
        raise UnknownPoint("subset has bits outside the space", witness=s)
    out = 0
    for i, m in enumerate(space.mn):
        if m & s:
            out |= 1 << i
    return out


def is_closed(space: FinSpace, s: int) -> bool:
    return closure(space, s) == s


def connected_components(space: FinSpace, subset: int | None = None) -> list[int]:
    """Connected components of ``subset`` with its subspace topology.

    Two points of the subset are linked when one lies in the other's minimal
    neighbourhood; the components are the classes of the generated relation.
    """
    if subset is None:
        subset = space.whole
    if subset & ~space.whole:
        raise UnknownPoint("subset has bits outside the space", witness=subset)
    parent = {i: i for i in bits(subset)}

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in bits(subset):
        for j in bits(space.mn[i] & subset):
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    comps: dict[int, int] = {}
    for i in bits(subset):
        r = find(i)
        comps[r] = comps.get(r, 0) | (1 << i)
    return sorted(comps.values(), key=lambda m: (m & -m, m))


def is_connected(space: FinSpace, subset: int) -> bool:
    return subset != 0 and len(connected_components(space, subset)) == 1


def closed_sets(space: FinSpace) -> list[int]:
    return sorted(space.whole & ~u for u in space.opens)


def is_sober(space: FinSpace) -> bool:
    """Every nonempty irreducible closed set is the closure of exactly one point."""
    closed = closed_sets(space)
    point_closures = [closure(space, 1 << i) for i in range(space.size)]
    for f in closed:
        if f == 0:
            continue
        proper = [c for c in closed if c != f and c & ~f == 0]
        reducible = any(a | b == f for a in proper for b in proper)
        if reducible:
            continue
        if sum(1 for c in point_closures if c == f) != 1:
            return False
    return True


@dataclass(frozen=True)
class Cover:
    base: FinSpace
    target: int
    members: tuple[int, ...]

    def __post_init__(self) -> None:
        union = 0
        for m in self.members:
            if not self.base.is_open(m):
                raise ClosureViolation("cover member is not open", witness=self.base.ids(m))
            union |= m
        if union != self.target:
            raise TargetMismatch(
                "members do not cover the target",
                witness={"target": self.base.ids(self.target), "union": self.base.ids(union)},
            )


def _same_frame(a: Cover, b: Cover) -> None:
    if a.base != b.base or a.target != b.target:
        raise TargetMismatch("covers have different base or target")


def refines(a: Cover, b: Cover) -> bool:
    _same_frame(a, b)
    return all(any(m & ~n == 0 for n in b.members) for m in a.members)


def common_refinement(a: Cover, b: Cover) -> Cover:
    _same_frame(a, b)
    members = sorted({m & n for m in a.members for n in b.members} - {0})
    return Cover(a.base, a.target, tuple(members))


def is_irredundant(members: Sequence[int]) -> bool:
    for k, m in enumerate(members):
        rest = 0
        for j, n in enumerate(members):
            if j != k:
                rest |= n
        if m & ~rest == 0:
            return False
    return True


def covers(space: FinSpace, target: int, irredundant: bool = True) -> Iterator[tuple[int, ...]]:
    """Open covers of ``target`` as tuples of member masks.

    With ``irredundant`` only covers in which no member lies inside the union of
    the others are produced; the empty cover is produced for the empty target.
    """
    candidates = [u for u in space.opens_within(target) if u]
    if irredundant:
        # an irredundant cover has at most |target| members (each owns a private point)
        limit = popcount(target)
    else:
        limit = len(candidates)
    for r in range(0, limit + 1):
        for combo in combinations(candidates, r):
            union = 0
            for u in combo:
                union |= u
            if union != target:
                continue
            if irredundant and not is_irredundant(combo):
                continue
            yield combo


@dataclass(frozen=True)
class PointMap:
    source: FinSpace
    dest: FinSpace
    mapping: tuple[int, ...]

    @classmethod
    def from_dict(cls, source: FinSpace, dest: FinSpace, mapping: Mapping[str, str]) -> "PointMap":
        missing = [p for p in source.points if p not in mapping]
        if missing:
            raise UnknownPoint("map is not total on the source", witness=missing)
        return cls(source, dest, tuple(dest.idx(mapping[p]) for p in source.points))

    def image(self, mask: int) -> int:
        out = 0
        for i in bits(mask):
            out |= 1 << self.mapping[i]
        return out

    def preimage(self, mask: int) -> int:
        out = 0
        for i, j in enumerate(self.mapping):
            if mask >> j & 1:
                out |= 1 << i
        return out

    def __call__(self, p: str) -> str:
        return self.dest.points[self.mapping[self.source.idx(p)]]


def is_continuous(f: PointMap) -> bool:
    return all(f.source.is_open(f.preimage(v)) for v in f.dest.opens)


def is_open_map(f: PointMap) -> bool:
    return all(f.dest.is_open(f.image(u)) for u in f.source.opens)


def is_continuous_fast(f: PointMap) -> bool:
    """Continuity via minimal neighbourhoods; agrees with :func:`is_continuous`."""
    return all(f.image(f.source.mn[i]) & ~f.dest.mn[f.mapping[i]] == 0 for i in range(f.source.size))


def is_local_homeomorphism(f: PointMap) -> bool:
    """Each point has an open neighbourhood mapped homeomorphically onto an open set.

    On finite spaces it suffices to test the minimal neighbourhood of each point.
    """
    if not is_continuous_fast(f):
        return False
    for i in range(f.source.size):
        w = f.source.mn[i]
        img = f.image(w)
        if popcount(img) != popcount(w) or not f.dest.is_open(img):
            return False
        # homeomorphism onto the image: minimal nbhds correspond
        for j in bits(w):
            if f.image(f.source.mn[j]) != f.dest.mn[f.mapping[j]] & img:
                return False
    return True


def subspace(space: FinSpace, s: int) -> FinSpace:
    if s & ~space.whole:
        raise UnknownPoint("subset has bits outside the space", witness=s)
    pos = list(bits(s))
    return FinSpace(
        tuple(space.points[i] for i in pos),
        tuple(reindex(space.mn[i] & s, pos) for i in pos),
    )


def product(
    a: FinSpace, b: FinSpace, name: Callable[[str, str], str] | None = None
) -> FinSpace:
    """Product topology; point ``(i, j)`` sits at index ``i * |b| + j``."""
    name = name or (lambda x, y: f"({x},{y})")
    nb = b.size
    points = []
    mn = []
    for i, x in enumerate(a.points):
        for j, y in enumerate(b.points):
            points.append(name(x, y))
            m = 0
            for k in bits(a.mn[i]):
                for l in bits(b.mn[j]):
                    m |= 1 << (k * nb + l)
            mn.append(m)
    return FinSpace(tuple(points), tuple(mn))


def generated_topology_bruteforce(points: Sequence[str], generators: Iterable[int]) -> frozenset[int]:
    """Close a family under pairwise unions and intersections (oracle for tests)."""
    whole = (1 << len(points)) - 1
    family = {0, whole} | set(generators)
    changed = True
    while changed:
        changed = False
        cur = list(family)
        for a, b in combinations(cur, 2):
            for c in (a | b, a & b):
                if c not in family:
                    family.add(c)
                    changed = True
    return frozenset(family)
