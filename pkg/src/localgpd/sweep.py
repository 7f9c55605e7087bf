"""Exhaustive enumerators for small instances: spaces, presheaves, sheaves, maps."""

from __future__ import annotations

from itertools import permutations, product
from typing import Iterator, Sequence, TypeVar

from .fintop import FinSpace, PointMap, bits, is_continuous_fast, popcount
from .presheaf import EtaleSheaf, Presheaf, etale_from_tables

T = TypeVar("T")


def set_partitions(items: Sequence[T]) -> Iterator[list[list[T]]]:
    """All partitions of ``items`` into nonempty blocks (restricted growth order)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + [list(b) for b in part]
        for k in range(len(part)):
            yield [list(b) for b in part[:k]] + [[first] + part[k]] + [list(b) for b in part[k + 1:]]


def _valid_mn(mn: Sequence[int]) -> bool:
    for i, m in enumerate(mn):
        if not m >> i & 1:
            return False
        for j in bits(m):
            if mn[j] & ~m:
                return False
    return True


def _permute(mn: Sequence[int], perm: Sequence[int]) -> tuple[int, ...]:
    """Relabel point i as perm[i]."""
    n = len(mn)
    out = [0] * n
    for i, m in enumerate(mn):
        out[perm[i]] = sum(1 << perm[j] for j in bits(m))
    return tuple(out)


def canonical_mn(mn: Sequence[int]) -> tuple[int, ...]:
    return min(_permute(mn, p) for p in permutations(range(len(mn))))


def point_names(n: int) -> tuple[str, ...]:
    return tuple(str(i + 1) for i in range(n))


def topologies(n: int, up_to_homeomorphism: bool = False) -> list[FinSpace]:
    """Every topology on the points ``1..n``, optionally one per homeomorphism class."""
    pts = point_names(n)
    full = (1 << n) - 1
    seen: set[tuple[int, ...]] = set()
    out = []
    for mn in product(range(full + 1), repeat=n):
        if not _valid_mn(mn):
            continue
        if up_to_homeomorphism:
            key = canonical_mn(mn)
            if key in seen:
                continue
            seen.add(key)
            mn = key
        out.append(FinSpace(pts, tuple(mn)))
    out.sort(key=lambda s: s.mn)
    return out


def spaces_up_to(max_points: int, up_to_homeomorphism: bool = False) -> list[FinSpace]:
    out = []
    for n in range(max_points + 1):
        out.extend(topologies(n, up_to_homeomorphism))
    return out


def continuous_maps(x: FinSpace, y: FinSpace) -> Iterator[PointMap]:
    for img in product(range(y.size), repeat=x.size):
        f = PointMap(x, y, tuple(img))
        if is_continuous_fast(f):
            yield f


def _children(space: FinSpace, u: int) -> list[int]:
    """Maximal proper open subsets of ``u``."""
    subs = [v for v in space.opens_within(u) if v != u]
    return [v for v in subs if not any(v != w and v & ~w == 0 for w in subs)]


def _element_names(k: int) -> tuple[str, ...]:
    return tuple("abcdefgh"[i] for i in range(k))


def presheaves(space: FinSpace, max_size: int, min_size: int = 0) -> Iterator[Presheaf]:
    """Every presheaf with |F(U)| in [min_size, max_size], elements named a, b, ...

    Restrictions are chosen along maximal proper sub-opens and the remaining
    ones are forced by composition; inconsistent choices are pruned as soon as
    the open is complete.
    """
    opens = sorted(space.opens, key=lambda u: (popcount(u), u))
    kids = {u: _children(space, u) for u in opens}
    below = {u: space.opens_within(u) for u in opens}
    sizes: dict[int, int] = {}
    restr: dict[tuple[int, int], tuple[int, ...]] = {}

    def complete(u: int, maps: dict[int, tuple[int, ...]]) -> dict[tuple[int, int], tuple[int, ...]] | None:
        out: dict[tuple[int, int], tuple[int, ...]] = {(u, u): tuple(range(sizes[u]))}
        for w in below[u]:
            if w == u:
                continue
            val = None
            for c in kids[u]:
                if w & ~c:
                    continue
                rc = restr[(c, w)]
                cand = tuple(rc[a] for a in maps[c])
                if val is None:
                    val = cand
                elif val != cand:
                    return None
            out[(u, w)] = val  # type: ignore[assignment]
        return out

    def rec(k: int) -> Iterator[Presheaf]:
        if k == len(opens):
            elems = {u: _element_names(sizes[u]) for u in opens}
            yield Presheaf(space, elems, dict(restr))
            return
        u = opens[k]
        for n in range(min_size, max_size + 1):
            sizes[u] = n
            choices = [list(product(range(sizes[c]), repeat=n)) for c in kids[u]]
            for combo in product(*choices):
                maps = dict(zip(kids[u], combo))
                table = complete(u, maps)
                if table is None:
                    continue
                restr.update(table)
                yield from rec(k + 1)
                for key in table:
                    del restr[key]
        del sizes[u]

    yield from rec(0)


def sheaves(space: FinSpace, max_stalk: int, min_stalk: int = 0) -> Iterator[EtaleSheaf]:
    """Every etale sheaf with stalk sizes in range, as functors on minimal neighbourhoods."""
    basics = sorted(set(space.mn), key=lambda u: (popcount(u), u))
    below = {u: [v for v in basics if v != u and v & ~u == 0] for u in basics}
    sizes: dict[int, int] = {}
    maps: dict[tuple[int, int], tuple[int, ...]] = {}

    def rec(k: int) -> Iterator[EtaleSheaf]:
        if k == len(basics):
            yield _etale_from_functor(space, sizes, maps)
            return
        u = basics[k]
        for n in range(min_stalk, max_stalk + 1):
            sizes[u] = n
            lows = below[u]
            options = [list(product(range(sizes[v]), repeat=n)) for v in lows]
            for combo in product(*options):
                cand = dict(zip(lows, combo))
                good = True
                for v in lows:
                    for w in below[v]:
                        if tuple(maps[(v, w)][a] for a in cand[v]) != cand[w]:
                            good = False
                            break
                    if not good:
                        break
                if not good:
                    continue
                for v in lows:
                    maps[(u, v)] = cand[v]
                yield from rec(k + 1)
                for v in lows:
                    del maps[(u, v)]
        del sizes[u]

    yield from rec(0)


def _etale_from_functor(
    space: FinSpace, sizes: dict[int, int], maps: dict[tuple[int, int], tuple[int, ...]]
) -> EtaleSheaf:
    names = {u: _element_names(n) for u, n in sizes.items()}
    germs: list[tuple[str, str]] = []
    where: dict[tuple[int, int], int] = {}
    for x in range(space.size):
        for a, e in enumerate(names[space.mn[x]]):
            where[(x, a)] = len(germs)
            germs.append((space.points[x], e))
    nbhd = {}
    for (x, a), g in where.items():
        mx = space.mn[x]
        m = 0
        for y in bits(mx):
            my = space.mn[y]
            b = a if my == mx else maps[(mx, my)][a]
            m |= 1 << where[(y, b)]
        nbhd[g] = m
    return etale_from_tables(space, germs, nbhd)
