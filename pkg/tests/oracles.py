"""Brute-force reference computations on plain Python sets.

Nothing here uses the bitmask machinery of the package, so agreement between
an oracle and the library is evidence rather than a tautology.
"""

from __future__ import annotations

from itertools import combinations, product
from typing import Hashable, Iterable


def subsets(xs: Iterable) -> list[frozenset]:
    xs = list(xs)
    return [frozenset(c) for r in range(len(xs) + 1) for c in combinations(xs, r)]


def topology_closure(points: Iterable, gens: Iterable[Iterable]) -> set[frozenset]:
    """Smallest family containing gens, empty and whole, closed under union and intersection."""
    whole = frozenset(points)
    fam = {frozenset(), whole, *(frozenset(g) for g in gens)}
    changed = True
    while changed:
        changed = False
        for a, b in list(product(fam, repeat=2)):
            for c in (a | b, a & b):
                if c not in fam:
                    fam.add(c)
                    changed = True
    return fam


def min_open(opens: Iterable[frozenset], x) -> frozenset:
    out = None
    for u in opens:
        if x in u:
            out = u if out is None else out & u
    assert out is not None
    return out


def components(points: Iterable, opens: Iterable[frozenset]) -> set[frozenset]:
    """Connected components: classes of the relation generated by sharing a minimal open."""
    pts = list(points)
    opens = list(opens)
    parent = {p: p for p in pts}

    def find(p):
        while parent[p] != p:
            p = parent[p]
        return p

    for p in pts:
        for q in min_open(opens, p):
            parent[find(p)] = find(q)
    classes: dict = {}
    for p in pts:
        classes.setdefault(find(p), set()).add(p)
    return {frozenset(c) for c in classes.values()}


def stalk_size(opens: Iterable[frozenset], elems: dict, res, x) -> int:
    """Germs at x as a colimit: (U, s) ~ (V, t) when they agree on some open W with x in W."""
    opens = [u for u in opens if x in u]
    pairs = [(u, s) for u in opens for s in elems[u]]
    parent = list(range(len(pairs)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i, (u, s) in enumerate(pairs):
        for j, (v, t) in enumerate(pairs):
            for w in opens:
                if w <= u & v and res(u, w, s) == res(v, w, t):
                    parent[find(i)] = find(j)
                    break
    return len({find(i) for i in range(len(pairs))})


def generated_arrows(arrows: dict[Hashable, tuple], compose: dict, identities: dict, seed: Iterable) -> frozenset:
    """Intersection of every subset that contains seed and is closed under the groupoid operations.

    ``arrows`` maps arrow -> (src, tgt); ``compose`` maps (f, g) -> f o g.
    Exhaustive over subsets, so keep the groupoid tiny.
    """
    seed = frozenset(seed)
    inv = {}
    for a, (s, t) in arrows.items():
        for b, (s2, t2) in arrows.items():
            if (a, b) in compose and compose[(a, b)] == identities[t]:
                inv[a] = b
    best = frozenset(arrows)
    for sub in subsets(arrows):
        if not seed <= sub:
            continue
        objs = {arrows[a][0] for a in sub} | {arrows[a][1] for a in sub}
        if any(identities[o] not in sub for o in objs):
            continue
        if any(inv[a] not in sub for a in sub):
            continue
        if any(compose[(a, b)] not in sub for a in sub for b in sub if (a, b) in compose):
            continue
        best = best & sub
    return best


def equivalence_relations(points: Iterable) -> list[frozenset]:
    """All equivalence relations on ``points`` as sets of ordered pairs."""
    pts = list(points)
    out = []
    for rel in subsets([(a, b) for a in pts for b in pts if a != b]):
        r = set(rel) | {(a, a) for a in pts}
        if all((b, a) in r for a, b in r) and all(
            (a, d) in r for a, b in r for c, d in r if b == c
        ):
            out.append(frozenset(r))
    return out


def is_open_map(points_a, opens_a, opens_b, f: dict) -> bool:
    return all(frozenset(f[p] for p in u) in opens_b for u in opens_a)


def is_continuous(opens_a, opens_b, f: dict) -> bool:
    return all(frozenset(p for p in set().union(*opens_a) if f[p] in v) in opens_a for v in opens_b)
