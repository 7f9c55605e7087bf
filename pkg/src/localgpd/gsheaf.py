"""Groupoid actions on etale sheaves, r-structures and s-transports.

An action sends ``(arrow a, germ e)`` with ``p(e) = src(a)`` to a germ over
``tgt(a)``.  Stalk maps compose covariantly: ``(h o g)_# = h_# o g_#``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator, Mapping, Sequence

from .errors import (
    ActionInvalid,
    AssocViolation,
    LiftMissing,
    LiftNotUnique,
    NotAnAtlas,
    NotContinuous,
    ResourceCap,
    SquareViolation,
    UnitViolation,
)
from .fintop import FinSpace, PointMap, bits, is_local_homeomorphism, popcount
from .groupoid import FinGroupoid, is_transitive
from .localsub import LocalSubgroupoid, validate_atlas
from .presheaf import EtaleSheaf
from .sweep import set_partitions

Table = Mapping[tuple[int, int], int]


@dataclass(frozen=True, eq=False)
class GroupoidAction:
    groupoid: FinGroupoid
    sheaf: EtaleSheaf
    arrows: int  # the acting arrows, a subgroupoid of the groupoid
    table: Table

    @classmethod
    def from_json(cls, g: FinGroupoid, f: EtaleSheaf, rows: Sequence[Mapping[str, str]],
                  arrows: int | None = None) -> "GroupoidAction":
        table = {}
        for r in rows:
            table[(g.arrow(r["arrow"]), _germ(f, r["germ"]))] = _germ(f, r["result"])
        return cls(g, f, g.all_arrows if arrows is None else arrows, table)

    def to_json(self) -> list[dict[str, str]]:
        g, f = self.groupoid, self.sheaf
        return [{"arrow": g.arrows[a], "germ": f.germ_id(e), "result": f.germ_id(r)}
                for (a, e), r in sorted(self.table.items())]

    def stalk_map(self, a: int) -> dict[int, int]:
        """a_#: F_{src a} -> F_{tgt a}."""
        x = self.groupoid.src[a]
        return {e: self.table[(a, e)] for e in self.sheaf.fibers[x] if (a, e) in self.table}


def _germ(f: EtaleSheaf, gid: str) -> int:
    from .errors import UnknownPoint

    try:
        return f.germ_index[gid]
    except KeyError:
        raise UnknownPoint(f"unknown germ {gid!r}", witness=gid) from None


def _domain(g: FinGroupoid, f: EtaleSheaf, arrows: int) -> list[tuple[int, int]]:
    return [(a, e) for a in bits(arrows) for e in f.fibers[g.src[a]]]


def action_continuous(act: GroupoidAction) -> bool:
    """Continuity on the fibred product, topologized inside arrows x germs."""
    g, f = act.groupoid, act.sheaf
    if g.arrow_space is None:
        return True
    amn, emn = g.arrow_space.mn, f.total.mn
    t = act.table
    for (a, e), r in t.items():
        near = emn[r]
        for a2 in bits(amn[a] & act.arrows):
            for e2 in bits(emn[e]):
                if f.proj[e2] == g.src[a2] and not near >> t[(a2, e2)] & 1:
                    return False
    return True


def action_failures(act: GroupoidAction) -> list[tuple[str, object]]:
    """Every violated axiom with a witness, in the order square, unit, assoc,
    bijectivity, continuity."""
    g, f, t = act.groupoid, act.sheaf, act.table
    nm, gid = g.arrows, f.germ_id
    out: list[tuple[str, object]] = []
    dom = _domain(g, f, act.arrows)
    missing = [p for p in dom if p not in t]
    if missing:
        a, e = missing[0]
        out.append(("total", {"arrow": nm[a], "germ": gid(e)}))
        return out
    for a, e in dom:
        if f.proj[t[(a, e)]] != g.tgt[a]:
            out.append(("square", {"arrow": nm[a], "germ": gid(e), "result": gid(t[(a, e)])}))
            return out
    for x in range(len(g.objects)):
        i = g.ident[x]
        if not act.arrows >> i & 1:
            continue
        for e in f.fibers[x]:
            if t[(i, e)] != e:
                out.append(("unit", {"arrow": nm[i], "germ": gid(e)}))
                return out
    for a in bits(act.arrows):
        for h in bits(act.arrows):
            if g.src[h] != g.tgt[a]:
                continue
            ha = g.comp[(h, a)]
            if not act.arrows >> ha & 1:
                continue
            for e in f.fibers[g.src[a]]:
                if t[(h, t[(a, e)])] != t[(ha, e)]:
                    out.append(("assoc", {"pair": [nm[h], nm[a]], "germ": gid(e)}))
                    return out
    for a in bits(act.arrows):
        if not act.arrows >> g.inv[a] & 1:
            continue
        m = act.stalk_map(a)
        back = act.stalk_map(g.inv[a])
        if any(back[m[e]] != e for e in m):
            out.append(("bijective", {"arrow": nm[a]}))
            return out
    if not action_continuous(act):
        out.append(("continuity", None))
    return out


def validate_action(act: GroupoidAction) -> GroupoidAction:
    fails = action_failures(act)
    if not fails:
        return act
    kind, wit = fails[0]
    if kind in ("total", "square"):
        raise SquareViolation(f"action fails the {kind} condition", witness=wit)
    if kind == "unit":
        raise UnitViolation("identity does not act trivially", witness=wit)
    if kind in ("assoc", "bijective"):
        raise AssocViolation("action is not associative", witness=wit)
    raise NotContinuous("action is not continuous", witness=wit)


def is_valid_action(act: GroupoidAction) -> bool:
    return not action_failures(act)


def stalk_functor(act: GroupoidAction) -> dict[int, dict[int, int]]:
    """The functor a -> a_# on stalks."""
    return {a: act.stalk_map(a) for a in bits(act.arrows)}


def is_functor(act: GroupoidAction) -> bool:
    """Identities go to identities and (h o g)_# = h_# o g_#."""
    g = act.groupoid
    fun = stalk_functor(act)
    for x, i in enumerate(g.ident):
        if act.arrows >> i & 1 and any(fun[i].get(e) != e for e in act.sheaf.fibers[x]):
            return False
    for a in fun:
        for h in fun:
            if g.src[h] == g.tgt[a] and g.comp[(h, a)] in fun:
                ha = fun[g.comp[(h, a)]]
                if any(fun[h].get(fun[a].get(e, -1)) != ha.get(e) for e in fun[a]):
                    return False
    return True


def constant_action(g: FinGroupoid, f: EtaleSheaf) -> GroupoidAction:
    """Transport by labels: a.e is the germ over tgt(a) with the same element label."""
    table = {}
    for a in range(len(g.arrows)):
        y = g.tgt[a]
        by_elem = {f.germs[e].elem: e for e in f.fibers[y]}
        for e in f.fibers[g.src[a]]:
            table[(a, e)] = by_elem[f.germs[e].elem]
    return GroupoidAction(g, f, g.all_arrows, table)


def actions(g: FinGroupoid, f: EtaleSheaf, arrows: int | None = None,
            continuous: bool = True, limit: int | None = None) -> Iterator[GroupoidAction]:
    """Every action of the subgroupoid ``arrows`` on ``f`` (continuous ones by default).

    Stalk maps of an action are bijections, so only bijections are tried.
    """
    arrows = g.all_arrows if arrows is None else arrows
    order = [a for a in bits(arrows) if not g.identities >> a & 1]
    table: dict[tuple[int, int], int] = {}
    for x in range(len(g.objects)):
        i = g.ident[x]
        if arrows >> i & 1:
            for e in f.fibers[x]:
                table[(i, e)] = e
    assigned = {a for a in bits(arrows) if g.identities >> a & 1}
    count = 0

    def consistent(a: int) -> bool:
        for b in assigned:
            for h, k in ((a, b), (b, a)):
                if g.src[h] != g.tgt[k]:
                    continue
                hk = g.comp[(h, k)]
                if hk not in assigned:
                    continue
                for e in f.fibers[g.src[k]]:
                    if table[(h, table[(k, e)])] != table[(hk, e)]:
                        return False
        return True

    def rec(j: int) -> Iterator[GroupoidAction]:
        nonlocal count
        if j == len(order):
            act = GroupoidAction(g, f, arrows, dict(table))
            if not continuous or action_continuous(act):
                count += 1
                if limit is not None and count > limit:
                    raise ResourceCap("too many actions", witness=limit)
                yield act
            return
        a = order[j]
        src_f, tgt_f = f.fibers[g.src[a]], f.fibers[g.tgt[a]]
        if len(src_f) != len(tgt_f):
            return
        for perm in permutations(tgt_f):
            for e, r in zip(src_f, perm):
                table[(a, e)] = r
            assigned.add(a)
            if consistent(a):
                yield from rec(j + 1)
            assigned.discard(a)
            for e in src_f:
                del table[(a, e)]

    yield from rec(0)


# -- Q(U, F) and r-structures -------------------------------------------------


def _quotient(space: FinSpace, classes: Sequence[int]) -> tuple[FinSpace, list[int]]:
    """Quotient topology for a partition given as masks; returns (space, class of each point)."""
    cls = [0] * space.size
    for c, m in enumerate(classes):
        for x in bits(m):
            cls[x] = c
    opens = []
    for t in range(1 << len(classes)):
        pre = 0
        for c in bits(t):
            pre |= classes[c]
        if space.is_open(pre):
            opens.append(t)
    names = tuple(f"[{c}]" for c in range(len(classes)))
    return FinSpace.from_opens(names, opens), cls


def _blocks_to_masks(blocks: Sequence[Sequence[int]]) -> list[int]:
    return [sum(1 << i for i in b) for b in blocks]


@dataclass(frozen=True)
class QPair:
    open: int
    r: tuple[int, ...]  # partition of U as point masks
    s: tuple[int, ...]  # partition of p^-1(U) as germ masks


def _subspace_index(mask: int) -> dict[int, int]:
    return {x: k for k, x in enumerate(bits(mask))}


def q_failure(f: EtaleSheaf, u: int, r: Sequence[int], s: Sequence[int]) -> str | None:
    """Why (R_U, S_U) is not in Q(U, F), or None."""
    from .fintop import subspace

    base = subspace(f.base, u)
    germs = 0
    for x in bits(u):
        for e in f.fibers[x]:
            germs |= 1 << e
    total = subspace(f.total, germs)
    bpos, gpos = _subspace_index(u), _subspace_index(germs)
    r_loc = [sum(1 << bpos[x] for x in bits(m)) for m in r]
    s_loc = [sum(1 << gpos[e] for e in bits(m)) for m in s]
    rcls = {x: c for c, m in enumerate(r) for x in bits(m)}
    for m in s:
        if len({rcls[f.proj[e]] for e in bits(m)}) > 1:
            return "compatibility"
    qb, rq = _quotient(base, r_loc)
    qe, sq = _quotient(total, s_loc)
    proj = [bpos[f.proj[e]] for e in bits(germs)]
    qmap = [0] * len(s_loc)
    for e, c in enumerate(sq):
        qmap[c] = rq[proj[e]]
    if not is_local_homeomorphism(PointMap(qe, qb, tuple(qmap))):
        return "local_homeomorphism"
    # canonical map into the pullback U x_{U/R} F/S must be a homeomorphism
    pull = [(x, c) for x in range(base.size) for c in range(qe.size) if rq[x] == qmap[c]]
    if len(pull) != total.size:
        return "pullback"
    ppos = {p: k for k, p in enumerate(pull)}
    h = [ppos.get((proj[e], sq[e])) for e in range(total.size)]
    if None in h or len(set(h)) != len(h):
        return "pullback"
    for e in range(total.size):
        x, c = pull[h[e]]  # type: ignore[index]
        near = 0
        for y in bits(base.mn[x]):
            for d in bits(qe.mn[c]):
                k = ppos.get((y, d))
                if k is not None:
                    near |= 1 << k
        img = 0
        for e2 in bits(total.mn[e]):
            img |= 1 << h[e2]  # type: ignore[operator]
        if img != near:
            return "pullback"
    return None


def q_pairs(f: EtaleSheaf, u: int, r: Sequence[int] | None = None) -> list[QPair]:
    """Every (R_U, S_U) in Q(U, F); with ``r`` only pairs whose R_U is r."""
    germs = [e for x in bits(u) for e in f.fibers[x]]
    if r is None:
        rs = [tuple(sorted(_blocks_to_masks(p))) for p in set_partitions(list(bits(u)))]
    else:
        rs = [tuple(sorted(r))]
    out = []
    for rr in rs:
        for p in set_partitions(germs):
            ss = tuple(sorted(_blocks_to_masks(p)))
            if q_failure(f, u, rr, ss) is None:
                out.append(QPair(u, rr, ss))
    out.sort(key=lambda q: (q.r, q.s))
    return out


@dataclass(frozen=True)
class RStructure:
    """Charts (U_i, R_i, S_i): R_i a partition of U_i, S_i a partition of p^-1(U_i)."""

    sheaf: EtaleSheaf = field(compare=False)
    charts: tuple[QPair, ...]


def _restrict_partition(parts: Sequence[int], v: int) -> tuple[int, ...]:
    return tuple(sorted(m & v for m in parts if m & v))


def _germs_over(f: EtaleSheaf, u: int) -> int:
    m = 0
    for x in bits(u):
        for e in f.fibers[x]:
            m |= 1 << e
    return m


def r_structure_check(f: EtaleSheaf, t: RStructure, r: LocalSubgroupoid) -> tuple[bool, dict | None]:
    """Whether the charts of ``t`` form a global section of Q_F lying over r."""
    sp = f.base
    pair = r.groupoid
    covered = 0
    for i, c in enumerate(t.charts):
        covered |= c.open
        why = q_failure(f, c.open, c.r, c.s)
        if why is not None:
            return False, {"chart": i, "reason": why}
    if covered != sp.whole:
        return False, {"reason": "cover"}
    for x in range(sp.size):
        mx = sp.mn[x]
        gx = _germs_over(f, mx)
        seen = set()
        for c in t.charts:
            if c.open >> x & 1:
                seen.add((_restrict_partition(c.r, mx), _restrict_partition(c.s, gx)))
        if len(seen) != 1:
            return False, {"reason": "incompatible charts", "point": sp.points[x]}
        (rx, sx), = seen
        if _relation_mask(pair, rx) & pair.full_mask(mx) != r.germs[x]:
            return False, {"reason": "projection", "point": sp.points[x]}
        if q_failure(f, mx, rx, sx) is not None:
            return False, {"reason": "germ not in Q", "point": sp.points[x]}
    return True, None


def _relation_mask(pair: FinGroupoid, parts: Sequence[int]) -> int:
    n = len(pair.objects)
    m = 0
    for b in parts:
        for y in bits(b):
            for x in bits(b):
                m |= 1 << (y * n + x)
    return m


def _partition_of(pair: FinGroupoid, h: int, u: int) -> tuple[int, ...]:
    n = len(pair.objects)
    seen = 0
    out = []
    for x in bits(u):
        if seen >> x & 1:
            continue
        b = 0
        for y in bits(u):
            if h >> (y * n + x) & 1:
                b |= 1 << y
        seen |= b
        out.append(b)
    return tuple(sorted(out))


def r_structures(f: EtaleSheaf, r: LocalSubgroupoid) -> list[RStructure]:
    """Every r-structure given on minimal neighbourhoods."""
    sp = f.base
    pair = r.groupoid
    order = sorted(range(sp.size), key=lambda x: (popcount(sp.mn[x]), x))
    options = {}
    for x in order:
        mx = sp.mn[x]
        options[x] = q_pairs(f, mx, _partition_of(pair, r.germs[x], mx))
    chosen: dict[int, QPair] = {}
    out = []

    def rec(k: int) -> None:
        if k == len(order):
            out.append(RStructure(f, tuple(chosen[x] for x in range(sp.size))))
            return
        x = order[k]
        for q in options[x]:
            ok = True
            for y in order[:k]:
                my = sp.mn[y]
                if sp.mn[x] >> y & 1 and _restrict_partition(q.s, _germs_over(f, my)) != chosen[y].s:
                    ok = False
                    break
            if ok:
                chosen[x] = q
                rec(k + 1)
        chosen.pop(x, None)

    rec(0)
    return out


def lift_r_action(f: EtaleSheaf, t: RStructure, pair: FinGroupoid, big_r: int | None = None) -> GroupoidAction:
    """The R-action by unique lifts along S, the equivalence generated by the charts.

    ``big_r`` defaults to the equivalence relation generated by the chart relations.
    """
    n = len(pair.objects)
    parent = list(range(f.total.size))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rel = 0
    for c in t.charts:
        rel |= _relation_mask(pair, c.r)
        for m in c.s:
            first = next(iter(bits(m)))
            for e in bits(m):
                a, b = find(first), find(e)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    if big_r is None:
        from .groupoid import generate

        big_r = generate(pair, rel, pair.all_objects)
    table = {}
    for a in bits(big_r):
        x1, x2 = a % n, a // n
        for e1 in f.fibers[x1]:
            lifts = [e2 for e2 in f.fibers[x2] if find(e2) == find(e1)]
            if not lifts:
                raise LiftMissing("no lift along an arrow of R",
                                  witness={"arrow": pair.arrows[a], "germ": f.germ_id(e1)})
            if len(lifts) > 1:
                raise LiftNotUnique("several lifts along an arrow of R",
                                    witness={"arrow": pair.arrows[a], "germ": f.germ_id(e1),
                                             "lifts": [f.germ_id(e) for e in lifts]})
            table[(a, e1)] = lifts[0]
    return GroupoidAction(pair, f, big_r, table)


# -- s-transports -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class STransport:
    """Charts (U_i, H_i, phi_i) with phi_i an action of H_i on F|U_i."""

    sheaf: EtaleSheaf
    charts: tuple[tuple[int, int, Table], ...]


def _restrict_table(g: FinGroupoid, f: EtaleSheaf, table: Table, v: int) -> dict:
    arrows = g.full_mask(v)
    return {(a, e): r for (a, e), r in table.items() if arrows >> a & 1}


def s_transport_check(f: EtaleSheaf, t: STransport, s: LocalSubgroupoid) -> bool:
    """Each chart action is valid, the charts form an atlas for s, and the
    actions agree germ-wise on overlaps."""
    g, sp = s.groupoid, s.space
    for i, (u, h, table) in enumerate(t.charts):
        if not is_valid_action(GroupoidAction(g, f, h, table)):
            raise ActionInvalid(f"chart {i} does not carry a valid action", witness=i)
    try:
        atlas = validate_atlas(g, [(u, h) for u, h, _ in t.charts])
    except Exception as e:  # any atlas failure means the charts do not present s
        raise NotAnAtlas("charts do not form an atlas", witness=str(e)) from None
    if atlas.germs != s.germs:
        return False
    for i, (u, _, ti) in enumerate(t.charts):
        for v, _, tj in t.charts[i + 1:]:
            for x in bits(u & v):
                if _restrict_table(g, f, ti, sp.mn[x]) != _restrict_table(g, f, tj, sp.mn[x]):
                    return False
    return True


def is_locally_transitive(s: LocalSubgroupoid) -> bool:
    """Every germ s_x is transitive on mn(x), the smallest basic open at x."""
    sp = s.space
    return all(is_transitive(s.groupoid, s.germs[x], sp.mn[x]) for x in range(sp.size))


def s_transports(s: LocalSubgroupoid, f: EtaleSheaf, limit: int | None = None) -> list[STransport]:
    """Every s-transport, presented on the charts (mn(x), s_x)."""
    g, sp = s.groupoid, s.space
    order = sorted(range(sp.size), key=lambda x: (popcount(sp.mn[x]), x))
    options = {x: [dict(a.table) for a in actions(g, f, s.germs[x])] for x in order}
    chosen: dict[int, dict] = {}
    out: list[STransport] = []

    def rec(k: int) -> None:
        if k == len(order):
            if limit is not None and len(out) >= limit:
                raise ResourceCap("too many transports", witness=limit)
            out.append(STransport(f, tuple((sp.mn[x], s.germs[x], chosen[x]) for x in range(sp.size))))
            return
        x = order[k]
        for table in options[x]:
            ok = True
            for y in order[:k]:
                if sp.mn[x] >> y & 1 and _restrict_table(g, f, table, sp.mn[y]) != chosen[y]:
                    ok = False
                    break
            if ok:
                chosen[x] = table
                rec(k + 1)
        chosen.pop(x, None)

    rec(0)
    return out


def unique_transport(s: LocalSubgroupoid, f: EtaleSheaf) -> tuple[int, tuple[STransport, STransport] | None]:
    """Number of s-transports on f, with two distinct ones when there are several."""
    ts = s_transports(s, f)
    return len(ts), (ts[0], ts[1]) if len(ts) > 1 else None


def transports_json(t: STransport, g: FinGroupoid) -> list[dict]:
    f = t.sheaf
    sp = f.base
    out = []
    for u, h, table in t.charts:
        out.append({
            "open": sp.ids(u),
            "arrows": g.names(h),
            "action": GroupoidAction(g, f, h, table).to_json(),
        })
    return out

