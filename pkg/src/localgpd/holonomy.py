"""Admissible local sections, locally topological groupoids and the holonomy groupoid.

A section is stored as a tuple indexed by object with ``-1`` off its domain.
Germs are taken on minimal neighbourhoods: the germ of ``k`` at ``x`` is the
restriction of ``k`` to ``mn(x)``, listed in increasing point order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

from .errors import (
    ConditionFailed,
    Incompatible,
    LocalGpdError,
    NotAdmissible,
    NotLocallyTop,
    NotStrictlyRegular,
    SectionSearchExhausted,
)
from .fintop import FinSpace, bits, popcount
from .groupoid import FinGroupoid, generate, validate_groupoid
from .localsub import Chart, LocalSubgroupoid, glob, is_totally_coherent, validate_atlas


def _space(g: FinGroupoid) -> FinSpace:
    g.require_topology()
    assert g.object_space is not None
    return g.object_space


def _arrow_mn(g: FinGroupoid) -> tuple[int, ...]:
    g.require_topology()
    assert g.arrow_space is not None
    return g.arrow_space.mn


# -- admissible sections ------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleSection:
    groupoid: FinGroupoid = field(compare=False, repr=False)
    domain: int
    values: tuple[int, ...]

    @classmethod
    def from_dict(cls, g: FinGroupoid, mapping: Mapping[str, str]) -> "AdmissibleSection":
        vals = [-1] * len(g.objects)
        dom = 0
        for x, a in mapping.items():
            i = g.obj(x)
            vals[i] = g.arrow(a)
            dom |= 1 << i
        sec = cls(g, dom, tuple(vals))
        require_admissible(sec)
        return sec

    def __call__(self, x: int) -> int:
        return self.values[x]

    def beta(self, x: int) -> int:
        return self.groupoid.tgt[self.values[x]]

    @property
    def image(self) -> int:
        m = 0
        for x in bits(self.domain):
            m |= 1 << self.beta(x)
        return m

    @property
    def arrows(self) -> int:
        m = 0
        for x in bits(self.domain):
            m |= 1 << self.values[x]
        return m

    def restrict(self, v: int) -> "AdmissibleSection":
        v &= self.domain
        return AdmissibleSection(self.groupoid, v,
                                 tuple(a if v >> x & 1 else -1 for x, a in enumerate(self.values)))

    def as_dict(self) -> dict[str, str]:
        g = self.groupoid
        return {g.objects[x]: g.arrows[self.values[x]] for x in bits(self.domain)}


def admissibility_failure(g: FinGroupoid, u: int, values: Sequence[int]) -> str | None:
    """Reason ``values`` on ``u`` is not admissible, or None when it is."""
    sp = _space(g)
    if not sp.is_open(u):
        return "domain"
    beta: dict[int, int] = {}
    img = 0
    for x in bits(u):
        a = values[x]
        if a < 0 or g.src[a] != x:
            return "alpha"
        beta[x] = g.tgt[a]
        img |= 1 << g.tgt[a]
    if not sp.is_open(img):
        return "openImage"
    if popcount(img) != len(beta):
        return "homeo"
    for x in bits(u):
        m = 0
        for y in bits(sp.mn[x]):
            m |= 1 << beta[y]
        # between open subspaces, a bijection is a homeomorphism iff it maps
        # minimal neighbourhoods onto minimal neighbourhoods
        if m != sp.mn[beta[x]]:
            return "homeo"
    return None


def is_admissible(g: FinGroupoid, u: int, values: Sequence[int]) -> bool:
    return admissibility_failure(g, u, values) is None


def require_admissible(sec: AdmissibleSection) -> AdmissibleSection:
    why = admissibility_failure(sec.groupoid, sec.domain, sec.values)
    if why is not None:
        raise NotAdmissible(f"section is not admissible ({why})", witness={"reason": why})
    return sec


def is_continuous_into(sec: AdmissibleSection, within: int) -> bool:
    """Continuity of ``sec`` as a map into the subspace ``within`` of the arrows."""
    g = sec.groupoid
    amn = _arrow_mn(g)
    sp = _space(g)
    if sec.arrows & ~within:
        return False
    for x in bits(sec.domain):
        near = amn[sec.values[x]]
        for y in bits(sp.mn[x]):
            if not near >> sec.values[y] & 1:
                return False
    return True


def identity_section(g: FinGroupoid, u: int) -> AdmissibleSection:
    return AdmissibleSection(g, u, tuple(g.ident[x] if u >> x & 1 else -1 for x in range(len(g.objects))))


def section_product(t: AdmissibleSection, k: AdmissibleSection) -> AdmissibleSection:
    """(tk)(x) = t(beta k(x)) k(x) on the points where the composite is defined."""
    g = k.groupoid
    vals = [-1] * len(g.objects)
    dom = 0
    for x in bits(k.domain):
        y = k.beta(x)
        if t.domain >> y & 1:
            vals[x] = g.comp[(t.values[y], k.values[x])]
            dom |= 1 << x
    return AdmissibleSection(g, dom, tuple(vals))


def section_inverse(k: AdmissibleSection) -> AdmissibleSection:
    g = k.groupoid
    vals = [-1] * len(g.objects)
    for x in bits(k.domain):
        vals[k.beta(x)] = g.inv[k.values[x]]
    return AdmissibleSection(g, k.image, tuple(vals))


def admissible_sections(
    g: FinGroupoid,
    u: int,
    within: int | None = None,
    continuous: bool = False,
    fixed: Mapping[int, int] | None = None,
) -> Iterator[AdmissibleSection]:
    """Every admissible section on ``u`` valued in ``within``.

    With ``continuous`` only sections continuous into ``within`` are produced;
    ``fixed`` pins the value at some points.
    """
    sp = _space(g)
    if not sp.is_open(u):
        return
    within = g.all_arrows if within is None else within
    amn = _arrow_mn(g) if continuous else None
    pts = list(bits(u))
    fixed = fixed or {}
    options = []
    for x in pts:
        if x in fixed:
            opts = [fixed[x]] if within >> fixed[x] & 1 and g.src[fixed[x]] == x else []
        else:
            opts = [a for a in bits(within) if g.src[a] == x]
        options.append(opts)
    vals = [-1] * len(g.objects)
    used = 0

    def rec(k: int) -> Iterator[AdmissibleSection]:
        nonlocal used
        if k == len(pts):
            if admissibility_failure(g, u, vals) is None:
                yield AdmissibleSection(g, u, tuple(vals))
            return
        x = pts[k]
        for a in options[k]:
            b = g.tgt[a]
            if used >> b & 1:
                continue
            if amn is not None:
                ok = True
                for y in pts[:k]:
                    if sp.mn[x] >> y & 1 and not amn[a] >> vals[y] & 1:
                        ok = False
                    elif sp.mn[y] >> x & 1 and not amn[vals[y]] >> a & 1:
                        ok = False
                    if not ok:
                        break
                if not ok:
                    continue
            vals[x] = a
            used |= 1 << b
            yield from rec(k + 1)
            used &= ~(1 << b)
            vals[x] = -1

    yield from rec(0)


# -- germs --------------------------------------------------------------------


class SectionGerm(NamedTuple):
    point: int
    values: tuple[int, ...]  # the section on mn(point), in increasing point order


def germ_of(sec: AdmissibleSection, x: int) -> SectionGerm:
    sp = _space(sec.groupoid)
    if not sec.domain >> x & 1:
        raise NotAdmissible("germ requested outside the domain", witness={"reason": "domain"})
    return SectionGerm(x, tuple(sec.values[y] for y in bits(sp.mn[x])))


def germ_section(g: FinGroupoid, germ: SectionGerm) -> AdmissibleSection:
    sp = _space(g)
    vals = [-1] * len(g.objects)
    for y, a in zip(bits(sp.mn[germ.point]), germ.values):
        vals[y] = a
    return AdmissibleSection(g, sp.mn[germ.point], tuple(vals))


def germ_value(g: FinGroupoid, germ: SectionGerm) -> int:
    """psi([k]_x) = k(x)."""
    sp = _space(g)
    return germ.values[popcount(sp.mn[germ.point] & ((1 << germ.point) - 1))]


def germ_target(g: FinGroupoid, germ: SectionGerm) -> int:
    return g.tgt[germ_value(g, germ)]


def germ_product(g: FinGroupoid, b: SectionGerm, a: SectionGerm) -> SectionGerm:
    """[t]_{beta k(x)} [k]_x = [tk]_x."""
    if germ_target(g, a) != b.point:
        raise NotAdmissible("germs are not composable", witness={"reason": "domain"})
    return germ_of(section_product(germ_section(g, b), germ_section(g, a)), a.point)


def germ_inverse(g: FinGroupoid, a: SectionGerm) -> SectionGerm:
    return germ_of(section_inverse(germ_section(g, a)), germ_target(g, a))


def continuous_germs(g: FinGroupoid, within: int, x: int, through: int | None = None) -> list[SectionGerm]:
    """Germs at x of continuous admissible sections valued in ``within``."""
    sp = _space(g)
    fixed = {x: through} if through is not None else None
    return [germ_of(k, x) for k in admissible_sections(g, sp.mn[x], within, True, fixed)]


# -- locally topological groupoids ---------------------------------------------


def locally_sectionable(g: FinGroupoid, w: int) -> tuple[bool, list[int]]:
    """Whether every arrow of ``w`` has a continuous admissible section through it.

    Sections on mn(alpha w) suffice since admissibility and continuity restrict.
    Returns the verdict and the arrows with no such section.
    """
    missing = [a for a in bits(w) if not continuous_germs(g, w, g.src[a], a)]
    return not missing, missing


@dataclass
class LocalTopReport:
    g1: bool
    g2: bool
    g3: bool
    g4: bool
    g5: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.g1 and self.g2 and self.g3 and self.g4 and self.g5

    def as_dict(self) -> dict:
        return {"G1": self.g1, "G2": self.g2, "G3": self.g3, "G4": self.g4, "G5": self.g5,
                "witnesses": self.witnesses}


def check_locally_top(g: FinGroupoid, w: int, h: int | None = None) -> LocalTopReport:
    """Conditions G1 to G5 for (H, W), with W topologized inside the arrow space.

    ``h`` is the groupoid W should generate, a wide subgroupoid of ``g``
    (all of ``g`` by default).
    """
    sp = _space(g)
    amn = _arrow_mn(g)
    h = g.all_arrows if h is None else h
    nm = g.arrows
    wit: dict = {}

    missing_ids = g.identities & ~w
    g1 = missing_ids == 0 and w & ~h == 0
    if not g1:
        wit["G1"] = {"missing_identities": g.names(missing_ids), "outside_H": g.names(w & ~h)}

    bad_inv = [a for a in bits(w) if not w >> g.inv[a] & 1]
    g2 = not bad_inv
    if not g2:
        wit["G2"] = nm[bad_inv[0]]

    # W x_alpha W with the subspace topology of the product of arrow spaces
    pairs = [(a, b) for a in bits(w) for b in bits(w) if g.src[a] == g.src[b]]
    pos = {p: i for i, p in enumerate(pairs)}

    def delta(p: tuple[int, int]) -> int:
        return g.comp[(p[0], g.inv[p[1]])]

    in_wd = [w >> delta(p) & 1 == 1 for p in pairs]
    g3 = True
    for p, inside in zip(pairs, in_wd):
        if not inside:
            continue
        a, b = p
        for a2 in bits(amn[a] & w):
            for b2 in bits(amn[b] & w):
                q = pos.get((a2, b2))
                if q is None:
                    continue
                if not in_wd[q]:
                    g3 = False
                    wit.setdefault("G3", {"not_open_at": [nm[a], nm[b]], "escapes": [nm[a2], nm[b2]]})
                elif not amn[delta(p)] >> delta(pairs[q]) & 1:
                    g3 = False
                    wit.setdefault("G3", {"delta_discontinuous_at": [nm[a], nm[b]],
                                          "near": [nm[a2], nm[b2]]})
            if not g3:
                break
        if not g3:
            break

    g4 = True
    for a in bits(w):
        for b in bits(amn[a] & w):
            if not sp.mn[g.src[a]] >> g.src[b] & 1 or not sp.mn[g.tgt[a]] >> g.tgt[b] & 1:
                g4 = False
                wit.setdefault("G4", {"source_or_target_discontinuous_at": nm[a]})
                break
    sectionable, missing = locally_sectionable(g, w)
    if not sectionable:
        g4 = False
        wit.setdefault("G4", {"no_section_through": g.names(sum(1 << a for a in missing))})

    generated = generate(g, w, g.all_objects)
    g5 = generated == h
    if not g5:
        wit["G5"] = {"generated": g.names(generated), "expected": g.names(h)}
    return LocalTopReport(g1, g2, g3, g4, g5, wit)


@dataclass(frozen=True, eq=False)
class LocallyTopGroupoid:
    groupoid: FinGroupoid
    H: int
    W: int
    report: LocalTopReport


# -- regularity ---------------------------------------------------------------


def point_indexed(sp: FinSpace, atlas: Sequence[Chart]) -> tuple[Chart, ...]:
    """The chart used at each point: atlas[x] when the atlas is already indexed by
    points, otherwise the smallest chart containing x (earliest on ties)."""
    if len(atlas) == sp.size and all(u >> x & 1 for x, (u, _) in enumerate(atlas)):
        return tuple(atlas)
    out = []
    for x in range(sp.size):
        best = None
        for u, h in atlas:
            if u >> x & 1 and (best is None or popcount(u) < popcount(best[0])):
                best = (u, h)
        if best is None:
            raise ConditionFailed("atlas does not cover the space", witness=sp.points[x])
        out.append(best)
    return tuple(out)


@dataclass
class RegularityReport:
    defines_s: bool
    weakly_adaptable: bool
    totally_coherent: bool
    charts_sectionable: bool
    regular: bool
    strictly_regular: bool
    point_charts: tuple[Chart, ...]
    witnesses: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "weakly_adaptable": self.weakly_adaptable,
            "regular": self.regular,
            "strictly_regular": self.strictly_regular,
            "defines_s": self.defines_s,
            "totally_coherent": self.totally_coherent,
            "charts_sectionable": self.charts_sectionable,
            "witnesses": self.witnesses,
        }


def strict_condition(g: FinGroupoid, charts: Sequence[Chart]) -> tuple[bool, dict | None]:
    """For g in H_x(x,z) and h in H_y(x,y), gh^-1 lies in H_z(y,z)."""
    n = len(g.objects)
    for x in range(n):
        hx = charts[x][1]
        for a in bits(hx):
            if g.src[a] != x:
                continue
            z = g.tgt[a]
            for y in range(n):
                for b in bits(charts[y][1]):
                    if g.src[b] != x or g.tgt[b] != y:
                        continue
                    c = g.comp[(a, g.inv[b])]
                    if not charts[z][1] >> c & 1:
                        return False, {"g": g.arrows[a], "h": g.arrows[b], "gh^-1": g.arrows[c],
                                       "x": g.objects[x], "y": g.objects[y], "z": g.objects[z]}
    return True, None


def atlas_regularity(s: LocalSubgroupoid, atlas: Sequence[Chart] | None = None) -> RegularityReport:
    g, sp = s.groupoid, s.space
    atlas = tuple(s.charts if atlas is None else atlas)
    wit: dict = {}
    try:
        defines = validate_atlas(g, atlas).germs == s.germs
    except (Incompatible, LocalGpdError) as e:
        defines = False
        wit["defines_s"] = str(e)
    if not defines:
        wit.setdefault("defines_s", "atlas germs differ from s")
    union = 0
    for _, h in atlas:
        union |= h
    generated = generate(g, union, g.all_objects)
    weakly = defines and generated == glob(s)
    if defines and not weakly:
        wit["weakly_adaptable"] = {"generated": g.names(generated), "glob": g.names(glob(s))}
    total = is_totally_coherent(s)
    sectionable = True
    for i, (_, h) in enumerate(atlas):
        ok, missing = locally_sectionable(g, h)
        if not ok:
            sectionable = False
            wit.setdefault("charts_sectionable", {"chart": i, "no_section_through": g.arrows[missing[0]]})
    regular = weakly and total and sectionable
    charts = point_indexed(sp, atlas)
    strict, sw = strict_condition(g, charts)
    if not strict:
        wit["strict"] = sw
    return RegularityReport(defines, weakly, total, sectionable, regular, regular and strict, charts, wit)


def build_locally_top_from_s(s: LocalSubgroupoid, atlas: Sequence[Chart] | None = None,
                             strict: bool = True) -> LocallyTopGroupoid:
    """(glob(s), union of the charts) with G1 to G5 re-verified.

    With ``strict`` a failed condition raises ConditionFailed; otherwise the
    report is returned as is.
    """
    rep = atlas_regularity(s, atlas)
    if not rep.strictly_regular:
        raise NotStrictlyRegular("atlas is not strictly regular", witness=rep.as_dict())
    g = s.groupoid
    w = 0
    for _, h in rep.point_charts:
        w |= h
    hmask = glob(s)
    top = check_locally_top(g, w, hmask)
    if strict and not top.ok:
        failed = [k for k, v in top.as_dict().items() if v is False]
        raise ConditionFailed(f"{failed[0]} fails", witness={"failed": failed, **top.witnesses})
    return LocallyTopGroupoid(g, hmask, w, top)


# -- the holonomy groupoid ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class HolonomyGroupoid:
    groupoid: FinGroupoid
    H: int
    W: int
    generators: tuple[SectionGerm, ...]  # J^c(W)
    germs: tuple[SectionGerm, ...]  # J^c(H,W)
    words: tuple[tuple[int, ...], ...]  # generator indices, leftmost applied last
    j0: int  # mask over germs
    kernel: int  # the normal subgroupoid actually quotiented by
    j0_closed: bool
    j0_normal: bool
    class_of: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]  # member germs, representative first
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    phi: tuple[int, ...]
    comp: Mapping[tuple[int, int], int]
    embedding: Mapping[int, int]  # i(w) for w in W

    @property
    def size(self) -> int:
        return len(self.classes)

    def class_ids(self) -> list[str]:
        return [f"h{i}" for i in range(self.size)]

    def germ_index(self) -> dict[SectionGerm, int]:
        return {a: i for i, a in enumerate(self.germs)}

    def identity_class(self, x: int) -> int:
        g = self.groupoid
        return self.class_of[self.germ_index()[germ_of(identity_section(g, _space(g).mn[x]), x)]]

    def inverse_class(self, c: int) -> int:
        g = self.groupoid
        idx = self.germ_index()
        return self.class_of[idx[germ_inverse(g, self.germs[self.classes[c][0]])]]

    def describe_germ(self, a: SectionGerm) -> dict:
        g = self.groupoid
        sec = germ_section(g, a)
        return {"point": g.objects[a.point], "section": sec.as_dict()}

    def arrows_report(self) -> list[dict]:
        g = self.groupoid
        out = []
        for c, members in enumerate(self.classes):
            rep = members[0]
            out.append({
                "class_id": f"h{c}",
                "src": g.objects[self.src[c]],
                "tgt": g.objects[self.tgt[c]],
                "phi_image": g.arrows[self.phi[c]],
                "representative_word": [self.describe_germ(self.generators[i]) for i in self.words[rep]],
            })
        return out

    def as_groupoid(self) -> FinGroupoid:
        """Hol^s as an abstract groupoid on the objects of X, validated from tables."""
        g = self.groupoid
        names = self.class_ids()
        arrows = [(names[c], g.objects[self.src[c]], g.objects[self.tgt[c]]) for c in range(self.size)]
        compose = [(names[b], names[a], names[c]) for (b, a), c in sorted(self.comp.items())]
        ident = {g.objects[x]: names[self.identity_class(x)] for x in range(len(g.objects))}
        inverses = {names[c]: names[self.inverse_class(c)] for c in range(self.size)}
        return validate_groupoid(g.objects, arrows, compose, ident, inverses, object_space=g.object_space)


def _close(g: FinGroupoid, gens: Sequence[SectionGerm]) -> tuple[list[SectionGerm], list[tuple[int, ...]]]:
    """Subgroupoid of germs generated by ``gens``, with a shortest word for each."""
    germs: list[SectionGerm] = []
    words: list[tuple[int, ...]] = []
    index: dict[SectionGerm, int] = {}
    by_point: dict[int, list[int]] = {}
    by_target: dict[int, list[int]] = {}

    def add(a: SectionGerm, word: tuple[int, ...]) -> None:
        if a in index:
            return
        index[a] = len(germs)
        germs.append(a)
        words.append(word)
        by_point.setdefault(a.point, []).append(index[a])
        by_target.setdefault(germ_target(g, a), []).append(index[a])

    for i, a in enumerate(gens):
        add(a, (i,))
    inv_word: dict[int, tuple[int, ...]] = {}
    gen_index = {a: i for i, a in enumerate(gens)}
    for i, a in enumerate(gens):
        j = gen_index.get(germ_inverse(g, a))
        if j is not None:
            inv_word[i] = (j,)
    k = 0
    while k < len(germs):
        a = germs[k]
        for j in list(by_point.get(germ_target(g, a), [])):
            add(germ_product(g, germs[j], a), words[j] + words[k])
        for j in list(by_target.get(a.point, [])):
            add(germ_product(g, a, germs[j]), words[k] + words[j])
        ia = germ_inverse(g, a)
        if ia not in index:
            if all(i in inv_word for i in words[k]):
                add(ia, tuple(inv_word[i][0] for i in reversed(words[k])))
            else:  # pragma: no cover - generators are closed under inverse when G2 holds
                add(ia, words[k])
        k += 1
    return germs, words


def holonomy_groupoid(g: FinGroupoid, h: int, w: int, check: bool = True) -> HolonomyGroupoid:
    """Hol = J^c(H,W)/J_0 with its projection to H."""
    sp = _space(g)
    if check:
        rep = check_locally_top(g, w, h)
        if not rep.ok:
            failed = [k for k, v in rep.as_dict().items() if v is False]
            raise NotLocallyTop(f"(H, W) fails {', '.join(failed)}", witness=rep.witnesses)
    gens: list[SectionGerm] = []
    for x in range(sp.size):
        gens.extend(continuous_germs(g, w, x))
    through = {germ_value(g, a) for a in gens}
    lacking = [a for a in bits(w) if a not in through]
    if lacking:
        raise SectionSearchExhausted("no continuous section through some arrow of W",
                                     witness=g.names(sum(1 << a for a in lacking)))
    germs, words = _close(g, gens)
    index = {a: i for i, a in enumerate(germs)}
    psi = [germ_value(g, a) for a in germs]
    ids = g.identities

    j0 = 0
    for a in gens:
        if ids >> germ_value(g, a) & 1:
            j0 |= 1 << index[a]

    def prod(b: int, a: int) -> int:
        return index[germ_product(g, germs[b], germs[a])]

    def inv(a: int) -> int:
        return index[germ_inverse(g, germs[a])]

    def members(mask: int) -> list[int]:
        return list(bits(mask))

    def is_closed(mask: int) -> bool:
        for a in members(mask):
            if not mask >> inv(a) & 1:
                return False
            for b in members(mask):
                if germs[b].point == germs[a].point and not mask >> prod(b, a) & 1:
                    return False
        return True

    tgt = [germ_target(g, a) for a in germs]

    def conjugates(mask: int) -> int:
        out = 0
        for n in members(mask):
            x = germs[n].point
            for a in range(len(germs)):
                if germs[a].point == x:
                    out |= 1 << prod(prod(a, n), inv(a))
        return out

    j0_closed = is_closed(j0)
    j0_normal = j0_closed and conjugates(j0) & ~j0 == 0
    kernel = j0
    while True:
        grown = kernel | conjugates(kernel)
        for a in members(grown):
            grown |= 1 << inv(a)
            for b in members(grown):
                if germs[b].point == germs[a].point:
                    grown |= 1 << prod(b, a)
        if grown == kernel:
            break
        kernel = grown

    # cosets a N_x
    parent = list(range(len(germs)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(germs)):
        for n in members(kernel):
            if germs[n].point == germs[a].point:
                ra, rb = find(a), find(prod(a, n))
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(len(germs)):
        groups.setdefault(find(a), []).append(a)

    def rank(a: int) -> tuple:
        return (len(words[a]), germs[a])

    classes = [sorted(m, key=rank) for m in groups.values()]
    classes.sort(key=lambda m: (germs[m[0]].point, tgt[m[0]], psi[m[0]], rank(m[0])))
    class_of = [0] * len(germs)
    for c, m in enumerate(classes):
        for a in m:
            class_of[a] = c
    src_c = tuple(germs[m[0]].point for m in classes)
    tgt_c = tuple(tgt[m[0]] for m in classes)
    phi = tuple(psi[m[0]] for m in classes)
    comp: dict[tuple[int, int], int] = {}
    for c1, m1 in enumerate(classes):
        for c2, m2 in enumerate(classes):
            if src_c[c2] == tgt_c[c1]:
                comp[(c2, c1)] = class_of[prod(m2[0], m1[0])]
    embedding: dict[int, int] = {}
    for a in gens:
        embedding.setdefault(germ_value(g, a), class_of[index[a]])
    return HolonomyGroupoid(
        g, h, w, tuple(gens), tuple(germs), tuple(words), j0, kernel, j0_closed, j0_normal,
        tuple(class_of), tuple(tuple(m) for m in classes), src_c, tgt_c, phi, comp,
        dict(sorted(embedding.items())),
    )


def lemma_germ_independence(hol: HolonomyGroupoid) -> tuple[bool, list[dict]]:
    """Continuous sections through the same w have the same class at alpha(w)."""
    g = hol.groupoid
    idx = hol.germ_index()
    seen: dict[int, tuple[int, SectionGerm]] = {}
    bad = []
    for a in hol.generators:
        w = germ_value(g, a)
        c = hol.class_of[idx[a]]
        if w not in seen:
            seen[w] = (c, a)
        elif seen[w][0] != c:
            bad.append({"w": g.arrows[w], "s": hol.describe_germ(seen[w][1]), "t": hol.describe_germ(a)})
    return not bad, bad


def sigma_chart_value(hol: HolonomyGroupoid, k: AdmissibleSection, w: int) -> tuple[int, bool]:
    """<k>_{beta w}<f>_{alpha w} for the sections f through w.

    Returns the class for the first f and whether every f gives the same class.
    """
    g = hol.groupoid
    b = g.tgt[w]
    if not k.domain >> b & 1:
        raise NotAdmissible("beta(w) is outside the domain of k", witness={"reason": "domain"})
    idx = hol.germ_index()
    kg = germ_of(k, b)
    if kg not in idx:
        raise NotAdmissible("k is not a product of continuous W-sections near beta(w)",
                            witness={"reason": "semigroup"})
    values = []
    for f in hol.generators:
        if germ_value(g, f) == w:
            values.append(hol.class_of[idx[germ_product(g, kg, f)]])
    if not values:
        raise SectionSearchExhausted("no continuous section through w", witness=g.arrows[w])
    return values[0], len(set(values)) == 1


def verify_holonomy(hol: HolonomyGroupoid) -> dict[str, bool]:
    """Postconditions of the quotient and of phi, checked exhaustively."""
    g = hol.groupoid
    idx = hol.germ_index()
    psi = [germ_value(g, a) for a in hol.germs]
    out: dict[str, bool] = {}
    out["j0_in_kernel_of_psi"] = all(g.identities >> psi[a] & 1 for a in bits(hol.kernel))
    out["kernel_totally_disconnected"] = all(
        hol.germs[a].point == germ_target(g, hol.germs[a]) for a in bits(hol.kernel))
    out["phi_p_equals_psi"] = all(hol.phi[hol.class_of[a]] == psi[a] for a in range(len(hol.germs)))
    well = True
    for (c2, c1), c in hol.comp.items():
        for b in hol.classes[c2]:
            for a in hol.classes[c1]:
                if hol.class_of[idx[germ_product(g, hol.germs[b], hol.germs[a])]] != c:
                    well = False
                    break
            if not well:
                break
        if not well:
            break
    out["quotient_well_defined"] = well
    out["phi_morphism"] = all(
        hol.phi[c] == g.comp[(hol.phi[c2], hol.phi[c1])] for (c2, c1), c in hol.comp.items())
    out["phi_object_fixing"] = all(
        g.src[hol.phi[c]] == hol.src[c] and g.tgt[hol.phi[c]] == hol.tgt[c] for c in range(hol.size))
    image = 0
    for a in hol.phi:
        image |= 1 << a
    out["phi_surjective"] = image == hol.H
    out["phi_i_identity"] = set(hol.embedding) == set(bits(hol.W)) and all(
        hol.phi[c] == w for w, c in hol.embedding.items())
    out["germ_independence"] = lemma_germ_independence(hol)[0]
    return out


def is_isomorphic_to_h(hol: HolonomyGroupoid) -> bool:
    """phi is a bijection onto H (it is always a morphism fixing objects)."""
    return len(set(hol.phi)) == hol.size and hol.size == popcount(hol.H)
