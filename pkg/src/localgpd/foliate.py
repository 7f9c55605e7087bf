"""The fine topology X^s and its leaves."""

from __future__ import annotations

from dataclasses import dataclass

from .fintop import FinSpace, connected_components, generated_topology_bruteforce
from .groupoid import components
from .localsub import LocalSubgroupoid, glob


@dataclass(frozen=True, eq=False)
class FoliationTopology:
    base: FinSpace
    s: LocalSubgroupoid
    fine: FinSpace
    generators: tuple[int, ...]
    canonical: bool


def leaf_generators(s: LocalSubgroupoid, canonical: bool = False) -> list[int]:
    """Transitivity components M_{x,a} of each chart subgroupoid inside its open.

    With ``canonical`` the charts are the canonical germs (mn(x), s_x) rather
    than the atlas the local subgroupoid was given with.
    """
    sp, g = s.space, s.groupoid
    charts = [(sp.mn[x], s.germs[x]) for x in range(sp.size)] if canonical else s.charts
    out = set()
    for u, h in charts:
        out.update(components(g, h, u))
    return sorted(out)


def fine_topology(s: LocalSubgroupoid, canonical: bool = False) -> FoliationTopology:
    sp = s.space
    gens = leaf_generators(s, canonical)
    fine = FinSpace.from_opens(sp.points, list(sp.opens) + gens)
    fine = FinSpace(sp.points, fine.mn)
    # identity X^s -> X is continuous because every base open stays open
    assert all(fine.is_open(u) for u in sp.opens)
    return FoliationTopology(sp, s, fine, tuple(gens), canonical)


def fine_opens_bruteforce(s: LocalSubgroupoid, canonical: bool = False) -> frozenset[int]:
    sp = s.space
    return generated_topology_bruteforce(sp.points, list(sp.opens) + leaf_generators(s, canonical))


def leaves(s: LocalSubgroupoid, canonical: bool = False) -> list[int]:
    fine = fine_topology(s, canonical).fine
    return connected_components(fine)


def glob_components(s: LocalSubgroupoid) -> list[int]:
    return sorted(components(s.groupoid, glob(s)), key=lambda m: (m & -m, m))


def leaves_match(s: LocalSubgroupoid, canonical: bool = False) -> tuple[bool, dict]:
    """Compare the leaves of X^s with the transitivity components of glob(s)."""
    sp = s.space
    lv = leaves(s, canonical)
    gc = glob_components(s)
    ok = sorted(lv) == sorted(gc)
    witness = {
        "leaves": [sp.ids(m) for m in lv],
        "glob_components": [sp.ids(m) for m in gc],
    }
    return ok, witness


def thm_check(s: LocalSubgroupoid) -> dict:
    """Both computations of X^s side by side."""
    sp = s.space
    atlas_ok, atlas_w = leaves_match(s, canonical=False)
    germ_ok, germ_w = leaves_match(s, canonical=True)
    return {
        "atlas_charts": {"match": atlas_ok, **atlas_w,
                         "fine_opens": [sp.ids(u) for u in fine_topology(s).fine.opens]},
        "canonical_germs": {"match": germ_ok, **germ_w,
                            "fine_opens": [sp.ids(u) for u in fine_topology(s, True).fine.opens]},
    }

