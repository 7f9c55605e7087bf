"""Exhaustive sweeps over small instances, shared by the CLI bench and the test suite."""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .fintop import FinSpace
from .groupoid import FinGroupoid, cyclic_group, pair_groupoid, pair_with_group
from .gsheaf import (
    action_failures,
    is_locally_transitive,
    lift_r_action,
    r_structure_check,
    r_structures,
    unique_transport,
)
from .holonomy import (
    atlas_regularity,
    build_locally_top_from_s,
    holonomy_groupoid,
    verify_holonomy,
)
from .localsub import (
    BenchReport,
    adjunction_check,
    glob,
    glob_by_covers,
    glob_by_definition,
    is_coherent,
    is_globally_coherent,
    local_subgroupoids,
    point_atlases,
    theorem_bench,
)
from .groupoid import wide_subgroupoids
from .presheaf import (
    check_adjunction,
    check_sheaf,
    is_open_germ_map,
    maps_sections_to_sections,
    mu_bijective,
    sheafify,
    stalk_preserving_maps,
)
from .sweep import continuous_maps, presheaves, sheaves, spaces_up_to


@dataclass
class SweepResult:
    name: str
    instances: int = 0
    failures: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def bump(self, key: str, n: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + n

    def as_dict(self, max_witnesses: int = 5) -> dict:
        return {"name": self.name, "instances": self.instances, "failures": len(self.failures),
                "witnesses": self.failures[:max_witnesses], "counts": dict(sorted(self.counts.items()))}


def _timed(fn: Callable[[SweepResult], None], name: str) -> SweepResult:
    res = SweepResult(name)
    t0 = time.perf_counter()
    fn(res)
    res.seconds = time.perf_counter() - t0
    return res


def sample_spaces(max_points: int, sample: int | None = None, up_to_homeomorphism: bool = False) -> list[FinSpace]:
    """Spaces with at most ``max_points`` points, optionally a seeded random sample.

    The seed comes from LOCALGPD_SEED (default 0).
    """
    spaces = spaces_up_to(max_points, up_to_homeomorphism)
    if sample is not None and sample < len(spaces):
        rng = random.Random(int(os.environ.get("LOCALGPD_SEED", "0")))
        picked = sorted(rng.sample(range(len(spaces)), sample))
        spaces = [spaces[i] for i in picked]
    return spaces


def pair_groupoids(spaces: Iterable[FinSpace], max_arrows: int | None = None) -> list[FinGroupoid]:
    out = []
    for sp in spaces:
        if max_arrows is None or sp.size * sp.size <= max_arrows:
            out.append(pair_groupoid(sp))
    return out


# -- sheaf conditions versus mu -----------------------------------------------


def mu_equivalence(max_points: int = 3, max_size: int = 2, fast: bool = False) -> SweepResult:
    """check_sheaf (F1 and F2) agrees with mu_U bijective for every open."""

    def run(res: SweepResult) -> None:
        from .presheaf import is_sheaf, mu_bijective_fast

        for sp in spaces_up_to(max_points):
            for p in presheaves(sp, max_size):
                res.instances += 1
                if fast:
                    sheaf = is_sheaf(p)
                    mu_ok = all(mu_bijective_fast(p, u) for u in sp.opens)
                else:
                    sheaf = check_sheaf(p, irredundant=True, equalizer=False).is_sheaf
                    e = sheafify(p)
                    mu_ok = all(mu_bijective(p, u, e) for u in sp.opens)
                res.bump("sheaves" if sheaf else "non_sheaves")
                if sheaf != mu_ok:
                    res.failures.append({"space": [sp.ids(u) for u in sp.opens], "sheaf": sheaf, "mu": mu_ok})

    return _timed(run, "mu_equivalence")


# -- glob ---------------------------------------------------------------------


def glob_agreement(max_points: int = 3, max_arrows: int | None = None) -> SweepResult:
    def run(res: SweepResult) -> None:
        for g in pair_groupoids(spaces_up_to(max_points), max_arrows):
            wides = wide_subgroupoids(g)
            for s in point_atlases(g):
                res.instances += 1
                a, b, c = glob(s), glob_by_covers(s), glob_by_definition(s, wides)
                if not a == b == c:
                    res.failures.append({"atlas": s.chart_names(), "shortcut": g.names(a),
                                         "covers": g.names(b), "definition": g.names(c)})

    return _timed(run, "glob_agreement")


def adjunction_suite(max_points: int = 3, max_arrows: int | None = None) -> SweepResult:
    def run(res: SweepResult) -> None:
        for g in pair_groupoids(spaces_up_to(max_points), max_arrows):
            rep = adjunction_check(g)
            res.instances += 1
            res.bump("wide_subgroupoids", rep.wide)
            res.bump("local_subgroupoids", rep.local)
            res.bump("strict_counit", len(rep.strict_counit))
            for kind in ("counit_violations", "unit_violations", "monotone_violations", "triangle_violations"):
                for w in getattr(rep, kind):
                    res.failures.append({"kind": kind, "witness": w})

    return _timed(run, "adjunction")


def _theorem_worker(payload: tuple[tuple[str, ...], tuple[int, ...]]) -> BenchReport:
    points, mn = payload
    return theorem_bench(pair_groupoid(FinSpace(points, mn)))


def theorem_sweep(max_points: int = 3, max_arrows: int | None = None,
                  spaces: list[FinSpace] | None = None, jobs: int = 1) -> tuple[SweepResult, BenchReport]:
    """Every theorem statement over the pair groupoids; ``jobs > 1`` fans out to processes."""
    total = BenchReport()

    def run(res: SweepResult) -> None:
        gs = pair_groupoids(spaces if spaces is not None else spaces_up_to(max_points), max_arrows)
        res.instances = len(gs)
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            payload = [(g.object_space.points, g.object_space.mn) for g in gs]  # type: ignore[union-attr]
            with ProcessPoolExecutor(jobs) as pool:
                reports = list(pool.map(_theorem_worker, payload, chunksize=4))
        else:
            reports = [theorem_bench(g) for g in gs]
        for r in reports:  # merged in input order so witnesses stay deterministic
            total.merge(r)
        for name, ws in sorted(total.witnesses.items()):
            res.counts[name] = len(ws)
            for w in ws:
                res.failures.append({"statement": name, "witness": w})

    return _timed(run, "theorem_bench"), total


def noncoherent_search(max_points: int = 3, max_arrows: int | None = None) -> SweepResult:
    def run(res: SweepResult) -> None:
        for g in pair_groupoids(spaces_up_to(max_points), max_arrows):
            for s in local_subgroupoids(g):
                res.instances += 1
                if not is_coherent(s):
                    res.failures.append({"germs": [g.names(m) for m in s.germs]})

    return _timed(run, "noncoherent_search")


# -- sheaf morphisms and the image adjunction ---------------------------------


def morphism_openness(max_points: int = 3, max_stalk: int = 2) -> SweepResult:
    """Stalk-preserving germ maps that carry sections to sections are open."""

    def run(res: SweepResult) -> None:
        for sp in spaces_up_to(max_points):
            shs = list(sheaves(sp, max_stalk))
            for e1 in shs:
                for e2 in shs:
                    for eta in stalk_preserving_maps(e1, e2):
                        res.instances += 1
                        if not maps_sections_to_sections(e1, e2, eta):
                            continue
                        res.bump("morphisms")
                        if not is_open_germ_map(e1, e2, eta):
                            res.failures.append({"space": [sp.ids(u) for u in sp.opens],
                                                 "map": [e2.germ_id(g) for g in eta]})

    return _timed(run, "morphism_openness")


def image_adjunction(max_points: int = 3, max_stalk: int = 2, up_to_homeomorphism: bool = True) -> SweepResult:
    """|Hom(f^*G, F)| = |Hom(G, f_*F)| through the explicit transpose."""

    def run(res: SweepResult) -> None:
        spaces = spaces_up_to(max_points, up_to_homeomorphism)
        shs = {sp.mn: list(sheaves(sp, max_stalk)) for sp in spaces}
        for x in spaces:
            for y in spaces:
                for f in continuous_maps(x, y):
                    res.bump("maps")
                    for g in shs[y.mn]:
                        for sheaf in shs[x.mn]:
                            res.instances += 1
                            rep = check_adjunction(f, g, sheaf)
                            res.bump("morphisms", rep.left)
                            if not rep.ok:
                                res.failures.append({"map": list(f.mapping), "left": rep.left,
                                                     "right": rep.right})

    return _timed(run, "image_adjunction")


# -- holonomy -----------------------------------------------------------------


def holonomy_groupoids(max_points: int = 3) -> list[FinGroupoid]:
    spaces = spaces_up_to(max_points)
    out = [pair_groupoid(sp) for sp in spaces]
    z2 = cyclic_group(2)
    out += [pair_with_group(sp, z2) for sp in spaces]
    return out


def holonomy_sweep(max_points: int = 3, groupoids: list[FinGroupoid] | None = None) -> SweepResult:
    """Every strictly regular point atlas yields (H, W) satisfying G1-G5 and a valid Hol."""

    def run(res: SweepResult) -> None:
        for g in groupoids if groupoids is not None else holonomy_groupoids(max_points):
            for s in point_atlases(g):
                res.bump("atlases")
                if not atlas_regularity(s).strictly_regular:
                    continue
                res.instances += 1
                lt = build_locally_top_from_s(s, strict=False)
                if not lt.report.ok:
                    res.failures.append({"atlas": s.chart_names(), "locally_top": lt.report.as_dict()})
                    continue
                hol = holonomy_groupoid(g, lt.H, lt.W)
                checks = verify_holonomy(hol)
                if not all(checks.values()):
                    res.failures.append({"atlas": s.chart_names(),
                                         "failed": sorted(k for k, v in checks.items() if not v)})
                res.bump("hol_arrows", hol.size)
                if not hol.j0_normal:
                    res.bump("j0_not_normal")

    return _timed(run, "holonomy")


# -- transports -----------------------------------------------------------------


def transport_uniqueness(max_points: int = 3, max_stalk: int = 2,
                         groupoids: list[FinGroupoid] | None = None) -> SweepResult:
    def run(res: SweepResult) -> None:
        for g in groupoids if groupoids is not None else pair_groupoids(spaces_up_to(max_points)):
            assert g.object_space is not None
            shs = list(sheaves(g.object_space, max_stalk))
            for s in local_subgroupoids(g):
                if not is_locally_transitive(s):
                    continue
                res.bump("locally_transitive")
                for f in shs:
                    res.instances += 1
                    count, pair = unique_transport(s, f)
                    res.bump(f"count_{count}")
                    if count > 1:
                        res.failures.append({"germs": [g.names(m) for m in s.germs],
                                             "sheaf": list(f.total.points), "count": count})

    return _timed(run, "transport_uniqueness")


def lift_round_trip(max_points: int = 3, max_stalk: int = 2) -> SweepResult:
    """Every r-structure over a globally coherent r lifts to a valid R-action."""

    def run(res: SweepResult) -> None:
        for g in pair_groupoids(spaces_up_to(max_points)):
            assert g.object_space is not None
            shs = list(sheaves(g.object_space, max_stalk))
            for r in local_subgroupoids(g):
                if not is_globally_coherent(r):
                    continue
                big_r = glob(r)
                for f in shs:
                    for t in r_structures(f, r):
                        ok, _ = r_structure_check(f, t, r)
                        if not ok:
                            continue
                        res.instances += 1
                        try:
                            fails = action_failures(lift_r_action(f, t, g, big_r))
                        except Exception as e:  # a lift error is a round-trip failure
                            fails = [(e.__class__.__name__, getattr(e, "witness", None))]
                        if fails:
                            res.failures.append({"r": [g.names(m) for m in r.germs], "failure": fails[0]})

    return _timed(run, "lift_round_trip")


SUITES: dict[str, Callable[[int, int | None], SweepResult]] = {
    "mu": lambda n, m: mu_equivalence(n, 2, fast=True),
    "glob": glob_agreement,
    "adjunction": adjunction_suite,
    "morphisms": lambda n, m: morphism_openness(n, 2),
    "image": lambda n, m: image_adjunction(n, 2),
    "holonomy": lambda n, m: holonomy_sweep(n),
    "transport": lambda n, m: transport_uniqueness(n, 2),
    "lift": lambda n, m: lift_round_trip(n, 2),
    "noncoherent": noncoherent_search,
}
