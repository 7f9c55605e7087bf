"""Command-line front end: load an instance, run one check, print a report."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import io
from .errors import InputError, LocalGpdError, ResourceCap, SchemaError
from .fintop import FinSpace, connected_components, is_sober
from .groupoid import components, continuity_report, is_etale, is_wide_subgroupoid, vertex_group
from .localsub import LocalSubgroupoid

EXHAUSTIVE_CAP = 4
DIRECT_CAP = 8


@dataclass
class Outcome:
    verdicts: dict[str, bool]
    result: Any = None
    witnesses: dict = field(default_factory=dict)
    emitted: dict | None = None


@dataclass(frozen=True)
class Command:
    name: str
    run: Callable[[io.Instance | None, argparse.Namespace], Outcome]
    help: str
    exhaustive: bool = False
    needs_input: bool = True


# -- helpers ------------------------------------------------------------------


def _space_of(inst: io.Instance) -> FinSpace | None:
    if inst.has("space"):
        return inst.space
    return None


def _check_caps(inst: io.Instance, args: argparse.Namespace, exhaustive: bool) -> None:
    cap = args.max_points if args.max_points is not None else (EXHAUSTIVE_CAP if exhaustive else DIRECT_CAP)
    sp = _space_of(inst)
    if sp is not None and sp.size > cap:
        raise ResourceCap(f"space has {sp.size} points, the cap is {cap}", witness=sp.size)
    if args.max_arrows is not None and inst.has("groupoid"):
        n = len(inst.groupoid.arrows)
        if n > args.max_arrows:
            raise ResourceCap(f"groupoid has {n} arrows, the cap is {args.max_arrows}", witness=n)
    if exhaustive and inst.has("presheaf"):
        p = inst.presheaf
        if p.max_set_size > EXHAUSTIVE_CAP:
            raise ResourceCap(f"a presheaf set has {p.max_set_size} elements, the cap is {EXHAUSTIVE_CAP}",
                              witness=p.max_set_size)


def _presheaf(inst: io.Instance):
    from .presheaf import validate_presheaf

    return validate_presheaf(inst.presheaf)


def _sheaf(inst: io.Instance):
    if inst.has("sheaf"):
        return inst.sheaf
    from .presheaf import sheafify

    return sheafify(_presheaf(inst))


def _locsub(inst: io.Instance) -> LocalSubgroupoid:
    return inst.atlas


def _germs_json(s: LocalSubgroupoid) -> dict:
    sp, g = s.space, s.groupoid
    return {sp.points[x]: g.names(h) for x, h in enumerate(s.germs)}


# -- commands -----------------------------------------------------------------


def cmd_check_space(inst, args) -> Outcome:
    sp = inst.space
    comps = connected_components(sp)
    return Outcome(
        {"valid": True},
        {"points": list(sp.points), "opens": [sp.ids(u) for u in sp.opens],
         "min_nbhds": {p: sp.ids(sp.mn[i]) for i, p in enumerate(sp.points)},
         "t0": sp.is_t0, "sober": is_sober(sp), "components": [sp.ids(c) for c in comps]},
    )


def cmd_check_presheaf(inst, args) -> Outcome:
    from .presheaf import presheaf_diagnostics

    diags = presheaf_diagnostics(inst.presheaf)
    p = inst.presheaf
    sizes = {io.open_key(p.base, u): len(p.elems[u]) for u in p.base.opens}
    wit = {"functor": diags[0]} if diags else {}
    return Outcome({"functor": not diags}, {"set_sizes": sizes, "violations": len(diags)}, wit)


def cmd_check_sheaf(inst, args) -> Outcome:
    from .presheaf import check_sheaf, mu_bijective, sheafify

    p = _presheaf(inst)
    rep = check_sheaf(p, equalizer=args.oracle)
    verdicts = {"F1": rep.f1, "F2": rep.f2}
    if args.oracle:
        verdicts["equalizer_agrees"] = rep.equalizer_agrees
    wit = {}
    if rep.f1_witness is not None:
        wit["F1"] = rep.f1_witness
    if rep.f2_witness is not None:
        wit["F2"] = rep.f2_witness
    e = sheafify(p)
    mu = {io.open_key(p.base, u): mu_bijective(p, u, e) for u in p.base.opens}
    return Outcome(verdicts, {"covers_checked": rep.covers_checked, "mu_bijective": mu}, wit)


def cmd_sheafify(inst, args) -> Outcome:
    from .presheaf import sheafify, sheafify_by_basis

    p = _presheaf(inst)
    e = sheafify(p)
    frag = io.sheaf_fragment(e)
    again = io.parse_sheaf(p.base, json.loads(json.dumps(frag)))
    verdicts = {
        "etale": e.is_etale(),
        "round_trip": again.total == e.total and again.proj == e.proj,
    }
    if args.oracle:
        other = sheafify_by_basis(p)
        verdicts["basis_agrees"] = other.total == e.total and other.proj == e.proj
    stalks = {x: [e.germ_id(k) for k in e.fibers[i]] for i, x in enumerate(p.base.points)}
    return Outcome(verdicts, {"germs": len(e.germs), "stalks": stalks}, emitted={"sheaf": frag})


def cmd_sections(inst, args) -> Outcome:
    from .presheaf import mu_bijective, sections

    e = _sheaf(inst)
    sp = e.base
    table = {io.open_key(sp, u): [[e.germ_id(k) for k in s.values] for s in sections(e, u)]
             for u in sp.opens}
    verdicts = {"etale": e.is_etale()}
    if inst.has("presheaf"):
        p = _presheaf(inst)
        verdicts["mu_bijective"] = all(mu_bijective(p, u, e) for u in sp.opens)
    counts = {k: len(v) for k, v in table.items()}
    return Outcome(verdicts, {"sections": table, "counts": counts})


def cmd_check_groupoid(inst, args) -> Outcome:
    g = inst.groupoid
    verdicts = {"axioms": True}
    result: dict = {"objects": list(g.objects), "arrows": len(g.arrows),
                    "components": [[g.objects[x] for x in range(len(g.objects)) if c >> x & 1]
                                   for c in components(g)],
                    "vertex_group_orders": {x: len(vertex_group(g, i)) for i, x in enumerate(g.objects)}}
    if g.arrow_space is not None:
        rep = continuity_report(g)
        verdicts["continuous"] = all(rep.values())
        result["continuity"] = rep
        result["etale"] = is_etale(g)
    return Outcome(verdicts, result)


def cmd_glob(inst, args) -> Outcome:
    from .localsub import glob, glob_by_covers, glob_by_definition

    s = _locsub(inst)
    g = s.groupoid
    h = glob(s)
    names = g.names(h)
    again = g.mask_of(json.loads(json.dumps(names)))
    verdicts = {"wide_subgroupoid": is_wide_subgroupoid(g, again) and again == h}
    if args.oracle:
        verdicts["covers_agree"] = glob_by_covers(s) == h
        verdicts["definition_agrees"] = glob_by_definition(s) == h
    comps = components(g, h)
    return Outcome(verdicts,
                   {"arrows": names, "count": len(names),
                    "components": [[g.objects[x] for x in range(len(g.objects)) if c >> x & 1] for c in comps]},
                   emitted={"subgroupoid": {"arrows": names}})


def cmd_loc(inst, args) -> Outcome:
    from .localsub import coherence_h, glob, loc, validate_atlas

    g = inst.groupoid
    h = inst.arrow_set("subgroupoid")
    if not is_wide_subgroupoid(g, h):
        from .errors import NotWide

        raise NotWide("the given arrows are not a wide subgroupoid", witness=g.names(h))
    s = loc(g, h)
    frag = io.atlas_fragment(s)
    again = validate_atlas(g, [(s.space.mask(c["open"]), g.mask_of(c["arrows"])) for c in frag])
    verdicts = {"round_trip": again.germs == s.germs, "counit": glob(s) & ~h == 0}
    return Outcome(verdicts, {"germs": _germs_json(s), "glob": g.names(glob(s)), **coherence_h(g, h)},
                   emitted={"atlas": frag})


def cmd_coherence(inst, args) -> Outcome:
    from .localsub import coherence, glob

    s = _locsub(inst)
    verdicts = coherence(s)
    return Outcome(verdicts, {"germs": _germs_json(s), "glob": s.groupoid.names(glob(s))})


def cmd_adjunction(inst, args) -> Outcome:
    from .localsub import adjunction_check, germ_le, glob, loc

    g = inst.groupoid
    rep = adjunction_check(g)
    verdicts = {"unit": not rep.unit_violations, "counit": not rep.counit_violations,
                "monotone": not rep.monotone_violations, "triangle": not rep.triangle_violations}
    wit = {k: v[0] for k, v in (("unit", rep.unit_violations), ("counit", rep.counit_violations),
                                ("monotone", rep.monotone_violations),
                                ("triangle", rep.triangle_violations)) if v}
    result: dict = {"wide_subgroupoids": rep.wide, "local_subgroupoids": rep.local,
                    "strict_counit": rep.strict_counit[:5], "strict_counit_count": len(rep.strict_counit)}
    if inst.has("atlas"):
        s = _locsub(inst)
        verdicts["atlas_unit"] = germ_le(s, loc(g, glob(s)))
    return Outcome(verdicts, result, wit)


def cmd_foliate(inst, args) -> Outcome:
    from .foliate import fine_opens_bruteforce, fine_topology, thm_check

    s = _locsub(inst)
    both = thm_check(s)
    key = "canonical_germs" if args.canonical_germs else "atlas_charts"
    verdicts = {"leaves_match": both[key]["match"]}
    if args.oracle:
        canonical = args.canonical_germs
        verdicts["fine_topology_oracle"] = (
            frozenset(fine_topology(s, canonical).fine.opens) == fine_opens_bruteforce(s, canonical))
    return Outcome(verdicts, {"mode": key, **both})


def cmd_regularity(inst, args) -> Outcome:
    from .holonomy import atlas_regularity

    rep = atlas_regularity(_locsub(inst)).as_dict()
    wit = rep.pop("witnesses")
    return Outcome(rep, {}, wit)


def _locally_top(inst):
    from .holonomy import LocallyTopGroupoid, build_locally_top_from_s, check_locally_top

    if inst.has("locally_top"):
        g = inst.groupoid
        h = inst.arrow_set("locally_top", "H")
        w = inst.arrow_set("locally_top", "W")
        return LocallyTopGroupoid(g, h, w, check_locally_top(g, w, h))
    return build_locally_top_from_s(_locsub(inst), strict=False)


def cmd_locally_top(inst, args) -> Outcome:
    lt = _locally_top(inst)
    rep = lt.report.as_dict()
    wit = rep.pop("witnesses")
    g = lt.groupoid
    return Outcome(rep, {"H": g.names(lt.H), "W": g.names(lt.W)}, wit)


def cmd_holonomy(inst, args) -> Outcome:
    from .errors import NotLocallyTop
    from .holonomy import holonomy_groupoid, is_isomorphic_to_h, verify_holonomy

    lt = _locally_top(inst)
    if not lt.report.ok:
        rep = lt.report.as_dict()
        raise NotLocallyTop("(H, W) fails the locally topological conditions", witness=rep)
    hol = holonomy_groupoid(lt.groupoid, lt.H, lt.W)
    verdicts = verify_holonomy(hol)
    frag = io.groupoid_fragment(hol.as_groupoid(), with_objects=True)
    again = io.parse_groupoid(None, json.loads(json.dumps(frag)))
    verdicts["round_trip"] = len(again.arrows) == hol.size
    arrows = hol.arrows_report()
    result = {"size": hol.size, "H_size": bin(lt.H).count("1"), "isomorphic_to_H": is_isomorphic_to_h(hol),
              "j0_normal": hol.j0_normal, "arrows": arrows}
    return Outcome(verdicts, result, emitted={"groupoid": frag, "arrows": arrows})


def cmd_action_check(inst, args) -> Outcome:
    from .gsheaf import GroupoidAction, action_failures, is_functor

    g = inst.groupoid
    f = _sheaf(inst)
    d = inst.require("action")
    rows = d.get("rows") if isinstance(d, dict) else d
    if not isinstance(rows, list):
        raise SchemaError("$.action: expected a list of rows", witness="$.action")
    arrows = None
    if isinstance(d, dict) and "arrows" in d:
        arrows = g.mask_of(d["arrows"])
    act = GroupoidAction.from_json(g, f, rows, arrows)
    fails = action_failures(act)
    kinds = ("total", "square", "unit", "assoc", "bijective", "continuity")
    first: dict = {}
    for kind, w in fails:
        first.setdefault(kind, w)
    verdicts = {k: k not in first for k in kinds}
    verdicts["functor"] = is_functor(act)
    return Outcome(verdicts, {"rows": len(rows)}, first)


def cmd_transport(inst, args) -> Outcome:
    from .gsheaf import is_locally_transitive, s_transports, transports_json

    s = _locsub(inst)
    f = _sheaf(inst)
    ts = s_transports(s, f, limit=2)
    verdicts = {"locally_transitive": is_locally_transitive(s), "at_most_one": len(ts) <= 1}
    result: dict = {"count_capped_at_2": len(ts)}
    emitted = None
    if len(ts) == 1:
        emitted = {"transport": transports_json(ts[0], s.groupoid)}
        result["transport"] = emitted["transport"]
    return Outcome(verdicts, result, emitted=emitted)


def cmd_bench(inst, args) -> Outcome:
    from . import bench

    n = args.max_points if args.max_points is not None else 3
    if n > EXHAUSTIVE_CAP:
        raise ResourceCap(f"bench sweeps at most {EXHAUSTIVE_CAP} points", witness=n)
    spaces = bench.sample_spaces(n, args.sample)
    suites = args.suite or ["theorems"]
    verdicts: dict[str, bool] = {}
    result: dict = {"max_points": n, "spaces": len(spaces)}
    wit: dict = {}
    for name in suites:
        if name == "theorems":
            res, total = bench.theorem_sweep(n, args.max_arrows, spaces=spaces, jobs=args.jobs)
            result["theorems"] = {"checked": dict(sorted(total.checked.items())),
                                  "hypothesis_true": dict(sorted(total.hypothesis_true.items())),
                                  "counterexamples": {k: len(v) for k, v in sorted(total.witnesses.items())}}
        else:
            res = bench.SUITES[name](n, args.max_arrows)
            result[name] = res.as_dict(0)
        verdicts[name] = res.ok
        if not res.ok:
            wit[name] = res.failures[:3]
    return Outcome(verdicts, result, wit)


def cmd_search_noncoherent(inst, args) -> Outcome:
    from . import bench

    n = args.max_points if args.max_points is not None else 3
    if n > EXHAUSTIVE_CAP:
        raise ResourceCap(f"the search covers at most {EXHAUSTIVE_CAP} points", witness=n)
    res = bench.noncoherent_search(n, args.max_arrows)
    found = res.failures
    return Outcome({"all_coherent": not found},
                   {"max_points": n, "local_subgroupoids": res.instances, "noncoherent": len(found)},
                   {"noncoherent": found[0]} if found else {})


COMMANDS = {c.name: c for c in (
    Command("check-space", cmd_check_space, "validate a finite space"),
    Command("check-presheaf", cmd_check_presheaf, "check the presheaf functor laws"),
    Command("check-sheaf", cmd_check_sheaf, "evaluate F1 and F2 over all covers"),
    Command("sheafify", cmd_sheafify, "build the etale space of germs"),
    Command("sections", cmd_sections, "list continuous sections over every open"),
    Command("check-groupoid", cmd_check_groupoid, "validate a groupoid and its topology"),
    Command("glob", cmd_glob, "globalize an atlas"),
    Command("loc", cmd_loc, "localize a wide subgroupoid"),
    Command("coherence", cmd_coherence, "coherence of an atlas"),
    Command("adjunction", cmd_adjunction, "loc/glob unit and counit over all wide subgroupoids",
            exhaustive=True),
    Command("foliate", cmd_foliate, "fine topology and leaves"),
    Command("regularity", cmd_regularity, "adaptability and strict regularity of an atlas"),
    Command("locally-top", cmd_locally_top, "conditions G1 to G5"),
    Command("holonomy", cmd_holonomy, "the holonomy groupoid"),
    Command("action-check", cmd_action_check, "validate a groupoid action on a sheaf"),
    Command("transport", cmd_transport, "count s-transports", exhaustive=True),
    Command("bench", cmd_bench, "exhaustive theorem sweep", exhaustive=True, needs_input=False),
    Command("search-noncoherent", cmd_search_noncoherent, "search for non-coherent local subgroupoids",
            exhaustive=True, needs_input=False),
)}


# -- driver -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", type=Path, help="instance JSON file")
    common.add_argument("--emit", type=Path, help="write the instance plus emitted structures here")
    common.add_argument("--max-points", type=int, help="point cap (default 4 exhaustive, 8 direct)")
    common.add_argument("--max-arrows", type=int, help="arrow cap")
    common.add_argument("--oracle", action="store_true", help="also run the brute-force oracles")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timing", action="store_true", help="omit timing_ms from the report")

    parser = argparse.ArgumentParser(prog="localgpd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for c in COMMANDS.values():
        p = sub.add_parser(c.name, parents=[common], help=c.help)
        if c.name == "foliate":
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--atlas-charts", action="store_true", help="leaves from the atlas charts (default)")
            mode.add_argument("--canonical-germs", action="store_true", help="leaves from the canonical germs")
        if c.name == "bench":
            from .bench import SUITES

            p.add_argument("--suite", action="append", choices=["theorems", *SUITES],
                           help="sweep to run (repeatable, default theorems)")
            p.add_argument("--sample", type=int, help="random sample of spaces (seed LOCALGPD_SEED)")
            p.add_argument("--jobs", type=int, default=1, help="worker processes for the theorem sweep")
    return parser


def _render_text(report: dict) -> str:
    lines = [f"command: {report['command']}", f"instance: {report['instance_digest']}"]
    if "error" in report:
        lines.append(f"error: {report['error']['code']}: {report['error']['message']}")
    for k, v in report["verdicts"].items():
        lines.append(f"{k}: {'PASS' if v else 'FAIL'}")
    for k, v in report["witnesses"].items():
        lines.append(f"witness {k}: {json.dumps(v, sort_keys=True)}")
    if report.get("result") is not None:
        lines.append("result: " + json.dumps(report["result"], sort_keys=True))
    if "timing_ms" in report:
        lines.append(f"timing_ms: {report['timing_ms']}")
    return "\n".join(lines) + "\n"


def run(argv: list[str] | None = None) -> tuple[int, dict]:
    args = build_parser().parse_args(argv)
    cmd = COMMANDS[args.command]
    t0 = time.perf_counter()
    report: dict = {"command": cmd.name, "instance_digest": None, "verdicts": {}, "witnesses": {},
                    "result": None}
    inst = None
    try:
        if args.input is not None:
            inst = io.load(args.input)
            report["instance_digest"] = inst.digest
            _check_caps(inst, args, cmd.exhaustive)
        elif cmd.needs_input:
            raise SchemaError("--input is required for this command", witness="--input")
        out = cmd.run(inst, args)
        report.update(verdicts=out.verdicts, witnesses=out.witnesses, result=out.result)
        code = 0 if all(out.verdicts.values()) else 1
        if args.emit is not None:
            if inst is None:
                raise SchemaError("--emit needs --input", witness="--emit")
            block = {"command": cmd.name, **(out.emitted or {})}
            args.emit.write_text(io.canonical_json(inst.with_emitted(block)), encoding="utf-8")
    except InputError as e:
        report["error"] = {"code": e.code, "message": str(e), "witness": e.witness}
        code = 2
    except LocalGpdError as e:
        report["error"] = {"code": e.code, "message": str(e), "witness": e.witness}
        report["verdicts"] = {**report["verdicts"], e.code: False}
        code = 1
    if not args.no_timing:
        report["timing_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    report["_format"] = args.format
    return code, report


def main(argv: list[str] | None = None) -> int:
    code, report = run(argv)
    fmt = report.pop("_format")
    text = _render_text(report) if fmt == "text" else json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
