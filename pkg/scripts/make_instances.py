"""Regenerate the instance files under instances/."""

from __future__ import annotations

from pathlib import Path

from localgpd import io
from localgpd.fintop import discrete, indiscrete, sierpinski, validate_space
from localgpd.groupoid import equivalence_mask, pair_groupoid
from localgpd.gsheaf import constant_action
from localgpd.presheaf import constant_presheaf, equivalence_presheaf, sheafify

OUT = Path(__file__).resolve().parent.parent / "instances"


def full_chart(g, sp, ids):
    u = sp.mask(ids)
    return {"open": list(ids), "arrows": g.names(g.full_mask(u))}


def main() -> None:
    docs = {}

    x3 = discrete(["1", "2", "3"])
    docs["e_noglue"] = io.instance_doc(
        name="e_noglue", description="equivalence relations on a 3-point discrete space",
        space=io.space_fragment(x3), presheaf=io.presheaf_fragment(equivalence_presheaf(x3)))

    ab = validate_space(["1", "2", "3"], [[], ["2"], ["1", "2"], ["2", "3"], ["1", "2", "3"]])
    g = pair_groupoid(ab)
    docs["two_full_charts"] = io.instance_doc(
        name="two_full_charts", description="two overlapping full charts on the pair groupoid",
        space=io.space_fragment(ab), groupoid=io.groupoid_fragment(g),
        atlas=[full_chart(g, ab, ["1", "2"]), full_chart(g, ab, ["2", "3"])])

    sier = sierpinski()
    g = pair_groupoid(sier)
    docs["diagonal_holonomy"] = io.instance_doc(
        name="diagonal_holonomy", description="diagonal atlas on the Sierpinski pair groupoid",
        space=io.space_fragment(sier), groupoid=io.groupoid_fragment(g),
        atlas=[{"open": ["a", "b"], "arrows": g.names(g.identities)}])

    ind = indiscrete(["1", "2"])
    g = pair_groupoid(ind)
    f = sheafify(constant_presheaf(ind, ["0", "1"]))
    act = constant_action(g, f)
    docs["constant_action"] = io.instance_doc(
        name="constant_action", description="label transport on a constant sheaf over an indiscrete pair",
        space=io.space_fragment(ind), groupoid=io.groupoid_fragment(g),
        sheaf=io.sheaf_fragment(f),
        atlas=[full_chart(g, ind, ["1", "2"])], action=act.to_json())

    g = pair_groupoid(x3)
    rel = equivalence_mask(g, x3, [["1", "2"], ["3"]])
    docs["equiv_blocks"] = io.instance_doc(
        name="equiv_blocks", description="one chart carrying the relation {1,2},{3} on a discrete space",
        space=io.space_fragment(x3), groupoid=io.groupoid_fragment(g),
        atlas=[{"open": ["1", "2", "3"], "arrows": g.names(rel)}])

    OUT.mkdir(exist_ok=True)
    for name, doc in docs.items():
        (OUT / f"{name}.json").write_text(io.canonical_json(doc), encoding="utf-8")


if __name__ == "__main__":
    main()
