"""Instance files: a single versioned JSON document with optional fragments.

Open sets are written as canonical keys ``"[a,b]"`` (points in space order)
inside presheaf tables and as plain id lists elsewhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import ParseError, SchemaError, UnknownPoint
from .fintop import FinSpace, bits, validate_space
from .groupoid import FinGroupoid, validate_groupoid
from .localsub import LocalSubgroupoid, validate_atlas
from .presheaf import EtaleSheaf, Presheaf, etale_from_tables

SCHEMA_VERSION = 1
FRAGMENTS = ("space", "presheaf", "sheaf", "groupoid", "atlas", "subgroupoid", "locally_top", "action")
ALLOWED = {"version", "name", "description", "emitted", *FRAGMENTS}


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_text(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}: {e.msg}", witness={"line": e.lineno}) from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", witness="$")
    return doc


def load(path: str | Path) -> "Instance":
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}", witness={"line": 0}) from None
    return Instance(parse_text(text))


def _expect(cond: bool, path: str, what: str) -> None:
    if not cond:
        raise SchemaError(f"{path}: {what}", witness=path)


def _str_list(v: Any, path: str) -> list[str]:
    _expect(isinstance(v, list) and all(isinstance(x, str) for x in v), path, "expected a list of strings")
    return list(v)


def open_key(space: FinSpace, mask: int) -> str:
    return "[" + ",".join(space.ids(mask)) + "]"


def parse_open_key(space: FinSpace, key: str, path: str) -> int:
    _expect(key.startswith("[") and key.endswith("]"), path, f"bad open key {key!r}")
    body = key[1:-1].strip()
    ids = [p.strip() for p in body.split(",")] if body else []
    return space.mask(ids)


# -- fragments: parsing ---------------------------------------------------------


def parse_space(d: Any) -> FinSpace:
    _expect(isinstance(d, dict), "$.space", "expected an object")
    pts = _str_list(d.get("points"), "$.space.points")
    opens = d.get("opens")
    _expect(isinstance(opens, list), "$.space.opens", "expected a list")
    return validate_space(pts, [_str_list(o, f"$.space.opens[{i}]") for i, o in enumerate(opens)])


def parse_presheaf(space: FinSpace, d: Any) -> Presheaf:
    _expect(isinstance(d, dict), "$.presheaf", "expected an object")
    sets_raw = d.get("sets")
    _expect(isinstance(sets_raw, dict), "$.presheaf.sets", "expected an object")
    sets = {}
    for k, v in sets_raw.items():
        u = parse_open_key(space, k, f"$.presheaf.sets[{k!r}]")
        _expect(u not in sets, f"$.presheaf.sets[{k!r}]", "open listed twice")
        sets[u] = _str_list(v, f"$.presheaf.sets[{k!r}]")
    maps = {}
    restr = d.get("restr", [])
    _expect(isinstance(restr, list), "$.presheaf.restr", "expected a list")
    for i, r in enumerate(restr):
        p = f"$.presheaf.restr[{i}]"
        _expect(isinstance(r, dict) and {"from", "to", "map"} <= set(r), p, "needs from, to and map")
        _expect(isinstance(r["map"], dict), p + ".map", "expected an object")
        key = (parse_open_key(space, r["from"], p + ".from"), parse_open_key(space, r["to"], p + ".to"))
        _expect(key not in maps, p, "restriction listed twice")
        maps[key] = dict(r["map"])
    return Presheaf.from_tables(space, sets, maps)


def parse_sheaf(space: FinSpace, d: Any) -> EtaleSheaf:
    _expect(isinstance(d, dict) and isinstance(d.get("germs"), list), "$.sheaf.germs", "expected a list")
    rows = d["germs"]
    ids = []
    germs = []
    for i, r in enumerate(rows):
        p = f"$.sheaf.germs[{i}]"
        _expect(isinstance(r, dict) and {"id", "point", "elem", "nbhd"} <= set(r), p,
                "needs id, point, elem and nbhd")
        if r["point"] not in space.points:
            raise UnknownPoint(f"unknown point {r['point']!r}", witness=r["point"])
        ids.append(r["id"])
        germs.append((r["point"], r["elem"]))
    _expect(len(set(ids)) == len(ids), "$.sheaf.germs", "duplicate germ id")
    pos = {g: i for i, g in enumerate(ids)}
    nbhd = {}
    for i, r in enumerate(rows):
        m = 0
        for g in _str_list(r["nbhd"], f"$.sheaf.germs[{i}].nbhd"):
            _expect(g in pos, f"$.sheaf.germs[{i}].nbhd", f"unknown germ {g!r}")
            m |= 1 << pos[g]
        nbhd[i] = m
    FinSpace.from_min_nbhds(ids, [nbhd[i] for i in range(len(ids))])
    return etale_from_tables(space, germs, nbhd, ids=ids)


def parse_groupoid(space: FinSpace | None, d: Any) -> FinGroupoid:
    _expect(isinstance(d, dict), "$.groupoid", "expected an object")
    arrows = d.get("arrows")
    _expect(isinstance(arrows, list), "$.groupoid.arrows", "expected a list")
    triples = []
    for i, a in enumerate(arrows):
        _expect(isinstance(a, dict) and {"id", "src", "tgt"} <= set(a), f"$.groupoid.arrows[{i}]",
                "needs id, src and tgt")
        triples.append((a["id"], a["src"], a["tgt"]))
    compose = d.get("compose")
    _expect(isinstance(compose, list) and all(isinstance(c, list) and len(c) == 3 for c in compose),
            "$.groupoid.compose", "expected a list of [f, g, fg] triples")
    _expect(isinstance(d.get("identities"), dict), "$.groupoid.identities", "expected an object")
    _expect(isinstance(d.get("inverses"), dict), "$.groupoid.inverses", "expected an object")
    objects = d.get("objects")
    if objects is None:
        _expect(space is not None, "$.groupoid.objects", "objects needed when there is no space")
        assert space is not None
        objects = list(space.points)
    objects = _str_list(objects, "$.groupoid.objects")
    opens = d.get("arrow_opens")
    if opens is not None:
        opens = [_str_list(o, f"$.groupoid.arrow_opens[{i}]") for i, o in enumerate(opens)]
    return validate_groupoid(objects, triples, [tuple(c) for c in compose], d["identities"],
                             d["inverses"], object_space=space, arrow_opens=opens)


def parse_atlas(g: FinGroupoid, d: Any) -> LocalSubgroupoid:
    _expect(isinstance(d, list), "$.atlas", "expected a list of charts")
    sp = g.object_space
    _expect(sp is not None, "$.atlas", "an atlas needs a space")
    assert sp is not None
    charts = []
    for i, c in enumerate(d):
        p = f"$.atlas[{i}]"
        _expect(isinstance(c, dict) and {"open", "arrows"} <= set(c), p, "needs open and arrows")
        charts.append((sp.mask(_str_list(c["open"], p + ".open")),
                       g.mask_of(_str_list(c["arrows"], p + ".arrows"))))
    return validate_atlas(g, charts)


# -- fragments: emission ------------------------------------------------------


def space_fragment(sp: FinSpace) -> dict:
    return {"points": list(sp.points), "opens": [sp.ids(u) for u in sp.opens]}


def presheaf_fragment(p: Presheaf) -> dict:
    sp = p.base
    sets = {open_key(sp, u): list(p.elems[u]) for u in sp.opens}
    restr = []
    for u in sp.opens:
        for v in sp.opens_within(u):
            if u == v:
                continue
            row = p.restr[(u, v)]
            restr.append({"from": open_key(sp, u), "to": open_key(sp, v),
                          "map": {e: p.elems[v][row[i]] for i, e in enumerate(p.elems[u])}})
    return {"sets": sets, "restr": restr}


def sheaf_fragment(e: EtaleSheaf) -> dict:
    return {"germs": [
        {"id": e.germ_id(k), "point": g.point, "elem": g.elem,
         "nbhd": [e.germ_id(j) for j in bits(e.total.mn[k])]}
        for k, g in enumerate(e.germs)
    ]}


def groupoid_fragment(g: FinGroupoid, with_objects: bool = False) -> dict:
    out: dict = {
        "arrows": [{"id": a, "src": g.objects[g.src[i]], "tgt": g.objects[g.tgt[i]]}
                   for i, a in enumerate(g.arrows)],
        "compose": [[g.arrows[f], g.arrows[h], g.arrows[fh]] for (f, h), fh in sorted(g.comp.items())],
        "identities": {x: g.arrows[g.ident[i]] for i, x in enumerate(g.objects)},
        "inverses": {a: g.arrows[g.inv[i]] for i, a in enumerate(g.arrows)},
    }
    if with_objects:
        out["objects"] = list(g.objects)
    if g.arrow_space is not None:
        out["arrow_opens"] = [g.arrow_space.ids(u) for u in g.arrow_space.opens]
    return out


def atlas_fragment(s: LocalSubgroupoid) -> list[dict]:
    return s.chart_names()


# -- the instance -------------------------------------------------------------


@dataclass
class Instance:
    doc: dict
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        unknown = sorted(set(self.doc) - ALLOWED)
        if unknown:
            raise SchemaError(f"unknown top-level key {unknown[0]!r}", witness=f"$.{unknown[0]}")
        v = self.doc.get("version")
        if v != SCHEMA_VERSION:
            raise SchemaError(f"version must be {SCHEMA_VERSION}", witness="$.version")

    def has(self, key: str) -> bool:
        return key in self.doc

    def require(self, key: str) -> Any:
        if key not in self.doc:
            raise SchemaError(f"this command needs a {key!r} fragment", witness=f"$.{key}")
        return self.doc[key]

    @cached_property
    def space(self) -> FinSpace:
        return parse_space(self.require("space"))

    @cached_property
    def presheaf(self) -> Presheaf:
        return parse_presheaf(self.space, self.require("presheaf"))

    @cached_property
    def sheaf(self) -> EtaleSheaf:
        from .presheaf import sheafify

        if self.has("sheaf"):
            return parse_sheaf(self.space, self.doc["sheaf"])
        return sheafify(self.presheaf)

    @cached_property
    def groupoid(self) -> FinGroupoid:
        return parse_groupoid(self.space if self.has("space") else None, self.require("groupoid"))

    @cached_property
    def atlas(self) -> LocalSubgroupoid:
        return parse_atlas(self.groupoid, self.require("atlas"))

    def arrow_set(self, key: str, sub: str | None = None) -> int:
        d = self.require(key)
        path = f"$.{key}"
        if sub is not None:
            _expect(isinstance(d, dict) and sub in d, path, f"needs {sub!r}")
            d, path = d[sub], f"{path}.{sub}"
        if isinstance(d, dict):
            d, path = d.get("arrows"), path + ".arrows"
        return self.groupoid.mask_of(_str_list(d, path))

    @property
    def fragments(self) -> dict:
        return {k: v for k, v in self.doc.items() if k != "emitted"}

    @property
    def digest(self) -> str:
        return "sha256:" + hashlib.sha256(canonical_json(self.fragments).encode()).hexdigest()

    def with_emitted(self, block: Mapping[str, Any]) -> dict:
        return {**self.fragments, "emitted": dict(block)}


def instance_doc(**fragments: Any) -> dict:
    return {"version": SCHEMA_VERSION, **{k: v for k, v in fragments.items() if v is not None}}


def names_of(sp: FinSpace, masks: Sequence[int]) -> list[list[str]]:
    return [sp.ids(m) for m in masks]
