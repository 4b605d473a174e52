"""JSON system files: a catalog group, subgroups, G-trees, named sets and tagged expectations.

A minimal file::

    {"schema": "aiset-forge/system@1", "name": "trivial", "group": {"kind": "trivial"}}

Words are strings in the group's generators ("a b^-1", "t^2 a").  Sets are
listed in order; later sets may refer to earlier ones.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .adapt import GroupSystem
from .aiset import Complement, CosetToggle, LinearHalfspace, TreeHalfspace, translate
from .gog import AscendingTree, BassSerreTree, FundamentalGroup, GEdge, GraphOfGroups, Injection, LineTree, \
    baumslag_solitar
from .groups import CyclicGroup, DirectProduct, FreeAbelianGroup, FreeGroup, FreeProduct, GroupError, \
    TrivialGroup, UnsupportedGroup
from .subgroups import ConjugateSubgroup, ExponentKernel, FreeFactorSubgroup, GuirardelSubgroup, \
    IntersectionSubgroup, LatticeSubgroup, StallingsSubgroup, TrivialSubgroup, WholeGroup

SCHEMA_ID = "aiset-forge/system@1"
PROVENANCE_TAGS = ("PAPER", "TRIVIAL", "DERIVED")

_word = {"type": "string"}
_group_ref = {"$ref": "#/$defs/group"}

SCHEMA = {
    "type": "object",
    "required": ["schema", "name", "group"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "group": _group_ref,
        "subgroups": {"type": "object", "additionalProperties": {"$ref": "#/$defs/subgroup"}},
        "trees": {"type": "object", "additionalProperties": {"$ref": "#/$defs/tree"}},
        "sets": {"type": "object", "additionalProperties": {"$ref": "#/$defs/set"}},
        "family": {"type": "array", "items": {"type": "string"}},
        "relative_generators": {"type": "array", "items": _word},
        "budgets": {"$ref": "#/$defs/budgets"},
        "expectations": {"type": "array", "items": {"$ref": "#/$defs/expectation"}},
    },
    "$defs": {
        "budgets": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "integer", "minimum": 0}
                           for k in ("radius", "budget", "cap", "n")},
        },
        "group": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["trivial", "free", "free-abelian", "finite-cyclic", "free-product",
                                  "direct-product", "baumslag-solitar", "graph-of-groups"]},
                "name": {"type": "string"},
                "generators": {"type": "array", "items": {"type": "string"}},
                "generator": {"type": "string"},
                "order": {"type": "integer", "minimum": 1},
                "factors": {"type": "array", "items": _group_ref},
                "m": {"type": "integer"}, "n": {"type": "integer"},
                "vertices": {"type": "object", "additionalProperties": _group_ref},
                "edges": {"type": "array", "items": {
                    "type": "object", "required": ["name", "source", "target", "group", "alpha", "omega"],
                    "properties": {"name": {"type": "string"}, "source": {"type": "string"},
                                   "target": {"type": "string"}, "group": _group_ref,
                                   "alpha": {"type": "array", "items": _word},
                                   "omega": {"type": "array", "items": _word}}}},
                "base": {"type": "string"},
            },
            "allOf": [
                {"if": {"properties": {"kind": {"enum": ["free", "free-abelian"]}}},
                 "then": {"required": ["generators"]}},
                {"if": {"properties": {"kind": {"const": "finite-cyclic"}}},
                 "then": {"required": ["generator", "order"]}},
                {"if": {"properties": {"kind": {"enum": ["free-product", "direct-product"]}}},
                 "then": {"required": ["factors"]}},
                {"if": {"properties": {"kind": {"const": "baumslag-solitar"}}}, "then": {"required": ["m", "n"]}},
                {"if": {"properties": {"kind": {"const": "graph-of-groups"}}},
                 "then": {"required": ["vertices", "edges"]}},
            ],
        },
        "subgroup": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["trivial", "whole", "exponent-kernel", "lattice", "free-factor", "generated",
                                  "guirardel", "conjugate", "intersection", "vertex-stabilizer"]},
                "weights": {"type": "object", "additionalProperties": {"type": "integer"}},
                "vectors": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "generators": {"type": "array", "items": _word},
                "a": {"type": "string"}, "b": {"type": "string"},
                "base": {"type": "string"}, "by": _word,
                "of": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
                "tree": {"type": "string"}, "vertex": {},
            },
        },
        "tree": {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": ["bass-serre", "line", "ascending"]},
                           "weights": {"type": "object", "additionalProperties": {"type": "integer"}},
                           "subgroup": {"type": "string"}},
        },
        "set": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["tree-halfspace", "linear", "translate", "complement", "coset-toggle"]},
                "tree": {"type": "string"}, "edge": {}, "side": {"enum": ["source", "target"]}, "base": {},
                "stabilizer": {"type": "string"},
                "functional": {"type": "array", "items": {"type": "integer"}},
                "threshold": {"type": "integer"},
                "of": {"type": "string"}, "by": _word,
                "cosets": {"type": "array", "items": _word},
                "description": {"type": "string"},
            },
        },
        "expectation": {
            "type": "object", "required": ["command", "expect", "provenance"],
            "additionalProperties": False,
            "properties": {
                "id": {"type": "string"},
                "command": {"type": "string"},
                "args": {"type": "array", "items": {"type": "string"}},
                "budgets": {"$ref": "#/$defs/budgets"},
                "options": {"type": "object"},
                "expect": {"type": "object"},
                "golden": {"type": "string"},
                "provenance": {"enum": list(PROVENANCE_TAGS)},
                "source": {"type": "string"},
            },
        },
    },
}


class SchemaError(GroupError):
    """The file does not match the system schema; ``location`` is a JSON path."""

    def __init__(self, message, location="$"):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass
class System:
    name: str
    group: object
    subgroups: dict = field(default_factory=dict)
    trees: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    family: list = field(default_factory=list)
    budgets: dict = field(default_factory=dict)
    expectations: list = field(default_factory=list)
    path: Path | None = None
    raw: dict = field(default_factory=dict)

    def group_system(self) -> GroupSystem:
        rel = [self.group.parse(w) for w in self.raw.get("relative_generators", [])]
        return GroupSystem(self.group, [self.subgroups[n] for n in self.family], rel, self.name)

    def select(self, names) -> list:
        if not names:
            return list(self.sets.values())
        out = []
        for n in names:
            if n not in self.sets:
                raise SchemaError(f"unknown set {n!r}; declared: {sorted(self.sets)}", "$.sets")
            out.append(self.sets[n])
        return out

    def subgroup(self, name):
        if name not in self.subgroups:
            raise SchemaError(f"unknown subgroup {name!r}; declared: {sorted(self.subgroups)}", "$.subgroups")
        return self.subgroups[name]


def _loc(path) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path)


def validate(data: dict) -> None:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise SchemaError(e.message, _loc(e.absolute_path))


def build_group(spec: dict, where: str = "$.group"):
    kind = spec["kind"]
    name = spec.get("name")
    try:
        if kind == "trivial":
            return TrivialGroup(name or "1")
        if kind == "free":
            return FreeGroup(name or "F", spec["generators"])
        if kind == "free-abelian":
            return FreeAbelianGroup(name or "Z^n", spec["generators"])
        if kind == "finite-cyclic":
            return CyclicGroup(name or "C", spec["generator"], spec["order"])
        if kind in ("free-product", "direct-product"):
            factors = [build_group(f, f"{where}.factors[{i}]") for i, f in enumerate(spec["factors"])]
            cls = FreeProduct if kind == "free-product" else DirectProduct
            return cls(name or ("*" if kind == "free-product" else "x").join(f.name for f in factors), factors)
        if kind == "baumslag-solitar":
            return baumslag_solitar(spec["m"], spec["n"], name)
        vertices = {v: build_group(g, f"{where}.vertices.{v}") for v, g in spec["vertices"].items()}
        edges = []
        for i, e in enumerate(spec["edges"]):
            for end in ("source", "target"):
                if e[end] not in vertices:
                    raise SchemaError(f"unknown vertex {e[end]!r}", f"{where}.edges[{i}].{end}")
            C = build_group(e["group"], f"{where}.edges[{i}].group")
            A, B = vertices[e["source"]], vertices[e["target"]]
            alpha = Injection(C, A, [A.parse(w) for w in e["alpha"]])
            omega = Injection(C, B, [B.parse(w) for w in e["omega"]])
            edges.append(GEdge(e["name"], e["source"], e["target"], C, alpha, omega))
        gog = GraphOfGroups(name or "pi1", vertices, edges, spec.get("base"))
        problems = gog.check()
        if problems:
            raise SchemaError("; ".join(problems), where)
        return FundamentalGroup(gog)
    except SchemaError:
        raise
    except UnsupportedGroup as exc:
        raise SchemaError(f"unsupported group: {exc}", where) from exc
    except GroupError as exc:
        raise SchemaError(str(exc), where) from exc


def _build_subgroup(sys: System, name: str, spec: dict, where: str):
    G = sys.group
    kind = spec["kind"]
    if kind == "trivial":
        return TrivialSubgroup(G, name)
    if kind == "whole":
        return WholeGroup(G, name)
    if kind == "exponent-kernel":
        return ExponentKernel(G, name, spec["weights"])
    if kind == "lattice":
        return LatticeSubgroup(G, name, spec["vectors"])
    if kind == "free-factor":
        return FreeFactorSubgroup(G, name, spec["generators"])
    if kind == "generated":
        words = [G.parse(w) for w in spec["generators"]]
        if isinstance(G, FreeGroup):
            return StallingsSubgroup(G, name, words)
        if isinstance(G, FreeAbelianGroup):
            return LatticeSubgroup(G, name, [G.vector(w) for w in words])
        raise SchemaError(f"no generated-subgroup oracle for {G.kind} groups", where)
    if kind == "guirardel":
        return GuirardelSubgroup(G, name, spec.get("a", "a"), spec.get("b", "b"))
    if kind == "conjugate":
        return ConjugateSubgroup(sys.subgroup(spec["base"]), G.parse(spec["by"]), name)
    if kind == "intersection":
        a, b = spec["of"]
        return IntersectionSubgroup(sys.subgroup(a), sys.subgroup(b), name)
    T = _tree(sys, spec.get("tree"), where)
    S = T.vertex_stabilizer(_vertex(sys, T, spec.get("vertex"), where), name)
    if "generators" in spec:
        # declared generators of a subgroup of the stabilizer (used by fixed-vertex searches)
        S.generators = [G.parse(w) for w in spec["generators"]]
    return S


def _tree(sys: System, name, where):
    if name not in sys.trees:
        raise SchemaError(f"unknown tree {name!r}", where)
    return sys.trees[name]


def _build_tree(sys: System, spec: dict, where: str):
    G = sys.group
    kind = spec["kind"]
    if kind == "bass-serre":
        if not isinstance(G, FundamentalGroup):
            raise SchemaError("a Bass-Serre tree needs a graph-of-groups (or BS) group", where)
        return BassSerreTree(G)
    if kind == "line":
        return LineTree(G, spec.get("weights", {}))
    H = sys.subgroup(spec.get("subgroup"))
    if not isinstance(H, GuirardelSubgroup):
        raise SchemaError("the ascending tree needs a guirardel subgroup", where)
    return AscendingTree(G, H)


def _vertex(sys: System, T, v, where):
    if isinstance(T, LineTree):
        if not isinstance(v, int):
            raise SchemaError("line-tree vertices are integers", where)
        return v
    if isinstance(T, AscendingTree):
        return sys.group.parse(v if v is not None else "1")
    u, _, tau = (v or "1").partition("@")
    return T.vertex(sys.group.parse(u), tau or None)


def _build_set(sys: System, name: str, spec: dict, where: str):
    G = sys.group
    kind = spec["kind"]
    stab = sys.subgroup(spec["stabilizer"]) if "stabilizer" in spec else None
    if kind == "tree-halfspace":
        T = _tree(sys, spec.get("tree"), where)
        edge = spec.get("edge")
        if isinstance(T, BassSerreTree):
            if not isinstance(edge, str):
                raise SchemaError("Bass-Serre halfspaces name a graph-of-groups edge", f"{where}.edge")
            o, t = T.edge(edge)
            if spec.get("side", "target") == "source":
                o, t = t, o
            w = o if spec.get("base", "tail") == "tail" else t
        else:
            if not (isinstance(edge, list) and len(edge) == 2):
                raise SchemaError("edge must be a pair of vertices", f"{where}.edge")
            o, t = (_vertex(sys, T, x, where) for x in edge)
            w = _vertex(sys, T, spec.get("base", edge[0]), where)
        return TreeHalfspace(T, o, t, w, name=name, stabilizer=stab)
    if kind == "linear":
        if not isinstance(G, FreeAbelianGroup):
            raise SchemaError("linear halfspaces need a free abelian group", where)
        return LinearHalfspace(G, spec["functional"], spec.get("threshold", 0), name, stab)
    base = sys.sets.get(spec.get("of"))
    if base is None:
        raise SchemaError(f"unknown set {spec.get('of')!r} (sets may only refer to earlier ones)", f"{where}.of")
    if kind == "translate":
        X = copy.copy(translate(base, G.parse(spec["by"])))
    elif kind == "complement":
        X = Complement(base)
    else:
        X = CosetToggle(base, [G.parse(w) for w in spec.get("cosets", [])], name)
    X.name = name
    return X


def parse_system_data(data: dict, path: Path | None = None) -> System:
    validate(data)
    G = build_group(data["group"])
    sys = System(data["name"], G, budgets=dict(data.get("budgets", {})),
                 expectations=list(data.get("expectations", [])), path=path, raw=data)
    trees = data.get("trees", {})
    # ascending trees need a subgroup, vertex stabilizers need a tree
    plain = {n: t for n, t in trees.items() if t["kind"] != "ascending"}
    later = {n: t for n, t in trees.items() if t["kind"] == "ascending"}
    order = (("trees", plain), ("subgroups", data.get("subgroups", {})), ("trees", later),
             ("sets", data.get("sets", {})))
    for section, specs in order:
        builder = _build_subgroup if section == "subgroups" else _build_set
        for name, spec in specs.items():
            where = f"$.{section}.{name}"
            try:
                if section == "trees":
                    sys.trees[name] = _build_tree(sys, spec, where)
                else:
                    getattr(sys, section)[name] = builder(sys, name, spec, where)
            except SchemaError:
                raise
            except (GroupError, KeyError, ValueError) as exc:
                raise SchemaError(str(exc), where) from exc
    sys.family = list(data.get("family", []))
    for n in sys.family:
        sys.subgroup(n)
    for i, e in enumerate(sys.expectations):
        if e.get("provenance") not in PROVENANCE_TAGS:
            raise SchemaError("expectation without a provenance tag", f"$.expectations[{i}]")
    return sys


def parse_system(path) -> System:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return parse_system_data(data, path)


def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    q = fixtures_dir() / (name if name.endswith(".json") else name + ".json")
    if q.exists():
        return q
    raise FileNotFoundError(name)


def load_fixture(name: str) -> System:
    return parse_system(fixture_path(name))
