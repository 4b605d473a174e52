"""Cross-connected components, pretrees of CCCs and algebraic regular neighbourhoods.

Walls are the translates gX, gX* of a finite family inside a translate budget.
Everything group-theoretic about the resulting tree (vertex stabilizers,
orbits, the quotient graph) is read off from how elements of a small ball
permute these walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from .aiset import (
    INCONCLUSIVE,
    NO,
    YES,
    AlmostInvariantSet,
    SizeClass,
    Verdict,
    classify,
    coset_counts,
    strict_enclosing_check,
    translate,
)
from .crossing import strength_of
from .cubing import Wallspace, build_complex, collect_walls
from .gog import GTree, baumslag_solitar
from .groups import GroupError


class NotRNReady(GroupError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NonDiscrete(GroupError):
    pass


# -- relations between walls -------------------------------------------------

def _leq_rule(c: SizeClass, others: Sequence[SizeClass]) -> str:
    if c == SizeClass.EMPTY:
        return YES
    if c == SizeClass.LARGE:
        return NO
    if c == SizeClass.INCONCLUSIVE:
        return INCONCLUSIVE
    if all(o == SizeClass.LARGE for o in others):
        return YES
    if any(o.finite for o in others):
        return NO
    return INCONCLUSIVE


class Relations:
    """Corner sizes of wall pairs, computed on demand.

    Halfspace h = 2p is A_p and h = 2p + 1 is A_p*.  Pairs with an empty
    corner on the ball are settled from masks alone.
    """

    def __init__(self, W: Wallspace):
        self.W = W
        self._sizes: dict = {}
        self._leq: dict = {}
        self.inconclusive: set = set()

    def sizes(self, p: int, q: int) -> dict:
        """Corner classes of (A_p, A_q) over Stab(A_q)."""
        key = (p, q)
        if key not in self._sizes:
            W = self.W
            ball = W.ball
            ids = W.walls[q].set.stabilizer.coset_ids(ball)
            mp, mq = W.masks[p], W.masks[q]
            out = {}
            for xs in (True, False):
                for ys in (True, False):
                    m = (mp if xs else ~mp) & (mq if ys else ~mq)
                    out[(xs, ys)] = classify(coset_counts(m, ids, ball.layer_ends))
            self._sizes[key] = out
        return self._sizes[key]

    def leq_value(self, h1: int, h2: int) -> str:
        if h1 == h2:
            return YES
        p, q = h1 >> 1, h2 >> 1
        if p == q:
            return NO
        W = self.W
        if W.disjoint[h1, h2 ^ 1]:
            return YES
        if W.nested(p, q):
            return NO
        key = (h1, h2)
        if key not in self._leq:
            u, v = (h1 & 1) == 0, (h2 & 1) == 0
            sz = self.sizes(p, q)
            c = sz[(u, not v)]
            val = _leq_rule(c, [s for k, s in sz.items() if k != (u, not v)])
            if val == INCONCLUSIVE:
                self.inconclusive.add(key)
            self._leq[key] = val
        return self._leq[key]

    def leq(self, h1: int, h2: int) -> bool:
        return self.leq_value(h1, h2) == YES

    def _cheap_order(self, p: int, q: int) -> tuple[int, int]:
        # prefer sizes over a stabilizer whose coset ids are already known
        W = self.W
        if (p, q) in self._sizes or W.walls[q].set.stabilizer.normal:
            return p, q
        if (q, p) in self._sizes or W.walls[p].set.stabilizer.normal:
            return q, p
        return p, q

    def cross_value(self, p: int, q: int) -> str:
        if p == q or self.W.nested(p, q):
            return NO
        a, b = self._cheap_order(p, q)
        sz = dict(self.sizes(a, b))
        if SizeClass.INCONCLUSIVE in sz.values():
            # a corner flat over one stabilizer may grow over the other
            other = self.sizes(b, a)
            for (xs, ys), c in sz.items():
                if c == SizeClass.INCONCLUSIVE:
                    sz[(xs, ys)] = other[(ys, xs)]
        sizes = list(sz.values())
        if all(s == SizeClass.LARGE for s in sizes):
            return YES
        if any(s.finite for s in sizes):
            return NO
        self.inconclusive.add(("cross", min(p, q), max(p, q)))
        return INCONCLUSIVE


# -- CCCs --------------------------------------------------------------------

@dataclass
class CCC:
    index: int
    walls: tuple
    kind: str  # isolated | all-strong | all-weak | mixed | inconclusive
    names: tuple
    strengths: dict = field(default_factory=dict)

    @property
    def isolated(self) -> bool:
        return self.kind == "isolated"

    @property
    def halfspaces(self) -> list:
        return [h for p in self.walls for h in (2 * p, 2 * p + 1)]

    def label(self) -> str:
        return "+".join(self.names)

    def to_dict(self, W: Wallspace) -> dict:
        return {"index": self.index, "kind": self.kind, "names": list(self.names),
                "walls": [W.walls[p].set.describe() for p in self.walls],
                "crossings": {f"{a}-{b}": s for (a, b), s in sorted(self.strengths.items())}}


def _names(W: Wallspace, walls) -> tuple:
    return tuple(sorted({W.family[W.walls[p].family].name for p in walls}))


def compute_cccs(W: Wallspace, rel: Relations | None = None, with_strength: bool = True) -> tuple[list, Relations]:
    rel = rel or Relations(W)
    n = len(W)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    undecided = []
    for p in range(n):
        for q in range(p + 1, n):
            v = rel.cross_value(p, q)
            if v == YES:
                g.add_edge(p, q)
            elif v == INCONCLUSIVE:
                undecided.append((p, q))
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])
    out = []
    for i, comp in enumerate(comps):
        strengths = {}
        if with_strength:
            for p, q in g.subgraph(comp).edges():
                A, B = W.walls[p].set, W.walls[q].set
                s1, s2 = strength_of(A, B, W.radius), strength_of(B, A, W.radius)
                strengths[(p, q)] = s1 if s1 == s2 else "mixed"
        if len(comp) == 1:
            kind = "isolated" if not any(p in comp for pq in undecided for p in pq) else INCONCLUSIVE
        else:
            kinds = set(strengths.values())
            if not with_strength:
                kind = INCONCLUSIVE
            elif kinds == {"strong"}:
                kind = "all-strong"
            elif kinds == {"weak"}:
                kind = "all-weak"
            elif kinds <= {"strong", "weak", INCONCLUSIVE} and len(kinds - {INCONCLUSIVE}) <= 1:
                kind = INCONCLUSIVE
            else:
                kind = "mixed"
        out.append(CCC(i, tuple(comp), kind, _names(W, comp), strengths))
    return out, rel


# -- betweenness and pretrees ------------------------------------------------

def betweenness(rel: Relations, x: CCC, y: CCC, z: CCC) -> Verdict:
    """Is y between x and z: X ≤ Y ≤ Z for some members (or complements)?"""
    W = rel.W
    if len({x.index, y.index, z.index}) < 3:
        return Verdict(NO, W.radius, True, evidence={"reason": "not distinct"})
    unsure = False
    for hy in y.halfspaces:
        below = [hx for hx in x.halfspaces if rel.leq_value(hx, hy) != NO]
        if not below:
            continue
        above = [hz for hz in z.halfspaces if rel.leq_value(hy, hz) != NO]
        for hx in below:
            for hz in above:
                a, b = rel.leq_value(hx, hy), rel.leq_value(hy, hz)
                if a == YES and b == YES:
                    return Verdict(YES, W.radius, True, witness=[_hname(W, h) for h in (hx, hy, hz)])
                unsure = True
    return Verdict(INCONCLUSIVE if unsure else NO, W.radius, not unsure)


def _hname(W: Wallspace, h: int) -> str:
    d = W.walls[h >> 1].set.describe()
    return d if h % 2 == 0 else f"({d})*"


@dataclass
class Pretree:
    labels: list
    between: np.ndarray  # between[x, y, z]: y lies between x and z

    def __len__(self) -> int:
        return len(self.labels)

    def adjacent(self, i: int, j: int) -> bool:
        return i != j and not self.between[i, :, j].any()

    def between_set(self, x: int, z: int) -> list:
        return [int(y) for y in np.flatnonzero(self.between[x, :, z])]


def between_tensor(rel: Relations, cccs: Sequence[CCC]) -> np.ndarray:
    n = len(cccs)
    hs = sorted({h for c in cccs for h in c.halfspaces})
    pos = {h: i for i, h in enumerate(hs)}
    L = np.zeros((len(hs), len(hs)), dtype=bool)
    for h1 in hs:
        for h2 in hs:
            L[pos[h1], pos[h2]] = rel.leq(h1, h2)
    idx = [np.array([pos[h] for h in c.halfspaces]) for c in cccs]
    B = np.zeros((n, n, n), dtype=bool)
    for y in range(n):
        Hy = idx[y]
        up = np.array([L[np.ix_(idx[x], Hy)].any(axis=0) for x in range(n)])  # x reaches hy
        down = np.array([L[np.ix_(Hy, idx[z])].any(axis=1) for z in range(n)])  # hy reaches z
        B[:, y, :] = (up[:, None, :] & down[None, :, :]).any(axis=2)
    for i in range(n):
        B[i, i, :] = False
        B[:, i, i] = False
        B[i, :, i] = False
    return B


def pretree_axioms(P: Pretree) -> dict:
    B = P.between
    n = len(P)
    lab = P.labels
    out = {}
    i = next((i for i in range(n) if B[i, :, i].any() or B[i, i, :].any() or B[:, i, i].any()), None)
    out["T0"] = {"pass": i is None, "witness": None if i is None else lab[i]}
    bad = np.argwhere(B != B.transpose(2, 1, 0))
    out["T1"] = {"pass": len(bad) == 0, "witness": None if not len(bad) else [lab[k] for k in bad[0]]}
    bad = np.argwhere(B & B.transpose(0, 2, 1))
    out["T2"] = {"pass": len(bad) == 0, "witness": None if not len(bad) else [lab[k] for k in bad[0]]}
    if n:
        E = B.transpose(1, 2, 0)  # E[y, z, w] = B[w, y, z]
        wy = ~np.eye(n, dtype=bool)  # [y, w]
        viol = B[:, :, :, None] & ~B[:, :, None, :] & ~E[None, :, :, :] & wy[None, :, None, :]
        bad = np.argwhere(viol)
    else:
        bad = []
    out["T3"] = {"pass": len(bad) == 0, "witness": None if not len(bad) else [lab[k] for k in bad[0]]}
    return out


def vertex_pretree(T: nx.Graph) -> Pretree:
    """Pretree of the vertices of a finite tree: y between x and z when y is inside their geodesic."""
    nodes = sorted(T.nodes())
    pos = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    B = np.zeros((n, n, n), dtype=bool)
    paths = dict(nx.all_pairs_shortest_path(T))
    for x in nodes:
        for z in nodes:
            for y in paths[x][z][1:-1]:
                B[pos[x], pos[y], pos[z]] = True
    return Pretree([str(v) for v in nodes], B)


def stars_of(P: Pretree) -> list:
    adj = nx.Graph()
    adj.add_nodes_from(range(len(P)))
    for i in range(len(P)):
        for j in range(i + 1, len(P)):
            if P.adjacent(i, j):
                adj.add_edge(i, j)
    return sorted((frozenset(c) for c in nx.find_cliques(adj) if len(c) >= 2), key=lambda s: sorted(s))


def star_construction(P: Pretree, discreteness: Verdict | None = None) -> nx.Graph:
    """Bipartite tree on P ∪ {stars}; x is joined to every star containing it."""
    if discreteness is not None and discreteness.no:
        raise NonDiscrete("the pretree is not discrete; no star tree exists")
    T = nx.Graph()
    for i, lab in enumerate(P.labels):
        T.add_node(("P", i), part="V0", label=lab)
    for k, s in enumerate(stars_of(P)):
        T.add_node(("S", k), part="V1", label="{" + ",".join(P.labels[i] for i in sorted(s)) + "}")
        for i in s:
            T.add_edge(("P", i), ("S", k))
    return T


# -- discreteness ------------------------------------------------------------

def _growing(counts: Sequence[int]) -> bool:
    return len(counts) >= 3 and counts[-3] < counts[-2] < counts[-1]


def _longest_chain(W: Wallspace, hs: Sequence[int]) -> list:
    """Longest chain of on-ball inclusions among the given halfspaces."""
    D = nx.DiGraph()
    D.add_nodes_from(hs)
    for a in hs:
        for b in hs:
            if a != b and W.disjoint[a, b ^ 1] and not W.disjoint[b, a ^ 1]:
                D.add_edge(a, b)
    return nx.dag_longest_path(D) if len(D) else []


def discreteness_probe(rel: Relations, cccs: Sequence[CCC], levels: Sequence[int], budget: int,
                       pairs: Sequence[tuple] | None = None) -> Verdict:
    """Between-counts of fixed pairs as the translate budget grows.

    levels[c] is the smallest translate length producing a wall of c.  A
    count that grows over the last three budgets refutes discreteness;
    otherwise the verdict stays inconclusive (leaning discrete).
    """
    W = rel.W
    if pairs is None:
        near = [c.index for c in cccs if levels[c.index] <= 1]
        pairs = [(a, b) for i, a in enumerate(near) for b in near[i + 1:]]
    counts = {}
    witness = None
    for a, b in pairs:
        between = []
        for c in cccs:
            if c.index in (a, b):
                continue
            if betweenness(rel, cccs[a], c, cccs[b]).yes:
                between.append(c.index)
        cs = [sum(1 for y in between if levels[y] <= k) for k in range(1, budget + 1)]
        counts[f"{cccs[a].label()}|{cccs[b].label()}"] = cs
        if _growing(cs) and witness is None:
            hs = []
            for y in between:
                v = betweenness(rel, cccs[a], cccs[y], cccs[b])
                hs.append(_which_half(W, cccs[y], v.witness[1]))
            chain = _longest_chain(W, hs)
            witness = {"pair": [cccs[a].label(), cccs[b].label()], "between": len(between),
                       "chain": [_hname(W, h) for h in chain], "chain_length": len(chain)}
    if witness is not None:
        return Verdict(NO, W.radius, True, witness=witness, evidence={"between_counts": counts, "budget": budget})
    return Verdict(INCONCLUSIVE, W.radius, False,
                   evidence={"between_counts": counts, "budget": budget, "lean": "discrete"})


def _which_half(W: Wallspace, c: CCC, name: str) -> int:
    for h in c.halfspaces:
        if _hname(W, h) == name:
            return h
    return c.halfspaces[0]


@dataclass
class PretreeReport:
    elements: list
    axioms: dict
    discreteness: Verdict
    budget: int
    radius: int
    axiom_budget: int
    axiom_radius: int = 0
    pretree: Pretree | None = None

    @property
    def axioms_pass(self) -> bool:
        return all(self.axioms[k]["pass"] for k in ("T0", "T1", "T2", "T3"))

    @property
    def non_discrete(self) -> bool:
        return self.discreteness.no

    def to_dict(self) -> dict:
        return {"elements": self.elements, "axioms": self.axioms, "discreteness": self.discreteness.to_dict(),
                "budget": self.budget, "radius": self.radius, "axiom_budget": self.axiom_budget,
                "axiom_radius": self.axiom_radius}


def _power_candidates(G, budget: int) -> list:
    """(g, level) for g = x^k, x a generator, |k| <= budget."""
    out = [((), 0)]
    for i in range(len(G.gens)):
        for k in range(1, budget + 1):
            for sgn in (1, -1):
                g = G.normalize((sgn * (i + 1),) * k)
                out.append((g, k))
    return out


def _wallspace_from(family, candidates, R) -> tuple[Wallspace, list]:
    G = family[0].ambient
    W = Wallspace(G, family, R)
    level: dict = {}
    for i, X in enumerate(family):
        for g, lev in candidates:
            key = W._coset_key(i, g)
            # same stabilizer coset: same set, no need to evaluate it again
            hit = W._cosets[key] if key in W._cosets else W.add(translate(X, g), g, i)
            p = len(W.walls) - 1 if hit is None else hit[0]
            level[p] = min(level.get(p, lev), lev)
    W.finalize()
    return W, [level[p] for p in range(len(W))]


def _undecided_between(rel: Relations, cccs: Sequence[CCC]) -> list:
    """Undecided relations between walls of different CCCs; the others cannot move the pretree."""
    comp = {p: c.index for c in cccs for p in c.walls}
    out = []
    for k in rel.inconclusive:
        p, q = (k[1], k[2]) if k[0] == "cross" else (k[0] >> 1, k[1] >> 1)
        if comp[p] != comp[q]:
            out.append(k)
    return out


def pretree_check(family: Sequence[AlmostInvariantSet], budget: int, R: int | None = None,
                  axiom_budget: int = 1, candidates: str = "powers") -> PretreeReport:
    """Pretree axioms on the CCCs at a small budget; discreteness probed up to ``budget``.

    ``candidates="powers"`` translates by powers of single generators only,
    ``"ball"`` by the whole ball.
    """
    if not family:
        empty = Pretree([], np.zeros((0, 0, 0), dtype=bool))
        return PretreeReport([], pretree_axioms(empty), Verdict(INCONCLUSIVE, 0, False), budget, 0, 0)
    G = family[0].ambient

    def cands(b):
        if candidates == "powers":
            return _power_candidates(G, b)
        B = G.ball(b)
        return list(zip(B.elements, map(int, B.layers())))

    R = R if R is not None else budget + 4
    W, levels = _wallspace_from(family, cands(budget), R)
    cccs, rel = compute_cccs(W, with_strength=False)
    clev = [min(levels[p] for p in c.walls) for c in cccs]
    base = []
    for X in family:
        p = W.lookup(X)[0]
        base.append(next(c.index for c in cccs if p in c.walls))
    base = sorted(set(base))
    pairs = [(a, b) for i, a in enumerate(base) for b in base[i + 1:]] or None
    disc = discreteness_probe(rel, cccs, clev, budget, pairs)

    ab = min(axiom_budget, budget)
    # relations between far-apart translates need larger balls: grow until all are
    # decided and the betweenness no longer changes from one radius to the next
    prev = None
    for ra in range(2 * ab + 4, 4 * ab + 9):
        Wa, _ = _wallspace_from(family, cands(ab), ra)
        ca, rela = compute_cccs(Wa, with_strength=False)
        P = Pretree([c.label() + f"#{c.index}" for c in ca], between_tensor(rela, ca))
        open_ = _undecided_between(rela, ca)
        if not open_ and prev is not None and np.array_equal(prev, P.between):
            break
        prev = None if open_ else P.between
    axioms = pretree_axioms(P)
    axioms["undecided_relations"] = len(open_)
    return PretreeReport([c.label() + f"#{c.index}" for c in cccs], axioms, disc, budget, R, ab, ra, P)


# -- bipartite graphs of groups ----------------------------------------------

class BipartiteGraphOfGroups:
    """Finite bipartite multigraph with V0/V1 parts and group labels on vertices and edges."""

    def __init__(self, name: str = "Gamma"):
        self.name = name
        self.graph = nx.MultiGraph()
        self.context = None
        self.provenance: dict = {}

    def add_vertex(self, vid: str, part: str, group: str, kind: str, name: str, isolated: bool = False,
                   fixers=None, inverter=None) -> None:
        self.graph.add_node(vid, part=part, group=group, kind=kind, name=name, isolated=bool(isolated),
                            fixers=frozenset(fixers or ()), inverter=inverter)

    def add_edge(self, u: str, v: str, group: str, fixers=None) -> None:
        self.graph.add_edge(u, v, group=group, fixers=frozenset(fixers or ()))

    def vertices(self, part: str | None = None) -> list:
        return sorted(v for v, d in self.graph.nodes(data=True) if part is None or d["part"] == part)

    @property
    def V0(self) -> list:
        return self.vertices("V0")

    @property
    def V1(self) -> list:
        return self.vertices("V1")

    def is_bipartite(self) -> bool:
        return all(self.graph.nodes[u]["part"] != self.graph.nodes[v]["part"] for u, v in self.graph.edges())

    def shape(self) -> str:
        g = self.graph
        n0, n1, ne = len(self.V0), len(self.V1), g.number_of_edges()
        simple = nx.Graph(g)
        if ne and nx.is_connected(simple) and ne == len(g) - 1 and max(d for _, d in g.degree()) <= 2:
            ends = [v for v, d in g.degree() if d == 1]
            path = nx.shortest_path(simple, *sorted(ends)) if len(ends) == 2 else []
            return "-".join(g.nodes[v]["part"] for v in path)
        if len(g) == 1 and ne == 0:
            return g.nodes[next(iter(g))]["part"]
        return f"V0:{n0} V1:{n1} E:{ne}"

    def copy(self) -> "BipartiteGraphOfGroups":
        out = BipartiteGraphOfGroups(self.name)
        out.graph = self.graph.copy()
        out.context = self.context
        out.provenance = dict(self.provenance)
        return out

    def to_dict(self) -> dict:
        g = self.graph
        verts = [{"id": v, "part": g.nodes[v]["part"], "group": g.nodes[v]["group"], "kind": g.nodes[v]["kind"],
                  "name": g.nodes[v]["name"], "isolated": g.nodes[v]["isolated"]} for v in sorted(g.nodes())]
        edges = sorted(({"u": min(u, v), "v": max(u, v), "group": d["group"]}
                        for u, v, d in g.edges(data=True)), key=lambda e: (e["u"], e["v"], e["group"]))
        return {"name": self.name, "shape": self.shape(), "vertices": verts, "edges": edges}

    @classmethod
    def from_dict(cls, d: dict) -> "BipartiteGraphOfGroups":
        out = cls(d.get("name", "Gamma"))
        for v in d["vertices"]:
            out.add_vertex(v["id"], v["part"], v["group"], v["kind"], v["name"], v["isolated"])
        for e in d["edges"]:
            out.add_edge(e["u"], e["v"], e["group"])
        return out

    def isomorphic(self, other: "BipartiteGraphOfGroups") -> bool:
        def nm(a, b):
            return all(a[k] == b[k] for k in ("part", "group", "kind", "name", "isolated"))

        def em(a, b):
            return sorted(d["group"] for d in a.values()) == sorted(d["group"] for d in b.values())

        return nx.is_isomorphic(self.graph, other.graph, node_match=nm, edge_match=em)


def describe_fixers(G, fixers: Sequence) -> tuple[str, list]:
    """Generators picked greedily in shortlex order, skipping elements already generated inside the set."""
    F = set(fixers)
    closure = {()}
    gens: list = []
    for f in fixers:
        if f in closure:
            continue
        gens.append(f)
        moves = [s for g in gens for s in (g, G.inv(g))]
        frontier = list(closure)
        while frontier:
            nxt = []
            for x in frontier:
                for s in moves:
                    y = G.mul(x, s)
                    if y in F and y not in closure:
                        closure.add(y)
                        nxt.append(y)
            frontier = nxt
    if not gens:
        return "1", []
    return "<" + ", ".join(G.format(g) for g in gens) + ">", gens


class _Action:
    """How a ball of group elements permutes the parts (CCCs or blocks) of a wallspace."""

    def __init__(self, W: Wallspace, parts: Sequence[Sequence[int]], fix_radius: int):
        self.W = W
        self.parts = [tuple(p) for p in parts]
        self.part_of = {p: i for i, part in enumerate(self.parts) for p in part}
        self.ball = W.group.ball(fix_radius).elements
        self._fix: dict = {}

    def move(self, g, e: int):
        hit = self.W.translate_wall(g, self.parts[e][0])
        return None if hit is None else self.part_of.get(hit[0])

    def move_set(self, g, S) -> frozenset | None:
        out = set()
        for e in S:
            m = self.move(g, e)
            if m is None:
                return None
            out.add(m)
        return frozenset(out)

    def fixers(self, e: int) -> list:
        if e not in self._fix:
            self._fix[e] = [k for k in self.ball if self.move(k, e) == e]
        return self._fix[e]

    def set_fixers(self, S, within=None) -> list:
        S = frozenset(S)
        pool = within if within is not None else self.ball
        return [k for k in pool if self.move_set(k, S) == S]

    def inverter(self, e: int):
        if len(self.parts[e]) != 1:
            return None
        p = self.parts[e][0]
        for k in self.fixers(e):
            if self.W.translate_wall(k, p) == (p, False):
                return k
        return None

    def find_translate(self, a: int, b: int):
        for g in self.ball:
            if self.move(g, a) == b:
                return g
        return None


@dataclass
class RNContext:
    W: Wallspace
    family: list
    parts: list
    stars: list
    action: _Action
    base: list  # base part per family member
    reps: list  # V0 orbit representatives
    subdivided: list
    translate_budget: int
    route: str


def _quotient(W: Wallspace, family, parts, stars, fix_radius: int, subdivide: bool, route: str,
              translate_budget: int) -> BipartiteGraphOfGroups:
    G = W.group
    act = _Action(W, parts, fix_radius)
    base = [act.part_of[W.lookup(X)[0]] for X in family]
    # V0 orbits among the base parts: rep index and g0 with g0.rep = base part
    reps: list = []
    to_rep: dict = {}
    for e in base:
        if e in to_rep:
            continue
        for r in reps:
            g0 = act.find_translate(r, e)
            if g0 is not None:
                to_rep[e] = (r, g0)
                break
        else:
            reps.append(e)
            to_rep[e] = (e, ())
    fam_rep = [to_rep[e] for e in base]
    # edge orbits at each rep
    edge_reps: list = []  # (r, star)

    def edge_index(r, S):
        for k, (r2, S2) in enumerate(edge_reps):
            if r2 != r:
                continue
            if S2 == S or any(act.move_set(k2, S) == S2 for k2 in act.fixers(r)):
                return k
        return None

    for r in reps:
        for S in stars:
            if r in S and edge_index(r, S) is None:
                edge_reps.append((r, S))
    uf = nx.utils.UnionFind(range(len(edge_reps)))
    unresolved = []
    for k, (r, S) in enumerate(edge_reps):
        for c in sorted(S):
            if c == r:
                continue
            for p in act.parts[c]:
                w = W.walls[p]
                r2, g0 = fam_rep[w.family]
                h = G.mul(w.g, g0)
                if act.move(h, r2) == c:
                    break
            else:
                unresolved.append((r, c))
                continue
            S2 = act.move_set(G.inv(h), S)
            k2 = edge_index(r2, S2) if S2 is not None else None
            if k2 is None:
                unresolved.append((r, c))
                continue
            uf.union(k, k2)
    classes: dict = {}
    for k in range(len(edge_reps)):
        classes.setdefault(uf[k], []).append(k)
    class_list = sorted(classes.values(), key=lambda ks: ks[0])

    gamma = BipartiteGraphOfGroups()
    vid = {}
    for i, r in enumerate(reps):
        fx = act.fixers(r)
        desc, _ = describe_fixers(G, fx)
        vid[r] = f"u{i}"
        gamma.add_vertex(vid[r], "V0", desc, "ccc", "+".join(_names(W, act.parts[r])),
                         isolated=len(act.parts[r]) == 1, fixers=fx, inverter=act.inverter(r))
    for j, ks in enumerate(class_list):
        r, S = edge_reps[ks[0]]
        fx = act.set_fixers(S)
        desc, _ = describe_fixers(G, fx)
        gamma.add_vertex(f"w{j}", "V1", desc, "star", "star", fixers=fx)
        for k in ks:
            r, S = edge_reps[k]
            efx = act.set_fixers(S, within=act.fixers(r))
            gamma.add_edge(vid[r], f"w{j}", describe_fixers(G, efx)[0], fixers=efx)
    subdivided = []
    if subdivide:
        m = 0
        for r in reps:
            node = gamma.graph.nodes[vid[r]]
            if not node["isolated"] or node["inverter"] is None:
                continue
            subdivided.append(r)
            node["part"] = "V1"
            for u, v, key, d in list(gamma.graph.edges(vid[r], keys=True, data=True)):
                other = v if u == vid[r] else u
                gamma.graph.remove_edge(u, v, key)
                mid = f"m{m}"
                m += 1
                gamma.add_vertex(mid, "V0", d["group"], "mid", f"mid({node['name']})", isolated=True,
                                 fixers=d["fixers"])
                gamma.add_edge(vid[r], mid, d["group"], fixers=d["fixers"])
                gamma.add_edge(mid, other, d["group"], fixers=d["fixers"])
    gamma.context = RNContext(W, list(family), [tuple(p) for p in parts], list(stars), act, base, reps,
                              subdivided, translate_budget, route)
    gamma.provenance = {"route": route, "translate_budget": translate_budget, "radius": W.radius,
                        "fix_radius": fix_radius, "walls": len(W), "parts": len(parts), "stars": len(stars),
                        "unresolved": len(unresolved)}
    return gamma


def _single_vertex(G) -> BipartiteGraphOfGroups:
    gamma = BipartiteGraphOfGroups()
    desc = "<" + ", ".join(G.gens) + ">" if G.gens else "1"
    gamma.add_vertex("u0", "V0", desc, "whole", "G")
    gamma.provenance = {"route": "empty-family"}
    return gamma


def rn_ready(W: Wallspace, rel: Relations, cccs: Sequence[CCC]) -> Verdict:
    """Isolated walls must be pairwise nested (some almost-inclusion between their sides)."""
    iso = [c.walls[0] for c in cccs if c.isolated]
    for i, p in enumerate(iso):
        for q in iso[i + 1:]:
            if W.nested(p, q):
                continue
            if any(rel.leq(2 * p + a, 2 * q + b) for a in (0, 1) for b in (0, 1)):
                continue
            return Verdict(NO, W.radius, True, witness=[W.walls[p].set.describe(), W.walls[q].set.describe()])
    return Verdict(YES, W.radius, False)


def _prepare(family, translate_budget, R):
    R = R if R is not None else 2 * translate_budget + 2
    W = collect_walls(family, translate_budget, R)
    return W, R


def build_regular_neighbourhood(family: Sequence[AlmostInvariantSet], translate_budget: int = 3,
                                R: int | None = None, fix_radius: int | None = None,
                                subdivide: bool = True) -> BipartiteGraphOfGroups:
    """Quotient of the star tree of the CCC pretree by the action on walls."""
    if not family:
        raise GroupError("an empty family needs its ambient group; use build_for_group")
    W, R = _prepare(family, translate_budget, R)
    cccs, rel = compute_cccs(W)
    ready = rn_ready(W, rel, cccs)
    if ready.no:
        raise NotRNReady("isolated elements are not nested", witness=ready.witness)
    levels = [min(len(W.walls[p].g) for p in c.walls) for c in cccs]
    disc = discreteness_probe(rel, cccs, levels, translate_budget)
    if disc.no:
        raise NonDiscrete(f"between-counts grow with the budget: {disc.witness}")
    P = Pretree([c.label() for c in cccs], between_tensor(rel, cccs))
    stars = stars_of(P)
    gamma = _quotient(W, family, [c.walls for c in cccs], stars, fix_radius or translate_budget, subdivide,
                      "pretree", translate_budget)
    gamma.provenance["discreteness"] = disc.to_dict()
    gamma.provenance["ccc_kinds"] = [c.kind for c in cccs]
    gamma.provenance["axioms"] = pretree_axioms(P)
    return gamma


def build_for_group(G, family: Sequence[AlmostInvariantSet], **kw) -> BipartiteGraphOfGroups:
    """build_regular_neighbourhood that also accepts an empty family (one vertex carrying G)."""
    if not family:
        return _single_vertex(G)
    return build_regular_neighbourhood(family, **kw)


def rn_via_cubing(family: Sequence[AlmostInvariantSet], translate_budget: int = 3, R: int | None = None,
                  fix_radius: int | None = None, subdivide: bool = True,
                  check_position: bool = True) -> BipartiteGraphOfGroups:
    """Blocks of the cubing (after cutting at separating vertices) and the separating vertices."""
    W, R = _prepare(family, translate_budget, R)
    if check_position:
        from .crossing import position_check
        pos = position_check(family, R, translate_budget)
        if pos.value not in ("very-good", INCONCLUSIVE):
            from .crossing import BadPositionError
            raise BadPositionError(f"family is in {pos.value} position", witness=pos.witness)
    C = build_complex(W)
    parts, stars = cubing_parts(C)
    gamma = _quotient(W, family, parts, stars, fix_radius or translate_budget, subdivide, "cubing",
                      translate_budget)
    gamma.provenance["complex"] = {"vertices": len(C.vertices), "edges": len(C.edges)}
    return gamma


def cubing_parts(C) -> tuple[list, list]:
    """Wall sets of the blocks of the 1-skeleton, and the block sets meeting at each cut vertex."""
    g = C.graph()
    blocks = []
    for comp in nx.biconnected_component_edges(g):
        walls = sorted({g.edges[u, v]["wall"] for u, v in comp})
        blocks.append((walls, {x for e in comp for x in e}))
    blocks.sort(key=lambda b: b[0][0])
    parts = [tuple(b[0]) for b in blocks]
    stars = set()
    for x in nx.articulation_points(g):
        S = frozenset(i for i, b in enumerate(blocks) if x in b[1])
        if len(S) >= 2:
            stars.add(S)
    return parts, sorted(stars, key=lambda s: sorted(s))


def reduce(gamma: BipartiteGraphOfGroups) -> BipartiteGraphOfGroups:
    """Collapse a-v-w-b to a-b while adjacent isolated v, w each have exactly two distinct neighbours."""
    out = gamma.copy()
    g = out.graph
    changed = True
    while changed:
        changed = False
        for v, w in sorted({tuple(sorted((a, b))) for a, b in g.edges()}):
            if v == w or not (g.nodes[v]["isolated"] and g.nodes[w]["isolated"]):
                continue
            nv, nw = set(g[v]), set(g[w])
            if len(nv) != 2 or len(nw) != 2 or g.number_of_edges(v, w) != 1:
                continue
            if g.degree(v) != 2 or g.degree(w) != 2:
                continue
            (a,) = nv - {w}
            (b,) = nw - {v}
            d = next(iter(g.get_edge_data(v, w).values()))
            g.remove_nodes_from([v, w])
            out.add_edge(a, b, d["group"], fixers=d["fixers"])
            changed = True
            break
    return out


# -- verification ------------------------------------------------------------

class _FiniteTree(GTree):
    """A finite tree with a map phi: G-ball -> vertices standing in for g.w."""

    def __init__(self, G, T: nx.Graph, phi: dict):
        self.group = G
        self.T = T
        self.phi = phi

    def translate(self, g, x):
        return self.phi[tuple(g)]

    def key(self, x):
        return x

    def dist(self, x, y):
        return nx.shortest_path_length(self.T, x, y)

    def toward(self, x, y):
        if x == y:
            return None
        return nx.shortest_path(self.T, x, y)[1]

    def neighbours(self, x):
        return sorted(self.T[x], key=str)

    def describe(self, x):
        return str(x)


def _star_tree(ctx: RNContext) -> tuple[nx.Graph, dict]:
    T = nx.Graph()
    for i in range(len(ctx.parts)):
        T.add_node(("e", i))
    for k, S in enumerate(ctx.stars):
        for i in S:
            T.add_edge(("e", i), ("s", k))
    mids = {}
    act = ctx.action
    sub_parts = set()
    for r in ctx.subdivided:
        sub_parts.add(r)
    # subdivide at every base part in the orbit of a subdivided rep
    for e in set(ctx.base):
        for r in ctx.subdivided:
            if e == r or act.find_translate(r, e) is not None:
                sub_parts.add(e)
    for e in sub_parts:
        for s in list(T[("e", e)]):
            m = ("m", e, s[1])
            T.remove_edge(("e", e), s)
            T.add_edge(("e", e), m)
            T.add_edge(m, s)
            mids.setdefault(e, []).append(m)
    return T, mids


def _phi(ctx: RNContext, T: nx.Graph, radius: int) -> tuple[dict, int]:
    """g -> tree vertex containing V_g, through the cubing of the same walls."""
    W = ctx.W
    C = build_complex(W)
    g1 = C.graph()
    cut = set(nx.articulation_points(g1))
    part_of_wall = {p: i for i, part in enumerate(ctx.parts) for p in part}
    star_index = {S: k for k, S in enumerate(ctx.stars)}
    G = W.group
    phi = {}
    r_ok = radius
    for r in range(radius + 1):
        bad = False
        for g in G.ball(r).sphere(r) if r else [()]:
            v = C.basic_id(g)
            if v in cut:
                S = frozenset(part_of_wall[g1.edges[v, u]["wall"]] for u in g1[v])
                k = star_index.get(S)
                node = ("s", k) if k is not None else None
            else:
                nbrs = list(g1[v])
                node = ("e", part_of_wall[g1.edges[v, nbrs[0]]["wall"]]) if nbrs else None
            if node is None or node not in T:
                bad = True
                break
            phi[g] = node
        if bad:
            r_ok = r - 1
            break
    return phi, r_ok


def verify_rn_properties(gamma: BipartiteGraphOfGroups, radius: int | None = None) -> dict:
    """Checklist: (1) enclosing vertices, (3) valence-one minimality proxy, (4) isolated-orbit bijection."""
    ctx: RNContext | None = gamma.context
    report: dict = {}
    if ctx is None:
        ok = len(gamma.graph) == 1
        for c in ("enclosing", "minimality", "isolated_bijection"):
            report[c] = {"pass": ok, "detail": "empty family" if ok else "no construction context"}
        report["pass"] = ok
        return report
    W = ctx.W
    G = W.group
    T, mids = _star_tree(ctx)
    phi, r_ok = _phi(ctx, T, radius if radius is not None else ctx.translate_budget)
    tree = _FiniteTree(G, T, phi)
    enc = []
    ok1 = r_ok >= 1
    for i, X in enumerate(ctx.family):
        e = ctx.base[i]
        candidates = mids.get(e, [("e", e)])
        found = None
        for v in candidates:
            a = strict_enclosing_check(X, tree, v, (), max(r_ok, 0))
            b = strict_enclosing_check(X.complement, tree, v, (), max(r_ok, 0))
            if a.yes and b.yes:
                found = v
                break
        enc.append({"set": X.name, "vertex": None if found is None else str(found),
                    "candidates": [str(v) for v in candidates]})
        ok1 = ok1 and found is not None
    report["enclosing"] = {"pass": ok1, "radius": r_ok, "detail": enc}

    g = gamma.graph
    bad3 = []
    for v in g.nodes():
        if g.degree(v) == 1:
            (u, w, d), = list(g.edges(v, data=True))
            if d["fixers"] == g.nodes[v]["fixers"]:
                bad3.append(v)
    report["minimality"] = {"pass": not bad3, "detail": {"redundant_leaves": bad3}}

    act = ctx.action
    iso_orbits = sum(1 for r in ctx.reps if len(act.parts[r]) == 1)
    iso_v0 = [v for v in g.nodes() if g.nodes[v]["part"] == "V0" and g.nodes[v]["isolated"]]
    inverted = [v for v in iso_v0 if g.nodes[v]["inverter"] is not None]
    ok4 = iso_orbits == len(iso_v0) and not inverted
    report["isolated_bijection"] = {
        "pass": ok4,
        "detail": {"isolated_orbits": iso_orbits, "isolated_V0": len(iso_v0),
                   "inverted": {v: G.format(g.nodes[v]["inverter"]) for v in inverted}}}
    report["pass"] = ok1 and not bad3 and ok4
    return report


# -- BS(4,2) refinement chains -----------------------------------------------

@dataclass
class CyclicEdge:
    name: str
    ends: tuple  # (u, v)
    generator: str  # edge group generator as a word in G
    labels: tuple  # claimed index of the edge group at each end
    stable: str | None = None  # for loops: the v-end image is stable^-1 . gen . stable


@dataclass
class CyclicGraphOfGroups:
    """Graph of groups with infinite cyclic vertex and edge groups, given inside G."""

    name: str
    vertices: dict  # name -> generator word
    edges: list

    def to_dict(self) -> dict:
        return {"name": self.name, "vertices": dict(self.vertices),
                "edges": [{"name": e.name, "ends": list(e.ends), "generator": e.generator,
                           "labels": list(e.labels), "stable": e.stable} for e in self.edges]}


def _tpow(k: int) -> str:
    return " ".join(["t"] * k)


def _conj_a2(k: int) -> str:
    if k == 0:
        return "a a"
    return f"{_tpow(k)} a a {' '.join(['t^-1'] * k)}"


def refinement_chain(n: int) -> list:
    """Gamma_1, ..., Gamma_n for BS(4,2): Gamma_k subdivides e into k edges, the last one carrying index 2^(n-k+1)."""
    if n < 1:
        raise ValueError("chain length must be positive")
    out = []
    for k in range(1, n + 1):
        verts = {"v": "a", "w": _conj_a2(n)}
        names = ["v"] + [f"u{j}" for j in range(1, k)] + ["w"]
        for j in range(1, k):
            verts[f"u{j}"] = _conj_a2(j)
        edges = []
        for j in range(k):
            u, v = names[j], names[j + 1]
            if j == 0:
                gen, lab_u = "a a", 2
            else:
                gen, lab_u = verts[u], 1
            lab_v = 2 ** n if (k == 1) else (2 if j == 0 else (2 if j < k - 1 else 2 ** (n - k + 1)))
            edges.append(CyclicEdge(f"e{j + 1}", (u, v), gen, (lab_u, lab_v)))
        edges.append(CyclicEdge("l", ("w", "w"), verts["w"], (1, 2), stable="t"))
        out.append(CyclicGraphOfGroups(f"Gamma_{k}", verts, edges))
    return out


def cyclic_index(G, sub, whole, cap: int = 64) -> int | None:
    """m > 0 with whole^m = sub^(+-1) in G's normal forms, or None."""
    target = {G.normalize(sub), G.inv(sub)}
    x = ()
    for m in range(1, cap + 1):
        x = G.mul(x, whole)
        if x in target:
            return m
    return None


def verify_refinement_chain(chain: Sequence[CyclicGraphOfGroups], G=None) -> list:
    """Recompute every end label as an index in BS(4,2); returns mismatches."""
    G = G or baumslag_solitar(4, 2)
    bad = []
    for gog in chain:
        for e in gog.edges:
            gen = G.parse(e.generator)
            images = [gen, gen]
            if e.stable is not None:
                s = G.parse(e.stable)
                images[1] = G.mul(G.inv(s), gen, s)
            for end, img, lab in zip(e.ends, images, e.labels):
                idx = cyclic_index(G, img, G.parse(gog.vertices[end]), cap=max(4, 2 * lab))
                if idx != lab:
                    bad.append({"graph": gog.name, "edge": e.name, "end": end, "claimed": lab, "computed": idx})
    return bad
