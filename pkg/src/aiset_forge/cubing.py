"""Sageev's cubing of a finite wallspace of almost invariant sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import networkx as nx
import numpy as np

from .aiset import AlmostInvariantSet, SizeClass, classify, coset_counts, translate
from .crossing import translates
from .groups import BudgetExceeded, GroupError


class AntisymmetryError(GroupError):
    """Distinct walls coincide on the evaluation ball (the ball is too small)."""


@dataclass
class Wall:
    index: int
    set: AlmostInvariantSet  # the chosen side A; the other side is A*
    g: tuple  # provenance: A = g X_family or its complement
    family: int
    flipped: bool  # True when A = (g X_family)*

    @property
    def name(self) -> str:
        return self.set.name


class Wallspace:
    """Finite involution-closed set of halfspaces; halfspace h = 2p + (0 for A_p, 1 for A_p*)."""

    def __init__(self, group, family: Sequence[AlmostInvariantSet], radius: int):
        self.group = group
        self.family = list(family)
        self.radius = radius
        self.ball = group.ball(radius)
        self.walls: list[Wall] = []
        self._lookup: dict = {}
        self._masks: list = []
        self._cosets: dict = {}  # (family, Stab-coset key of g) -> (wall, same side)
        self._moves: dict = {}
        self.small = group.ball(min(2, radius))

    # -- construction ----------------------------------------------------
    def _coset_key(self, fam: int, g):
        G = self.group
        return fam, self.family[fam].stabilizer.coset_rep(G.inv(g))

    def add(self, A: AlmostInvariantSet, g, fam: int, flipped: bool = False) -> tuple[int, bool] | None:
        m = A.mask(self.ball)
        if not m.any() or m.all():
            raise GroupError(f"{A.name} is empty or everything on the evaluation ball")
        hit = self._lookup.get(m.tobytes())
        if hit is not None:
            if not flipped:
                self._cosets.setdefault(self._coset_key(fam, g), hit)
            return hit
        p = len(self.walls)
        self.walls.append(Wall(p, A, tuple(g), fam, flipped))
        self._masks.append(m.copy())
        self._lookup[m.tobytes()] = (p, True)
        self._lookup[(~m).tobytes()] = (p, False)
        if not flipped:
            self._cosets[self._coset_key(fam, g)] = (p, True)
        return None

    def finalize(self):
        M = np.array(self._masks, dtype=bool) if self._masks else np.zeros((0, self.ball.n), dtype=bool)
        self.masks = M
        n = len(self.walls)
        H = np.empty((2 * n, self.ball.n), dtype=bool)
        H[0::2] = M
        H[1::2] = ~M
        self.half = H
        # disjoint[h1, h2]: halfspaces share no ball element
        k = self.small.n
        self._prefix = {}
        for p in range(n):
            self._prefix.setdefault(M[p, :k].tobytes(), []).append(p)
            self._prefix.setdefault((~M[p, :k]).tobytes(), []).append(p)
        Hf = H.astype(np.float32)
        self.disjoint = (Hf @ Hf.T) == 0 if n else np.zeros((0, 0), dtype=bool)
        return self

    # -- queries ---------------------------------------------------------
    def __len__(self) -> int:
        return len(self.walls)

    def halfspace_mask(self, h: int) -> np.ndarray:
        return self.half[h]

    def leq(self, h1: int, h2: int) -> bool:
        """Inclusion of halfspaces on the ball (h1 ∩ h2* empty)."""
        return bool(self.disjoint[h1, h2 ^ 1])

    def lookup_mask(self, m: np.ndarray):
        """(wall, side) whose A-side (side True) or A*-side equals the mask."""
        return self._lookup.get(m.tobytes())

    def lookup(self, A: AlmostInvariantSet):
        return self.lookup_mask(A.mask(self.ball))

    def translate_wall(self, g, p: int):
        """(q, same_side) with g·A_p = A_q (same_side) or A_q* (not same_side), or None."""
        g = tuple(g)
        memo = self._moves.get((g, p), 0)
        if memo != 0:
            return memo
        w = self.walls[p]
        h = self.group.mul(g, w.g)
        key = self._coset_key(w.family, h)
        if key in self._cosets:
            hit = self._cosets[key]
        else:
            T = translate(self.family[w.family], h)
            if T.mask(self.small).tobytes() in self._prefix:
                hit = self.lookup(T)
            else:
                hit = None
            self._cosets[key] = hit
        if hit is not None and w.flipped:
            hit = (hit[0], not hit[1])
        self._moves[(g, p)] = hit
        return hit

    def nested(self, p: int, q: int) -> bool:
        return bool(self.disjoint[2 * p:2 * p + 2, 2 * q:2 * q + 2].any())

    def to_dict(self) -> dict:
        G = self.group
        return {"radius": self.radius, "walls": [
            {"index": w.index, "set": w.set.describe(), "translate": G.format(w.g), "family": w.family,
             "flipped": w.flipped} for w in self.walls]}


def collect_walls(family: Sequence[AlmostInvariantSet], translate_budget: int, R: int) -> Wallspace:
    if not family:
        raise GroupError("empty family has no walls")
    G = family[0].ambient
    W = Wallspace(G, family, R)
    for i, X in enumerate(family):
        for g, T in translates(X, translate_budget):
            hit = W.add(T, g, i)
            if hit is None:
                continue
            p, same = hit
            w = W.walls[p]
            # equal as a set (not complementary) to a wall from a different coset: ball too small
            if same and w.family == i and w.g != g:
                raise AntisymmetryError(
                    f"{G.format(g)}·{X.name} and {G.format(w.g)}·{X.name} agree on ball({R}); enlarge the radius")
    return W.finalize()


# -- ultrafilters ------------------------------------------------------------

def _halfspace(p: int, side: bool) -> int:
    return 2 * p + (0 if side else 1)


def is_ultrafilter(W: Wallspace, bits: Sequence[bool]) -> bool:
    """Exactly one side per wall (implicit) and upward closed: chosen A ≤ B forces B chosen."""
    hs = [_halfspace(p, b) for p, b in enumerate(bits)]
    for h in hs:
        for k in range(2 * len(W)):
            if (k >> 1) != (h >> 1) and W.leq(h, k) and _halfspace(k >> 1, bits[k >> 1]) != k:
                return False
    return True


def enumerate_ultrafilters(W: Wallspace, cap: int = 1 << 16) -> list[tuple]:
    """All orientations with pairwise intersecting chosen halfspaces (equivalent to upward closure)."""
    n = len(W)
    D = W.disjoint
    out: list = []
    chosen: list = []

    def rec(p):
        if p == n:
            out.append(tuple(chosen))
            if len(out) > cap:
                raise BudgetExceeded(f"more than {cap} ultrafilters")
            return
        for side in (False, True):
            h = _halfspace(p, side)
            if all(not D[h, _halfspace(q, s)] for q, s in enumerate(chosen)):
                chosen.append(side)
                rec(p + 1)
                chosen.pop()

    rec(0)
    return out


def basic_vertex(W: Wallspace, g) -> tuple:
    return tuple(bool(w.set.member(g)) for w in W.walls)


# -- the complex -------------------------------------------------------------

@dataclass
class CubeComplex:
    W: Wallspace
    vertices: list
    index: dict
    edges: list  # (u, v, wall)
    squares: list = field(default_factory=list)
    cubes: list = field(default_factory=list)  # 3-cubes
    basic: dict = field(default_factory=dict)  # vertex id -> [group elements]

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        for u, v, p in self.edges:
            g.add_edge(u, v, wall=p)
        return g

    def hyperplane(self, p: int) -> list:
        return [(u, v) for u, v, q in self.edges if q == p]

    def basic_id(self, g) -> int:
        return self.index[basic_vertex(self.W, g)]

    def degree(self, v: int) -> int:
        return sum(1 for a, b, _ in self.edges if v in (a, b))

    def to_dict(self) -> dict:
        G = self.W.group
        return {"vertices": ["".join("1" if b else "0" for b in v) for v in self.vertices],
                "edges": [[u, v, p] for u, v, p in self.edges],
                "squares": len(self.squares), "cubes3": len(self.cubes),
                "basic": {str(k): [G.format(g) for g in v[:5]] for k, v in sorted(self.basic.items())}}


def build_complex(W: Wallspace, cap: int = 1 << 16, basic_radius: int | None = None) -> CubeComplex:
    ufs = enumerate_ultrafilters(W, cap)
    index = {v: i for i, v in enumerate(ufs)}
    edges = []
    n = len(W)
    for i, v in enumerate(ufs):
        for p in range(n):
            if not v[p]:
                continue
            w = v[:p] + (False,) + v[p + 1:]
            j = index.get(w)
            if j is not None:
                edges.append((min(i, j), max(i, j), p))
    edges.sort()
    G = W.group
    rb = W.radius if basic_radius is None else basic_radius
    basic: dict = {}
    ball = G.ball(rb)
    for k, g in enumerate(ball.elements):
        v = tuple(bool(x) for x in W.masks[:, k]) if n else ()
        basic.setdefault(index[v], []).append(g)
    # restrict to the component containing the basic vertices
    gr = nx.Graph()
    gr.add_nodes_from(range(len(ufs)))
    gr.add_edges_from((u, v) for u, v, _ in edges)
    keep = set()
    for b in basic:
        keep |= nx.node_connected_component(gr, b)
    if len(keep) != len(ufs):
        order = sorted(keep)
        remap = {old: new for new, old in enumerate(order)}
        ufs = [ufs[i] for i in order]
        index = {v: i for i, v in enumerate(ufs)}
        edges = [(remap[u], remap[v], p) for u, v, p in edges if u in remap and v in remap]
        basic = {remap[k]: v for k, v in basic.items()}
    C = CubeComplex(W, ufs, index, edges, basic=basic)
    _fill_cubes(C)
    return C


def _fill_cubes(C: CubeComplex, max_dim: int = 3) -> None:
    """Cubes at a vertex = sets of pairwise-flippable walls whose every sub-flip is a vertex."""
    seen2, seen3 = set(), set()
    for i, v in enumerate(C.vertices):
        down = [p for p in range(len(v)) if v[p] and _flip(v, [p]) in C.index]
        for pair in combinations(down, 2):
            corners = [_flip(v, list(s)) for s in ([], [pair[0]], [pair[1]], list(pair))]
            if all(c in C.index for c in corners):
                key = frozenset(C.index[c] for c in corners)
                if key not in seen2:
                    seen2.add(key)
                    C.squares.append(tuple(sorted(key)))
        if max_dim >= 3:
            for triple in combinations(down, 3):
                corners = []
                for r in range(4):
                    for s in combinations(triple, r):
                        corners.append(_flip(v, list(s)))
                if all(c in C.index for c in corners):
                    key = frozenset(C.index[c] for c in corners)
                    if key not in seen3:
                        seen3.add(key)
                        C.cubes.append(tuple(sorted(key)))


def _flip(v: tuple, ps) -> tuple:
    w = list(v)
    for p in ps:
        w[p] = not w[p]
    return tuple(w)


def translate_vertex(W: Wallspace, g, v: tuple):
    """g·V on the walls where it is defined: (gV)[q] from V[p] with g A_p = A_q^±; None if some wall leaves W."""
    out: list = [None] * len(W)
    for p in range(len(W)):
        hit = W.translate_wall(g, p)
        if hit is None:
            return None
        q, same = hit
        out[q] = v[p] if same else (not v[p])
    if any(x is None for x in out):
        return None
    return tuple(out)


def recover_set(C: CubeComplex, p: int, radius: int | None = None) -> tuple[set, set]:
    """{g : gV_e lies on the A_p side of hyperplane p}, over g where g^-1 A_p is a wall.

    Returns (recovered, domain)."""
    W = C.W
    G = W.group
    ve = basic_vertex(W, ())
    r = radius if radius is not None else W.radius
    rec, dom = set(), set()
    for g in G.ball(r).elements:
        hit = W.translate_wall(G.inv(g), p)
        if hit is None:
            continue
        q, same = hit
        dom.add(g)
        # (g V_e)[p] = V_e[q] (up to the side flip)
        side = ve[q] if same else (not ve[q])
        if side:
            rec.add(g)
    return rec, dom


def separating_vertices(C: CubeComplex) -> list:
    return sorted(nx.articulation_points(C.graph()))


# -- fixed vertices ----------------------------------------------------------

def almost_inside(S, A: AlmostInvariantSet, ball) -> SizeClass:
    """Size of S ∩ A* over Stab(A) (S < A when finite)."""
    sm = np.fromiter((S.member(g) for g in ball.elements), dtype=bool, count=ball.n)
    m = sm & ~A.mask(ball)
    return classify(coset_counts(m, A.stabilizer.coset_ids(ball), ball.layer_ends))


@dataclass
class FixedVertexResult:
    vertex: tuple | None
    method: str  # "V(S)" | "search" | "none"
    all_fixed: list
    reflection: dict | None

    def to_dict(self, W) -> dict:
        fmt = lambda v: "".join("1" if b else "0" for b in v)
        return {"vertex": None if self.vertex is None else fmt(self.vertex), "method": self.method,
                "fixed_vertices": [fmt(v) for v in self.all_fixed], "reflection": self.reflection}


def fixed_vertex_search(C: CubeComplex, S, radius: int | None = None, generators=None) -> FixedVertexResult:
    W = C.W
    G = W.group
    ball = G.ball(radius if radius is not None else W.radius)
    gens = [G.normalize(g) for g in (generators if generators is not None else S.generators or [])]
    choice = []
    for w in W.walls:
        a = almost_inside(S, w.set, ball).finite
        b = almost_inside(S, w.set.complement, ball).finite
        choice.append(a if a != b else None)
    if all(c is not None for c in choice):
        v = tuple(choice)
        if v in C.index and _fixed(W, gens, v):
            return FixedVertexResult(v, "V(S)", [v], None)
    fixed = [v for v in C.vertices if _fixed(W, gens, v)]
    if fixed:
        ve = basic_vertex(W, ())
        first = ve if ve in fixed else fixed[0]
        return FixedVertexResult(first, "search", fixed, None)
    refl = None
    for s in gens + [G.power(x, k) for x in gens for k in (2, 3)]:
        for p in range(len(W)):
            hit = W.translate_wall(s, p)
            if hit is not None and hit[0] == p and not hit[1]:
                refl = {"element": G.format(s), "wall": W.walls[p].set.describe()}
                break
        if refl:
            break
    return FixedVertexResult(None, "none", [], refl)


def _fixed(W, gens, v) -> bool:
    for s in gens:
        for p in range(len(W)):
            hit = W.translate_wall(s, p)
            if hit is None:
                continue
            q, same = hit
            if v[q] != (v[p] if same else not v[p]):
                return False
    return True
