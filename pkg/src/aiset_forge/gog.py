"""Graphs of groups, their fundamental groups, and G-trees.

The fundamental group of a graph of groups is a catalog group whose normal
form comes from reduced path words ``g0 e1 g1 ... ek gk``: each ``g_i`` for
i < k is a chosen left-coset representative of the incoming edge group and
a backtrack ``e g e^-1`` with g in the edge group is pinched.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Hashable, Sequence

import numpy as np

from .groups import (
    BudgetExceeded,
    CyclicGroup,
    FreeAbelianGroup,
    FreeGroup,
    GroupError,
    GroupOracle,
    TrivialGroup,
    UnsupportedGroup,
    invert_word,
    letter_key,
)
from .subgroups import GuirardelSubgroup, PointStabilizer, SubgroupOracle


class InjectivityError(GroupError):
    pass


class InfiniteValence(GroupError):
    pass


def _exp(word) -> int:
    return sum(1 if x > 0 else -1 for x in word)


def _cyclic_word(k: int) -> tuple:
    return (1,) * k if k >= 0 else (-1,) * (-k)


def _is_infinite_cyclic(G: GroupOracle) -> bool:
    return isinstance(G, (FreeGroup, FreeAbelianGroup)) and len(G.gens) == 1


def _solve_integer(vectors: list, target: list) -> list:
    """Integer coefficients q with sum q_j vectors_j = target (independent vectors)."""
    k = len(vectors)
    n = len(target)
    rows = [[Fraction(vectors[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(n)]
    piv_cols = []
    r = 0
    for c in range(k):
        p = next((i for i in range(r, n) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    q = [Fraction(0)] * k
    for i, c in enumerate(piv_cols):
        q[c] = rows[i][k]
    for i in range(r, n):
        if rows[i][k] != 0:
            raise GroupError("element not in the image lattice")
    if any(x.denominator != 1 for x in q):
        raise GroupError("non-integral coefficients: image lattice not saturated as expected")
    return [int(x) for x in q]


class Injection:
    """A homomorphism from an edge group into a vertex group with coset splitting.

    ``split(g)`` returns ``(r, c)`` with ``g = r * apply(c)`` and ``r`` the
    canonical representative of the left coset ``g * image``; ``r == ()``
    exactly when g lies in the image.
    """

    def __init__(self, edge_group: GroupOracle, vertex_group: GroupOracle, images: Sequence):
        self.edge = edge_group
        self.vertex = vertex_group
        if len(images) != len(edge_group.gens):
            raise GroupError("one image per edge-group generator is required")
        self.images = [vertex_group.normalize(w) for w in images]
        self.mode = self._choose_mode()
        self._transversal = None

    def _choose_mode(self) -> str:
        E, V = self.edge, self.vertex
        if not E.gens:
            return "trivial"
        if len(E.gens) == len(V.gens) and all(img == (j + 1,) for j, img in enumerate(self.images)) \
                and type(E) is type(V) and getattr(E, "order", None) == getattr(V, "order", None):
            return "iso"
        if len(V.gens) == 1 and len(E.gens) == 1 and isinstance(V, (FreeGroup, FreeAbelianGroup, CyclicGroup)):
            return "cyclic"
        if isinstance(V, FreeAbelianGroup) and isinstance(E, FreeAbelianGroup):
            return "lattice"
        if isinstance(V, FreeGroup) and len(E.gens) == 1 and _is_infinite_cyclic(E) \
                and len(self.images[0]) == 1:
            return "generator"
        raise UnsupportedGroup(
            f"no coset splitting built in for {E.kind} -> {V.kind} with images {self.images}")

    def apply(self, c) -> tuple:
        out: list = []
        for x in c:
            img = self.images[abs(x) - 1]
            out.extend(img if x > 0 else invert_word(img))
        return self.vertex.normalize(out)

    def split(self, g) -> tuple[tuple, tuple]:
        g = tuple(g)
        mode = self.mode
        if mode == "trivial":
            return g, ()
        if mode == "iso":
            return (), self.edge.normalize(g)
        if mode == "cyclic":
            return self._split_cyclic(g)
        if mode == "lattice":
            V = self.vertex
            vecs = [V.vector(w) for w in self.images]
            from .subgroups import hermite_rows
            if not hasattr(self, "_lat"):
                self._lat = hermite_rows(vecs)
                self._piv = [next(j for j, x in enumerate(r) if x) for r in self._lat]
            v = list(V.vector(g))
            for r, p in zip(self._lat, self._piv):
                q = v[p] // r[p]
                if q:
                    v = [a - q * b for a, b in zip(v, r)]
            diff = [a - b for a, b in zip(V.vector(g), v)]
            q = _solve_integer(vecs, diff)
            return V.from_vector(v), self.edge.normalize(self.edge.from_vector(q)) \
                if isinstance(self.edge, FreeAbelianGroup) else self.edge.normalize(_cyclic_word(q[0]))
        # generator: strip the trailing power of the image letter
        letter = self.images[0][0]
        i = len(g)
        while i > 0 and abs(g[i - 1]) == abs(letter):
            i -= 1
        e = _exp(g[i:]) * (1 if letter > 0 else -1)
        return g[:i], self.edge.normalize(_cyclic_word(e))

    def _split_cyclic(self, g):
        V, E = self.vertex, self.edge
        k = _exp(self.images[0])
        e = _exp(g)
        if isinstance(V, CyclicGroup):
            n = V.order
            k %= n
            e %= n
            d = gcd(k, n)
            rem = e % d
            m = n // d
            q = ((e - rem) // d) * pow(k // d, -1, m) % m if m > 1 else 0
            return V.normalize(_cyclic_word(rem)), E.normalize(_cyclic_word(q))
        if k == 0:
            raise InjectivityError("edge generator maps to the identity")
        rem = e % abs(k)
        q = (e - rem) // k
        return V.normalize(_cyclic_word(rem)), E.normalize(_cyclic_word(q))

    def check(self) -> list[str]:
        """Injectivity verified on generators."""
        problems = []
        for j, img in enumerate(self.images):
            if not img:
                problems.append(f"generator {self.edge.gens[j]} maps to the identity")
        if self.mode == "cyclic":
            E, V = self.edge, self.vertex
            k = _exp(self.images[0])
            if isinstance(V, CyclicGroup):
                img_order = V.order // gcd(k % V.order, V.order) if k % V.order else 1
                e_order = getattr(E, "order", None)
                if e_order != img_order:
                    problems.append(f"edge group order {e_order} differs from image order {img_order}")
            elif isinstance(E, CyclicGroup):
                problems.append("finite edge group cannot embed in an infinite cyclic group nontrivially")
        if self.mode == "lattice":
            from .subgroups import hermite_rows
            vecs = [self.vertex.vector(w) for w in self.images]
            if len(hermite_rows(vecs)) != len(vecs):
                problems.append("images of edge generators are linearly dependent")
        return problems

    def transversal(self, limit: int = 4096) -> list:
        """Left-coset representatives of the image; raises if infinite."""
        if self._transversal is not None:
            return self._transversal
        reps = [()]
        seen = {()}
        q = deque([()])
        letters = sorted(self.vertex.letters(), key=letter_key)
        while q:
            r = q.popleft()
            for x in letters:
                rr = self.split(self.vertex.normalize((x,) + r))[0]
                if rr not in seen:
                    if len(seen) >= limit:
                        raise InfiniteValence("edge group has infinite index in the vertex group")
                    seen.add(rr)
                    reps.append(rr)
                    q.append(rr)
        reps.sort(key=lambda w: (len(w), [letter_key(x) for x in w]))
        self._transversal = reps
        return reps


@dataclass
class GEdge:
    name: str
    source: str
    target: str
    group: GroupOracle
    alpha: Injection
    omega: Injection


class PathWord:
    """Immutable reduced path word: vertices v0..vk, elements g0..gk, edges e1..ek."""

    __slots__ = ("v", "g", "e")

    def __init__(self, v, g, e):
        self.v, self.g, self.e = tuple(v), tuple(g), tuple(e)

    def __repr__(self):
        return f"PathWord({self.v}, {self.g}, {self.e})"

    def __eq__(self, other):
        return isinstance(other, PathWord) and (self.v, self.g, self.e) == (other.v, other.g, other.e)

    def __hash__(self):
        return hash((self.v, self.g, self.e))

    @property
    def end(self):
        return self.v[-1]

    def vertex_key(self):
        return (self.v[0], self.g[:-1], self.e)


class GraphOfGroups:
    def __init__(self, name: str, vertices: dict, edges: Sequence[GEdge], base: str | None = None):
        self.name = name
        self.vertices = dict(vertices)
        self.edges = list(edges)
        self.base = base if base is not None else next(iter(self.vertices))
        for ed in self.edges:
            for v in (ed.source, ed.target):
                if v not in self.vertices:
                    raise GroupError(f"edge {ed.name} references unknown vertex {v}")
            if ed.alpha.vertex is not self.vertices[ed.source] or ed.omega.vertex is not self.vertices[ed.target]:
                raise GroupError(f"edge {ed.name}: injections do not land in the endpoint groups")
        self._tree_paths()

    # oriented edges are (index, +1 | -1)
    def origin(self, oe) -> str:
        ed = self.edges[oe[0]]
        return ed.source if oe[1] > 0 else ed.target

    def terminus(self, oe) -> str:
        ed = self.edges[oe[0]]
        return ed.target if oe[1] > 0 else ed.source

    def alpha(self, oe) -> Injection:
        ed = self.edges[oe[0]]
        return ed.alpha if oe[1] > 0 else ed.omega

    def omega(self, oe) -> Injection:
        ed = self.edges[oe[0]]
        return ed.omega if oe[1] > 0 else ed.alpha

    def oriented_at(self, v: str) -> list:
        out = []
        for i, ed in enumerate(self.edges):
            if ed.source == v:
                out.append((i, 1))
            if ed.target == v:
                out.append((i, -1))
        return out

    def _tree_paths(self):
        paths = {self.base: ()}
        tree = set()
        q = deque([self.base])
        while q:
            v = q.popleft()
            for oe in self.oriented_at(v):
                w = self.terminus(oe)
                if w not in paths:
                    paths[w] = paths[v] + (oe,)
                    tree.add(oe[0])
                    q.append(w)
        if len(paths) != len(self.vertices):
            raise GroupError(f"graph of groups {self.name} is not connected")
        self.paths = paths
        self.tree_edges = tree

    def check(self) -> list[str]:
        problems = []
        for ed in self.edges:
            for side, inj in (("source", ed.alpha), ("target", ed.omega)):
                for p in inj.check():
                    problems.append(f"edge {ed.name} ({side}): {p}")
        return problems

    # -- path words ---------------------------------------------------
    def empty(self, start: str) -> list:
        return [[start], [()], []]

    def push_elem(self, pw: list, word) -> None:
        v = pw[0][-1]
        pw[1][-1] = self.vertices[v].normalize(pw[1][-1] + tuple(word))

    def push_edge(self, pw: list, oe) -> None:
        vs, gs, es = pw
        if self.origin(oe) != vs[-1]:
            raise GroupError("edge does not start at the current vertex")
        r, c = self.alpha(oe).split(gs[-1])
        if es and es[-1] == (oe[0], -oe[1]) and not r:
            prev = es.pop()
            gs.pop()
            vs.pop()
            img = self.alpha(prev).apply(c)
            gs[-1] = self.vertices[vs[-1]].normalize(gs[-1] + img)
        else:
            gs[-1] = r
            es.append(oe)
            vs.append(self.terminus(oe))
            gs.append(self.omega(oe).apply(c))

    def push_path(self, pw: list, other: PathWord) -> None:
        if other.v[0] != pw[0][-1]:
            raise GroupError("path words do not compose")
        for i, gi in enumerate(other.g):
            self.push_elem(pw, gi)
            if i < len(other.e):
                self.push_edge(pw, other.e[i])

    def freeze(self, pw: list) -> PathWord:
        return PathWord(pw[0], pw[1], pw[2])

    def thaw(self, p: PathWord) -> list:
        return [list(p.v), list(p.g), list(p.e)]

    def inverse_path(self, p: PathWord) -> PathWord:
        pw = self.empty(p.v[-1])
        k = len(p.e)
        for i in range(k, -1, -1):
            self.push_elem(pw, invert_word(p.g[i]))
            if i > 0:
                oe = p.e[i - 1]
                self.push_edge(pw, (oe[0], -oe[1]))
        return self.freeze(pw)

    def compose(self, p: PathWord, q: PathWord) -> PathWord:
        pw = self.thaw(p)
        self.push_path(pw, q)
        return self.freeze(pw)

    def tree_path(self, v: str) -> PathWord:
        pw = self.empty(self.base)
        for oe in self.paths[v]:
            self.push_edge(pw, oe)
        return self.freeze(pw)


class FundamentalGroup(GroupOracle):
    """pi_1 of a graph of groups as a catalog group (normal-form theorem)."""

    kind = "graph-of-groups"

    def __init__(self, gog: GraphOfGroups, name: str | None = None):
        self.gog = gog
        names = []
        self._letter_map = []  # global index -> ("v", vertex, local letter) | ("e", edge index)
        self._vertex_offset = {}
        all_names = [s for G in gog.vertices.values() for s in G.gens]
        for v, G in gog.vertices.items():
            self._vertex_offset[v] = len(names)
            for j, s in enumerate(G.gens):
                names.append(s if all_names.count(s) == 1 else f"{v}.{s}")
                self._letter_map.append(("v", v, j + 1))
        self._stable = {}
        for i, ed in enumerate(gog.edges):
            if i not in gog.tree_edges:
                self._stable[i] = len(names)
                names.append(ed.name)
                self._letter_map.append(("e", i, None))
        super().__init__(name or gog.name, names)
        self._back = {v: gog.inverse_path(gog.tree_path(v)) for v in gog.vertices}
        self._fwd = {v: gog.tree_path(v) for v in gog.vertices}

    def path_word(self, word) -> PathWord:
        gog = self.gog
        pw = gog.empty(gog.base)
        for x in self.check_letters(word):
            kind, a, b = self._letter_map[abs(x) - 1]
            if kind == "v":
                gog.push_path(pw, self._fwd[a])
                gog.push_elem(pw, (b if x > 0 else -b,))
                gog.push_path(pw, self._back[a])
            else:
                oe = (a, 1 if x > 0 else -1)
                start = gog.origin(oe)
                gog.push_path(pw, self._fwd[start])
                gog.push_edge(pw, oe)
                gog.push_path(pw, self._back[gog.terminus(oe)])
        return gog.freeze(pw)

    def lift_vertex(self, v: str, local) -> tuple:
        off = self._vertex_offset[v]
        return tuple((x + off) if x > 0 else (x - off) for x in local)

    def letters_of(self, p: PathWord) -> tuple:
        if p.v[0] != self.gog.base or p.v[-1] != self.gog.base:
            raise GroupError("path word is not a loop at the base vertex")
        out: list = []
        for i, gi in enumerate(p.g):
            out.extend(self.lift_vertex(p.v[i], gi))
            if i < len(p.e):
                oe = p.e[i]
                if oe[0] in self._stable:
                    s = self._stable[oe[0]] + 1
                    out.append(s if oe[1] > 0 else -s)
        return tuple(out)

    def normalize(self, word):
        return self.letters_of(self.path_word(word))

    def vertex_element(self, v: str, local) -> tuple:
        """The element p_v g p_v^-1 of pi_1 for g in the vertex group of v."""
        gog = self.gog
        pw = gog.thaw(self._fwd[v])
        gog.push_elem(pw, local)
        gog.push_path(pw, self._back[v])
        return self.letters_of(gog.freeze(pw))


# -- G-trees -----------------------------------------------------------------

class GTree:
    """Protocol for a G-tree given by oracles (vertices are opaque handles)."""

    group: GroupOracle

    def vertex(self, u, tau=None):
        raise NotImplementedError

    def translate(self, g, x):
        raise NotImplementedError

    def key(self, x) -> Hashable:
        raise NotImplementedError

    def dist(self, x, y) -> int:
        raise NotImplementedError

    def toward(self, x, y):
        """Neighbour of x on the geodesic to y (None if x == y)."""
        raise NotImplementedError

    def neighbours(self, x) -> list:
        raise InfiniteValence("neighbour enumeration not available for this tree")

    def on_side(self, x, o, t) -> bool:
        """Is x on the t-side of the edge (o, t)?"""
        return self.dist(x, t) < self.dist(x, o)

    def side_mask(self, ball, o, t, w):
        """Vectorised {g in ball : g.w on the t-side of (o, t)}, or None when not available."""
        return None

    def _feature(self, ball, name, fn):
        # per-ball integer arrays, extended as balls grow
        store = self.__dict__.setdefault("_features", {})
        key = (name, id(ball._elements))
        have = store.get(key)
        if have is None or len(have) < ball.n:
            start = 0 if have is None else len(have)
            els = ball._elements
            new = np.fromiter((fn(els[i]) for i in range(start, ball.n)), dtype=np.int64,
                              count=ball.n - start)
            have = new if have is None else np.concatenate([have, new])
            store[key] = have
        return have[: ball.n]

    def describe(self, x) -> str:
        return str(self.key(x))

    def vertex_stabilizer(self, x, name="Stab") -> SubgroupOracle:
        G = self.group
        return PointStabilizer(G, name, lambda g: self.key(self.translate(G.inv(g), x)),
                               f"Stab({self.describe(x)})", finitely_generated=False)

    def edge_stabilizer(self, o, t, name="Stab") -> SubgroupOracle:
        G = self.group

        def locate(g):
            gi = G.inv(g)
            return (self.key(self.translate(gi, o)), self.key(self.translate(gi, t)))

        return PointStabilizer(G, name, locate, f"Stab({self.describe(o)}->{self.describe(t)})",
                               finitely_generated=False)

    def ball(self, center, R: int, max_vertices: int = 50_000) -> "TreeBall":
        tb = TreeBall(center=center, radius=R)
        tb.vertices[self.key(center)] = (center, 0)
        q = deque([center])
        while q:
            x = q.popleft()
            kx = self.key(x)
            d = tb.vertices[kx][1]
            if d == R:
                continue
            for y in self.neighbours(x):
                ky = self.key(y)
                if ky not in tb.vertices:
                    if len(tb.vertices) >= max_vertices:
                        raise BudgetExceeded(f"tree ball exceeds {max_vertices} vertices")
                    tb.vertices[ky] = (y, d + 1)
                    tb.edges.append((kx, ky))
                    tb.tags[ky] = self.describe(y)
                    q.append(y)
        tb.tags[self.key(center)] = self.describe(center)
        return tb


@dataclass
class TreeBall:
    center: object
    radius: int
    vertices: dict = field(default_factory=dict)  # key -> (handle, depth)
    edges: list = field(default_factory=list)  # (key, key) parent -> child
    tags: dict = field(default_factory=dict)

    def is_acyclic(self) -> bool:
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return len(self.edges) == len(self.vertices) - 1

    def degree(self, key) -> int:
        return sum(1 for a, b in self.edges if key in (a, b))


class BassSerreTree(GTree):
    """The Bass-Serre tree of a graph of groups; vertices are path words."""

    def __init__(self, G: FundamentalGroup):
        self.group = G
        self.gog = G.gog

    def vertex(self, u=(), tau=None):
        tau = self.gog.base if tau is None else tau
        return self.gog.compose(self.group.path_word(u), self.gog.tree_path(tau))

    def translate(self, g, x: PathWord) -> PathWord:
        return self.gog.compose(self.group.path_word(g), x)

    def key(self, x: PathWord):
        return x.vertex_key()

    def _between(self, x: PathWord, y: PathWord) -> PathWord:
        return self.gog.compose(self.gog.inverse_path(x), y)

    def dist(self, x, y) -> int:
        return len(self._between(x, y).e)

    def toward(self, x, y):
        p = self._between(x, y)
        if not p.e:
            return None
        pw = self.gog.thaw(x)
        self.gog.push_elem(pw, p.g[0])
        self.gog.push_edge(pw, p.e[0])
        return self.gog.freeze(pw)

    def neighbours(self, x: PathWord) -> list:
        gog = self.gog
        out = []
        for oe in gog.oriented_at(x.end):
            for r in gog.alpha(oe).transversal():
                pw = gog.thaw(x)
                gog.push_elem(pw, r)
                gog.push_edge(pw, oe)
                out.append(gog.freeze(pw))
        return out

    def edge(self, name: str, u=()) -> tuple:
        """The tree edge u.e for the graph-of-groups edge ``name`` (origin, terminus)."""
        i = next(j for j, ed in enumerate(self.gog.edges) if ed.name == name)
        o = self.vertex(u, self.gog.edges[i].source)
        pw = self.gog.thaw(o)
        self.gog.push_edge(pw, (i, 1))
        return o, self.gog.freeze(pw)

    def describe(self, x: PathWord) -> str:
        # normalise the last element away so equal vertices describe identically
        pw = self.gog.thaw(x)
        pw[1][-1] = ()
        p = self.gog.freeze(pw)
        parts = []
        for i, gi in enumerate(p.g):
            if gi:
                parts.append(self.gog.vertices[p.v[i]].format(gi))
            if i < len(p.e):
                oe = p.e[i]
                parts.append(self.gog.edges[oe[0]].name + ("" if oe[1] > 0 else "^-1"))
        return (" ".join(parts) or "1") + f"@{p.end}"


def bass_serre_ball(G: FundamentalGroup, R: int, center=None) -> TreeBall:
    problems = G.gog.check()
    if problems:
        raise InjectivityError("; ".join(problems))
    T = BassSerreTree(G)
    return T.ball(center if center is not None else T.vertex(), R)


class LineTree(GTree):
    """G acting on the real line by translations through a map f: G -> Z."""

    def __init__(self, G: GroupOracle, weights: dict):
        self.group = G
        self.weights = [int(weights.get(s, 0)) for s in G.gens]

    def f(self, g) -> int:
        return sum(self.weights[abs(x) - 1] * (1 if x > 0 else -1) for x in g)

    def vertex(self, u=(), tau=None):
        return self.f(u)

    def translate(self, g, x):
        return x + self.f(g)

    def key(self, x):
        return x

    def dist(self, x, y):
        return abs(x - y)

    def toward(self, x, y):
        if x == y:
            return None
        return x + (1 if y > x else -1)

    def neighbours(self, x):
        return [x - 1, x + 1]

    def side_mask(self, ball, o, t, w):
        xs = self._feature(ball, "f", self.f) + w
        return np.abs(xs - t) < np.abs(xs - o)


class AscendingTree(GTree):
    """Tree of cosets gH for Guirardel's H: the parent of gH is g b^-1 H."""

    def __init__(self, G: FreeGroup, H: GuirardelSubgroup, max_steps: int = 10_000):
        self.group = G
        self.H = H
        self.b = H.b
        self.max_steps = max_steps

    def vertex(self, u=(), tau=None):
        return tuple(u)

    def key(self, x):
        return self.H.coset_rep(self.group.inv(x))

    def level(self, x) -> int:
        return sum((1 if y > 0 else -1) for y in x if abs(y) == self.b)

    def parent(self, x):
        return self.group.normalize(tuple(x) + (-self.b,))

    def ancestor(self, x, level: int):
        d = self.level(x) - level
        if d < 0:
            raise ValueError("ancestor above the vertex's own level requested below it")
        return self.group.normalize(tuple(x) + (-self.b,) * d)

    def _below(self, x, y) -> bool:
        """y is x or a descendant of x: x^-1 y b^-d lies in H for d = level difference >= 0."""
        z = tuple(y) if not x else self.group.normalize(invert_word(x) + tuple(y))
        h = 0
        for c in z:
            if abs(c) == self.b:
                h += 1 if c > 0 else -1
            elif h < 0:
                return False
        return h >= 0

    def translate(self, g, x):
        return tuple(g) if not x else self.group.mul(g, x)

    def _floor(self, g) -> int:
        """min(f(g), heights of the a-letters of g): g lies below b^j H iff this is >= j."""
        h = 0
        low = None
        for c in g:
            if abs(c) == self.b:
                h += 1 if c > 0 else -1
            elif low is None or h < low:
                low = h
        return h if low is None else min(low, h)

    def _b_power(self, x):
        if all(c == self.b for c in x):
            return len(x)
        if all(c == -self.b for c in x):
            return -len(x)
        return None

    def side_mask(self, ball, o, t, w):
        if w:
            return None
        jo, jt = self._b_power(o), self._b_power(t)
        if jo is None or jt is None or abs(jo - jt) != 1:
            return None
        fl = self._feature(ball, "floor", self._floor)
        if jt > jo:
            return fl >= jt
        return ~(fl >= jo)

    def on_side(self, x, o, t) -> bool:
        if self.level(t) > self.level(o):
            return self._below(t, x)
        return not self._below(o, x)

    def dist(self, x, y) -> int:
        lx, ly = self.level(x), self.level(y)
        top = min(lx, ly)
        a, b = self.ancestor(x, top), self.ancestor(y, top)
        steps = 0
        while self.key(a) != self.key(b):
            a, b = self.parent(a), self.parent(b)
            steps += 1
            if steps > self.max_steps:
                raise BudgetExceeded("tree distance search exceeded its step budget")
        return (lx - top) + (ly - top) + 2 * steps

    def toward(self, x, y):
        if self.key(x) == self.key(y):
            return None
        lx, ly = self.level(x), self.level(y)
        if ly > lx and self.key(self.ancestor(y, lx)) == self.key(x):
            return self.ancestor(y, lx + 1)
        return self.parent(x)

    def describe(self, x):
        return f"{self.group.format(x)}H"


def baumslag_solitar(m: int, n: int, name: str | None = None) -> FundamentalGroup:
    """BS(m, n) = <a, t | t^-1 a^n t = a^m> as an HNN extension of <a>."""
    A = FreeGroup("A", ["a"])
    C = FreeGroup("C", ["c"])
    ed = GEdge("t", "v", "v", C, Injection(C, A, [(1,) * n if n > 0 else (-1,) * (-n)]),
               Injection(C, A, [(1,) * m if m > 0 else (-1,) * (-m)]))
    return FundamentalGroup(GraphOfGroups(name or f"BS({m},{n})", {"v": A}, [ed], "v"))


def amalgam(A: GroupOracle, B: GroupOracle, C: GroupOracle, into_a, into_b, name: str = "A*_C B") -> FundamentalGroup:
    ed = GEdge("e", "A", "B", C, Injection(C, A, into_a), Injection(C, B, into_b))
    return FundamentalGroup(GraphOfGroups(name, {"A": A, "B": B}, [ed], "A"))


def ladder_group(name: str = "Z2*Z2") -> FundamentalGroup:
    return amalgam(CyclicGroup("S", "s", 2), CyclicGroup("T", "t", 2), TrivialGroup("1"), [], [], name)
