"""Subgroup oracles: canonical right-coset keys and membership.

``coset_rep(g)`` returns a hashable key that is equal for g, g' exactly when
Hg = Hg'.  ``coset_element(g)`` returns an actual element of the coset.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from math import gcd
from typing import Hashable, Sequence

import networkx as nx
import numpy as np

from .groups import (
    Ball,
    BudgetExceeded,
    DirectProduct,
    FreeAbelianGroup,
    FreeGroup,
    FreeProduct,
    GroupError,
    GroupOracle,
    UnsupportedGroup,
    invert_word,
    letter_key,
)


class SubgroupOracle:
    kind = "abstract"
    finitely_generated = True
    normal = False  # set where normality is known; conjugates then reuse the same oracle

    def __init__(self, ambient: GroupOracle, name: str, generators: Sequence | None = None,
                 description: str | None = None):
        self.ambient = ambient
        self.name = name
        self.generators = [ambient.normalize(g) for g in generators] if generators is not None else None
        self.description = description or name
        self._keys: dict = {}
        self._ids: dict = {}

    def _key(self, g) -> Hashable:
        raise NotImplementedError

    def coset_rep(self, g) -> Hashable:
        g = tuple(g)
        k = self._keys.get(g)
        if k is None:
            k = self._key(g)
            self._keys[g] = k
        return k

    def member(self, g) -> bool:
        return self.coset_rep(g) == self.coset_rep(())

    def coset_element(self, g) -> tuple:
        return tuple(g)

    def coset_ids(self, ball: Ball) -> np.ndarray:
        """Integer coset label for each ball element (shared numbering)."""
        cached = self._ids.get(id(ball._elements))
        table, ids = cached if cached else ({}, [])
        els = ball._elements
        key = self._key
        for i in range(len(ids), ball.n):
            k = key(els[i])
            j = table.get(k)
            if j is None:
                j = len(table)
                table[k] = j
            ids.append(j)
        self._ids[id(ball._elements)] = (table, ids)
        return np.asarray(ids[: ball.n], dtype=np.int64)

    def describe(self) -> str:
        if self.generators is not None:
            gs = ", ".join(self.ambient.format(g) for g in self.generators)
            return f"<{gs}>"
        return self.description

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class TrivialSubgroup(SubgroupOracle):
    kind = "trivial"
    normal = True

    def __init__(self, ambient, name="1"):
        super().__init__(ambient, name, [])

    def _key(self, g):
        return g


class WholeGroup(SubgroupOracle):
    kind = "whole"
    normal = True

    def __init__(self, ambient, name="G"):
        super().__init__(ambient, name, [ambient.normalize((i + 1,)) for i in range(len(ambient.gens))])

    def _key(self, g):
        return ()

    def coset_element(self, g):
        return ()


def hermite_rows(vectors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row echelon basis over Z with positive pivots, zero rows dropped."""
    rows = [list(map(int, v)) for v in vectors if any(v)]
    if not rows:
        return []
    n = len(rows[0])
    out: list = []
    col = 0
    while rows and col < n:
        nz = [r for r in rows if r[col] != 0]
        if not nz:
            col += 1
            continue
        while len([r for r in rows if r[col] != 0]) > 1:
            nz = sorted((r for r in rows if r[col] != 0), key=lambda r: abs(r[col]))
            piv = nz[0]
            for r in nz[1:]:
                q = r[col] // piv[col]
                for j in range(n):
                    r[j] -= q * piv[j]
            rows = [r for r in rows if any(r)]
        piv = next(r for r in rows if r[col] != 0)
        if piv[col] < 0:
            piv[:] = [-x for x in piv]
        rows = [r for r in rows if r is not piv]
        out.append(piv)
        col += 1
    # reduce entries above pivots
    for i, r in enumerate(out):
        p = next(j for j, x in enumerate(r) if x)
        for k in range(i):
            q = out[k][p] // r[p]
            if q:
                out[k] = [a - q * b for a, b in zip(out[k], r)]
    return out


class LatticeSubgroup(SubgroupOracle):
    """Subgroup of a free abelian group spanned by integer vectors."""

    kind = "lattice"
    normal = True

    def __init__(self, ambient: FreeAbelianGroup, name: str, vectors: Sequence[Sequence[int]]):
        if not isinstance(ambient, FreeAbelianGroup):
            raise UnsupportedGroup("lattice subgroups need a free abelian ambient group")
        vecs = [tuple(int(x) for x in v) for v in vectors]
        for v in vecs:
            if len(v) != len(ambient.gens):
                raise GroupError(f"vector {v} has wrong length for {ambient.name}")
        super().__init__(ambient, name, [ambient.from_vector(v) for v in vecs])
        self.vectors = vecs
        self.basis = hermite_rows(vecs)
        self.pivots = [next(j for j, x in enumerate(r) if x) for r in self.basis]

    def reduce(self, v) -> tuple:
        v = list(v)
        for r, p in zip(self.basis, self.pivots):
            q = v[p] // r[p]
            if q:
                v = [a - q * b for a, b in zip(v, r)]
        return tuple(v)

    def _key(self, g):
        return self.reduce(self.ambient.vector(g))

    def coset_element(self, g):
        return self.ambient.from_vector(self._key(tuple(g)))

    @property
    def rank(self) -> int:
        return len(self.basis)


class ExponentKernel(SubgroupOracle):
    """Kernel of a homomorphism to Z given by generator weights."""

    kind = "exponent-kernel"
    finitely_generated = False
    normal = True

    def __init__(self, ambient: GroupOracle, name: str, weights: dict):
        if not isinstance(ambient, (FreeGroup, FreeAbelianGroup)):
            raise UnsupportedGroup("exponent-sum kernels are built in for free and free abelian groups")
        self.weights = [int(weights.get(s, 0)) for s in ambient.gens]
        desc = "ker(" + " + ".join(f"{w}*{s}" for s, w in zip(ambient.gens, self.weights) if w) + ")"
        super().__init__(ambient, name, None, desc)
        if isinstance(ambient, FreeAbelianGroup):
            self.finitely_generated = True
        self._unit = None
        for i, w in enumerate(self.weights):
            if abs(w) == 1:
                self._unit = (i + 1) if w == 1 else -(i + 1)
                break
        self._step = gcd(*[abs(w) for w in self.weights]) if any(self.weights) else 0

    def value(self, g) -> int:
        return sum(self.weights[abs(x) - 1] * (1 if x > 0 else -1) for x in g)

    def _key(self, g):
        return self.value(g)

    def coset_element(self, g):
        v = self.value(g)
        if self._unit is None:
            return tuple(g)
        return self.ambient.normalize((self._unit,) * v if v >= 0 else (-self._unit,) * (-v))


class FreeFactorSubgroup(SubgroupOracle):
    """Subgroup generated by some free factors of a free group or free product.

    The coset key of Hg strips the maximal prefix of g lying in the factors.
    For a direct product the key deletes the factor's coordinates.
    """

    kind = "free-factor"

    def __init__(self, ambient: GroupOracle, name: str, factor_gens: Sequence[str]):
        idx = []
        for s in factor_gens:
            if s not in ambient._gen_index:
                raise GroupError(f"{s!r} is not a generator of {ambient.name}")
            idx.append(ambient._gen_index[s])
        if isinstance(ambient, FreeGroup):
            self._letters = {i + 1 for i in idx}
            self.mode = "prefix"
        elif isinstance(ambient, (FreeProduct, DirectProduct)):
            owners = {ambient._owner[i] for i in idx}
            full = set()
            for fi in owners:
                f = ambient.factors[fi]
                full |= {ambient.offsets[fi] + j + 1 for j in range(len(f.gens))}
            if full != {i + 1 for i in idx}:
                raise UnsupportedGroup("free-factor subgroups must consist of whole factors")
            self._letters = full
            self.mode = "prefix" if isinstance(ambient, FreeProduct) else "delete"
        else:
            raise UnsupportedGroup(f"free-factor subgroups are not built in for {ambient.kind}")
        super().__init__(ambient, name, [ambient.normalize((i + 1,)) for i in idx])

    def _key(self, g):
        if self.mode == "delete":
            return tuple(x for x in g if abs(x) not in self._letters)
        i = 0
        while i < len(g) and abs(g[i]) in self._letters:
            i += 1
        return g[i:]

    def coset_element(self, g):
        return self._key(tuple(g))


class StallingsSubgroup(SubgroupOracle):
    """Finitely generated subgroup of a free group via a folded core graph."""

    kind = "stallings"

    def __init__(self, ambient: FreeGroup, name: str, generators: Sequence):
        if not isinstance(ambient, FreeGroup):
            raise UnsupportedGroup("folding oracles need a free ambient group")
        super().__init__(ambient, name, generators)
        self.adj = self._fold([g for g in self.generators if g])
        self.paths = self._spanning_paths()

    @staticmethod
    def _fold(words) -> dict:
        parent: dict = {}

        def find(v):
            while parent.setdefault(v, v) != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        edges = []  # (u, letter>0, v)
        nxt = 1
        for w in words:
            cur = 0
            for k, x in enumerate(w):
                if k == len(w) - 1:
                    tgt = 0
                else:
                    tgt = nxt
                    nxt += 1
                if x > 0:
                    edges.append((cur, x, tgt))
                else:
                    edges.append((tgt, -x, cur))
                cur = tgt
        changed = True
        while changed:
            changed = False
            seen: dict = {}
            for u, x, v in edges:
                u, v = find(u), find(v)
                for key, other in (((u, x), v), ((v, -x), u)):
                    if key in seen and find(seen[key]) != other:
                        a, b = find(seen[key]), other
                        parent[max(a, b)] = min(a, b)
                        changed = True
                    seen.setdefault(key, other)
            edges = list({(find(u), x, find(v)) for u, x, v in edges})
        adj: dict = {0: {}}
        for u, x, v in edges:
            adj.setdefault(u, {})[x] = v
            adj.setdefault(v, {})[-x] = u
        return adj

    def _spanning_paths(self) -> dict:
        paths = {0: ()}
        q = deque([0])
        while q:
            v = q.popleft()
            for x in sorted(self.adj[v], key=letter_key):
                w = self.adj[v][x]
                if w not in paths:
                    paths[w] = paths[v] + (x,)
                    q.append(w)
        return paths

    def _key(self, g):
        v = 0
        i = 0
        while i < len(g) and g[i] in self.adj.get(v, {}):
            v = self.adj[v][g[i]]
            i += 1
        return (v, g[i:])

    def coset_element(self, g):
        v, rest = self._key(tuple(g))
        return self.ambient.normalize(self.paths[v] + rest)

    @property
    def core_size(self) -> int:
        return len(self.adj)


class GuirardelSubgroup(SubgroupOracle):
    """H = <b^k a b^-k : k >= 0> inside F(a, b).

    ker(f) for f(a)=0, f(b)=1 is free on x_k = b^k a b^-k, and H is the free
    factor on the x_k with k >= 0.  For a reduced word the x-word is read off
    from the heights (prefix b-exponent) of its a-letters.
    """

    kind = "guirardel"
    finitely_generated = False

    def __init__(self, ambient: FreeGroup, name: str = "H", a: str = "a", b: str = "b"):
        if not isinstance(ambient, FreeGroup) or len(ambient.gens) != 2:
            raise UnsupportedGroup("the ascending subgroup oracle lives in a free group of rank 2")
        self.a = ambient._gen_index[a] + 1
        self.b = ambient._gen_index[b] + 1
        super().__init__(ambient, name, None, f"<{b}^k {a} {b}^-k : k>=0>")

    def xword(self, g) -> tuple[list, int]:
        h = 0
        out = []
        for x in g:
            if abs(x) == self.b:
                h += 1 if x > 0 else -1
            else:
                out.append((h, 1 if x > 0 else -1))
        return out, h

    def member(self, g) -> bool:
        xs, f = self.xword(tuple(g))
        return f == 0 and all(h >= 0 for h, _ in xs)

    def _key(self, g):
        xs, f = self.xword(g)
        i = 0
        while i < len(xs) and xs[i][0] >= 0:
            i += 1
        return (tuple(xs[i:]), f)

    def coset_element(self, g):
        xs, f = self._key(tuple(g))
        word: list = []
        for h, e in xs:
            bl = (self.b,) * h if h >= 0 else (-self.b,) * (-h)
            word.extend(bl + ((self.a if e > 0 else -self.a),) + invert_word(bl))
        word.extend((self.b,) * f if f >= 0 else (-self.b,) * (-f))
        return self.ambient.normalize(word)


class ConjugateSubgroup(SubgroupOracle):
    """g H g^-1."""

    kind = "conjugate"

    def __init__(self, base: SubgroupOracle, g, name: str | None = None):
        G = base.ambient
        self.base = base
        self.g = G.normalize(g)
        self.g_inv = G.inv(self.g)
        gens = [G.conj(self.g, h) for h in base.generators] if base.generators is not None else None
        super().__init__(G, name or f"{G.format(self.g)}.{base.name}", gens,
                         f"{G.format(self.g)} {base.description} {G.format(self.g_inv)}")
        self.finitely_generated = base.finitely_generated

    def _key(self, x):
        return self.base._key(self.ambient.mul(self.g_inv, x))

    def member(self, x) -> bool:
        return self.base.member(self.ambient.mul(self.g_inv, x, self.g))

    def coset_element(self, x):
        G = self.ambient
        return G.mul(self.g, self.base.coset_element(G.mul(self.g_inv, x)))


class IntersectionSubgroup(SubgroupOracle):
    kind = "intersection"

    def __init__(self, first: SubgroupOracle, second: SubgroupOracle, name: str | None = None):
        super().__init__(first.ambient, name or f"{first.name}&{second.name}", None,
                         f"{first.describe()} ∩ {second.describe()}")
        self.first, self.second = first, second
        self.finitely_generated = first.finitely_generated and second.finitely_generated

    def _key(self, g):
        return (self.first.coset_rep(g), self.second.coset_rep(g))

    def member(self, g) -> bool:
        return self.first.member(g) and self.second.member(g)


class PointStabilizer(SubgroupOracle):
    """Stabilizer of a point of a G-set given by a keyed action g -> key(g^-1 . p).

    ``locate(x)`` must return a canonical key of x^-1 applied to the point.
    """

    kind = "stabilizer"

    def __init__(self, ambient: GroupOracle, name: str, locate, description: str,
                 finitely_generated: bool = True):
        super().__init__(ambient, name, None, description)
        self._locate = locate
        self.finitely_generated = finitely_generated

    def _key(self, g):
        return self._locate(g)


# -- Schreier graphs and ends ------------------------------------------------

@dataclass
class SchreierGraph:
    radius: int
    vertices: dict = field(default_factory=dict)  # key -> (representative, distance)
    edges: list = field(default_factory=list)  # (key, generator index, key)

    def graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.vertices)
        for u, i, v in self.edges:
            g.add_edge(u, v, gen=i)
        return g

    def loops(self) -> list:
        return [e for e in self.edges if e[0] == e[2]]


def schreier_ball(G: GroupOracle, H: SubgroupOracle, R: int, max_vertices: int = 200_000) -> SchreierGraph:
    if H.ambient is not G:
        raise GroupError("subgroup oracle belongs to a different group")
    base = H.coset_rep(())
    sg = SchreierGraph(R)
    sg.vertices[base] = ((), 0)
    order = [base]
    q = deque([base])
    letters = sorted(G.letters(), key=letter_key)
    while q:
        k = q.popleft()
        rep, d = sg.vertices[k]
        if d == R:
            continue
        for x in letters:
            g = G.normalize(rep + (x,))
            kk = H.coset_rep(g)
            if kk not in sg.vertices:
                if len(sg.vertices) >= max_vertices:
                    raise BudgetExceeded(f"Schreier ball exceeds {max_vertices} cosets")
                sg.vertices[kk] = (g, d + 1)
                order.append(kk)
                q.append(kk)
    for k in order:
        rep, _ = sg.vertices[k]
        for i in range(len(G.gens)):
            kk = H.coset_rep(G.normalize(rep + (i + 1,)))
            if kk in sg.vertices:
                sg.edges.append((k, i, kk))
    return sg


def ends_estimate(G: GroupOracle, H: SubgroupOracle, R: int, inner: int | None = None) -> dict:
    """Count unbounded-looking components of the Schreier ball minus an inner ball.

    Components reaching the outer sphere are counted; the count at a single
    radius is only an estimate of e(G, H).
    """
    inner = R // 2 if inner is None else inner
    sg = schreier_ball(G, H, R)
    g = nx.Graph()
    for k, (_, d) in sg.vertices.items():
        if d > inner:
            g.add_node(k)
    for u, _, v in sg.edges:
        if u in g and v in g:
            g.add_edge(u, v)
    comps = []
    for comp in nx.connected_components(g):
        reach = max(sg.vertices[k][1] for k in comp)
        if reach == R:
            comps.append(len(comp))
    return {"radius": R, "inner": inner, "cosets": len(sg.vertices), "components": len(comps),
            "component_sizes": sorted(comps, reverse=True)}
