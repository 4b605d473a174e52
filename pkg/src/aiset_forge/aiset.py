"""Almost invariant sets given by membership rules, evaluated on balls.

Size questions ("is this H-finite?") are answered from coset counts at
increasing radii.  Counts that stop growing between the last two radii make
a set Small; growth at three consecutive radii makes it Large.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .gog import GTree, InfiniteValence
from .groups import Ball, FreeAbelianGroup, GroupError, GroupOracle
from .subgroups import (
    ConjugateSubgroup,
    IntersectionSubgroup,
    LatticeSubgroup,
    SubgroupOracle,
    WholeGroup,
)


class SizeClass(str, Enum):
    EMPTY = "empty"
    SMALL = "small"
    LARGE = "large"
    INCONCLUSIVE = "inconclusive"

    @property
    def finite(self) -> bool:
        return self in (SizeClass.EMPTY, SizeClass.SMALL)


YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"


@dataclass
class Verdict:
    value: str
    at_radius: int
    stabilized: bool = False
    witness: object = None
    evidence: dict = field(default_factory=dict)

    @property
    def yes(self) -> bool:
        return self.value == YES

    @property
    def no(self) -> bool:
        return self.value == NO

    def to_dict(self) -> dict:
        return {"value": self.value, "at_radius": self.at_radius, "stabilized": self.stabilized,
                "witness": _jsonable(self.witness), "evidence": _jsonable(self.evidence)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def coset_counts(mask: np.ndarray, ids: np.ndarray, layer_ends: Sequence[int]) -> list[int]:
    """Cumulative number of distinct cosets met by the mask within each radius."""
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        return [0] * len(layer_ends)
    _, first = np.unique(ids[idx], return_index=True)
    pos = np.sort(idx[first])
    return [int(np.searchsorted(pos, e)) for e in layer_ends]


def classify(counts: Sequence[int]) -> SizeClass:
    R = len(counts) - 1
    if counts[R] == 0:
        return SizeClass.EMPTY
    if R >= 2 and counts[R - 2] < counts[R - 1] < counts[R]:
        return SizeClass.LARGE
    if R >= 1 and counts[R - 1] == counts[R] and (R == 1 or counts[R - 2] == counts[R]):
        return SizeClass.SMALL
    return SizeClass.INCONCLUSIVE


def size_class(mask: np.ndarray, subgroup: SubgroupOracle, ball: Ball) -> tuple[SizeClass, list[int]]:
    counts = coset_counts(mask, subgroup.coset_ids(ball), ball.layer_ends)
    return classify(counts), counts


# -- sets --------------------------------------------------------------------

class AlmostInvariantSet:
    rule = "abstract"

    def __init__(self, ambient: GroupOracle, stabilizer: SubgroupOracle, name: str):
        self.ambient = ambient
        self.stabilizer = stabilizer
        self.name = name
        self.certified_radius = -1
        self._masks: dict = {}

    def member(self, g) -> bool:
        raise NotImplementedError

    def _compute_mask(self, ball: Ball, start: int) -> np.ndarray:
        els = ball._elements
        return np.fromiter((self.member(els[i]) for i in range(start, ball.n)), dtype=bool,
                           count=ball.n - start)

    def mask(self, ball: Ball) -> np.ndarray:
        key = id(ball._elements)
        have = self._masks.get(key)
        if have is not None and len(have) >= ball.n:
            return have[: ball.n]
        start = 0 if have is None else len(have)
        new = self._compute_mask(ball, start)
        full = new if have is None else np.concatenate([have, new])
        self._masks[key] = full
        return full

    def describe(self) -> str:
        return self.name

    @property
    def complement(self) -> "AlmostInvariantSet":
        return Complement(self)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()}>"


class Complement(AlmostInvariantSet):
    rule = "complement"

    def __init__(self, base: AlmostInvariantSet):
        super().__init__(base.ambient, base.stabilizer, f"{base.name}*")
        self.base = base

    def member(self, g):
        return not self.base.member(g)

    def _compute_mask(self, ball, start):
        return ~self.base.mask(ball)[start:]

    @property
    def complement(self):
        return self.base

    def describe(self):
        return f"({self.base.describe()})*"


class Translate(AlmostInvariantSet):
    rule = "translate"

    def __init__(self, base: AlmostInvariantSet, g):
        G = base.ambient
        self.g = G.normalize(g)
        self.g_inv = G.inv(self.g)
        stab = base.stabilizer if base.stabilizer.normal else ConjugateSubgroup(base.stabilizer, self.g)
        super().__init__(G, stab, f"{G.format(self.g)}.{base.name}")
        self.base = base

    def member(self, h):
        return self.base.member(self.ambient.mul(self.g_inv, h))

    def describe(self):
        return f"{self.ambient.format(self.g)}·{self.base.describe()}"


class Combination(AlmostInvariantSet):
    """Intersection or union of sets (corners are intersections)."""

    rule = "combo"

    def __init__(self, op: str, parts: Sequence[AlmostInvariantSet], stabilizer: SubgroupOracle | None = None):
        if op not in ("and", "or"):
            raise ValueError("combination op must be 'and' or 'or'")
        G = parts[0].ambient
        if stabilizer is None:
            stabilizer = parts[0].stabilizer
            for p in parts[1:]:
                if p.stabilizer is not stabilizer:
                    stabilizer = IntersectionSubgroup(stabilizer, p.stabilizer)
        sym = " ∩ " if op == "and" else " ∪ "
        super().__init__(G, stabilizer, sym.join(p.name for p in parts))
        self.op = op
        self.parts = list(parts)

    def member(self, g):
        if self.op == "and":
            return all(p.member(g) for p in self.parts)
        return any(p.member(g) for p in self.parts)

    def _compute_mask(self, ball, start):
        ms = [p.mask(ball)[start:] for p in self.parts]
        out = ms[0].copy()
        for m in ms[1:]:
            out = (out & m) if self.op == "and" else (out | m)
        return out


class Constant(AlmostInvariantSet):
    rule = "constant"

    def __init__(self, ambient, value: bool, stabilizer=None, name=None):
        super().__init__(ambient, stabilizer or WholeGroup(ambient), name or ("G" if value else "∅"))
        self.value = value

    def member(self, g):
        return self.value


class RuleSet(AlmostInvariantSet):
    """Membership by an arbitrary pure predicate (used for derived constructions)."""

    rule = "predicate"

    def __init__(self, ambient, stabilizer, name, predicate: Callable, description: str | None = None):
        super().__init__(ambient, stabilizer, name)
        self.predicate = predicate
        self.description = description or name

    def member(self, g):
        return bool(self.predicate(tuple(g)))

    def describe(self):
        return self.description


class TreeHalfspace(AlmostInvariantSet):
    """Z_s = {g : g.w lies on the terminal side of the edge s = (o, t)}."""

    rule = "tree-halfspace"

    def __init__(self, tree: GTree, o, t, w, name: str = "Z", stabilizer: SubgroupOracle | None = None):
        if tree.dist(o, t) != 1:
            raise GroupError("tree halfspace needs an edge (adjacent endpoints)")
        self.tree, self.o, self.t, self.w = tree, o, t, w
        super().__init__(tree.group, stabilizer or tree.edge_stabilizer(o, t, f"Stab({name})"), name)

    def member(self, g):
        return self.tree.on_side(self.tree.translate(g, self.w), self.o, self.t)

    def _compute_mask(self, ball, start):
        m = self.tree.side_mask(ball, self.o, self.t, self.w)
        if m is None:
            return super()._compute_mask(ball, start)
        return m[start:]

    def describe(self):
        T = self.tree
        return f"halfspace[{T.describe(self.o)} -> {T.describe(self.t)}; base {T.describe(self.w)}]"


def integer_kernel(c: Sequence[int]) -> list[list[int]]:
    """Basis of the saturated lattice {v in Z^n : c.v = 0}."""
    n = len(c)
    row = list(map(int, c))
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # columns are U[.][j]
    # column operations to make row = (g, 0, ..., 0)
    while sum(1 for x in row if x) > 1 or (any(row) and row[0] == 0):
        nz = [j for j in range(n) if row[j]]
        p = min(nz, key=lambda j: abs(row[j]))
        if p != 0 and len(nz) == 1:
            row[0], row[p] = row[p], row[0]
            for i in range(n):
                U[i][0], U[i][p] = U[i][p], U[i][0]
            break
        for j in nz:
            if j != p:
                q = row[j] // row[p]
                row[j] -= q * row[p]
                for i in range(n):
                    U[i][j] -= q * U[i][p]
    piv = next((j for j in range(n) if row[j]), None)
    return [[U[i][j] for i in range(n)] for j in range(n) if j != piv]


class LinearHalfspace(AlmostInvariantSet):
    """{v : c.v >= threshold} in a free abelian group (closed halfspace)."""

    rule = "linear-halfspace"

    def __init__(self, ambient: FreeAbelianGroup, functional: Sequence[int], threshold: int = 0,
                 name: str = "X", stabilizer: SubgroupOracle | None = None):
        if not isinstance(ambient, FreeAbelianGroup):
            raise GroupError("linear halfspaces need a free abelian ambient group")
        self.functional = tuple(int(x) for x in functional)
        self.threshold = int(threshold)
        if stabilizer is None:
            stabilizer = LatticeSubgroup(ambient, f"ker({name})", integer_kernel(self.functional))
        super().__init__(ambient, stabilizer, name)

    def member(self, g):
        v = self.ambient.vector(g)
        return sum(a * b for a, b in zip(self.functional, v)) >= self.threshold

    def describe(self):
        terms = " + ".join(f"{c}*{s}" for c, s in zip(self.functional, self.ambient.gens) if c)
        return f"{{{terms} >= {self.threshold}}}"


class SchreierSeed(AlmostInvariantSet):
    """Union of H-cosets fixed by a finite seed of the Schreier graph H\\G.

    ``core`` is a finite set of cosets, ``inside`` the core cosets that belong
    to the set, and ``exits`` assigns a side to each edge leaving the core.  A
    coset outside the core lies in the component entered by the last exit of
    any path to it, so its side is the side of that exit.
    """

    rule = "schreier-seed"

    def __init__(self, H: SubgroupOracle, core: Sequence, inside: Sequence, exits: dict,
                 name: str = "X", default: bool | None = None):
        G = H.ambient
        self.H = H
        self.core = {H.coset_rep(G.normalize(g)) for g in core}
        self.inside = {H.coset_rep(G.normalize(g)) for g in inside}
        if not self.inside <= self.core:
            raise GroupError("inside cosets must belong to the core")
        self.exits = {}
        for (g, letter), side in exits.items():
            self.exits[(H.coset_rep(G.normalize(g)), letter)] = bool(side)
        self.default = default
        super().__init__(G, H, name)

    def member(self, g):
        G, H = self.ambient, self.H
        cur = H.coset_rep(())
        last = None
        prefix: tuple = ()
        for x in g:
            prefix = prefix + (x,)
            nxt = H.coset_rep(G.normalize(prefix))
            if cur in self.core and nxt not in self.core:
                last = (cur, x)
            cur = nxt
        if cur in self.core:
            return cur in self.inside
        if last is None:
            raise GroupError("walk never left the core although it ends outside it")
        if last in self.exits:
            return self.exits[last]
        if self.default is None:
            raise GroupError(f"no side assigned to exit {last}")
        return self.default

    def describe(self):
        return f"seed[{self.H.name}; core {len(self.core)}; inside {len(self.inside)}]"


class CosetToggle(AlmostInvariantSet):
    """X with finitely many H-cosets flipped (an equivalent set when H-finite)."""

    rule = "coset-toggle"

    def __init__(self, base: AlmostInvariantSet, cosets: Sequence, name: str | None = None):
        G = base.ambient
        self.base = base
        self.keys = {base.stabilizer.coset_rep(G.normalize(g)) for g in cosets}
        self.cosets = [G.normalize(g) for g in cosets]
        super().__init__(G, base.stabilizer, name or f"{base.name}~")

    def member(self, g):
        return self.base.member(g) != (self.stabilizer.coset_rep(g) in self.keys)

    def describe(self):
        flips = ", ".join(self.ambient.format(g) for g in self.cosets)
        return f"{self.base.describe()} xor H[{flips}]"


def translate(X: AlmostInvariantSet, g) -> AlmostInvariantSet:
    G = X.ambient
    g = G.normalize(g)
    if not g:
        return X
    cache = X.__dict__.setdefault("_translates", {})
    if g not in cache:
        cache[g] = _translate(X, g)
    return cache[g]


def _translate(X: AlmostInvariantSet, g) -> AlmostInvariantSet:
    G = X.ambient
    if type(X) is TreeHalfspace:
        # g.Z_e = Z_{g.e} with the same basepoint
        T = X.tree
        stab = X.stabilizer if X.stabilizer.normal else ConjugateSubgroup(X.stabilizer, g)
        return TreeHalfspace(T, T.translate(g, X.o), T.translate(g, X.t), X.w,
                             name=f"{G.format(g)}.{X.name}", stabilizer=stab)
    return Translate(X, g)


def corner(X, Y, x_side: bool = True, y_side: bool = True) -> AlmostInvariantSet:
    A = X if x_side else X.complement
    B = Y if y_side else Y.complement
    return Combination("and", [A, B], stabilizer=Y.stabilizer)


# -- operations --------------------------------------------------------------

@dataclass
class CoboundaryReport:
    radius: int
    edges: list
    orbit_count: int
    orbit_counts: list
    stabilized: bool

    def to_dict(self, G: GroupOracle) -> dict:
        return {"radius": self.radius, "edge_count": len(self.edges), "orbit_count": self.orbit_count,
                "orbit_counts": self.orbit_counts, "stabilized": self.stabilized,
                "edges": [[G.format(g), G.gens[i], G.format(h)] for g, i, h in self.edges[:50]]}


def coboundary(X: AlmostInvariantSet, R: int) -> CoboundaryReport:
    G = X.ambient
    H = X.stabilizer
    ball = G.ball(R)
    m = X.mask(ball)
    involution = [G.is_involution(i) for i in range(len(G.gens))]
    edges = []
    first_seen: dict = {}
    for a, g in enumerate(ball.elements):
        for i in range(len(G.gens)):
            h = G.normalize(g + (i + 1,))
            b = ball.index(h)
            if b is None or m[a] == m[b]:
                continue
            if involution[i] and b < a:
                continue
            edges.append((g, i, h))
            if involution[i]:
                key = (frozenset((H.coset_rep(g), H.coset_rep(h))), i)
            else:
                key = (H.coset_rep(g), i)
            layer = max(_layer_of(ball, a), _layer_of(ball, b))
            if key not in first_seen or first_seen[key] > layer:
                first_seen[key] = layer
    counts = [sum(1 for v in first_seen.values() if v <= r) for r in range(R + 1)]
    return CoboundaryReport(R, edges, counts[-1] if counts else 0, counts,
                            R >= 1 and counts[-1] == counts[-2])


def _layer_of(ball: Ball, i: int) -> int:
    for r, end in enumerate(ball.layer_ends):
        if i < end:
            return r
    raise IndexError(i)


def triviality(X: AlmostInvariantSet, R: int) -> Verdict:
    """Yes means nontrivial: both X and X* are H-infinite at radius R."""

    def at(r):
        ball = X.ambient.ball(r)
        m = X.mask(ball)
        ids = X.stabilizer.coset_ids(ball)
        cin = coset_counts(m, ids, ball.layer_ends)
        cout = coset_counts(~m, ids, ball.layer_ends)
        grow = lambda c: r >= 1 and c[-1] >= 2 and c[-1] > c[-2]
        if grow(cin) and grow(cout):
            return YES, cin, cout
        if (r >= 1 and cin[-1] == cin[-2]) or (r >= 1 and cout[-1] == cout[-2]):
            return NO, cin, cout
        return INCONCLUSIVE, cin, cout

    v, cin, cout = at(R)
    prev = at(R - 1)[0] if R >= 1 else None
    return Verdict(v, R, prev == v, evidence={"inside_counts": cin, "outside_counts": cout})


def equivalent(X: AlmostInvariantSet, Y: AlmostInvariantSet, R: int) -> Verdict:
    if X.ambient is not Y.ambient:
        raise GroupError("sets live in different groups")

    def at(r):
        ball = X.ambient.ball(r)
        diff = X.mask(ball) ^ Y.mask(ball)
        cls, counts = size_class(diff, X.stabilizer, ball)
        v = YES if cls.finite else (NO if cls == SizeClass.LARGE else INCONCLUSIVE)
        return v, cls, counts

    v, cls, counts = at(R)
    prev = at(R - 1)[0] if R >= 1 else None
    return Verdict(v, R, prev == v, witness=counts[-1],
                   evidence={"difference": cls.value, "coset_counts": counts})


def commensurable(H: SubgroupOracle, K: SubgroupOracle, R: int) -> Verdict:
    """H and K commensurable: (H∩K)-coset counts inside H and inside K stop growing."""
    G = H.ambient
    ball = G.ball(R)
    L = IntersectionSubgroup(H, K)
    ids = L.coset_ids(ball)
    res = {}
    for name, S in (("H", H), ("K", K)):
        m = np.fromiter((S.member(g) for g in ball.elements), dtype=bool, count=ball.n)
        res[name] = coset_counts(m, ids, ball.layer_ends)
    fin = all(c[-1] == c[-2] for c in res.values()) if R >= 1 else False
    grow = any(R >= 2 and c[-3] < c[-2] < c[-1] for c in res.values())
    return Verdict(YES if fin else (NO if grow else INCONCLUSIVE), R, fin, evidence=res)


@dataclass
class InvertibilityResult:
    witness: tuple | None
    search_radius: int
    eval_radius: int

    def to_dict(self, G) -> dict:
        return {"witness": None if self.witness is None else G.format(self.witness),
                "search_radius": self.search_radius, "eval_radius": self.eval_radius}


def invertibility_search(X: AlmostInvariantSet, R: int, eval_radius: int | None = None) -> InvertibilityResult:
    G = X.ambient
    E = eval_radius if eval_radius is not None else R + 2
    ball = G.ball(E)
    target = ~X.mask(ball)
    small = G.ball(min(2, E))
    target_small = target[: small.n]
    if not target.any():
        return InvertibilityResult(None, R, E)
    for g in G.ball(R).elements:
        T = translate(X, g)
        if not np.array_equal(T.mask(small), target_small):
            continue
        if np.array_equal(T.mask(ball), target):
            return InvertibilityResult(g, R, E)
    return InvertibilityResult(None, R, E)


def strict_enclosing_check(A: AlmostInvariantSet, tree: GTree, v, w, R: int) -> Verdict:
    """Every edge at v pointing towards v has its far side pulled back into A or A*.

    phi(g) = g.w; the far side of the edge from u to v is the set of tree
    points whose geodesic from v leaves through u.
    """
    G = A.ambient
    ball = G.ball(R)
    m = A.mask(ball)
    kv = tree.key(v)
    classes: dict = {}
    for i, g in enumerate(ball.elements):
        x = tree.translate(g, w)
        if tree.key(x) == kv:
            continue
        u = tree.toward(v, x)
        ku = tree.key(u)
        rec = classes.setdefault(ku, {"vertex": u, "in": None, "out": None})
        side = "in" if m[i] else "out"
        if rec[side] is None:
            rec[side] = g
    bad = [(k, r) for k, r in classes.items() if r["in"] is not None and r["out"] is not None]
    unseen = []
    try:
        for u in tree.neighbours(v):
            if tree.key(u) not in classes:
                unseen.append(tree.describe(u))
    except InfiniteValence:
        unseen = None
    ev = {"directions_seen": len(classes), "unseen_neighbours": unseen}
    if bad:
        k, r = bad[0]
        wit = {"edge": f"{tree.describe(r['vertex'])} -> {tree.describe(v)}",
               "in_A": G.format(r["in"]), "in_A*": G.format(r["out"])}
        return Verdict(NO, R, True, witness=wit, evidence=ev)
    return Verdict(YES, R, not unseen, evidence=ev)
