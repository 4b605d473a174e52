"""Group systems, relative Cayley balls, the angle metric, adaptedness and extensions."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .aiset import (
    INCONCLUSIVE,
    NO,
    YES,
    AlmostInvariantSet,
    SizeClass,
    Verdict,
    classify,
)
from .gog import BassSerreTree, FundamentalGroup, GEdge, GraphOfGroups, Injection
from .groups import FreeAbelianGroup, FreeGroup, GroupError, GroupOracle, UnsupportedGroup, letter_key
from .subgroups import SubgroupOracle, TrivialSubgroup


class AmbiguityError(GroupError):
    """The canonical enlargement is not unique (some coset gS_i is H-finite)."""


class NotAdapted(GroupError):
    pass


@dataclass
class GroupSystem:
    group: GroupOracle
    family: list = field(default_factory=list)
    relative_generators: list = field(default_factory=list)
    name: str = "system"

    def __post_init__(self):
        for S in self.family:
            if S.ambient is not self.group:
                raise GroupError(f"family member {S.name} lives in another group")
        if not self.relative_generators:
            self.relative_generators = [(i + 1,) for i in range(len(self.group.gens))]

    def finite_type_check(self, R: int = 4) -> Verdict:
        """Every generator of G is a product of at most R relative generators and family generators."""
        G = self.group
        steps = set()
        for a in self.relative_generators:
            steps.add(G.normalize(a))
            steps.add(G.inv(a))
        for S in self.family:
            for s in S.generators or []:
                steps.add(s)
                steps.add(G.inv(s))
        reached = {()}
        frontier = [()]
        for _ in range(R):
            nxt = []
            for g in frontier:
                for s in steps:
                    h = G.mul(g, s)
                    if h not in reached:
                        reached.add(h)
                        nxt.append(h)
            frontier = nxt
        missing = [G.gens[i] for i in range(len(G.gens)) if (i + 1,) not in reached]
        return Verdict(NO if missing else YES, R, not missing, witness=missing or None)


# -- angle metric ------------------------------------------------------------

@dataclass(frozen=True)
class Unreachable:
    budget: int

    def __repr__(self):
        return f"Unreachable({self.budget})"


def subgroup_generating_set(S: SubgroupOracle) -> list:
    """Declared generators; for a cyclic subgroup <s> the powers s, s^2, s^3, ... (weight n for the n-th)."""
    if S.generators is None:
        raise UnsupportedGroup(f"subgroup {S.name} has no declared generators for the angle metric")
    return list(S.generators)


def subgroup_word_lengths(S: SubgroupOracle, budget: int) -> dict:
    """Weighted word length d_S on elements of S with length <= budget (n-th generator has weight n)."""
    G = S.ambient
    gens = subgroup_generating_set(S)
    cyclic = len(gens) == 1
    moves = []
    if cyclic:
        s = gens[0]
        for n in range(1, budget + 1):
            p = G.power(s, n)
            moves.append((p, n))
            moves.append((G.inv(p), n))
    else:
        for n, s in enumerate(gens, start=1):
            moves.append((s, n))
            moves.append((G.inv(s), n))
    dist = {(): 0}
    heap = [(0, ())]
    while heap:
        d, g = heapq.heappop(heap)
        if d > dist.get(g, d):
            continue
        for m, w in moves:
            nd = d + w
            if nd > budget:
                continue
            h = G.mul(g, m)
            if nd < dist.get(h, budget + 1):
                dist[h] = nd
                heapq.heappush(heap, (nd, h))
    return dist


def _angle_moves(sys: GroupSystem, budget: int) -> list:
    G = sys.group
    moves = {}
    for a in sys.relative_generators:
        for m in (G.normalize(a), G.inv(a)):
            moves[m] = min(moves.get(m, 1), 1)
    for S in sys.family:
        for s, w in subgroup_word_lengths(S, budget).items():
            if s and w < moves.get(s, budget + 1):
                moves[s] = w
    return sorted(moves.items(), key=lambda kv: (kv[1], len(kv[0]), [letter_key(x) for x in kv[0]]))


def angle_neighbourhood(sys: GroupSystem, R: int, max_size: int = 200_000) -> dict:
    """N_R(1): element -> angle distance, by Dijkstra with plain moves of cost 1 and cone jumps."""
    G = sys.group
    moves = _angle_moves(sys, R)
    dist = {(): 0}
    heap = [(0, 0, ())]
    tick = 0
    while heap:
        d, _, g = heapq.heappop(heap)
        if d > dist[g]:
            continue
        for m, w in moves:
            nd = d + w
            if nd > R:
                continue
            h = G.mul(g, m)
            if nd < dist.get(h, R + 1):
                if h not in dist and len(dist) >= max_size:
                    from .groups import BudgetExceeded
                    raise BudgetExceeded(f"angle ball exceeds {max_size} elements")
                dist[h] = nd
                tick += 1
                heapq.heappush(heap, (nd, tick, h))
    return dist


def angle_distance(sys: GroupSystem, g, h, budget: int):
    G = sys.group
    t = G.mul(G.inv(G.normalize(g)), G.normalize(h))
    d = angle_neighbourhood(sys, budget).get(t)
    return Unreachable(budget) if d is None else d


@dataclass
class RelativeCayleyBall:
    radius: int
    plain: dict  # element -> angle distance
    cones: dict  # label -> {"subgroup": j, "rep": g, "members": [...]}
    plain_edges: list
    cone_edges: list  # (element, label)

    def to_dict(self, G) -> dict:
        return {"radius": self.radius, "plain_vertices": len(self.plain), "cone_vertices": len(self.cones),
                "cones": sorted(c["display"] for c in self.cones.values()),
                "plain_edges": len(self.plain_edges), "cone_edges": len(self.cone_edges)}


def cone_label(S: SubgroupOracle, j: int, g) -> tuple:
    """Left coset gS as a hashable key (gS = (S g^-1)^-1)."""
    return (j, S.coset_rep(S.ambient.inv(g)))


def relative_ball(sys: GroupSystem, R: int) -> RelativeCayleyBall:
    G = sys.group
    plain = angle_neighbourhood(sys, R)
    order = sorted(plain, key=lambda g: (plain[g], len(g), [letter_key(x) for x in g]))
    plain = {g: plain[g] for g in order}
    cones: dict = {}
    cone_edges = []
    for g in order:
        for j, S in enumerate(sys.family):
            lab = cone_label(S, j, g)
            if lab not in cones:
                cones[lab] = {"subgroup": j, "rep": g, "members": [],
                              "display": f"{G.format(g) if g else ''}{S.name}"}
            cones[lab]["members"].append(g)
            cone_edges.append((g, lab))
    plain_edges = []
    for g in order:
        for i in range(len(G.gens)):
            h = G.normalize(g + (i + 1,))
            if h in plain:
                plain_edges.append((g, i, h))
    return RelativeCayleyBall(R, plain, cones, plain_edges, cone_edges)


# -- adaptedness -------------------------------------------------------------

@dataclass
class CosetSides:
    key: tuple
    rep: tuple
    first_layer: int
    inside: list  # cumulative H-coset counts by radius
    outside: list

    @property
    def mixed(self) -> bool:
        return self.inside[-1] > 0 and self.outside[-1] > 0

    def sides(self) -> tuple[SizeClass, SizeClass]:
        return classify(self.inside), classify(self.outside)


def coset_sides(X: AlmostInvariantSet, S: SubgroupOracle, R: int) -> list[CosetSides]:
    """For each left coset gS meeting ball(R): H-coset counts of gS∩X and gS∩X* by radius."""
    G = X.ambient
    ball = G.ball(R)
    m = X.mask(ball)
    hids = X.stabilizer.coset_ids(ball)
    layers = ball.layers()
    first: dict = {}
    seen: dict = {}
    for i, g in enumerate(ball.elements):
        c = S.coset_rep(G.inv(g))
        if c not in first:
            first[c] = (i, g)
        key = (c, bool(m[i]), int(hids[i]))
        if key not in seen:
            seen[key] = int(layers[i])
    counts: dict = {c: ([0] * (R + 1), [0] * (R + 1)) for c in first}
    for (c, side, _), r in seen.items():
        arr = counts[c][0 if side else 1]
        for k in range(r, R + 1):
            arr[k] += 1
    out = []
    for c, (i, g) in sorted(first.items(), key=lambda kv: kv[1][0]):
        cin, cout = counts[c]
        out.append(CosetSides(c, g, int(layers[i]), cin, cout))
    return out


def _adapted_value(X, S, R):
    mixed = []
    bad = None
    unsure = False
    for cs in coset_sides(X, S, R):
        if not cs.mixed or cs.first_layer > R - 2:
            continue
        a, b = cs.sides()
        mixed.append(cs)
        if a == SizeClass.LARGE and b == SizeClass.LARGE:
            bad = bad or cs
        elif not (a.finite or b.finite):
            unsure = True
    if bad is not None:
        return NO, mixed, bad
    return (INCONCLUSIVE if unsure else YES), mixed, None


def adaptedness(X: AlmostInvariantSet, S: SubgroupOracle, R: int) -> Verdict:
    G = X.ambient
    v, mixed, bad = _adapted_value(X, S, R)
    prev = _adapted_value(X, S, R - 1)[0] if R >= 3 else None
    ev = {"mixed_cosets": [f"{G.format(c.rep) or '1'}{S.name}" for c in mixed[:20]],
          "mixed_count": len(mixed), "strictly_adapted": not mixed}
    wit = None
    if bad is not None:
        wit = {"coset": f"{G.format(bad.rep) or '1'}{S.name}", "inside_counts": bad.inside,
               "outside_counts": bad.outside}
    return Verdict(v, R, prev == v, witness=wit, evidence=ev)


@dataclass
class MixedCosets:
    representatives: list
    count: int
    stabilized: bool

    def to_dict(self, G, S) -> dict:
        return {"double_cosets": [f"H{G.format(g) or '1'}{S.name}" for g in self.representatives],
                "count": self.count, "stabilized": self.stabilized}


def mixed_cone_cosets(X: AlmostInvariantSet, S: SubgroupOracle, R: int) -> MixedCosets:
    """Double cosets H g S with gS meeting both X and X*, merged by H- and S-generator moves."""
    G = X.ambient
    H = X.stabilizer

    def at(r):
        reps = [cs.rep for cs in coset_sides(X, S, r) if cs.mixed]
        parent = list(range(len(reps)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        by_key = {}
        for i, g in enumerate(reps):
            by_key.setdefault(S.coset_rep(G.inv(g)), i)
        for i, g in enumerate(reps):
            # moves g -> h g; the new coset h g S is found via its key
            for h in H.generators or []:
                for hh in (h, G.inv(h)):
                    j = by_key.get(S.coset_rep(G.inv(G.mul(hh, g))))
                    if j is not None:
                        ri, rj = find(i), find(j)
                        if ri != rj:
                            parent[max(ri, rj)] = min(ri, rj)
        roots = sorted({find(i) for i in range(len(reps))})
        return [reps[i] for i in roots]

    reps = at(R)
    prev = at(R - 1) if R >= 1 else []
    return MixedCosets(reps, len(reps), len(prev) == len(reps))


# -- enlargements ------------------------------------------------------------

@dataclass
class Enlargement:
    base: AlmostInvariantSet
    assignment: dict  # cone label -> bool
    displays: dict
    coboundary_counts: list
    cone_edges_in_coboundary: int
    stabilized: bool

    def to_dict(self) -> dict:
        return {"set": self.base.describe(),
                "cones_in": sorted(self.displays[k] for k, v in self.assignment.items() if v),
                "cones_out": sorted(self.displays[k] for k, v in self.assignment.items() if not v),
                "coboundary_orbit_counts": self.coboundary_counts,
                "cone_edges_in_coboundary": self.cone_edges_in_coboundary, "stabilized": self.stabilized}


def _coset_classes(X, S, R):
    return {cs.key: cs for cs in coset_sides(X, S, R)}


def canonical_enlargement(X: AlmostInvariantSet, sys: GroupSystem, R: int) -> Enlargement:
    """Cone gS_i goes in iff gS_i ∩ X is H-infinite."""
    rb = relative_ball(sys, R)
    assign, displays = {}, {}
    classes = [_coset_classes(X, S, R + 2) for S in sys.family]
    for lab, cone in rb.cones.items():
        j = cone["subgroup"]
        cs = classes[j].get(lab[1])
        if cs is None:
            raise GroupError(f"cone {cone['display']} not seen in the evaluation ball")
        total = [a + b for a, b in zip(cs.inside, cs.outside)]
        if cs.first_layer <= R and classify(total).finite:
            raise AmbiguityError(f"coset {cone['display']} is H-finite; the enlargement is not unique")
        a, _ = cs.sides()
        assign[lab] = a == SizeClass.LARGE
        displays[lab] = cone["display"]
    return _enlargement_report(X, sys, rb, assign, displays)


def _enlargement_report(X, sys, rb, assign, displays) -> Enlargement:
    H = X.stabilizer
    first: dict = {}
    cone_cob = 0
    for g, i, h in rb.plain_edges:
        if X.member(g) != X.member(h):
            key = ("p", H.coset_rep(g), i)
            r = max(rb.plain[g], rb.plain[h])
            first[key] = min(first.get(key, r), r)
    for g, lab in rb.cone_edges:
        if X.member(g) != assign[lab]:
            cone_cob += 1
            key = ("c", H.coset_rep(g), lab[0])
            first[key] = min(first.get(key, rb.plain[g]), rb.plain[g])
    counts = [sum(1 for v in first.values() if v <= r) for r in range(rb.radius + 1)]
    stab = len(counts) >= 2 and counts[-1] == counts[-2]
    return Enlargement(X, assign, displays, counts, cone_cob, stab)


@dataclass
class ConeSides:
    inside: list  # cumulative H-coset counts of gS∩X by weighted length in S
    outside: list

    @property
    def classes(self) -> tuple[SizeClass, SizeClass]:
        return classify(self.inside), classify(self.outside)


class ConeClassifier:
    """Classifies gS_j ∩ X and gS_j ∩ X* over S_j-elements of weighted length <= R around g."""

    def __init__(self, X: AlmostInvariantSet, sys: GroupSystem, R: int = 6):
        self.X, self.sys, self.R = X, sys, R
        self._lengths = [subgroup_word_lengths(S, R) for S in sys.family]
        self._cache: dict = {}

    def sides(self, j: int, g) -> ConeSides:
        S = self.sys.family[j]
        lab = cone_label(S, j, g)
        hit = self._cache.get(lab)
        if hit is not None:
            return hit
        G = self.sys.group
        H = self.X.stabilizer
        first_in, first_out = {}, {}
        for s, w in self._lengths[j].items():
            x = G.mul(g, s)
            side = first_in if self.X.member(x) else first_out
            k = H.coset_rep(x)
            side[k] = min(side.get(k, w), w)
        cum = lambda d: [sum(1 for v in d.values() if v <= r) for r in range(self.R + 1)]
        res = ConeSides(cum(first_in), cum(first_out))
        self._cache[lab] = res
        return res

    def augmented(self, j: int, g) -> bool:
        """Cone in the augmenting enlargement Y: X-part non-empty and X*-part H-finite."""
        cs = self.sides(j, g)
        return cs.inside[-1] > 0 and cs.classes[1].finite

    def proof_side(self, j: int, g) -> bool:
        """Empty X-part: out; empty X*-part: in; otherwise the side that is not H-finite."""
        cs = self.sides(j, g)
        if cs.inside[-1] == 0:
            return False
        if cs.outside[-1] == 0:
            return True
        return not cs.classes[0].finite


def standard_augmentation(X: AlmostInvariantSet, sys: GroupSystem, R: int, adapted: Verdict | None = None):
    """Returns (cone assignment of Y on the relative ball, X̂∩G as a set)."""
    for S in sys.family:
        v = adapted if adapted is not None else adaptedness(X, S, R + 2)
        if not v.yes:
            raise NotAdapted(f"adaptedness of {X.name} to {S.name} not established ({v.value})")
    cc = ConeClassifier(X, sys, max(R, 4))
    rb = relative_ball(sys, R)
    assign = {lab: cc.augmented(cone["subgroup"], cone["rep"]) for lab, cone in rb.cones.items()}
    return assign, AugmentedSet(X, sys, cc)


class AugmentedSet(AlmostInvariantSet):
    """X plus every point of G joined by a cone edge to a cone of Y."""

    rule = "augmentation"

    def __init__(self, base: AlmostInvariantSet, sys: GroupSystem, classifier: ConeClassifier):
        super().__init__(base.ambient, base.stabilizer, f"{base.name}^")
        self.base = base
        self.sys = sys
        self.classifier = classifier

    def member(self, g):
        if self.base.member(g):
            return True
        return any(self.classifier.augmented(j, g) for j in range(len(self.sys.family)))

    def describe(self):
        return f"augmentation({self.base.describe()})"


# -- standard extensions -----------------------------------------------------

class ExtendedSubgroup(SubgroupOracle):
    """A subgroup of the vertex group G seen inside the composite group."""

    kind = "extended"

    def __init__(self, inner: SubgroupOracle, composite: FundamentalGroup):
        gens = None
        if inner.generators is not None:
            gens = [composite.vertex_element("G", g) for g in inner.generators]
        super().__init__(composite, inner.name, gens, inner.description)
        self.inner = inner
        self.composite = composite

    def member(self, g) -> bool:
        p = self.composite.path_word(g)
        return not p.e and self.inner.member(p.g[0])

    def _key(self, g):
        raise UnsupportedGroup("coset keys in the composite group are only built in for the trivial subgroup")


def _edge_group_for(S: SubgroupOracle, G: GroupOracle):
    gens = subgroup_generating_set(S)
    if isinstance(G, FreeAbelianGroup):
        return FreeAbelianGroup(f"E_{S.name}", [f"{S.name}_{k}" for k in range(len(gens))]), gens
    if isinstance(G, FreeGroup) and len(gens) == 1:
        return FreeGroup(f"E_{S.name}", [f"{S.name}_0"]), gens
    raise UnsupportedGroup(f"standard extension over {S.name} in a {G.kind} group is not built in")


def build_composite(sys: GroupSystem, companions: dict) -> FundamentalGroup:
    """G amalgamated with a companion A_i over each S_i (companion images given per generator)."""
    G = sys.group
    vertices = {"G": G}
    edges = []
    for j, S in enumerate(sys.family):
        if S.name not in companions:
            raise GroupError(f"no companion group given for {S.name}")
        A, images = companions[S.name]
        E, gens = _edge_group_for(S, G)
        if len(images) != len(gens):
            raise GroupError(f"companion of {S.name} must give one image per generator of {S.name}")
        vname = f"A{j}"
        vertices[vname] = A
        edges.append(GEdge(f"e{j}", "G", vname, E, Injection(E, G, gens), Injection(E, A, images)))
    gog = GraphOfGroups(f"{G.name}*", vertices, edges, "G")
    problems = gog.check()
    if problems:
        raise GroupError("companion does not contain the family subgroup: " + "; ".join(problems))
    return FundamentalGroup(gog)


class ExtendedSet(AlmostInvariantSet):
    """X̄: on G it is X; elsewhere the label of the cone g0 S_j through which the
    reduced path word leaves the G-vertex."""

    rule = "extension"

    def __init__(self, X: AlmostInvariantSet, sys: GroupSystem, composite: FundamentalGroup, R: int = 4):
        if isinstance(X.stabilizer, TrivialSubgroup):
            stab = TrivialSubgroup(composite)
        else:
            stab = ExtendedSubgroup(X.stabilizer, composite)
        super().__init__(composite, stab, f"{X.name}‾")
        self.base = X
        self.sys = sys
        self.classifier = ConeClassifier(X, sys, R)

    def member(self, g):
        p = self.ambient.path_word(g)
        if not p.e:
            return self.base.member(p.g[0])
        return self.classifier.proof_side(p.e[0][0], p.g[0])

    def restrict_mask(self, ball) -> np.ndarray:
        """Membership of X̄ on the image of a ball of G."""
        C = self.ambient
        return np.fromiter((self.member(embed(C, g)) for g in ball.elements), dtype=bool, count=ball.n)

    def describe(self):
        return f"extension({self.base.describe()})"


def standard_extension(sys: GroupSystem, X: AlmostInvariantSet, companions: dict, R: int = 4,
                       composite: FundamentalGroup | None = None) -> AlmostInvariantSet:
    if not sys.family:
        return X
    C = composite or build_composite(sys, companions)
    return ExtendedSet(X, sys, C, R)


def embed(composite: FundamentalGroup, g) -> tuple:
    """Image of an element of the vertex group G in the composite group."""
    return composite.vertex_element("G", g)


def extension_tree_check(Xbar: "ExtendedSet", R: int) -> Verdict:
    from .aiset import strict_enclosing_check
    T = BassSerreTree(Xbar.ambient)
    v = T.vertex()
    return strict_enclosing_check(Xbar, T, v, v, R)
