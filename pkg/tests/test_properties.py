"""Randomized invariants over perturbed fixture sets."""

from itertools import combinations, product

import networkx as nx
import numpy as np
from hypothesis import assume, given, settings, strategies as st

from aiset_forge.adapt import GroupSystem, angle_distance, angle_neighbourhood
from aiset_forge.aiset import Complement, CosetToggle, LinearHalfspace, coboundary, translate
from aiset_forge.crossing import corners, crossing
from aiset_forge.cubing import collect_walls, enumerate_ultrafilters
from aiset_forge.groups import free_abelian, free_group
from aiset_forge.regnbhd import pretree_check, star_construction, vertex_pretree
from aiset_forge.subgroups import LatticeSubgroup, StallingsSubgroup

from conftest import fixture

Z2 = free_abelian(["x", "y"], "Z2")
F2 = free_group(["a", "b"], "F2")
CASES = 40

BASES = [("ladder", "Y"), ("quadrants", "X1"), ("quadrants", "X2"), ("nested-chain", "X"), ("torus", "X"),
         ("amalgam-one-edge", "X")]


@st.composite
def perturbed(draw, bases=BASES):
    """A fixture set moved by a ball element, with a few stabilizer cosets toggled, maybe complemented."""
    name, set_name = draw(st.sampled_from(bases))
    S = fixture(name)
    X = S.sets[set_name]
    G = S.group
    near = G.ball(2).elements
    X = translate(X, draw(st.sampled_from(near)))
    flips = draw(st.lists(st.sampled_from(near), max_size=2, unique=True))
    if flips:
        X = CosetToggle(X, flips, X.name)
    if draw(st.booleans()):
        X = Complement(X)
    return X


functionals = st.sampled_from([(0, 1), (1, 0), (1, 1), (1, -1), (0, -1), (-1, 0), (-1, 1), (-1, -1)])


@st.composite
def linear(draw):
    c = draw(functionals)
    return LinearHalfspace(Z2, c, draw(st.integers(-2, 2)), f"L{c}")


@settings(max_examples=CASES)
@given(perturbed())
def test_double_complement(X):
    ball = X.ambient.ball(4)
    assert np.array_equal(Complement(Complement(X)).mask(ball), X.mask(ball))


@settings(max_examples=CASES)
@given(perturbed(), st.integers(1, 4))
def test_coboundary_equals_coboundary_of_complement(X, R):
    a = {frozenset((g, h)) for g, _, h in coboundary(X, R).edges}
    b = {frozenset((g, h)) for g, _, h in coboundary(X.complement, R).edges}
    assert a == b


@settings(max_examples=CASES)
@given(st.data())
def test_corner_transposition(data):
    X = data.draw(perturbed())
    group_bases = [b for b in BASES if fixture(b[0]).group is X.ambient]
    Y = data.draw(perturbed(group_bases))
    R = 5
    a, b = corners(X, Y, R), corners(Y, X, R)
    for (xs, ys), c in a.corners.items():
        t = b[(ys, xs)]
        assert c.size == t.size_x and c.size_x == t.size
        assert c.counts == t.counts_x
    # complementing X swaps the rows
    c = corners(X.complement, Y, R)
    for (xs, ys), k in a.corners.items():
        assert c[(not xs, ys)].size == k.size


@settings(max_examples=CASES)
@given(linear(), linear())
def test_crossing_is_symmetric_on_adapted_pairs(X, Y):
    # linear halfspaces of Z^2 are adapted to the trivial family
    a = crossing(X, Y, 6, with_strength=False).verdict.value
    b = crossing(Y, X, 6, with_strength=False).verdict.value
    assert a == b


def _angle_systems():
    A = StallingsSubgroup(F2, "A", [F2.parse("a")])
    A2 = StallingsSubgroup(F2, "A2", [F2.parse("a^2")])
    Sx = LatticeSubgroup(Z2, "Sx", [[1, 0]])
    Sx.generators = [Z2.parse("x")]
    return [GroupSystem(F2, [A], [F2.parse("b")]), GroupSystem(F2, [A2], [F2.parse("a"), F2.parse("b")]),
            GroupSystem(Z2, [Sx], [Z2.parse("y")])]


SYSTEMS = _angle_systems()
ANGLE_R = 2
NBHD = [angle_neighbourhood(s, 2 * ANGLE_R) for s in SYSTEMS]


@settings(max_examples=CASES)
@given(st.data())
def test_angle_metric(data):
    i = data.draw(st.integers(0, len(SYSTEMS) - 1))
    sysm, N = SYSTEMS[i], NBHD[i]
    G = sysm.group
    near = [g for g, d in N.items() if d <= 2]
    g, h, k = (data.draw(st.sampled_from(sorted(near))) for _ in range(3))

    def d(u, v):
        return N.get(G.mul(G.inv(u), v))

    assert d(g, g) == 0
    assert d(g, h) == d(h, g)
    if d(g, h) is not None and d(h, k) is not None:
        assert d(g, k) is not None and d(g, k) <= d(g, h) + d(h, k)
    kk = data.draw(st.sampled_from(sorted(near)))
    assert angle_distance(sysm, G.mul(kk, g), G.mul(kk, h), 2 * ANGLE_R) == angle_distance(sysm, g, h, 2 * ANGLE_R)


def _independent_ultrafilter(M, bits):
    chosen = [M[p] if b else ~M[p] for p, b in enumerate(bits)]
    if not all((a & b).any() for a, b in combinations(chosen, 2)):
        return False
    for a in chosen:
        for q in range(len(M)):
            for s in (True, False):
                B = M[q] if s else ~M[q]
                if not (a & ~B).any() and bits[q] != s:
                    return False
    return True


@settings(max_examples=CASES)
@given(st.lists(linear(), min_size=1, max_size=2))
def test_ultrafilters_recheck(family):
    try:
        W = collect_walls(family, 1, 4)
    except Exception:
        assume(False)
    ufs = enumerate_ultrafilters(W)
    assert ufs
    M = W.masks
    assert all(_independent_ultrafilter(M, v) for v in ufs)
    if len(W) <= 10:
        brute = [v for v in product((False, True), repeat=len(W)) if _independent_ultrafilter(M, v)]
        assert sorted(brute) == sorted(ufs)


def _axioms_brute(B):
    n = B.shape[0]
    for x, y, z in product(range(n), repeat=3):
        if B[x, y, z]:
            if len({x, y, z}) < 3 or not B[z, y, x] or B[x, z, y]:
                return False
            for w in range(n):
                if w != y and not B[x, y, w] and not B[w, y, z]:
                    return False
    return True


@settings(max_examples=CASES)
@given(st.data())
def test_pretree_axioms_on_cccs(data):
    choice = data.draw(st.sampled_from(["linear", "ladder", "chain", "amalgam"]))
    if choice == "linear":
        family, b = data.draw(st.lists(linear(), min_size=1, max_size=2)), 1
    else:
        name, sets = {"ladder": ("ladder", ["Y"]), "chain": ("nested-chain", ["X"]),
                      "amalgam": ("amalgam-one-edge", ["X"])}[choice]
        S = fixture(name)
        family, b = [S.sets[n] for n in sets], data.draw(st.integers(1, 2))
    rep = pretree_check(family, b, axiom_budget=b)
    assume(rep.axioms["undecided_relations"] == 0)
    assert _axioms_brute(rep.pretree.between)
    assert rep.axioms_pass


@st.composite
def trees(draw):
    n = draw(st.integers(2, 9))
    if n == 2:
        return nx.path_graph(2)
    seq = draw(st.lists(st.integers(0, n - 1), min_size=n - 2, max_size=n - 2))
    return nx.from_prufer_sequence(seq)


@settings(max_examples=CASES)
@given(trees())
def test_star_construction_is_subdivision(T):
    P = vertex_pretree(T)
    assert _axioms_brute(P.between)
    S = star_construction(P)
    assert nx.is_tree(S)
    assert all(S.degree(v) >= 2 for v in S if v[0] == "S")
    sub = nx.Graph()
    for u, v in T.edges():
        sub.add_edge(("v", u), ("e", u, v))
        sub.add_edge(("e", u, v), ("v", v))
    assert nx.is_isomorphic(S, sub)
