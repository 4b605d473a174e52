from fractions import Fraction
from itertools import product

import networkx as nx
import pytest
import sympy

from aiset_forge.gog import amalgam, bass_serre_ball, baumslag_solitar, ladder_group
from aiset_forge.groups import BudgetExceeded, GroupError, UnknownGenerator, CyclicGroup, DirectProduct, \
    FreeProduct, free_abelian, free_group, spot_check_homomorphism
from aiset_forge.subgroups import TrivialSubgroup, schreier_ball

from conftest import free_reduce, represent


def trefoil():
    A, B, C = free_group(["a"], "A"), free_group(["b"], "B"), free_group(["c"], "C")
    return amalgam(A, B, C, [A.parse("a^2")], [B.parse("b^3")])


def _frac(M):
    return tuple(tuple(Fraction(int(x.p), int(x.q)) for x in row) for row in M.tolist())


def _faithful(G, gens, size=3):
    """gens: generator name -> sympy matrix of a faithful linear representation."""
    mats = {i: _frac(gens[n]) for i, n in enumerate(G.gens)}
    inv = {i: _frac(gens[n].inv()) for i, n in enumerate(G.gens)}
    els = G.ball(size).elements
    image = {}
    for g in els:
        M = represent(g, mats, inv)
        assert M not in image, f"{G.format(g)} and {G.format(image.get(M))} have the same image"
        image[M] = g
    for g, h in product(els[:25], repeat=2):
        assert represent(G.mul(g, h), mats, inv) == represent(g + h, mats, inv)


def test_free_group_normal_form_is_free_reduction():
    F = free_group(["a", "b"])
    for w in product([1, -1, 2, -2], repeat=5):
        assert F.normalize(w) == free_reduce(w)


def test_free_abelian_normal_form_matches_vector_sum():
    Z2 = free_abelian(["x", "y"])
    for w in product([1, -1, 2, -2], repeat=4):
        v = [sum((x > 0) - (x < 0) for x in w if abs(x) == i) for i in (1, 2)]
        assert list(Z2.vector(Z2.normalize(w))) == v


def test_bs12_against_affine_representation():
    a = sympy.Matrix([[1, 1], [0, 1]])
    t = sympy.Matrix([[2, 0], [0, 1]])
    _faithful(baumslag_solitar(1, 2), {"a": a, "t": t}, 4)


def test_ladder_against_isometries_of_the_line():
    s = sympy.Matrix([[-1, 0], [0, 1]])
    t = sympy.Matrix([[-1, 1], [0, 1]])
    _faithful(ladder_group(), {"s": s, "t": t}, 6)


def test_trefoil_amalgam_against_burau():
    # <a> *_{a^2 = b^3} <b> is B_3 with a = s1 s2 s1, b = s1 s2; Burau at t = 2 separates short words
    q = 2
    s1 = sympy.Matrix([[1 - q, q, 0], [1, 0, 0], [0, 0, 1]])
    s2 = sympy.Matrix([[1, 0, 0], [0, 1 - q, q], [0, 1, 0]])
    G = trefoil()
    _faithful(G, {"a": s1 * s2 * s1, "b": s1 * s2}, 3)
    assert G.parse("a^2 b^-3") == ()


def test_finite_cyclic_and_products():
    Z3 = CyclicGroup("Z3", "c", 3)
    assert Z3.power(Z3.gen("c"), 3) == ()
    P = FreeProduct("P", [CyclicGroup("U", "u", 2), CyclicGroup("V", "v", 3)])
    assert P.parse("u u") == () and P.parse("v^3") == ()
    D = DirectProduct("D", [free_group(["a"]), CyclicGroup("Z2", "c", 2)])
    assert D.parse("a c a^-1 c") == ()
    assert len(D.ball(1)) == 4


@pytest.mark.parametrize("G", [free_group(["a", "b"]), free_abelian(["x", "y"]), ladder_group(),
                               baumslag_solitar(1, 2), baumslag_solitar(4, 2)], ids=lambda G: G.name)
def test_normalize_idempotent_and_associative(G):
    assert spot_check_homomorphism(G, 2) == []
    for g in G.ball(2).elements:
        assert G.normalize(G.normalize(g)) == G.normalize(g)
    assert G.normalize(()) == ()


def test_bs42_relation_holds():
    G = baumslag_solitar(4, 2)
    assert G.parse("t^-1 a^2 t") == G.parse("a^4")


def test_parse_rejects_unknown_generator():
    with pytest.raises(UnknownGenerator):
        free_group(["a"]).parse("z")


def test_ball_budget_is_explicit():
    with pytest.raises(BudgetExceeded):
        free_group(["a", "b", "c"]).ball(30)


@pytest.mark.parametrize("G", [free_group(["a", "b"]), free_abelian(["x", "y"]), ladder_group()],
                         ids=lambda G: G.name)
def test_schreier_ball_of_trivial_subgroup_is_cayley_ball(G):
    R = 3
    sg = schreier_ball(G, TrivialSubgroup(G), R)
    ball = G.ball(R)
    assert set(sg.vertices) == set(ball.elements)
    cay = nx.MultiGraph()
    cay.add_nodes_from(ball.elements)
    for g in ball.elements:
        for i in range(len(G.gens)):
            h = G.normalize(g + (i + 1,))
            if h in ball:
                cay.add_edge(g, h)
    assert nx.is_isomorphic(sg.graph(), cay)


@pytest.mark.parametrize("R", [1, 2, 3, 4])
def test_bass_serre_ball_of_amalgam_is_acyclic(R):
    TB = bass_serre_ball(trefoil(), R)
    assert TB.is_acyclic()


def test_graph_of_groups_rejects_bad_injection():
    A, B, C = free_group(["a"], "A"), free_group(["b"], "B"), free_group(["c"], "C")
    with pytest.raises(GroupError):
        G = amalgam(A, B, C, [()], [B.parse("b^3")])
        if G.gog.check():
            raise GroupError("rejected by check")
