import copy
import json
import time

import networkx as nx
import pytest

from aiset_forge.aiset import CosetToggle, translate
from aiset_forge.cubing import collect_walls
from aiset_forge.gog import baumslag_solitar
from aiset_forge.regnbhd import BipartiteGraphOfGroups, NotRNReady, Pretree, build_for_group, \
    build_regular_neighbourhood, compute_cccs, cyclic_index, pretree_axioms, pretree_check, reduce, \
    refinement_chain, rn_via_cubing, star_construction, verify_refinement_chain, verify_rn_properties, \
    vertex_pretree
from aiset_forge.crossing import BadPositionError
from aiset_forge.system import fixtures_dir

from conftest import fixture

FAMILIES = {"ladder": ["Y"], "quadrants": ["X1", "X2"], "nested-chain": ["X"], "amalgam-one-edge": ["X"],
            "hnn": ["X"]}


def gamma(name, route="pretree", subdivide=True, family=None):
    S = fixture(name)
    b = S.budgets.get("budget", 2)
    fam = family if family is not None else [S.sets[n] for n in FAMILIES[name]]
    kw = dict(translate_budget=b, R=2 * b + 2, subdivide=subdivide)
    if route == "cubing":
        return rn_via_cubing(fam, **kw)
    return build_for_group(S.group, fam, **kw)


def golden(name):
    path = fixtures_dir() / "golden" / f"{name}.json"
    return BipartiteGraphOfGroups.from_dict(json.loads(path.read_text()))


@pytest.mark.parametrize("name,shape", [("amalgam-one-edge", "V1-V0-V1"), ("hnn", "V0:1 V1:1 E:2"),
                                        ("ladder", "V1-V0-V1"), ("quadrants", "V0"),
                                        ("nested-chain", "V0:1 V1:1 E:2")])
def test_shapes_match_golden(name, shape):
    red = reduce(gamma(name))
    assert red.shape() == shape
    assert red.is_bipartite()
    assert red.isomorphic(golden(name))


def test_hnn_loop_has_one_vertex_of_each_kind():
    red = reduce(gamma("hnn"))
    assert len(red.V0) == 1 and len(red.V1) == 1 and red.graph.number_of_edges() == 2


def test_ladder_subdivision_inserts_a_middle_vertex():
    red = reduce(gamma("ladder"))
    mids = [v for v in red.V0 if red.graph.nodes[v]["kind"] == "mid"]
    assert len(mids) == 1
    # the isolated Y-vertex is inverted by s, so it becomes a V1-vertex next to the midpoint
    Y = next(v for v in red.V1 if red.graph.nodes[v]["name"] == "Y")
    assert red.graph.nodes[Y]["isolated"] and red.graph.nodes[Y]["group"] == "<s>"


@pytest.mark.parametrize("name", ["ladder", "quadrants", "nested-chain"])
def test_routes_agree(name):
    a = reduce(gamma(name))
    b = reduce(gamma(name, route="cubing"))
    assert a.isomorphic(b)


def test_empty_family_gives_one_vertex():
    S = fixture("trivial")
    g = build_for_group(S.group, [])
    assert g.shape() == "V0"
    assert verify_rn_properties(g)["pass"]
    with pytest.raises(Exception):
        build_regular_neighbourhood([])


@pytest.mark.parametrize("name", ["ladder", "quadrants", "nested-chain", "amalgam-one-edge", "hnn"])
def test_rn_properties(name):
    rep = verify_rn_properties(gamma(name))
    assert rep["pass"], rep


def test_unsubdivided_ladder_fails_the_isolated_check():
    rep = verify_rn_properties(gamma("ladder", subdivide=False))
    assert not rep["pass"]
    assert rep["isolated_bijection"]["detail"]["inverted"]


@pytest.mark.parametrize("name", ["ladder", "quadrants", "nested-chain", "amalgam-one-edge", "hnn"])
def test_no_mixed_cccs(name):
    S = fixture(name)
    b = S.budgets.get("budget", 2)
    W = collect_walls([S.sets[n] for n in FAMILIES[name]], b, 2 * b + 2)
    cccs, rel = compute_cccs(W)
    assert not any(c.kind == "mixed" for c in cccs)


def test_quadrants_ccc_is_all_strong():
    S = fixture("quadrants")
    W = collect_walls([S.sets["X1"], S.sets["X2"]], 2, 6)
    cccs, _ = compute_cccs(W)
    assert [c.kind for c in cccs] == ["all-strong"]


def _named(X, name):
    Y = copy.copy(X)
    Y.name = name
    return Y


def test_equivalent_representatives_give_isomorphic_output():
    q = fixture("quadrants")
    X1 = CosetToggle(q.sets["X1"], [q.group.parse("y^-3")], "X1")
    assert reduce(gamma("quadrants", family=[X1, q.sets["X2"]])).isomorphic(reduce(gamma("quadrants")))
    n = fixture("nested-chain")
    Xs = _named(translate(n.sets["X"], n.group.parse("x^2")), "X")
    assert reduce(gamma("nested-chain", family=[Xs])).isomorphic(reduce(gamma("nested-chain")))
    a = fixture("amalgam-one-edge")
    Xa = _named(translate(a.sets["X"], a.group.parse("a^2")), "X")
    assert reduce(gamma("amalgam-one-edge", family=[Xa])).isomorphic(reduce(gamma("amalgam-one-edge")))


def test_bad_position_is_refused():
    S = fixture("perturbed")
    with pytest.raises((NotRNReady, BadPositionError)):
        rn_via_cubing([S.sets["Z"]], translate_budget=2, R=6)
    with pytest.raises(NotRNReady):
        build_regular_neighbourhood([S.sets["Z"]], translate_budget=2, R=6)


def test_guirardel_pretree_is_not_discrete():
    S = fixture("guirardel")
    t = time.perf_counter()
    rep = pretree_check([S.sets["sigma"], S.sets["tau"]], 6)
    assert time.perf_counter() - t < 10
    assert rep.non_discrete
    assert rep.discreteness.witness["chain_length"] >= 6
    assert rep.axioms_pass and rep.axioms["undecided_relations"] == 0


@pytest.mark.parametrize("name", ["ladder", "quadrants", "nested-chain", "amalgam-one-edge"])
def test_pretree_axioms_on_fixture_cccs(name):
    S = fixture(name)
    rep = pretree_check([S.sets[n] for n in FAMILIES[name]], 2)
    assert rep.axioms_pass, rep.axioms


def test_star_construction_of_vertex_pretree_is_subdivision():
    T = nx.path_graph(3)
    P = vertex_pretree(T)
    assert all(v["pass"] for v in pretree_axioms(P).values())
    S = star_construction(P)
    assert S.number_of_nodes() == 5 and S.number_of_edges() == 4 and nx.is_tree(S)


def test_pretree_axiom_violation_detected():
    import numpy as np
    B = np.zeros((3, 3, 3), dtype=bool)
    B[0, 1, 2] = True  # not symmetric
    assert not pretree_axioms(Pretree(["a", "b", "c"], B))["T1"]["pass"]


def test_reduce_collapses_degree_two_pairs():
    g = BipartiteGraphOfGroups("G")
    g.add_vertex("a", "V1", "<a>", "star", "star")
    g.add_vertex("u", "V0", "1", "ccc", "X", True)
    g.add_vertex("v", "V1", "1", "ccc", "Y", True)
    g.add_vertex("w", "V0", "1", "ccc", "X", True)
    g.add_vertex("b", "V1", "<b>", "star", "star")
    g.add_vertex("x", "V0", "1", "ccc", "X", True)
    for e in (("a", "u"), ("u", "v"), ("v", "w"), ("w", "b"), ("b", "x"), ("x", "a")):
        g.add_edge(*e, "1")
    r = reduce(g)
    assert r.graph.number_of_nodes() < g.graph.number_of_nodes()
    assert r.is_bipartite()


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_bs42_refinement_chain(n):
    chain = refinement_chain(n)
    assert len(chain) == n
    assert verify_refinement_chain(chain) == []
    first = chain[0].to_dict()
    # the w-end label of the first graph is 2^n
    assert first["edges"][0]["labels"][1] == 2 ** n


def test_cyclic_index_oracle():
    G = baumslag_solitar(4, 2)
    a = G.parse("a")
    assert cyclic_index(G, G.power(a, 8), a) == 8
    assert cyclic_index(G, a, G.power(a, 2)) is None


def test_pretree_radius_grows_past_corners_at_the_ball_edge():
    from aiset_forge.aiset import LinearHalfspace
    from aiset_forge.groups import free_abelian
    Z2 = free_abelian(["x", "y"], "Z2")
    # the corner {y < -2, x - y < -2} is infinite but misses the radius-6 ball
    fam = [LinearHalfspace(Z2, (0, 1), -2, "A"), LinearHalfspace(Z2, (1, -1), -2, "B")]
    rep = pretree_check(fam, 1)
    assert rep.axioms["undecided_relations"] == 0 and rep.axioms_pass
    assert rep.axiom_radius > 6
