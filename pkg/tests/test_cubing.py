from itertools import combinations, product

import networkx as nx
import numpy as np
import pytest

from aiset_forge.aiset import LinearHalfspace, translate
from aiset_forge.cubing import Wallspace, build_complex, collect_walls, enumerate_ultrafilters, \
    fixed_vertex_search, is_ultrafilter, recover_set, separating_vertices
from aiset_forge.groups import GroupError, free_abelian
from aiset_forge.system import parse_system_data

from conftest import fixture


def crossing_walls(n, R=3):
    G = free_abelian([f"x{i}" for i in range(n)], f"Z{n}")
    family = [LinearHalfspace(G, [int(i == j) for j in range(n)], 0, f"X{i}") for i in range(n)]
    return collect_walls(family, 0, R)


def nested_walls(n, R=None):
    G = free_abelian(["x"], "Z")
    X = LinearHalfspace(G, [1], 0, "X")
    W = Wallspace(G, [X], R or n + 1)
    for k in range(n):
        W.add(translate(X, (1,) * k), (1,) * k, 0)
    return W.finalize()


def brute_force_ultrafilters(W):
    """All orientations, both axioms checked directly on ball masks."""
    M = W.masks
    n = len(M)
    halves = [(p, s, M[p] if s else ~M[p]) for p in range(n) for s in (True, False)]
    out = []
    for bits in product((False, True), repeat=n):
        chosen = [M[p] if b else ~M[p] for p, b in enumerate(bits)]
        meet = all((a & b).any() for a, b in combinations(chosen, 2))
        upward = all(bits[q] == s for a in chosen for q, s, B in halves if not (a & ~B).any())
        if meet and upward:
            out.append(bits)
    return sorted(out)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_crossing_walls_give_a_cube(n):
    W = crossing_walls(n)
    assert len(W) == n
    ufs = enumerate_ultrafilters(W)
    assert len(ufs) == 2 ** n
    assert sorted(ufs) == brute_force_ultrafilters(W)


@pytest.mark.parametrize("n", range(1, 9))
def test_nested_chain_gives_a_path(n):
    W = nested_walls(n)
    assert len(W) == n
    ufs = enumerate_ultrafilters(W)
    assert len(ufs) == n + 1
    assert sorted(ufs) == brute_force_ultrafilters(W)
    C = build_complex(W)
    g = C.graph()
    assert nx.is_tree(g) and max(d for _, d in g.degree()) <= 2


def _fixture_walls():
    out = []
    for name, sets, b, R in (("ladder", ["Y"], 3, 6), ("quadrants", ["X1", "X2"], 2, 6),
                             ("nested-chain", ["X"], 3, 8), ("amalgam-one-edge", ["X"], 2, 6)):
        S = fixture(name)
        out.append(pytest.param(collect_walls([S.sets[n] for n in sets], b, R), id=name))
    return out


WALLS = _fixture_walls()


@pytest.mark.parametrize("W", WALLS)
def test_enumerated_ultrafilters_recheck(W):
    ufs = enumerate_ultrafilters(W)
    assert all(is_ultrafilter(W, v) for v in ufs)
    if len(W) <= 12:
        assert sorted(ufs) == brute_force_ultrafilters(W)


@pytest.mark.parametrize("W", WALLS)
def test_degree_is_number_of_minimal_halfspaces(W):
    C = build_complex(W)
    for i, v in enumerate(C.vertices):
        chosen = [2 * p + (0 if b else 1) for p, b in enumerate(v)]
        minimal = [h for h in chosen if not any(k != h and W.leq(k, h) for k in chosen)]
        assert C.degree(i) == len(minimal)


@pytest.mark.parametrize("W", WALLS)
def test_hyperplanes_do_not_self_intersect(W):
    C = build_complex(W)
    walls = {frozenset((u, v)): p for u, v, p in C.edges}
    for sq in C.squares:
        es = [walls[frozenset(e)] for e in combinations(sq, 2) if frozenset(e) in walls]
        assert len(es) == 4
        assert sorted(es) == sorted(set(es)) * 2 or sorted(es) == sorted(sorted(set(es)) * 2)
        p, q = set(es)
        # nested walls never span a square
        assert not W.nested(p, q)


@pytest.mark.parametrize("W", WALLS)
def test_recovery_is_exact(W):
    C = build_complex(W)
    # path-word arithmetic makes Bass-Serre balls slow, so recover on a smaller one there
    r = 4 if W.group.name.startswith("A*") else None
    for p, w in enumerate(W.walls):
        rec, dom = recover_set(C, p, r)
        assert dom
        assert rec == {g for g in dom if w.set.member(g)}


@pytest.mark.parametrize("W", WALLS)
def test_median_property(W):
    C = build_complex(W)
    V = C.vertices
    index = C.index
    dist = dict(nx.all_pairs_shortest_path_length(C.graph()))
    for a, b, c in combinations(range(len(V)), 3):
        m = tuple((x + y + z) >= 2 for x, y, z in zip(V[a], V[b], V[c]))
        assert m in index
        total = {v: dist[a][v] + dist[b][v] + dist[c][v] for v in range(len(V))}
        best = min(total.values())
        assert [v for v, t in total.items() if t == best] == [index[m]]


def test_ladder_complex_is_a_line_with_reflection():
    S = fixture("ladder")
    W = collect_walls([S.sets["Y"]], 3, 6)
    C = build_complex(W)
    g = C.graph()
    assert len(C.vertices) >= 5 and nx.is_tree(g) and max(d for _, d in g.degree()) <= 2
    assert len(separating_vertices(C)) == len(C.vertices) - 2
    r = fixed_vertex_search(C, S.subgroups["S"])
    assert r.method == "none" and r.reflection["element"] == "s"


def test_quadrants_grid():
    S = fixture("quadrants")
    W = collect_walls([S.sets["X1"], S.sets["X2"]], 2, 6)
    C = build_complex(W)
    assert len(C.vertices) == 36 and len(C.squares) == 25 and not C.cubes
    assert separating_vertices(C) == []


def test_vertex_groups_fix_adjacent_vertices():
    S = fixture("amalgam-one-edge")
    d = dict(S.raw)
    d["subgroups"] = {"Av": {"kind": "vertex-stabilizer", "tree": "T", "vertex": "1@A", "generators": ["a"]},
                      "Bv": {"kind": "vertex-stabilizer", "tree": "T", "vertex": "1@B", "generators": ["b"]}}
    S2 = parse_system_data(d)
    W = collect_walls([S2.sets["X"]], 2, 6)
    C = build_complex(W)
    ra = fixed_vertex_search(C, S2.subgroups["Av"])
    rb = fixed_vertex_search(C, S2.subgroups["Bv"])
    assert ra.all_fixed == [ra.vertex] and rb.all_fixed == [rb.vertex]
    assert sum(x != y for x, y in zip(ra.vertex, rb.vertex)) == 1


def test_walls_too_large_for_the_ball_are_rejected():
    G = free_abelian(["x"], "Z")
    X = LinearHalfspace(G, [1], 0, "X")
    with pytest.raises(GroupError):
        collect_walls([X], 3, 1)


def test_masks_are_distinct():
    W = WALLS[1].values[0]
    assert len({m.tobytes() for m in W.masks}) == len(W)
    assert not np.any(W.masks.all(axis=1))
