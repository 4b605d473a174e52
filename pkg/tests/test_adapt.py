import pytest

from aiset_forge.adapt import GroupSystem, Unreachable, adaptedness, angle_distance, angle_neighbourhood, \
    canonical_enlargement, relative_ball, subgroup_word_lengths
from aiset_forge.aiset import CosetToggle, LinearHalfspace, translate
from aiset_forge.groups import free_abelian, free_group
from aiset_forge.subgroups import LatticeSubgroup, StallingsSubgroup, TrivialSubgroup

from conftest import fixture

Z2 = free_abelian(["x", "y"], "Z2")
F2 = free_group(["a", "b"], "F2")


def _enumerate_paths(G, plain, cyclic, R):
    """Exhaustive enumeration of move sequences of total cost <= R."""
    moves = [(G.normalize((x,)), 1) for x in plain] + [(G.normalize((-x,)), 1) for x in plain]
    for s in cyclic:
        for n in range(1, R + 1):
            moves += [(G.power(s, n), n), (G.power(s, -n), n)]
    best = {}

    def rec(g, d):
        if best.get(g, R + 1) <= d:
            return
        best[g] = d
        for m, w in moves:
            if d + w <= R:
                rec(G.mul(g, m), d + w)

    rec((), 0)
    return best


def test_angle_ball_equals_path_enumeration_free():
    S = StallingsSubgroup(F2, "A", [F2.parse("a")])
    sys = GroupSystem(F2, [S], [F2.parse("b")])
    for R in (1, 2, 3, 4):
        assert angle_neighbourhood(sys, R) == _enumerate_paths(F2, [2], [F2.parse("a")], R)


def test_angle_ball_equals_path_enumeration_z2():
    S = LatticeSubgroup(Z2, "Sx", [[1, 0]])
    S.generators = [Z2.parse("x")]
    sys = GroupSystem(Z2, [S], [Z2.parse("y")])
    for R in (2, 4):
        assert angle_neighbourhood(sys, R) == _enumerate_paths(Z2, [2], [Z2.parse("x")], R)


def test_cyclic_word_length_is_weighted():
    S = StallingsSubgroup(F2, "A", [F2.parse("a")])
    d = subgroup_word_lengths(S, 6)
    # a^n is one generator of weight n
    assert d[F2.parse("a^4")] == 4
    assert d[F2.parse("a^-3")] == 3


def test_angle_distance_unreachable():
    S = StallingsSubgroup(F2, "A", [F2.parse("a")])
    sys = GroupSystem(F2, [S], [F2.parse("b")])
    assert isinstance(angle_distance(sys, (), F2.parse("b^5"), 3), Unreachable)
    assert angle_distance(sys, (), F2.parse("b^2"), 3) == 2


def test_finite_type_check():
    S = StallingsSubgroup(F2, "A", [F2.parse("a")])
    assert GroupSystem(F2, [S], [F2.parse("b")]).finite_type_check().yes
    assert GroupSystem(F2, [S], [F2.parse("a")]).finite_type_check().no


def test_relative_ball_cone_vertices():
    S = StallingsSubgroup(F2, "A", [F2.parse("a")])
    sys = GroupSystem(F2, [S], [F2.parse("b")])
    rb = relative_ball(sys, 3)
    for g, lab in rb.cone_edges:
        # a cone vertex is joined only to elements of its own left coset
        assert S.member(F2.mul(F2.inv(rb.cones[lab]["rep"]), g))
    assert set(rb.plain) == set(angle_neighbourhood(sys, 3))


def test_enlargement_of_non_adapted_set_has_growing_coboundary():
    X = LinearHalfspace(Z2, [0, 1], 0)
    Sy = LatticeSubgroup(Z2, "Sy", [[0, 1]])
    Sy.generators = [Z2.parse("y")]
    e = canonical_enlargement(X, GroupSystem(Z2, [Sy], [Z2.parse("x"), Z2.parse("y")]), 5)
    assert not e.stabilized
    assert e.coboundary_counts[-3] < e.coboundary_counts[-2] < e.coboundary_counts[-1]


def test_enlargement_refuses_h_finite_cosets():
    from aiset_forge.adapt import AmbiguityError
    X = LinearHalfspace(Z2, [0, 1], 0)
    Sx = LatticeSubgroup(Z2, "Sx", [[1, 0]])
    Sx.generators = [Z2.parse("x")]
    with pytest.raises(AmbiguityError):
        canonical_enlargement(X, GroupSystem(Z2, [Sx], [Z2.parse("x"), Z2.parse("y")]), 5)


def test_adaptedness_torus():
    X = LinearHalfspace(Z2, [0, 1], 0)
    Sx = LatticeSubgroup(Z2, "Sx", [[1, 0]])
    Sy = LatticeSubgroup(Z2, "Sy", [[0, 1]])
    assert adaptedness(X, Sx, 6).yes
    assert adaptedness(X, Sy, 6).no
    assert adaptedness(X, TrivialSubgroup(Z2), 6).yes


def test_adaptedness_is_equivalence_invariant():
    X = LinearHalfspace(Z2, [0, 1], 0)
    Sx = LatticeSubgroup(Z2, "Sx", [[1, 0]])
    Sy = LatticeSubgroup(Z2, "Sy", [[0, 1]])
    variants = [X, translate(X, Z2.parse("y^2")), CosetToggle(X, [Z2.parse("y^-2")])]
    for S in (Sx, Sy):
        assert len({adaptedness(V, S, 6).value for V in variants}) == 1


def test_vertex_group_adaptedness_on_amalgam():
    S = fixture("amalgam-one-edge")
    X = S.sets["X"]
    from aiset_forge.system import parse_system_data
    d = dict(S.raw)
    d["subgroups"] = {"Av": {"kind": "vertex-stabilizer", "tree": "T", "vertex": "1@A", "generators": ["a"]}}
    Av = parse_system_data(d).subgroups["Av"]
    # a vertex group fixes a vertex, so every coset lies on one side
    assert adaptedness(X, Av, 5).yes
