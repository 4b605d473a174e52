import pytest

from aiset_forge.aiset import LinearHalfspace, SizeClass, translate
from aiset_forge.crossing import BadPositionError, almost_inclusion, corner_symmetry_check, corners, crossing, \
    intersection_number, ordered, position_check
from aiset_forge.groups import free_abelian
from aiset_forge.subgroups import LatticeSubgroup

from conftest import fixture

Z2 = free_abelian(["x", "y"], "Z2")


@pytest.mark.parametrize("hx,hy", [([1, 0], [0, 1]), ([2, 0], [0, 1]), ([2, 0], [0, 3]), ([1, 0], [1, 2]),
                                   ([3, 0], [1, 1])])
def test_intersection_number_is_lattice_index(hx, hy):
    # gX crosses Y for every g; pairs up to the diagonal action are Z^2 / <hx, hy>
    X = LinearHalfspace(Z2, [0, 1], 0, "X", stabilizer=LatticeSubgroup(Z2, "H", [hx]))
    Y = LinearHalfspace(Z2, [hy[1], -hy[0]], 0, "Y", stabilizer=LatticeSubgroup(Z2, "K", [hy]))
    want = abs(hx[0] * hy[1] - hx[1] * hy[0])
    r = intersection_number(X, Y, 4)
    assert r.count == want
    assert intersection_number(Y, X, 4).count == want


def test_intersection_number_zero_for_nested():
    S = fixture("ladder")
    assert intersection_number(S.sets["Y"], S.sets["Y"], 3).count == 0
    Q = fixture("nested-chain")
    assert intersection_number(Q.sets["X"], Q.sets["X"], 3).count == 0


def test_intersection_number_equivalence_invariant():
    X = LinearHalfspace(Z2, [0, 1], 0, "X")
    Y = LinearHalfspace(Z2, [1, 0], 0, "Y")
    Yt = translate(Y, Z2.parse("x^3"))
    assert intersection_number(X, Y, 3).count == intersection_number(X, Yt, 3).count == 1


def test_corners_of_crossing_quadrants():
    S = fixture("quadrants")
    rep = corners(S.sets["X1"], S.sets["X2"], 6)
    assert all(s == SizeClass.LARGE for s in rep.sizes().values())
    c = crossing(S.sets["X1"], S.sets["X2"], 6)
    assert c.verdict.yes and c.strength == "strong"


def test_corners_of_nested_translates():
    S = fixture("nested-chain")
    X = S.sets["X"]
    T = translate(X, S.group.parse("x"))
    rep = corners(T, X, 6)
    # xX = {n >= 1} lies inside X
    assert rep[(True, False)].size == SizeClass.EMPTY
    assert crossing(T, X, 6).verdict.no
    assert almost_inclusion(T, X, 6).yes and almost_inclusion(X, T, 6).no


def test_complementing_swaps_rows_and_columns():
    S = fixture("guirardel")
    X, Y = S.sets["sigma"], S.sets["tau"]
    a = corners(X, Y, 6).sizes()
    b = corners(X.complement, Y, 6).sizes()
    c = corners(X, Y.complement, 6).sizes()
    for (xs, ys), v in a.items():
        assert b[(not xs, ys)] == v
        assert c[(xs, not ys)] == v


def test_guirardel_inclusion_and_order():
    S = fixture("guirardel")
    assert ordered(S.sets["sigma"], S.sets["tau"], 8).yes
    assert intersection_number(S.sets["sigma"], S.sets["tau"], 4).count == 0


def test_perturbed_pair_refused():
    S = fixture("perturbed")
    Z, Zg = S.sets["Z"], S.sets["Zst"]
    rep = corners(Z, Zg, 6)
    assert rep.small_count == 2 and rep.empty_count == 0
    with pytest.raises(BadPositionError):
        ordered(Z, Zg, 6)
    assert position_check([Z], 6, 2).value == "neither"


def test_positions_of_fixtures():
    assert position_check([fixture("ladder").sets["Y"]], 6, 3).value == "very-good"
    q = fixture("quadrants")
    assert position_check([q.sets["X1"], q.sets["X2"]], 6, 2).value == "very-good"


def test_corner_symmetry_on_fixtures():
    q = fixture("quadrants")
    assert corner_symmetry_check([q.sets["X1"], q.sets["X2"]], 6, 2).yes
    g = fixture("guirardel")
    assert corner_symmetry_check([g.sets["sigma"], g.sets["tau"]], 6, 1).value != "no"
