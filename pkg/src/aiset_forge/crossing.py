"""Corners, crossing, almost inclusion, position and intersection numbers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aiset import (
    INCONCLUSIVE,
    NO,
    YES,
    AlmostInvariantSet,
    SizeClass,
    Verdict,
    coset_counts,
    classify,
    translate,
)
from .groups import GroupError

CORNER_NAMES = {
    (True, True): "X∩Y",
    (True, False): "X∩Y*",
    (False, True): "X*∩Y",
    (False, False): "X*∩Y*",
}


class BadPositionError(GroupError):
    """Raised when an almost-inclusion order is requested on a pair with two small corners."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Corner:
    sides: tuple
    size: SizeClass  # w.r.t. the stabilizer of Y
    size_x: SizeClass  # w.r.t. the stabilizer of X
    counts: list
    counts_x: list
    sample: tuple | None

    @property
    def settled(self) -> SizeClass:
        # smallness does not depend on which stabilizer counts the corner
        return self.size_x if self.size == SizeClass.INCONCLUSIVE else self.size

    @property
    def small(self) -> bool:
        return self.settled.finite

    def to_dict(self, G) -> dict:
        return {"corner": CORNER_NAMES[self.sides], "size": self.size.value, "size_over_H": self.size_x.value,
                "coset_counts": self.counts, "sample": None if self.sample is None else G.format(self.sample)}


@dataclass
class CornerReport:
    X: AlmostInvariantSet
    Y: AlmostInvariantSet
    radius: int
    corners: dict = field(default_factory=dict)

    def __getitem__(self, sides) -> Corner:
        return self.corners[sides]

    def sizes(self) -> dict:
        return {s: c.settled for s, c in self.corners.items()}

    @property
    def small_count(self) -> int:
        return sum(1 for c in self.corners.values() if c.small)

    @property
    def empty_count(self) -> int:
        return sum(1 for c in self.corners.values() if c.settled == SizeClass.EMPTY)

    @property
    def inconclusive_count(self) -> int:
        return sum(1 for c in self.corners.values() if c.settled == SizeClass.INCONCLUSIVE)

    def to_dict(self) -> dict:
        G = self.X.ambient
        return {"X": self.X.describe(), "Y": self.Y.describe(), "radius": self.radius,
                "corners": [self.corners[s].to_dict(G) for s in CORNER_NAMES]}


def _corner_report(X, Y, ball, R) -> CornerReport:
    mx, my = X.mask(ball), Y.mask(ball)
    ids_k = Y.stabilizer.coset_ids(ball)
    ids_h = X.stabilizer.coset_ids(ball)
    rep = CornerReport(X, Y, R)
    for xs, ys in CORNER_NAMES:
        m = (mx if xs else ~mx) & (my if ys else ~my)
        ck = coset_counts(m, ids_k, ball.layer_ends)
        ch = coset_counts(m, ids_h, ball.layer_ends)
        nz = np.flatnonzero(m)
        sample = ball._elements[int(nz[0])] if len(nz) else None
        rep.corners[(xs, ys)] = Corner((xs, ys), classify(ck), classify(ch), ck, ch, sample)
    return rep


def corners(X: AlmostInvariantSet, Y: AlmostInvariantSet, R: int) -> CornerReport:
    if X.ambient is not Y.ambient:
        raise GroupError("sets live in different groups")
    return _corner_report(X, Y, X.ambient.ball(R), R)


def _cross_value(rep: CornerReport) -> str:
    sizes = list(rep.sizes().values())
    if all(s == SizeClass.LARGE for s in sizes):
        return YES
    if any(s.finite for s in sizes):
        return NO
    return INCONCLUSIVE


@dataclass
class CrossingResult:
    verdict: Verdict
    strength: str  # strong | weak | none | inconclusive
    report: CornerReport

    def to_dict(self) -> dict:
        return {"crosses": self.verdict.to_dict(), "strength": self.strength, "corners": self.report.to_dict()}


def strength_of(X: AlmostInvariantSet, Y: AlmostInvariantSet, R: int) -> str:
    """Strong iff Stab(X)∩Y and Stab(X)∩Y* are both Stab(Y)-infinite."""
    G = X.ambient
    ball = G.ball(R)
    H = X.stabilizer
    hm = np.fromiter((H.member(g) for g in ball.elements), dtype=bool, count=ball.n)
    my = Y.mask(ball)
    ids = Y.stabilizer.coset_ids(ball)
    a = classify(coset_counts(hm & my, ids, ball.layer_ends))
    b = classify(coset_counts(hm & ~my, ids, ball.layer_ends))
    if a == SizeClass.LARGE and b == SizeClass.LARGE:
        return "strong"
    if a.finite or b.finite:
        return "weak"
    return INCONCLUSIVE


def crossing(X: AlmostInvariantSet, Y: AlmostInvariantSet, R: int, with_strength: bool = True) -> CrossingResult:
    rep = corners(X, Y, R)
    v = _cross_value(rep)
    prev = _cross_value(corners(X, Y, R - 1)) if R >= 3 else None
    verdict = Verdict(v, R, prev == v, evidence={"corners": {CORNER_NAMES[s]: c.settled.value
                                                              for s, c in rep.corners.items()}})
    if v != YES:
        strength = "none" if v == NO else INCONCLUSIVE
    else:
        strength = strength_of(X, Y, R) if with_strength else INCONCLUSIVE
    return CrossingResult(verdict, strength, rep)


def _inclusion_value(rep: CornerReport) -> str:
    c = rep[(True, False)].settled
    if c == SizeClass.EMPTY:
        return YES
    if c == SizeClass.LARGE:
        return NO
    if c == SizeClass.INCONCLUSIVE:
        return INCONCLUSIVE
    others = [rep[s].settled for s in CORNER_NAMES if s != (True, False)]
    if all(o == SizeClass.LARGE for o in others):
        return YES
    if any(o.finite for o in others):
        return NO
    return INCONCLUSIVE


def almost_inclusion(U: AlmostInvariantSet, V: AlmostInvariantSet, R: int) -> Verdict:
    """U ≤ V: U∩V* is empty, or is the only small corner of (U, V)."""
    rep = corners(U, V, R)
    v = _inclusion_value(rep)
    prev = _inclusion_value(corners(U, V, R - 1)) if R >= 3 else None
    return Verdict(v, R, prev == v, witness=CORNER_NAMES[(True, False)],
                   evidence={CORNER_NAMES[s]: c.settled.value for s, c in rep.corners.items()})


def ordered(U: AlmostInvariantSet, V: AlmostInvariantSet, R: int) -> Verdict:
    """Almost inclusion used as an order: refuses pairs in bad position."""
    rep = corners(U, V, R)
    if rep.small_count >= 2 and rep.empty_count == 0:
        raise BadPositionError(f"{U.name} and {V.name} have {rep.small_count} small corners, none empty",
                               witness=rep.to_dict())
    return almost_inclusion(U, V, R)


# -- translates and families -------------------------------------------------

def translates(X: AlmostInvariantSet, budget: int, include_complements: bool = False) -> list:
    """gX for g in ball(budget), one per left coset g·Stab(X); shortlex-first representative."""
    G = X.ambient
    H = X.stabilizer
    seen = set()
    out = []
    for g in G.ball(budget).elements:
        key = H.coset_rep(G.inv(g))
        if key in seen:
            continue
        seen.add(key)
        T = translate(X, g)
        out.append((g, T))
        if include_complements:
            out.append((g, T.complement))
    return out


@dataclass
class PositionResult:
    value: str  # very-good | good | neither | inconclusive
    witness: dict | None
    pairs_checked: int
    budget: int
    radius: int

    def to_dict(self) -> dict:
        return {"position": self.value, "witness": self.witness, "pairs_checked": self.pairs_checked,
                "translate_budget": self.budget, "radius": self.radius}


def position_check(family: Sequence[AlmostInvariantSet], R: int, translate_budget: int = 1) -> PositionResult:
    """Classify E(family) as very good / good / neither over translate pairs within budget.

    Pairs (gX_i, X_j) suffice because the position of (gU, gV) equals that of (U, V).
    Complements only permute corners, so they are not enumerated separately.
    """
    if not family:
        return PositionResult("very-good", None, 0, translate_budget, R)
    G = family[0].ambient
    ball = G.ball(R)
    very_good, unsure = True, False
    witness = None
    checked = 0
    for X in family:
        for g, T in translates(X, translate_budget):
            for Y in family:
                rep = _corner_report(T, Y, ball, R)
                checked += 1
                S, E = rep.small_count, rep.empty_count
                if rep.inconclusive_count and E == 0:
                    unsure = True
                if E == 0 and S >= 1 and very_good:
                    very_good = False
                    witness = witness or {"U": T.describe(), "V": Y.describe(), "small_corners": S}
                if E == 0 and S >= 2:
                    witness = {"U": T.describe(), "V": Y.describe(), "small_corners": S,
                               "corners": rep.to_dict()["corners"]}
                    return PositionResult("neither", witness, checked, translate_budget, R)
    if very_good:
        value = "very-good" if not unsure else INCONCLUSIVE
    else:
        value = "good"
    return PositionResult(value, witness, checked, translate_budget, R)


def corner_symmetry_check(family: Sequence[AlmostInvariantSet], R: int, translate_budget: int = 1) -> Verdict:
    """Every corner small for one stabilizer must be small for the other."""
    if not family:
        return Verdict(YES, R, True)
    ball = family[0].ambient.ball(R)
    checked = 0
    for X in family:
        for g, T in translates(X, translate_budget):
            for Y in family:
                rep = _corner_report(T, Y, ball, R)
                for s, c in rep.corners.items():
                    checked += 1
                    if c.size.finite != c.size_x.finite and SizeClass.INCONCLUSIVE not in (c.size, c.size_x):
                        return Verdict(NO, R, True, witness={"U": T.describe(), "V": Y.describe(),
                                                            "corner": CORNER_NAMES[s],
                                                            "over_V": c.size.value, "over_U": c.size_x.value})
    return Verdict(YES, R, False, evidence={"corners_checked": checked})


# -- intersection numbers ----------------------------------------------------

@dataclass
class IntersectionNumber:
    count: int
    exact: bool
    counts_by_budget: list
    representatives: list
    budget: int
    radius: int

    def to_dict(self, G) -> dict:
        return {"intersection_number": self.count, "exact": self.exact, "counts_by_budget": self.counts_by_budget,
                "double_coset_representatives": [G.format(g) for g in self.representatives],
                "budget": self.budget, "radius": self.radius}


def _double_coset_classes(G, K, H, elements) -> dict:
    """Union-find of ball elements under g ~ kg (same coset Kg) and g ~ g h^±1."""
    idx = {g: i for i, g in enumerate(elements)}
    parent = list(range(len(elements)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    by_coset: dict = {}
    for i, g in enumerate(elements):
        k = K.coset_rep(g)
        if k in by_coset:
            union(i, by_coset[k])
        else:
            by_coset[k] = i
    hgens = H.generators or []
    for i, g in enumerate(elements):
        for h in hgens:
            for hh in (h, G.inv(h)):
                j = idx.get(G.mul(g, hh))
                if j is not None:
                    union(i, j)
    return {g: find(i) for i, g in enumerate(elements)}


def intersection_number(X: AlmostInvariantSet, Y: AlmostInvariantSet, budget: int, R: int | None = None,
                        escalate: int = 2) -> IntersectionNumber:
    """Count double cosets K g H (K = Stab Y, H = Stab X) with gX crossing Y, g in ball(budget)."""
    G = X.ambient
    R = R if R is not None else budget + 2
    ball = G.ball(R)
    H, K = X.stabilizer, Y.stabilizer
    elements = G.ball(budget).elements
    cls = _double_coset_classes(G, K, H, elements)
    crossing_cls: dict = {}
    evaluated: dict = {}
    my = Y.mask(ball)
    for g in elements:
        c = cls[g]
        if c in evaluated:
            if evaluated[c]:
                crossing_cls.setdefault(c, g)
            continue
        T = translate(X, g)
        mt = T.mask(ball)
        if not ((mt & my).any() and (mt & ~my).any() and (~mt & my).any() and (~mt & ~my).any()):
            evaluated[c] = False
            continue
        rep = _corner_report(T, Y, ball, R)
        # periodic coset growth can look flat at one radius: settle each corner further out
        for r in range(R + 1, R + 1 + escalate):
            if not rep.inconclusive_count:
                break
            wider = _corner_report(T, Y, G.ball(r), r)
            for sides, cn in rep.corners.items():
                if cn.settled == SizeClass.INCONCLUSIVE:
                    rep.corners[sides] = wider[sides]
        v = _cross_value(rep) == YES
        evaluated[c] = v
        if v:
            crossing_cls[c] = g
    reps = sorted(crossing_cls.values(), key=lambda g: elements.index(g))
    # counts at smaller budgets: classes whose shortlex-first crossing element lies there
    sizes = G.ball(budget)
    counts = []
    first_layer = sorted(sizes.index(g) for g in reps)
    for r in range(budget + 1):
        counts.append(sum(1 for i in first_layer if i < sizes.size(r)))
    exact = budget >= 2 and counts[-1] == counts[-2] == counts[-3]
    return IntersectionNumber(len(reps), exact, counts, reps, budget, R)


# -- sandwiching -------------------------------------------------------------

def sandwich_check(Xj: AlmostInvariantSet, Xk: AlmostInvariantSet, budget: int, R: int | None = None) -> Verdict:
    """Is Xj sandwiched by E(Xk): crossing every element, or U ≤ Xj ≤ V for some U, V in E(Xk)."""
    R = R if R is not None else budget + 2

    def search(b):
        ball = Xj.ambient.ball(R)
        lower = upper = None
        all_cross = True
        for g, T in translates(Xk, b, include_complements=True):
            rep = _corner_report(T, Xj, ball, R)
            if _cross_value(rep) != YES:
                all_cross = False
            if lower is None and _inclusion_value(rep) == YES:
                lower = T
            if upper is None and _inclusion_value(_corner_report(Xj, T, ball, R)) == YES:
                upper = T
            if lower is not None and upper is not None:
                return YES, {"U": lower.describe(), "V": upper.describe()}, lower, upper
        if all_cross:
            return YES, {"crosses_all": True}, None, None
        return NO, {"lower": None if lower is None else lower.describe(),
                    "upper": None if upper is None else upper.describe()}, lower, upper

    v, wit, _, _ = search(budget)
    if v == YES:
        return Verdict(YES, budget, True, witness=wit)
    prev, _, _, _ = search(budget - 1) if budget >= 1 else (None, None, None, None)
    stable = prev == NO
    return Verdict(NO if stable else INCONCLUSIVE, budget, stable, witness=wit,
                   evidence={"note": "no sandwich found within the translate budget"})
