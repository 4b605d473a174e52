"""Catalog groups with solved word problem.

Elements are tuples of nonzero ints: letter ``+(i+1)`` is generator ``i`` and
``-(i+1)`` its inverse.  Every oracle maps words to a canonical word
(``normalize``) and the empty tuple is the identity.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

import numpy as np

Element = tuple

DEFAULT_MAX_BALL = 250_000


class GroupError(ValueError):
    pass


class UnknownGenerator(GroupError):
    pass


class UnsupportedGroup(GroupError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised instead of silently truncating an enumeration."""


def letter_key(letter: int) -> int:
    return 2 * (abs(letter) - 1) + (1 if letter < 0 else 0)


def invert_word(word: Sequence[int]) -> tuple:
    return tuple(-x for x in reversed(word))


class Ball:
    """Elements at word distance <= radius, in shortlex order of geodesics."""

    def __init__(self, group: "GroupOracle", radius: int):
        self.group = group
        self.radius = radius
        st = group._bfs
        self._elements = st["elements"]
        self._index = st["index"]
        self.layer_ends = st["layer_ends"][: radius + 1]
        self.n = self.layer_ends[-1]

    @property
    def elements(self) -> list:
        return self._elements[: self.n]

    def size(self, r: int | None = None) -> int:
        if r is None:
            return self.n
        r = min(r, self.radius)
        return self.layer_ends[r] if r >= 0 else 0

    def index(self, g: Element) -> int | None:
        i = self._index.get(g)
        if i is None or i >= self.n:
            return None
        return i

    def __contains__(self, g) -> bool:
        return self.index(g) is not None

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self._elements[: self.n])

    def layers(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int32)
        start = 0
        for r, end in enumerate(self.layer_ends):
            out[start:end] = r
            start = end
        return out

    def sphere(self, r: int) -> list:
        lo = self.layer_ends[r - 1] if r > 0 else 0
        return self._elements[lo : self.layer_ends[r]]


class GroupOracle:
    kind = "abstract"

    def __init__(self, name: str, gens: Sequence[str]):
        self.name = name
        self.gens = tuple(gens)
        if len(set(self.gens)) != len(self.gens):
            raise GroupError(f"repeated generator names in {name}: {self.gens}")
        self.max_ball = DEFAULT_MAX_BALL
        self._bfs = None
        self._gen_index = {s: i for i, s in enumerate(self.gens)}
        self._letters = frozenset(range(1, len(self.gens) + 1)) | frozenset(range(-len(self.gens), 0))

    # -- contract -------------------------------------------------------
    def normalize(self, word: Iterable[int]) -> Element:
        raise NotImplementedError

    def check_letters(self, word: Iterable[int]) -> tuple:
        word = tuple(word)
        if self._letters.issuperset(word):
            return tuple(map(int, word))
        n = len(self.gens)
        for x in word:
            if not isinstance(x, (int, np.integer)) or x == 0 or abs(x) > n:
                raise UnknownGenerator(f"letter {x!r} not in the alphabet of {self.name}")
        return tuple(int(x) for x in word)

    @property
    def identity(self) -> Element:
        return ()

    def mul(self, *elements: Sequence[int]) -> Element:
        word: list = []
        for g in elements:
            word.extend(g)
        return self.normalize(word)

    def inv(self, g: Sequence[int]) -> Element:
        return self.normalize(invert_word(g))

    def power(self, g: Sequence[int], k: int) -> Element:
        base = tuple(g) if k >= 0 else invert_word(g)
        return self.normalize(base * abs(k))

    def conj(self, g, h) -> Element:
        """g h g^-1"""
        return self.normalize(tuple(g) + tuple(h) + invert_word(g))

    def gen(self, name: str) -> Element:
        return self.normalize((self._gen_index[name] + 1,))

    def letters(self) -> list[int]:
        out = []
        for i in range(len(self.gens)):
            out.append(i + 1)
            if not self.is_involution(i):
                out.append(-(i + 1))
        return out

    def is_involution(self, i: int) -> bool:
        return self.normalize((i + 1, i + 1)) == ()

    # -- text -----------------------------------------------------------
    def parse(self, text: str | Sequence) -> Element:
        if not isinstance(text, str):
            return self.normalize(self._parse_tokens(text))
        text = text.strip()
        if text in ("", "1", "e", "ε", "id"):
            return ()
        tokens = [t for t in re.split(r"[\s*·.]+", text) if t]
        return self.normalize(self._parse_tokens(tokens))

    def _parse_tokens(self, tokens) -> list:
        word: list = []
        single = all(len(s) == 1 and s.islower() for s in self.gens)
        for tok in tokens:
            if isinstance(tok, int):
                word.append(tok)
                continue
            m = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9']*)(?:\^\(?(-?\d+)\)?)?", tok)
            if m and m.group(1) in self._gen_index:
                i = self._gen_index[m.group(1)]
                k = int(m.group(2)) if m.group(2) else 1
                word.extend([(i + 1) if k > 0 else -(i + 1)] * abs(k))
                continue
            if single and m and m.group(2) is None and tok.isalpha():
                for ch in tok:
                    if ch in self._gen_index:
                        word.append(self._gen_index[ch] + 1)
                    elif ch.lower() in self._gen_index:
                        word.append(-(self._gen_index[ch.lower()] + 1))
                    else:
                        raise UnknownGenerator(f"unknown generator {ch!r} in {tok!r}")
                continue
            if m and m.group(2) is not None and single and all(c in self._gen_index for c in m.group(1)):
                # "ab^2" means a b^2
                for ch in m.group(1)[:-1]:
                    word.append(self._gen_index[ch] + 1)
                i = self._gen_index[m.group(1)[-1]]
                k = int(m.group(2))
                word.extend([(i + 1) if k > 0 else -(i + 1)] * abs(k))
                continue
            raise UnknownGenerator(f"unknown generator symbol {tok!r} for {self.name}")
        return word

    def format(self, g: Sequence[int]) -> str:
        if not g:
            return "1"
        parts = []
        i = 0
        g = tuple(g)
        while i < len(g):
            j = i
            while j < len(g) and g[j] == g[i]:
                j += 1
            name = self.gens[abs(g[i]) - 1]
            k = (j - i) * (1 if g[i] > 0 else -1)
            parts.append(name if k == 1 else f"{name}^{k}")
            i = j
        return " ".join(parts)

    # -- balls ----------------------------------------------------------
    def ball(self, R: int) -> Ball:
        if R < 0:
            raise ValueError("radius must be non-negative")
        if self._bfs is None:
            self._bfs = {"elements": [()], "index": {(): 0}, "layer_ends": [1]}
        st = self._bfs
        letters = sorted(self.letters(), key=letter_key)
        while len(st["layer_ends"]) <= R:
            r = len(st["layer_ends"])
            lo = st["layer_ends"][r - 2] if r >= 2 else 0
            hi = st["layer_ends"][r - 1]
            elements, index = st["elements"], st["index"]
            for k in range(lo, hi):
                g = elements[k]
                for x in letters:
                    h = self.normalize(g + (x,))
                    if h not in index:
                        if len(elements) >= self.max_ball:
                            raise BudgetExceeded(
                                f"ball of {self.name} exceeds {self.max_ball} elements at radius {r}"
                            )
                        index[h] = len(elements)
                        elements.append(h)
            st["layer_ends"].append(len(elements))
        return Ball(self, R)

    def word_length(self, g: Element, cap: int = 64) -> int:
        """Geodesic length (BFS distance), capped."""
        r = 0
        while r <= cap:
            b = self.ball(r)
            if g in b:
                return r
            r += 1
        raise BudgetExceeded(f"word length of {self.format(g)} exceeds {cap}")

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "generators": list(self.gens)}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} {self.gens}>"


class TrivialGroup(GroupOracle):
    kind = "trivial"

    def __init__(self, name: str = "1"):
        super().__init__(name, ())

    def normalize(self, word):
        self.check_letters(word)
        return ()


class FreeGroup(GroupOracle):
    kind = "free"

    def normalize(self, word):
        out: list = []
        for x in self.check_letters(word):
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)


class FreeAbelianGroup(GroupOracle):
    kind = "free-abelian"

    def vector(self, word) -> tuple:
        v = [0] * len(self.gens)
        for x in self.check_letters(word):
            v[abs(x) - 1] += 1 if x > 0 else -1
        return tuple(v)

    def from_vector(self, v) -> Element:
        out: list = []
        for i, e in enumerate(v):
            out.extend([(i + 1) if e > 0 else -(i + 1)] * abs(int(e)))
        return tuple(out)

    def normalize(self, word):
        return self.from_vector(self.vector(word))


class CyclicGroup(GroupOracle):
    """Z/n on one generator; normal form a^k with k in (-n/2, n/2]."""

    kind = "finite-cyclic"

    def __init__(self, name: str, gen: str, order: int):
        if order < 1:
            raise GroupError("finite cyclic order must be positive")
        super().__init__(name, (gen,))
        self.order = order

    def exponent(self, word) -> int:
        return sum(1 if x > 0 else -1 for x in self.check_letters(word)) % self.order

    def from_exponent(self, k: int) -> Element:
        n = self.order
        k %= n
        if k > n // 2:
            k -= n
        return (1,) * k if k >= 0 else (-1,) * (-k)

    def normalize(self, word):
        return self.from_exponent(self.exponent(word))


class _Composite(GroupOracle):
    """Shared letter bookkeeping for products of catalog groups."""

    def __init__(self, name: str, factors: Sequence[GroupOracle]):
        names: list = []
        self.offsets = []
        for f in factors:
            self.offsets.append(len(names))
            names.extend(f.gens)
        super().__init__(name, names)
        self.factors = list(factors)
        self._owner = []
        for fi, f in enumerate(self.factors):
            self._owner.extend([fi] * len(f.gens))

    def split_letter(self, x: int) -> tuple[int, int]:
        fi = self._owner[abs(x) - 1]
        local = abs(x) - self.offsets[fi]
        return fi, local if x > 0 else -local

    def lift(self, fi: int, word) -> tuple:
        off = self.offsets[fi]
        return tuple((x + off) if x > 0 else (x - off) for x in word)


class FreeProduct(_Composite):
    kind = "free-product"

    def normalize(self, word):
        word = self.check_letters(word)
        stack: list = []  # (factor, local normal word)
        i = 0
        while i < len(word):
            fi, _ = self.split_letter(word[i])
            j = i
            run = []
            while j < len(word) and self._owner[abs(word[j]) - 1] == fi:
                run.append(self.split_letter(word[j])[1])
                j += 1
            i = j
            if stack and stack[-1][0] == fi:
                merged = self.factors[fi].normalize(stack[-1][1] + tuple(run))
                if merged:
                    stack[-1] = (fi, merged)
                else:
                    stack.pop()
            else:
                run_n = self.factors[fi].normalize(run)
                if run_n:
                    stack.append((fi, run_n))
        out: list = []
        for fi, w in stack:
            out.extend(self.lift(fi, w))
        return tuple(out)

    def syllables(self, g) -> list[tuple[int, tuple]]:
        out: list = []
        for x in g:
            fi, loc = self.split_letter(x)
            if out and out[-1][0] == fi:
                out[-1] = (fi, out[-1][1] + (loc,))
            else:
                out.append((fi, (loc,)))
        return out


class DirectProduct(_Composite):
    kind = "direct-product"

    def components(self, word) -> list[tuple]:
        parts: list = [[] for _ in self.factors]
        for x in self.check_letters(word):
            fi, loc = self.split_letter(x)
            parts[fi].append(loc)
        return [f.normalize(p) for f, p in zip(self.factors, parts)]

    def normalize(self, word):
        out: list = []
        for fi, w in enumerate(self.components(word)):
            out.extend(self.lift(fi, w))
        return tuple(out)


def free_group(names: Sequence[str] | int, name: str | None = None) -> FreeGroup:
    if isinstance(names, int):
        names = [chr(ord("a") + i) for i in range(names)]
    return FreeGroup(name or f"F{len(names)}", names)


def free_abelian(names: Sequence[str] | int, name: str | None = None) -> FreeAbelianGroup:
    if isinstance(names, int):
        names = ["x", "y", "z", "w"][:names] if names <= 4 else [f"x{i}" for i in range(names)]
    return FreeAbelianGroup(name or f"Z{len(names)}", names)


def infinite_dihedral(name: str = "D_inf") -> FreeProduct:
    return FreeProduct(name, [CyclicGroup("Z2s", "s", 2), CyclicGroup("Z2t", "t", 2)])


def spot_check_homomorphism(G: GroupOracle, radius: int = 2) -> list:
    """Associativity / idempotence spot checks; returns offending triples."""
    bad = []
    els = G.ball(radius).elements
    for g in els:
        if G.normalize(g) != g:
            bad.append(("not-normal", g))
    for g in els:
        for h in els:
            gh = G.mul(g, h)
            for k in els[: min(len(els), 9)]:
                if G.mul(gh, k) != G.mul(g, G.mul(h, k)):
                    bad.append(("assoc", g, h, k))
    return bad
