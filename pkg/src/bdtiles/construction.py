"""Marked fixed points, the constants a and h, nested patch families and omega-tilings.

Throughout, a *letter* is one of two seed patches P, Q with translate supports.
``A_L(k)`` denotes rho^k(L) translated so that its mark sits at the origin; these
nest exactly: ``A_L(k) < A_L(k + s)`` whenever ``s`` is a multiple of the
self-copy level of L.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .errors import BudgetExceeded, InvariantError
from .geometry import Box, Patch, Point, add, norm2, scale, sub
from .spectral import CONTINUUM, SpectralReport, _as_mpf
from .substitution import (
    DEFAULT_BUDGET,
    SubstitutionRule,
    expand_supertile,
    interior_copies,
    interior_copy_level,
    patch_support_box,
)

LETTERS = ("P", "Q")


def word_letter(word: str, i: int) -> str:
    """Letter i (1-based) of ``word`` extended by repeating its last letter."""
    return word[i - 1] if i <= len(word) else word[-1]


@dataclass(frozen=True)
class MarkedPatch:
    """A patch with its mark x(P); ``anchored`` puts the mark at the origin."""

    patch: Patch
    mark: Point
    level: int  # level of the self-copy defining the mark
    copy_offset: Point

    @property
    def anchored(self) -> Patch:
        return self.patch.translate(tuple(-c for c in self.mark))

    @property
    def support(self) -> Box:
        return patch_support_box(self.patch)


def fixed_point(r: SubstitutionRule, p: Patch, a0: int, budget: int = DEFAULT_BUDGET) -> MarkedPatch:
    """Mark of ``p`` from its canonical interior copy in rho^a0(p).

    The copy ``p + o`` (smallest ``o`` lexicographically) defines the contraction
    ``y -> (y + o) / xi^a0``; its fixed point is ``o / (xi^a0 - 1)``.
    """
    copies = interior_copies(r, p, p, a0, budget)
    if not copies:
        raise ValueError(f"rho^{a0} of the patch holds no boundary-disjoint copy of it")
    o = copies[0].offset
    mark = scale(1 / (r.power(a0) - 1), o)
    if not patch_support_box(p).contains_point(mark):
        raise InvariantError("fixed point left the patch support")
    return MarkedPatch(p, mark, a0, o)


def self_copy_level(r: SubstitutionRule, p: Patch, budget: int = DEFAULT_BUDGET, max_level: int = 32) -> int:
    for a0 in range(1, max_level + 1):
        if interior_copies(r, p, p, a0, budget):
            return a0
    raise BudgetExceeded("no boundary-disjoint self-copy found")


def compute_a(r: SubstitutionRule, p: Patch, q: Patch, budget: int = DEFAULT_BUDGET) -> int:
    """max of the interior-copy levels for (p, q) and (q, p)."""
    bp, bq = patch_support_box(p), patch_support_box(q)
    if bp.extents != bq.extents:
        raise ValueError("supports of P and Q are not translates of each other")
    return max(interior_copy_level(r, p, q, budget), interior_copy_level(r, q, p, budget))


def _ratio_exceeds(lambda1, ratio, h, tolerance=1e-9) -> bool:
    """Decide lambda1 < ratio**h; exact for rationals, otherwise with a relative margin."""
    if isinstance(ratio, Fraction):
        return Fraction(lambda1) < ratio**h
    with mpmath.workdps(50):
        lhs = _as_mpf(Fraction(lambda1))
        rhs = mpmath.mpf(ratio) ** h
        if abs(rhs - lhs) <= tolerance * h * lhs:
            raise ArithmeticError(f"lambda1 and ratio**{h} agree within floating-point accuracy")
        return bool(lhs < rhs)


def compute_h(report: SpectralReport, a: int, d: int | None = None, levels: int = 6) -> tuple:
    """Smallest multiple h of a with lambda1^(1/h) < |lambda_t| / lambda1^((d-1)/d), and k_i = h^(i-1)."""
    if report.classification != CONTINUUM:
        raise ValueError(f"h is undefined for classification {report.classification!r}")
    if d is not None and d != report.dimension:
        raise ValueError("dimension does not match the spectral report")
    ratio = report.growth_ratio
    lambda1 = report.lambda1 if report.exact else Fraction(report.lambda1)
    h = a
    while not _ratio_exceeds(lambda1, ratio, h):
        h += a
    return h, tuple(h ** (i - 1) for i in range(1, levels + 1))


@dataclass(frozen=True)
class ChainLink:
    letter: str
    level: int
    mark: Point
    support: Box


@dataclass(frozen=True)
class NestedPlacement:
    """Level-i member of the nested family for a finite word.

    ``supertiles`` lists ``(prototile_id, lower_corner, level)``: the patch is the
    union of these supertiles and is never expanded here.
    """

    word: str
    level: int
    letter: str
    mark: Point
    support: Box
    supertiles: tuple
    chain: tuple
    checks: dict = field(default_factory=dict, compare=False)

    def expand(self, r: SubstitutionRule, query: Box | None = None) -> Patch:
        tiles = []
        for pid, origin, lvl in self.supertiles:
            tiles.extend(expand_supertile(r, pid, origin, lvl, query))
        return Patch(tuple(tiles))


class NestedFamily:
    """Constants and canonical copies for building the nested patches of two letters."""

    def __init__(self, rule: SubstitutionRule, p: Patch, q: Patch, report: SpectralReport,
                 budget: int = DEFAULT_BUDGET):
        self.rule = rule
        self.seeds = {"P": p, "Q": q}
        self.report = report
        self.a = compute_a(rule, p, q, budget)
        self.h, _ = compute_h(report, self.a, rule.dimension)
        self.marked = {}
        for letter, seed in self.seeds.items():
            self.marked[letter] = fixed_point(rule, seed, self_copy_level(rule, seed, budget), budget)
        for letter, mp in self.marked.items():
            if self.a % mp.level:
                raise ValueError(
                    f"self-copy level {mp.level} of {letter} does not divide a = {self.a}; "
                    "centered copies cannot be chained"
                )
        # shift[(L, M)]: A_L(a) contains A_M(0) + shift
        self.shift = {}
        for big in LETTERS:
            for small in LETTERS:
                if big == small:
                    self.shift[(big, small)] = (Fraction(0),) * rule.dimension
                    continue
                copies = interior_copies(rule, self.seeds[big], self.seeds[small], self.a, budget)
                if not copies:
                    raise ValueError(f"rho^{self.a}({big}) holds no interior copy of {small}")
                o = copies[0].offset
                self.shift[(big, small)] = sub(
                    add(self.marked[small].mark, o), scale(rule.power(self.a), self.marked[big].mark)
                )
        box = self.marked["P"].support
        self.diam2 = box.diameter_squared
        # c1^2 = lambda1^(2a/d) diam^2 = xi^(2a) diam^2
        self.c1_squared = rule.power(2 * self.a) * self.diam2

    @property
    def c1(self) -> float:
        return float(mpmath.sqrt(_as_mpf(self.c1_squared)))

    def k(self, i: int) -> int:
        """k_i = h^(i-1) for i >= 1; k_0 is taken as 0."""
        return 0 if i == 0 else self.h ** (i - 1)

    def anchored_support(self, letter: str, k: int, mark: Point) -> Box:
        mp = self.marked[letter]
        s = self.rule.power(k)
        return mp.support.translate(tuple(-c for c in mp.mark)).scaled(s).translate(mark)

    def supertiles(self, letter: str, k: int, mark: Point) -> tuple:
        mp = self.marked[letter]
        s = self.rule.power(k)
        out = []
        for t in mp.patch.tiles:
            out.append((t.prototile_id, add(scale(s, sub(t.offset, mp.mark)), mark), k))
        return tuple(out)

    def _transition_ok(self, letter: str, i: int):
        gap = self.k(i + 1) - self.k(i) - self.a
        step = self.marked[letter].level
        if gap < 0 or gap % step:
            raise ValueError(
                f"k_{i + 1} - k_{i} - a = {gap} is not a non-negative multiple of the self-copy "
                f"level {step} of {letter}"
            )

    def build_nested(self, word: str, check: bool = True) -> NestedPlacement:
        """Place rho^{k_i}(last letter) so the whole chain of earlier levels nests inside it."""
        word = word.upper()
        if not word:
            raise ValueError("word must be non-empty")
        if set(word) - set(LETTERS):
            raise ValueError(f"word letters must be P or Q, got {word!r}")
        d = self.rule.dimension
        mark = (Fraction(0),) * d
        chain = [ChainLink(word[0], self.k(1), mark, self.anchored_support(word[0], self.k(1), mark))]
        for i in range(1, len(word)):
            prev, cur = word[i - 1], word[i]
            self._transition_ok(cur, i)
            mark = sub(mark, scale(self.rule.power(self.k(i)), self.shift[(cur, prev)]))
            level = self.k(i + 1)
            chain.append(ChainLink(cur, level, mark, self.anchored_support(cur, level, mark)))
        last = chain[-1]
        placement = NestedPlacement(
            word=word,
            level=len(word),
            letter=last.letter,
            mark=last.mark,
            support=last.support,
            supertiles=self.supertiles(last.letter, last.level, last.mark),
            chain=tuple(chain),
        )
        if check:
            checks = self.check_placement(placement)
            placement.checks.update(checks)
            if not all(checks.values()):
                raise InvariantError(f"nested placement for {word} breaks {checks}")
        return placement

    def check_placement(self, pl: NestedPlacement) -> dict:
        """The three structural properties, by exact box arithmetic on the chain."""
        origin = (Fraction(0),) * self.rule.dimension
        kinds = all(link.letter == pl.word[j] for j, link in enumerate(pl.chain)) and pl.letter == pl.word[-1]
        nesting = True
        for inner, outer in zip(pl.chain, pl.chain[1:]):
            if not (outer.support.strictly_contains_box(inner.support) and inner.support.contains_point(origin)):
                nesting = False
        nesting = nesting and pl.chain[-1].support.contains_point(origin)
        bound = all(
            norm2(outer.mark) <= self.c1_squared * self.rule.power(2 * inner.level)
            for inner, outer in zip(pl.chain, pl.chain[1:])
        )
        return {"kind": kinds, "nesting": nesting, "mark_bound": bound}

    def nested_count(self, letter: str, k: int) -> int:
        from .spectral import count_vector, substitution_matrix

        seed = self.seeds[letter].count_vector(self.rule.n)
        return sum(count_vector(substitution_matrix(self.rule), seed, k))


class OmegaTiling:
    """The tiling T_omega, the increasing union of the nested patches of ``word``.

    A finite word is extended by repeating its last letter.
    """

    max_levels = 12

    def __init__(self, family: NestedFamily, word: str):
        if not word:
            raise ValueError("word must be non-empty")
        self.family = family
        self.word = word.upper()
        self._cache = {}

    @property
    def dimension(self) -> int:
        return self.family.rule.dimension

    def letter(self, i: int) -> str:
        return word_letter(self.word, i)

    def prefix(self, i: int) -> str:
        return "".join(self.letter(j) for j in range(1, i + 1))

    def nested(self, i: int) -> NestedPlacement:
        if i not in self._cache:
            self._cache[i] = self.family.build_nested(self.prefix(i), check=False)
        return self._cache[i]

    def level_for(self, query: Box) -> int:
        """First level whose support holds ``query`` away from its boundary."""
        for i in range(1, self.max_levels + 1):
            if self.nested(i).support.strictly_contains_box(query):
                return i
        raise BudgetExceeded("query not covered within the supported number of levels")

    def window(self, query: Box) -> Patch:
        """Tiles of T_omega meeting ``query``."""
        return self.nested(self.level_for(query)).expand(self.family.rule, query)


def omega_window(t: OmegaTiling, query: Box) -> Patch:
    return t.window(query)
