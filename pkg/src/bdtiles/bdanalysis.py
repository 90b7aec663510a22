"""Divergence quotients over cube unions and finite-window matching checks."""
from __future__ import annotations

import math
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .construction import NestedFamily, OmegaTiling, word_letter
from .errors import InvariantError
from .geometry import Box, CubeUnion, Patch, block_boundary, boundary_measure, cube_cover, cube_ranges
from .spectral import _as_mpf, count_vector, substitution_matrix
from .substitution import DEFAULT_BUDGET

HALF = Fraction(1, 2)
MAX_WORD_LEVELS = 8


@dataclass(frozen=True)
class DivergenceRow:
    """One row of a divergence table; geometric columns are None past the budget."""

    m: int | None
    index: int | None  # disagreement position i_m
    k: int | None
    cube_count: int
    boundary: Fraction
    count_1: int | None
    count_2: int | None
    quotient: Fraction | None
    nested_difference: int | None = None
    lower_bound: str | None = None
    decomposition: dict = field(default_factory=dict, compare=False)

    @property
    def geometric(self) -> bool:
        return self.count_1 is not None

    @property
    def algebraic_quotient(self) -> Fraction | None:
        if self.nested_difference is None:
            return None
        return Fraction(self.nested_difference) / self.boundary


def _block(a: CubeUnion) -> Box | None:
    """The half-open box ``A`` when ``a`` is a full rectangular block, else None."""
    bb = a.bbox()
    if bb is not None and len(a) == math.prod(int(e) for e in bb.extents):
        return bb
    return None


CONVENTIONS = ("overlap", "closed")


def count_meeting(tiles, a: CubeUnion, convention: str = "overlap") -> int:
    """#[A]^T for a union of half-open lattice cubes.

    ``overlap`` counts tiles sharing positive volume with A. ``closed`` also
    counts tiles touching A only along a face; with it, a tile outside a patch
    support can be counted without meeting A minus that support, so the
    count decomposition of the divergence rows is stated for ``overlap``.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    closed = convention == "closed"
    block = _block(a)
    if block is None:
        test = a.meets_box if closed else a.overlaps_box
        return sum(1 for t in tiles if test(t.box))
    return sum(1 for t in tiles if _meets_block(t, block, closed))


def _meets_block(t, block: Box, closed: bool = False) -> bool:
    if closed:
        return all(o < h and o + e >= l for o, e, l, h in zip(t.offset, t.extents, block.lo, block.hi))
    return all(o < h and o + e > l for o, e, l, h in zip(t.offset, t.extents, block.lo, block.hi))


def laczkovich_quotient(source1, source2, region: Box, half_open: bool = False,
                        convention: str = "overlap") -> DivergenceRow:
    """|#[A]^T1 - #[A]^T2| / boundary(A) for A the cubes meeting ``region``.

    Sources only need a ``window(box)`` method returning the tiles meeting it.
    """
    a = cube_cover(region, half_open)
    if not a.centers:
        raise ValueError("region covers no lattice cube")
    query = a.bbox()
    n1 = count_meeting(source1.window(query).tiles, a, convention)
    n2 = count_meeting(source2.window(query).tiles, a, convention)
    boundary = boundary_measure(a)
    return DivergenceRow(None, None, None, len(a), boundary, n1, n2, Fraction(abs(n1 - n2)) / boundary)


def _meets_difference(t, a_box: Box, s: Box) -> bool:
    """Does the tile overlap (A minus S) or (S minus A) in positive measure?"""
    hi_t = tuple(o + e for o, e in zip(t.offset, t.extents))
    for first, second in ((a_box, s), (s, a_box)):
        if all(o < fh and h > fl for o, h, fl, fh in zip(t.offset, hi_t, first.lo, first.hi)):
            # the box t & first has positive widths; it sticks out of second somewhere?
            for o, h, fl, fh, sl, sh in zip(t.offset, hi_t, first.lo, first.hi, second.lo, second.hi):
                if max(o, fl) < sl or min(h, fh) > sh:
                    return True
    return False


@dataclass(frozen=True)
class Constants:
    """The constants c0..c3 of the lower bound, with c(d) = 2 d sqrt(d)."""

    c0: float
    c1_squared: Fraction
    c2: float
    c3: Fraction
    cd: float

    @property
    def c1(self) -> float:
        return math.sqrt(self.c1_squared)


def bound_constants(family: NestedFamily) -> Constants:
    r = family.rule
    d = r.dimension
    cd = 2 * d * math.sqrt(d)
    d_max = max(math.sqrt(sum(float(e) ** 2 for e in p.extents)) for p in r.prototiles)
    v_min = min(float(p.volume) for p in r.prototiles)
    c1 = math.sqrt(family.c1_squared)
    c2 = cd * (c1 + d_max) ** d / v_min
    ext = family.marked["P"].support.extents
    # boundary(A) <= surface of the box with extents xi^k e + 2 <= xi^(k(d-1)) surface(e + 2)
    c3 = Box(tuple(Fraction(0) for _ in ext), tuple(e + 2 for e in ext)).surface()
    c0 = family.report.c0_estimate
    if c0 is None:
        raise ValueError("spectral report lacks a c0 estimate; pass the P and Q count vectors")
    return Constants(float(c0), family.c1_squared, c2, c3, cd)


def lower_bound(family: NestedFamily, consts: Constants, index: int) -> mpmath.mpf:
    """(c0/c3) ratio^k_i - 2 c2 lambda1^k_(i-1), with k_0 = 0."""
    with mpmath.workdps(50):
        ratio = family.report.growth_ratio
        ratio = _as_mpf(ratio) if isinstance(ratio, Fraction) else mpmath.mpf(ratio)
        lam = _as_mpf(Fraction(family.report.lambda1))
        val = (mpmath.mpf(consts.c0) / _as_mpf(consts.c3)) * ratio ** family.k(index)
        return val - 2 * mpmath.mpf(consts.c2) * lam ** family.k(index - 1)


def format_real(x, digits: int = 15) -> str:
    with mpmath.workdps(max(50, digits + 10)):
        return mpmath.nstr(x, digits, min_fixed=-4, max_fixed=digits)


def disagreements(omega: str, eta: str, levels: int = MAX_WORD_LEVELS) -> list:
    omega, eta = omega.upper(), eta.upper()
    return [i for i in range(1, levels + 1) if word_letter(omega, i) != word_letter(eta, i)]


def _row(family, t1, t2, consts, m, index, budget):
    r = family.rule
    k = family.k(index)
    b = family.anchored_support("P", k, (Fraction(0),) * r.dimension)
    ranges = cube_ranges(b)
    cubes = math.prod(x.stop - x.start for x in ranges)
    boundary = block_boundary(ranges)
    m_mat = substitution_matrix(r)
    n1 = sum(count_vector(m_mat, family.seeds[t1.letter(index)].count_vector(r.n), k))
    n2 = sum(count_vector(m_mat, family.seeds[t2.letter(index)].count_vector(r.n), k))
    lb = format_real(lower_bound(family, consts, index))
    base = dict(m=m, index=index, k=k, cube_count=cubes, boundary=boundary, nested_difference=abs(n1 - n2),
                lower_bound=lb)

    a_box = Box(tuple(Fraction(x.start) - HALF for x in ranges), tuple(Fraction(x.stop - x.start) for x in ranges))
    supports = [t.nested(index).support for t in (t1, t2)]
    query = a_box
    for s in supports:
        lo = tuple(min(u, v) for u, v in zip(query.lo, s.lo))
        hi = tuple(max(u, v) for u, v in zip(query.hi, s.hi))
        query = Box.from_bounds(lo, hi)
    v_min = min(p.volume for p in r.prototiles)
    if query.volume / v_min > budget:
        return DivergenceRow(count_1=None, count_2=None, quotient=None, **base)

    with mpmath.workdps(50):
        collar = mpmath.mpf(consts.c2) * _as_mpf(Fraction(r.inflation ** r.dimension)) ** family.k(index - 1) \
            * _as_mpf(boundary)
    counts, decomposition = [], {}
    for name, t, nested_count, s in (("first", t1, n1, supports[0]), ("second", t2, n2, supports[1])):
        tiles = t.nested(t.level_for(query)).expand(r, query).tiles
        count = sum(1 for tile in tiles if _meets_block(tile, a_box))
        in_difference = sum(1 for tile in tiles if _meets_difference(tile, a_box, s))
        deviation = abs(count - nested_count)
        decomposition[name] = {
            "deviation": deviation,
            "difference_tiles": in_difference,
            "bound": format_real(collar),
            "holds": deviation <= in_difference and in_difference <= collar,
        }
        counts.append(count)
    quotient = Fraction(abs(counts[0] - counts[1])) / boundary
    if quotient * boundary != abs(counts[0] - counts[1]):
        raise InvariantError("quotient does not reproduce the count difference")
    return DivergenceRow(count_1=counts[0], count_2=counts[1], quotient=quotient, decomposition=decomposition,
                         **base)


def divergence_table(family: NestedFamily, omega: str, eta: str, m_max: int,
                     budget: int = DEFAULT_BUDGET, workers: int = 1) -> list:
    """Rows m = 1..m_max over the positions where the two words differ.

    Finite words are extended by repeating their last letter. A_m is the cube
    cover of rho^k(P) anchored at its mark, with k = k at the m-th disagreement.
    Rows whose window would exceed ``budget`` tiles keep only the algebraic columns.
    """
    if m_max < 1:
        raise ValueError("m_max must be positive")
    positions = disagreements(omega, eta)
    if not positions:
        raise ValueError("the two words agree everywhere; no divergence to measure")
    positions = positions[:m_max]
    t1, t2 = OmegaTiling(family, omega), OmegaTiling(family, eta)
    for i in range(1, positions[-1] + 1):
        t1.nested(i)
        t2.nested(i)
    consts = bound_constants(family)
    jobs = list(enumerate(positions, start=1))
    if workers <= 1:
        return [_row(family, t1, t2, consts, m, i, budget) for m, i in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _row(family, t1, t2, consts, job[0], job[1], budget), jobs))


def algebraic_ratio(family: NestedFamily, k: int) -> Fraction:
    """Count difference of rho^k(P), rho^k(Q) over the boundary of supp rho^k(P), exactly."""
    r = family.rule
    m = substitution_matrix(r)
    n1 = sum(count_vector(m, family.seeds["P"].count_vector(r.n), k))
    n2 = sum(count_vector(m, family.seeds["Q"].count_vector(r.n), k))
    surface = family.marked["P"].support.surface() * r.power(k * (r.dimension - 1))
    return Fraction(abs(n1 - n2)) / surface


# --- matching -------------------------------------------------------------


def _points(pts) -> tuple:
    return tuple(tuple(Fraction(c) for c in p) for p in pts)


@dataclass(frozen=True)
class MatchingInstance:
    left: tuple
    right: tuple
    cap: Fraction = Fraction(0)
    norm: str = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "left", _points(self.left))
        object.__setattr__(self, "right", _points(self.right))
        object.__setattr__(self, "cap", Fraction(self.cap))
        if self.cap < 0:
            raise ValueError("cap must be non-negative")
        if self.norm not in ("euclidean", "max"):
            raise ValueError(f"unknown norm {self.norm!r}")
        dims = {len(p) for p in self.left + self.right}
        if len(dims) > 1:
            raise ValueError("points have mixed dimensions")


@dataclass(frozen=True)
class HallCertificate:
    """A subset of one side whose neighbourhood is smaller than it."""

    side: str
    subset: tuple
    neighbours: tuple

    @property
    def deficiency(self) -> int:
        return len(self.subset) - len(self.neighbours)


@dataclass(frozen=True)
class MatchingResult:
    feasible: bool
    matching: tuple | None  # left index -> right index
    certificate: HallCertificate | None
    reason: str = ""


def _distance_key(p, q, norm):
    """Squared euclidean distance, or the max-norm distance: both exact."""
    if norm == "max":
        return max(abs(a - b) for a, b in zip(p, q))
    return sum((a - b) ** 2 for a, b in zip(p, q))


def _threshold(cap: Fraction, norm: str) -> Fraction:
    return cap if norm == "max" else cap * cap


def _edges(left, right, limit, norm, naive=False) -> list:
    """Adjacency lists of left points to right points within ``limit`` (a distance key)."""
    adj = [[] for _ in left]
    if naive or not left or not right:
        for i, p in enumerate(left):
            adj[i] = [j for j, q in enumerate(right) if _distance_key(p, q, norm) <= limit]
        return adj
    reach = limit if norm == "max" else Fraction(math.isqrt(limit.numerator // limit.denominator + 1) + 1)
    cell = reach if reach > 0 else Fraction(1)
    grid = defaultdict(list)
    for j, q in enumerate(right):
        grid[tuple(math.floor(c / cell) for c in q)].append(j)
    d = len(left[0])
    for i, p in enumerate(left):
        home = tuple(math.floor(c / cell) for c in p)
        found = []
        for step in product((-1, 0, 1), repeat=d):
            for j in grid.get(tuple(h + s for h, s in zip(home, step)), ()):
                if _distance_key(p, right[j], norm) <= limit:
                    found.append(j)
        adj[i] = sorted(found)
    return adj


def _hall_set(adj, match_left, match_right, start):
    """Left vertices reachable from an unmatched ``start`` by alternating paths."""
    seen_left, seen_right = {start}, set()
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v in seen_right:
                continue
            seen_right.add(v)
            w = match_right[v]
            if w < 0:
                raise InvariantError("augmenting path left after maximum matching")
            if w not in seen_left:
                seen_left.add(w)
                queue.append(w)
    return HallCertificate("left", tuple(sorted(seen_left)), tuple(sorted(seen_right)))


def _feasible(left, right, limit, norm) -> MatchingResult:
    if len(left) != len(right):
        big, side = (left, "left") if len(left) > len(right) else (right, "right")
        small = right if side == "left" else left
        cert = HallCertificate(side, tuple(range(len(big))), tuple(range(len(small))))
        return MatchingResult(False, None, cert, "sizes differ")
    n = len(left)
    if n == 0:
        return MatchingResult(True, (), None)
    adj = _edges(left, right, limit, norm)
    rows = np.repeat(np.arange(n), [len(a) for a in adj])
    cols = np.array([j for a in adj for j in a], dtype=np.int64)
    graph = csr_matrix((np.ones(len(cols), dtype=np.int8), (rows, cols)), shape=(n, n))
    match_left = maximum_bipartite_matching(graph, perm_type="column")
    match_right = np.full(n, -1)
    for i, j in enumerate(match_left):
        if j >= 0:
            match_right[j] = i
    unmatched = [i for i, j in enumerate(match_left) if j < 0]
    if not unmatched:
        return MatchingResult(True, tuple(int(j) for j in match_left), None)
    return MatchingResult(False, None, _hall_set(adj, match_left, match_right, unmatched[0]), "Hall deficiency")


def bd_matching_feasible(inst: MatchingInstance) -> MatchingResult:
    """Is there a bijection moving every point at most ``cap``? Certificate either way."""
    return _feasible(inst.left, inst.right, _threshold(inst.cap, inst.norm), inst.norm)


def min_displacement_squared(left, right, norm: str = "euclidean") -> Fraction:
    """Least feasible cap as an exact distance key: squared for euclidean, plain for max."""
    left, right = _points(left), _points(right)
    if len(left) != len(right) or not left:
        raise ValueError("point sets must be nonempty and of equal size")
    keys = sorted({_distance_key(p, q, norm) for p in left for q in right})
    lo, hi = 0, len(keys) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(left, right, keys[mid], norm).feasible:
            hi = mid
        else:
            lo = mid + 1
    return keys[lo]


def min_displacement(left, right, norm: str = "euclidean"):
    """Least cap admitting a bijection; a Fraction when it is rational, else a float."""
    key = min_displacement_squared(left, right, norm)
    if norm == "max":
        return key
    num, den = math.isqrt(key.numerator), math.isqrt(key.denominator)
    if num * num == key.numerator and den * den == key.denominator:
        return Fraction(num, den)
    return math.sqrt(key)


def tiling_points(p: Patch) -> tuple:
    """One point per tile, at the centre of its support."""
    return tuple(t.box.center for t in p.tiles)
