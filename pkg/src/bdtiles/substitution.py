"""Substitution rules on box prototiles, lazy supertile expansion and occurrence search."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceeded
from .geometry import (
    Box,
    Patch,
    PlacedTile,
    Point,
    add,
    exact_cover_check,
    point,
    scale,
    sub,
)

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class Prototile:
    id: int
    extents: Point
    name: str = ""

    @property
    def volume(self) -> Fraction:
        return math.prod(self.extents, start=Fraction(1))

    @property
    def label(self) -> str:
        return self.name or f"T{self.id + 1}"


@dataclass(frozen=True)
class Child:
    prototile_id: int
    offset: Point


@dataclass(frozen=True)
class SubstitutionRule:
    """Prototiles, an inflation factor and, per prototile, the tiling of its inflated copy.

    ``children[i]`` lists the tiles of rho(T_i), with offsets relative to the
    lower corner of ``inflation * T_i`` placed at the origin.
    """

    dimension: int
    inflation: Fraction
    prototiles: tuple
    children: tuple
    named_patches: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def n(self) -> int:
        return len(self.prototiles)

    def extents(self, i: int) -> Point:
        return self.prototiles[i].extents

    def index(self, name: str) -> int:
        for p in self.prototiles:
            if p.label == name:
                return p.id
        raise KeyError(f"unknown prototile {name!r}")

    def tile(self, i: int, offset=None) -> PlacedTile:
        if not 0 <= i < self.n:
            raise ValueError(f"prototile id {i} out of range for a rule with {self.n} prototiles")
        if offset is None:
            offset = (Fraction(0),) * self.dimension
        return PlacedTile(i, point(offset), self.prototiles[i].extents)

    def patch(self, placements) -> Patch:
        """Build a patch from ``(prototile_id, offset)`` pairs."""
        return Patch(tuple(self.tile(i, o) for i, o in placements))

    def prototile_box(self, i: int) -> Box:
        return Box((Fraction(0),) * self.dimension, self.extents(i))

    def child_patch(self, i: int) -> Patch:
        """rho(T_i) with T_i at the origin."""
        return self.patch((c.prototile_id, c.offset) for c in self.children[i])

    def power(self, k: int) -> Fraction:
        return self.inflation**k


@dataclass(frozen=True)
class Violation:
    kind: str  # "inflation" | "empty" | "overlap" | "outside" | "volume" | "unknown-child"
    prototile: str | None
    message: str
    witness: object = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


def validate_rule(r: SubstitutionRule) -> ValidationReport:
    """Check that each rho(T_i) exactly covers the inflated prototile."""
    out = []
    if not r.inflation > 1:
        out.append(Violation("inflation", None, f"inflation factor must exceed 1, got {r.inflation}"))
    if not r.prototiles:
        out.append(Violation("empty", None, "rule has no prototiles"))
    for proto in r.prototiles:
        kids = r.children[proto.id] if proto.id < len(r.children) else ()
        bad = [c for c in kids if not 0 <= c.prototile_id < r.n]
        if bad:
            out.append(Violation("unknown-child", proto.label, f"child id {bad[0].prototile_id} is not a prototile"))
            continue
        region = r.prototile_box(proto.id).scaled(r.inflation)
        report = exact_cover_check(r.child_patch(proto.id), region)
        if report.overlap is not None:
            out.append(Violation("overlap", proto.label, report.describe(), report.overlap))
        if report.outside is not None:
            t = report.outside
            out.append(Violation(
                "outside", proto.label,
                f"child {r.prototiles[t.prototile_id].label} at offset ({', '.join(map(str, t.offset))})"
                f" leaves the inflated {proto.label}",
                t,
            ))
        if report.volume_deficit:
            out.append(Violation(
                "volume", proto.label, f"volume deficit {report.volume_deficit} on {proto.label}",
                report.volume_deficit,
            ))
    return ValidationReport(tuple(out))


def _check_ids(r: SubstitutionRule, p: Patch):
    for t in p.tiles:
        if not 0 <= t.prototile_id < r.n:
            raise ValueError(f"tile references unknown prototile id {t.prototile_id}")


def substitute(r: SubstitutionRule, p: Patch) -> Patch:
    """Inflate ``p`` by the rule's factor and replace every tile by its children."""
    _check_ids(r, p)
    xi = r.inflation
    out = []
    for t in p.tiles:
        base = scale(xi, t.offset)
        for c in r.children[t.prototile_id]:
            out.append(PlacedTile(c.prototile_id, add(base, c.offset), r.prototiles[c.prototile_id].extents))
    return Patch(tuple(out))


@dataclass(frozen=True)
class SupertileAddress:
    """Position in the hierarchy of rho^level(T_seed): a path of child indices from the top."""

    seed: int
    level: int
    path: tuple = ()

    def __post_init__(self):
        if len(self.path) > self.level:
            raise ValueError("address path longer than its level")

    def child(self, index: int) -> "SupertileAddress":
        return SupertileAddress(self.seed, self.level, self.path + (index,))


def address_tile(r: SubstitutionRule, addr: SupertileAddress, origin=None) -> tuple:
    """Resolve an address to ``(prototile_id, origin, level)`` of the supertile it names.

    ``origin`` is the lower corner of the top-level supertile.
    """
    origin = (Fraction(0),) * r.dimension if origin is None else point(origin)
    pid, lvl = addr.seed, addr.level
    for idx in addr.path:
        kids = r.children[pid]
        if not 0 <= idx < len(kids):
            raise ValueError(f"address step {idx} invalid for prototile {pid}")
        c = kids[idx]
        lvl -= 1
        origin = add(origin, scale(r.power(lvl), c.offset))
        pid = c.prototile_id
    return pid, origin, lvl


def address_box(r: SubstitutionRule, addr: SupertileAddress, origin=None) -> Box:
    """Support of the supertile named by ``addr``, computed without expansion."""
    pid, o, lvl = address_tile(r, addr, origin)
    return Box(o, scale(r.power(lvl), r.extents(pid)))


def supertile_box(r: SubstitutionRule, prototile_id: int, origin: Point, level: int) -> Box:
    return Box(origin, scale(r.power(level), r.extents(prototile_id)))


def _descend(r, stack, query, out):
    xi_pow = {}
    extents = [p.extents for p in r.prototiles]
    while stack:
        pid, origin, lvl = stack.pop()
        s = xi_pow.get(lvl)
        if s is None:
            s = xi_pow[lvl] = r.power(lvl)
        if query is not None:
            ext = extents[pid]
            if not all(
                o <= q_lo + q_e and q_lo <= o + s * e
                for o, e, q_lo, q_e in zip(origin, ext, query.lo, query.extents)
            ):
                continue
        if lvl == 0:
            out.append(PlacedTile(pid, origin, extents[pid]))
            continue
        s_child = xi_pow.get(lvl - 1)
        if s_child is None:
            s_child = xi_pow[lvl - 1] = r.power(lvl - 1)
        for c in r.children[pid]:
            stack.append((c.prototile_id, tuple(o + s_child * x for o, x in zip(origin, c.offset)), lvl - 1))
    return out


def expand_supertile(
    r: SubstitutionRule,
    prototile_id: int,
    origin: Point,
    level: int,
    query: Box | None = None,
    workers: int = 1,
) -> list:
    """Tiles of the level-``level`` supertile of type ``prototile_id`` with lower corner ``origin``.

    Supertiles whose support misses ``query`` are pruned, so the cost follows the
    size of the answer rather than of the supertile. ``query=None`` expands fully.
    """
    if level < 0:
        raise ValueError("level must be non-negative")
    origin = point(origin)
    if workers <= 1 or level == 0:
        return _descend(r, [(prototile_id, origin, level)], query, [])
    s_child = r.power(level - 1)
    roots = [
        (c.prototile_id, add(origin, scale(s_child, c.offset)), level - 1)
        for c in r.children[prototile_id]
    ]
    if query is not None and not supertile_box(r, prototile_id, origin, level).meets(query):
        return []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda root: _descend(r, [root], query, []), roots))
    return [t for part in parts for t in part]


def expected_tile_count(r: SubstitutionRule, p: Patch, k: int) -> int:
    from .spectral import count_vector, substitution_matrix

    v = count_vector(substitution_matrix(r), p.count_vector(r.n), k)
    return sum(v)


def expand_window(
    r: SubstitutionRule, seed: PlacedTile, k: int, query: Box | None = None, workers: int = 1
) -> Patch:
    """Tiles of rho^k(seed) meeting ``query`` (all of them when ``query`` is None)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_ids(r, Patch((seed,)))
    origin = scale(r.power(k), seed.offset)
    return Patch(tuple(expand_supertile(r, seed.prototile_id, origin, k, query, workers)))


def expand_patch(
    r: SubstitutionRule, p: Patch, k: int, query: Box | None = None, budget: int | None = DEFAULT_BUDGET
) -> Patch:
    """rho^k(p), optionally windowed. Full expansions are guarded by a tile budget."""
    _check_ids(r, p)
    if query is None and budget is not None:
        total = expected_tile_count(r, p, k)
        if total > budget:
            raise BudgetExceeded(
                f"rho^{k} of this patch has {total} tiles, above the budget of {budget}; use a smaller level"
            )
    tiles = []
    s = r.power(k)
    for t in p.tiles:
        tiles.extend(expand_supertile(r, t.prototile_id, scale(s, t.offset), k, query))
    return Patch(tuple(tiles))


@dataclass(frozen=True)
class Occurrence:
    offset: Point
    content: Patch


def find_occurrences(haystack: Patch, needle: Patch, within: Box | None = None, strict: bool = False) -> list:
    """All translations ``o`` with ``needle + o`` a sub-patch of ``haystack``.

    With ``within``, only copies whose support bounding box lies inside it are
    kept; ``strict`` additionally requires it to miss the boundary of ``within``.
    Results are sorted by offset.
    """
    if not needle.tiles:
        return []
    index = haystack.keys()
    anchor = needle.tiles[0]
    rel = [(t.prototile_id, sub(t.offset, anchor.offset)) for t in needle.tiles]
    nb = needle.bbox()
    found = []
    for h in haystack.tiles:
        if h.prototile_id != anchor.prototile_id:
            continue
        o = sub(h.offset, anchor.offset)
        if not all((pid, add(h.offset, d)) in index for pid, d in rel):
            continue
        if within is not None:
            box = nb.translate(o)
            if strict and not within.strictly_contains_box(box):
                continue
            if not strict and not within.contains_box(box):
                continue
        found.append(Occurrence(o, needle.translate(o)))
    found.sort(key=lambda occ: occ.offset)
    return found


def occurrences(
    r: SubstitutionRule, haystack_seed: int, m: int, needle: Patch, budget: int = DEFAULT_BUDGET
) -> list:
    """Occurrences of ``needle`` inside rho^m(T_haystack_seed) (seed at the origin)."""
    _check_ids(r, needle)
    hay = expand_patch(r, Patch((r.tile(haystack_seed),)), m, budget=budget)
    return find_occurrences(hay, needle)


def patch_support_box(p: Patch) -> Box:
    """Support of ``p`` as a box; raises if the tiles do not fill their bounding box."""
    if not p.tiles:
        raise ValueError("empty patch has no support")
    bb = p.bbox()
    if not exact_cover_check(p, bb).ok:
        raise ValueError("patch support is not a box")
    return bb


def interior_copies(r: SubstitutionRule, p: Patch, needle: Patch, a: int, budget: int = DEFAULT_BUDGET) -> list:
    """Copies of ``needle`` in rho^a(p) whose support misses the boundary of supp rho^a(p)."""
    big = patch_support_box(p).scaled(r.power(a))
    hay = expand_patch(r, p, a, budget=budget)
    return find_occurrences(hay, needle, within=big, strict=True)


def interior_copy_level(
    r: SubstitutionRule, p: Patch, q: Patch, budget: int = DEFAULT_BUDGET, max_level: int = 64
) -> int:
    """Smallest a0 >= 1 with rho^a0(p) holding boundary-disjoint copies of both ``p`` and ``q``."""
    _check_ids(r, p)
    _check_ids(r, q)
    patch_support_box(p)
    for a0 in range(1, max_level + 1):
        if expected_tile_count(r, p, a0) > budget:
            break
        if interior_copies(r, p, p, a0, budget) and interior_copies(r, p, q, a0, budget):
            return a0
    raise BudgetExceeded(
        "no level within the tile budget holds interior copies of both patches; "
        "this does not rule out a larger level"
    )
