"""Exact rational geometry: points, boxes, placed tiles, patches and unit-cube unions.

Every coordinate is a :class:`fractions.Fraction`. Tiles are axis-aligned boxes;
supports are closed, lattice cubes ``C(x)`` are half-open.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, NamedTuple, Sequence

Point = tuple  # tuple[Fraction, ...]


def as_fraction(value) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string. Floats are rejected."""
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact coordinates; use 'p/q' strings")
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def point(*coords) -> Point:
    if len(coords) == 1 and not isinstance(coords[0], (int, str, Fraction)):
        coords = tuple(coords[0])
    return tuple(as_fraction(c) for c in coords)


def add(p: Point, q: Point) -> Point:
    return tuple(a + b for a, b in zip(p, q))


def sub(p: Point, q: Point) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def scale(c, p: Point) -> Point:
    return tuple(c * a for a in p)


def norm2(p: Point) -> Fraction:
    """Squared Euclidean norm, exact."""
    return sum((a * a for a in p), Fraction(0))


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``lo + [0, extents]``."""

    lo: Point
    extents: Point

    def __post_init__(self):
        if len(self.lo) != len(self.extents):
            raise ValueError("corner and extents have different dimensions")
        if any(e <= 0 for e in self.extents):
            raise ValueError(f"box extents must be positive, got {self.extents}")

    @classmethod
    def from_bounds(cls, lo, hi) -> "Box":
        lo = point(lo)
        hi = point(hi)
        return cls(lo, sub(hi, lo))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def hi(self) -> Point:
        return add(self.lo, self.extents)

    @property
    def volume(self) -> Fraction:
        return math.prod(self.extents, start=Fraction(1))

    @property
    def center(self) -> Point:
        return tuple(l + e / 2 for l, e in zip(self.lo, self.extents))

    @property
    def diameter_squared(self) -> Fraction:
        return norm2(self.extents)

    def surface(self) -> Fraction:
        """(d-1)-measure of the boundary."""
        d = self.dim
        if d == 1:
            return Fraction(2)
        total = Fraction(0)
        for j in range(d):
            total += math.prod((self.extents[l] for l in range(d) if l != j), start=Fraction(1))
        return 2 * total

    def translate(self, v: Point) -> "Box":
        return Box(add(self.lo, v), self.extents)

    def scaled(self, c) -> "Box":
        return Box(scale(c, self.lo), scale(c, self.extents))

    def meets(self, other: "Box") -> bool:
        """Closed-set intersection test."""
        return all(
            a_lo <= b_lo + b_e and b_lo <= a_lo + a_e
            for a_lo, a_e, b_lo, b_e in zip(self.lo, self.extents, other.lo, other.extents)
        )

    def overlaps_interior(self, other: "Box") -> bool:
        return all(
            a_lo < b_lo + b_e and b_lo < a_lo + a_e
            for a_lo, a_e, b_lo, b_e in zip(self.lo, self.extents, other.lo, other.extents)
        )

    def contains_box(self, other: "Box") -> bool:
        return all(
            s_lo <= o_lo and o_lo + o_e <= s_lo + s_e
            for s_lo, s_e, o_lo, o_e in zip(self.lo, self.extents, other.lo, other.extents)
        )

    def strictly_contains_box(self, other: "Box") -> bool:
        """``other`` lies inside ``self`` and misses its boundary."""
        return all(
            s_lo < o_lo and o_lo + o_e < s_lo + s_e
            for s_lo, s_e, o_lo, o_e in zip(self.lo, self.extents, other.lo, other.extents)
        )

    def contains_point(self, p: Point) -> bool:
        return all(l <= x <= l + e for l, e, x in zip(self.lo, self.extents, p))

    def facet_gaps(self, other: "Box") -> tuple:
        """Distances from ``other``'s facets to the matching facets of ``self``."""
        gaps = []
        for s_lo, s_e, o_lo, o_e in zip(self.lo, self.extents, other.lo, other.extents):
            gaps.append(o_lo - s_lo)
            gaps.append(s_lo + s_e - (o_lo + o_e))
        return tuple(gaps)


def bounding_box(boxes: Iterable[Box]) -> Box | None:
    boxes = list(boxes)
    if not boxes:
        return None
    d = boxes[0].dim
    lo = tuple(min(b.lo[j] for b in boxes) for j in range(d))
    hi = tuple(max(b.lo[j] + b.extents[j] for b in boxes) for j in range(d))
    return Box(lo, sub(hi, lo))


class PlacedTile(NamedTuple):
    """A translate of prototile ``prototile_id``; ``extents`` are copied from the rule."""

    prototile_id: int
    offset: Point
    extents: Point

    @property
    def box(self) -> Box:
        return Box(self.offset, self.extents)

    def sort_key(self):
        return (self.offset, self.prototile_id)

    def translate(self, v: Point) -> "PlacedTile":
        return PlacedTile(self.prototile_id, add(self.offset, v), self.extents)


@dataclass(frozen=True)
class Patch:
    """Finite collection of placed tiles, kept in canonical order."""

    tiles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(sorted(self.tiles, key=PlacedTile.sort_key)))

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __bool__(self) -> bool:
        return bool(self.tiles)

    @property
    def dim(self) -> int | None:
        return len(self.tiles[0].offset) if self.tiles else None

    def count_vector(self, n: int) -> tuple:
        counts = [0] * n
        for t in self.tiles:
            counts[t.prototile_id] += 1
        return tuple(counts)

    def volume(self) -> Fraction:
        return sum((t.box.volume for t in self.tiles), Fraction(0))

    def bbox(self) -> Box | None:
        return bounding_box(t.box for t in self.tiles)

    def translate(self, v: Point) -> "Patch":
        return Patch(tuple(t.translate(v) for t in self.tiles))

    def keys(self) -> set:
        return {(t.prototile_id, t.offset) for t in self.tiles}


@dataclass(frozen=True)
class CubeUnion:
    """Finite union of half-open lattice cubes ``C(x) = prod [x_i - 1/2, x_i + 1/2)``."""

    centers: frozenset

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def dim(self) -> int | None:
        for c in self.centers:
            return len(c)
        return None

    def bbox(self) -> Box | None:
        if not self.centers:
            return None
        d = self.dim
        half = Fraction(1, 2)
        lo = tuple(Fraction(min(c[j] for c in self.centers)) - half for j in range(d))
        hi = tuple(Fraction(max(c[j] for c in self.centers)) + half for j in range(d))
        return Box(lo, sub(hi, lo))

    def meets_box(self, b: Box) -> bool:
        """Does the closed box ``b`` intersect the union?"""
        return any(c in self.centers for c in _cube_centers_meeting(b))

    def overlaps_box(self, b: Box) -> bool:
        """Does the interior of ``b`` meet the union (positive-measure overlap)?"""
        return any(c in self.centers for c in product(*cube_ranges(b, half_open=True)))


def _axis_cube_range(lo: Fraction, hi: Fraction, half_open: bool = False) -> range:
    # closed [lo, hi] meets [x - 1/2, x + 1/2)  <=>  lo - 1/2 < x <= hi + 1/2
    first = math.floor(lo - Fraction(1, 2)) + 1
    if half_open:
        # [lo, hi) meets [x - 1/2, x + 1/2)  <=>  lo - 1/2 < x < hi + 1/2
        last = math.ceil(hi + Fraction(1, 2)) - 1
    else:
        last = math.floor(hi + Fraction(1, 2))
    return range(first, last + 1)


def cube_ranges(b: Box, half_open: bool = False) -> tuple:
    """Per-axis integer ranges of the cube centers whose cube meets ``b``."""
    return tuple(_axis_cube_range(l, l + e, half_open) for l, e in zip(b.lo, b.extents))


def _cube_centers_meeting(b: Box):
    return product(*cube_ranges(b))


def cube_cover(b: Box, half_open: bool = False) -> CubeUnion:
    """All lattice cubes ``C(x)`` meeting ``b``.

    ``b`` is closed by default; ``half_open=True`` treats it as ``[lo, hi)`` like a
    lattice cube itself, so that covering ``C(x)`` returns ``{x}``.
    """
    return CubeUnion(frozenset(product(*cube_ranges(b, half_open))))


def block_boundary(ranges: Sequence[range]) -> Fraction:
    """Boundary measure of a rectangular block of cubes, from its side lengths alone."""
    sides = [Fraction(r.stop - r.start) for r in ranges]
    if any(s == 0 for s in sides):
        raise ValueError("empty cube block has no boundary")
    return Box(tuple(Fraction(0) for _ in sides), tuple(sides)).surface()


def boundary_measure(a: CubeUnion) -> Fraction:
    """(d-1)-measure of the boundary of the closed union of cubes.

    Counted line by line: along each axis the cubes sharing the remaining
    coordinates split into maximal runs, and every run contributes two facets.
    """
    if not a.centers:
        raise ValueError("boundary of an empty cube union is undefined")
    d = a.dim
    total = 0
    for axis in range(d):
        lines = defaultdict(list)
        for c in a.centers:
            lines[c[:axis] + c[axis + 1:]].append(c[axis])
        for coords in lines.values():
            coords.sort()
            runs = 1 + sum(1 for u, v in zip(coords, coords[1:]) if v != u + 1)
            total += 2 * runs
    return Fraction(total)


def tile_meets_cubes(tile_box: Box, a: CubeUnion) -> bool:
    """Positive-measure overlap, the convention used for tile counts over cube unions."""
    return a.overlaps_box(tile_box)


def tiles_intersecting(p: Patch, b: Box) -> Patch:
    """Sub-patch of tiles whose closed support meets ``b``."""
    return Patch(tuple(t for t in p.tiles if t.box.meets(b)))


@dataclass(frozen=True)
class CoverReport:
    ok: bool
    overlap: tuple | None = None  # pair of offending tiles
    outside: PlacedTile | None = None
    volume_deficit: Fraction = Fraction(0)

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        parts = []
        if self.overlap is not None:
            a, b = self.overlap
            parts.append(f"tiles overlap: {_fmt_tile(a)} and {_fmt_tile(b)}")
        if self.outside is not None:
            parts.append(f"tile outside region: {_fmt_tile(self.outside)}")
        if self.volume_deficit:
            parts.append(f"volume deficit {self.volume_deficit}")
        return "; ".join(parts)


def _fmt_tile(t: PlacedTile) -> str:
    return f"#{t.prototile_id}@({', '.join(str(c) for c in t.offset)})"


def find_overlap(tiles: Sequence[PlacedTile]):
    """First pair of tiles with overlapping interiors, or None.

    Tiles are bucketed on a grid whose cell is the largest tile extent, so only
    tiles sharing a cell are compared.
    """
    if len(tiles) < 2:
        return None
    d = len(tiles[0].offset)
    cell = max(max(t.extents) for t in tiles)
    buckets = defaultdict(list)
    for t in tiles:
        ranges = [
            range(math.floor(t.offset[j] / cell), math.floor((t.offset[j] + t.extents[j]) / cell) + 1)
            for j in range(d)
        ]
        box = t.box
        seen = set()
        for key in product(*ranges):
            for other in buckets[key]:
                if id(other) in seen:
                    continue
                seen.add(id(other))
                if box.overlaps_interior(other.box):
                    return (other, t)
            buckets[key].append(t)
    return None


def exact_cover_check(p: Patch, region: Box) -> CoverReport:
    """Check that ``p`` tiles ``region`` exactly.

    Interior-disjointness, containment and equal volume together imply an exact
    cover for box tiles.
    """
    tiles = p.tiles
    overlap = find_overlap(tiles)
    outside = next((t for t in tiles if not region.contains_box(t.box)), None)
    deficit = region.volume - p.volume()
    ok = overlap is None and outside is None and deficit == 0
    return CoverReport(ok, overlap, outside, deficit)


def union_volume(boxes: Sequence[Box]) -> Fraction:
    """Exact volume of a union of boxes by coordinate compression."""
    boxes = list(boxes)
    if not boxes:
        return Fraction(0)
    d = boxes[0].dim
    grids = [sorted({b.lo[j] for b in boxes} | {b.lo[j] + b.extents[j] for b in boxes}) for j in range(d)]
    index = [{v: i for i, v in enumerate(g)} for g in grids]
    covered = set()
    for b in boxes:
        spans = [range(index[j][b.lo[j]], index[j][b.lo[j] + b.extents[j]]) for j in range(d)]
        covered.update(product(*spans))
    total = Fraction(0)
    for cell in covered:
        total += math.prod((grids[j][cell[j] + 1] - grids[j][cell[j]] for j in range(d)), start=Fraction(1))
    return total
