from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdtiles.geometry import (
    Box,
    CubeUnion,
    Patch,
    PlacedTile,
    as_fraction,
    block_boundary,
    boundary_measure,
    cube_cover,
    cube_ranges,
    exact_cover_check,
    tiles_intersecting,
    union_volume,
)
from bdtiles.substitution import expand_patch

from oracles import closed_meets, facet_census, raster_cells


def box(lo, hi):
    return Box.from_bounds([F(x) for x in lo], [F(x) for x in hi])


def sq(x, y, w=1, h=1, pid=0):
    return PlacedTile(pid, (F(x), F(y)), (F(w), F(h)))


def brute_cover(b, radius=12):
    """Lattice centres whose half-open cube meets the closed box, by enumeration."""
    out = set()
    for c in product(range(-radius, radius + 1), repeat=b.dim):
        if all(x - F(1, 2) <= h and l < x + F(1, 2) for x, l, h in zip(c, b.lo, b.hi)):
            out.add(c)
    return out


def test_floats_rejected():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("3/6") == F(1, 2)


def test_box_rejects_degenerate():
    with pytest.raises(ValueError):
        Box((F(0), F(0)), (F(1), F(0)))


def test_cover_small_box_hits_four_cubes():
    b = box(("1/4", "1/4"), ("3/4", "3/4"))
    assert cube_cover(b).centers == frozenset({(0, 0), (1, 0), (0, 1), (1, 1)})
    assert cube_cover(b).centers == brute_cover(b)


def test_cover_of_lattice_cube_is_itself():
    c = box(("-1/2", "-1/2"), ("1/2", "1/2"))
    assert cube_cover(c, half_open=True).centers == frozenset({(0, 0)})


def test_cover_of_centered_level_one_support():
    b = box((-3, "-3/2"), (3, "3/2"))
    a = cube_cover(b)
    assert len(a) == 28
    assert {c[0] for c in a.centers} == set(range(-3, 4))
    assert {c[1] for c in a.centers} == set(range(-1, 3))
    assert boundary_measure(a) == 22 == facet_census(a.centers)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.fractions(-5, 5, max_denominator=4)] * 2),
       st.tuples(*[st.fractions(F(1, 4), 4, max_denominator=4)] * 2))
def test_cover_matches_enumeration_and_is_minimal(lo, ext):
    b = Box(lo, ext)
    a = cube_cover(b)
    assert a.centers == brute_cover(b)
    # each cube meets b, and together they contain b
    for c in a.centers:
        assert all(x - F(1, 2) <= h and l < x + F(1, 2) for x, l, h in zip(c, b.lo, b.hi))
    bb = a.bbox()
    assert bb.contains_box(b)


def test_boundary_examples():
    assert boundary_measure(CubeUnion(frozenset({(0, 0)}))) == 4
    assert boundary_measure(CubeUnion(frozenset({(0, 0), (1, 0)}))) == 6
    with pytest.raises(ValueError):
        boundary_measure(CubeUnion(frozenset()))


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(st.integers(-15, 15), st.integers(-15, 15)), min_size=1, max_size=400))
def test_boundary_matches_facet_census(cells):
    assert boundary_measure(CubeUnion(frozenset(cells))) == facet_census(cells)


@settings(max_examples=20, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=200))
def test_boundary_matches_facet_census_in_3d(cells):
    assert boundary_measure(CubeUnion(frozenset(cells))) == facet_census(cells)


def test_boundary_large_random_union():
    import random

    rng = random.Random(7)
    cells = {(rng.randrange(150), rng.randrange(150)) for _ in range(10_000)}
    assert boundary_measure(CubeUnion(frozenset(cells))) == facet_census(cells)


def test_block_boundary_agrees_with_census():
    b = box((-81, "-81/2"), (81, "81/2"))
    ranges = cube_ranges(b)
    a = cube_cover(b)
    assert block_boundary(ranges) == boundary_measure(a) == facet_census(a.centers) == 490


def test_tiles_intersecting(rule):
    rho_t1 = rule.child_patch(0)
    assert tiles_intersecting(rho_t1, box((10, 10), (11, 11))).tiles == ()
    assert tiles_intersecting(rho_t1, box((0, 0), (3, 3))) == rho_t1
    rho_t2 = rule.child_patch(1)
    corner = box((0, 0), (1, 1))
    got = tiles_intersecting(rho_t2, corner)
    brute = [t for t in rho_t2.tiles if closed_meets(t.offset, t.box.hi, corner.lo, corner.hi)]
    assert list(got.tiles) == sorted(brute, key=PlacedTile.sort_key)
    # only the rectangles [0,2]x[0,1] and [0,2]x[1,2] touch [0,1]^2
    assert {t.offset for t in got.tiles} == {(0, 0), (0, 1)}


@settings(max_examples=50, deadline=None)
@given(st.integers(-2, 8), st.integers(-2, 5), st.integers(1, 4), st.integers(1, 4), st.integers(0, 3))
def test_tiles_intersecting_monotone(x, y, w, h, grow):
    from bdtiles.rulefile import bundled_rule

    p = bundled_rule().child_patch(1)
    b1 = box((x, y), (x + w, y + h))
    b2 = box((x - grow, y - grow), (x + w + grow, y + h + grow))
    assert tiles_intersecting(p, b1).keys() <= tiles_intersecting(p, b2).keys()


def test_cover_check_examples():
    region = box((0, 0), (2, 1))
    assert exact_cover_check(Patch((sq(0, 0), sq(1, 0))), region).ok
    rep = exact_cover_check(Patch((sq(0, 0), sq(0, 0))), region)
    assert not rep.ok and rep.overlap is not None
    nine = box((0, 0), (3, 3))
    tiles = [sq(0, 0, 2, 1, pid=1)] + [sq(x, y) for x, y in [(0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2)]]
    rep = exact_cover_check(Patch(tuple(tiles)), nine)
    assert not rep.ok and rep.volume_deficit == 1 and rep.overlap is None
    assert "volume deficit 1" in rep.describe()


def test_cover_check_accepts_expansions(rule):
    for pid in range(rule.n):
        for k in range(4):
            p = expand_patch(rule, Patch((rule.tile(pid),)), k)
            assert exact_cover_check(p, rule.prototile_box(pid).scaled(rule.power(k))).ok


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(1, 4), st.integers(1, 4)),
                min_size=1, max_size=12))
def test_union_volume_matches_raster(rects):
    boxes = [Box((F(x), F(y)), (F(w), F(h))) for x, y, w, h in rects]
    cells = raster_cells([(b.lo, b.extents) for b in boxes])
    assert union_volume(boxes) == len(cells)


def test_patch_is_canonically_sorted():
    p = Patch((sq(1, 0), sq(0, 0)))
    assert [t.offset for t in p.tiles] == [(0, 0), (1, 0)]
    assert p.count_vector(2) == (2, 0)
