import itertools
import random
from fractions import Fraction as F

import pytest

from bdtiles.bdanalysis import (
    MatchingInstance,
    _edges,
    algebraic_ratio,
    bd_matching_feasible,
    count_meeting,
    disagreements,
    divergence_table,
    laczkovich_quotient,
    min_displacement,
    min_displacement_squared,
    tiling_points,
)
from bdtiles.construction import OmegaTiling
from bdtiles.geometry import Box, boundary_measure, cube_cover

from oracles import bottleneck_by_assignment, bottleneck_by_permutations, dist_key


def box(x0, y0, x1, y1):
    return Box.from_bounds((F(x0), F(y0)), (F(x1), F(y1)))


def test_identical_sources_give_zero(family):
    t = OmegaTiling(family, "PQPQ")
    row = laczkovich_quotient(t, t, box(-7, -7, 7, 7))
    assert row.quotient == 0 and row.count_1 == row.count_2 > 0


def test_quotient_matches_hand_count(family):
    t1, t2 = OmegaTiling(family, "PP"), OmegaTiling(family, "QQ")
    region = box(F(-1, 2), F(-1, 2), F(1, 2), F(1, 2))
    row = laczkovich_quotient(t1, t2, region)
    a = cube_cover(region)
    # count by hand: tiles of each window with positive-area overlap with the cubes
    for t, n in ((t1, row.count_1), (t2, row.count_2)):
        tiles = t.window(a.bbox()).tiles
        hand = sum(1 for tile in tiles if any(
            all(max(o, c - F(1, 2)) < min(o + e, c + F(1, 2)) for o, e, c in zip(tile.offset, tile.extents, ctr))
            for ctr in a.centers))
        assert hand == n
    assert row.quotient == F(abs(row.count_1 - row.count_2)) / boundary_measure(a)


def test_single_cube_quotient_is_small(family):
    t1, t2 = OmegaTiling(family, "P"), OmegaTiling(family, "Q")
    row = laczkovich_quotient(t1, t2, box(0, 0, F(1, 2), F(1, 2)), half_open=True)
    assert row.cube_count == 1 and row.boundary == 4
    assert row.quotient <= F(max(row.count_1, row.count_2), 4)


def test_count_meeting_rejects_unknown_convention(family):
    with pytest.raises(ValueError):
        count_meeting([], cube_cover(box(0, 0, 1, 1)), "touching")


def test_disagreements():
    assert disagreements("PQQ", "QQQ") == [1]
    assert disagreements("PPPPPP", "QQQQQQ") == [1, 2, 3, 4, 5, 6, 7, 8]
    assert disagreements("PQ", "PP") == [2, 3, 4, 5, 6, 7, 8]


def test_divergence_rows(family):
    rows = divergence_table(family, "PPPPPP", "QQQQQQ", 2)
    r1, r2 = rows
    assert (r1.k, r1.cube_count, r1.boundary) == (1, 28, 22)
    assert (r2.k, r2.cube_count, r2.boundary) == (4, 13366, 490)
    for r in rows:
        assert r.geometric
        assert r.quotient * r.boundary == abs(r.count_1 - r.count_2)
        assert all(d["holds"] for d in r.decomposition.values())
    assert r1.nested_difference == 6 and r2.nested_difference == 6**4
    assert r2.quotient > r1.quotient


def test_rows_past_budget_are_algebraic(family):
    rows = divergence_table(family, "PPPPPP", "QQQQQQ", 3, budget=20000)
    assert rows[1].geometric and not rows[2].geometric
    assert rows[2].k == 16 and rows[2].nested_difference == 6**16
    assert rows[2].algebraic_quotient == F(6**16) / rows[2].boundary


def test_threads_do_not_change_rows(family):
    one = divergence_table(family, "PQPQ", "QQQQ", 2, workers=1)
    four = divergence_table(family, "PQPQ", "QQQQ", 2, workers=4)
    assert one == four
    assert [r.decomposition for r in one] == [r.decomposition for r in four]


def test_equal_words_are_rejected(family):
    with pytest.raises(ValueError):
        divergence_table(family, "PQ", "PQ", 1)


def test_algebraic_ratio_is_two_to_the_k_over_six(family):
    for k in range(21):
        assert algebraic_ratio(family, k) == F(2**k, 6)


def test_closed_convention_breaks_decomposition(family):
    """Face-touching tiles outside the nested support inflate the closed count."""
    t = OmegaTiling(family, "PPPPPP")
    row = divergence_table(family, "PPPPPP", "QQQQQQ", 1)[0]
    region = family.anchored_support("P", 1, (F(0), F(0)))
    a = cube_cover(region)
    bb = a.bbox()
    grown = Box.from_bounds(tuple(x - 1 for x in bb.lo), tuple(x + 1 for x in bb.hi))
    tiles = t.window(grown).tiles
    overlap = count_meeting(tiles, a, "overlap")
    closed = count_meeting(tiles, a, "closed")
    assert overlap == row.count_1
    assert closed > overlap


# --- matching -------------------------------------------------------------


def test_identity_matching():
    pts = [(0, 0), (1, 0), (0, 1)]
    res = bd_matching_feasible(MatchingInstance(pts, pts, 0))
    assert res.feasible and res.matching == (0, 1, 2)


def test_half_shift():
    left = [(0, 0), (1, 0), (2, 0)]
    right = [(F(1, 2), 0), (F(3, 2), 0), (F(5, 2), 0)]
    assert not bd_matching_feasible(MatchingInstance(left, right, F(1, 4))).feasible
    res = bd_matching_feasible(MatchingInstance(left, right, F(1, 2)))
    assert res.feasible
    assert all(dist_key(left[i], right[j]) <= F(1, 4) for i, j in enumerate(res.matching))


def test_clustered_points_have_hall_certificate():
    left = [(0, 0), (0, F(1, 10)), (F(1, 10), 0), (10, 10)]
    right = [(0, 0), (10, 10), (10, 11), (11, 10)]
    inst = MatchingInstance(left, right, 1)
    res = bd_matching_feasible(inst)
    assert not res.feasible
    cert = res.certificate
    assert cert.deficiency > 0
    subset = [left[i] for i in cert.subset] if cert.side == "left" else [right[i] for i in cert.subset]
    other = right if cert.side == "left" else left
    nbrs = {j for j, q in enumerate(other) for p in subset if dist_key(p, q) <= 1}
    assert nbrs == set(cert.neighbours)
    # no bijection of the 4! achieves the cap
    assert all(max(dist_key(left[i], right[p[i]]) for i in range(4)) > 1 for p in itertools.permutations(range(4)))


def test_size_mismatch_is_infeasible():
    res = bd_matching_feasible(MatchingInstance([(0, 0)], [(0, 0), (1, 1)], 5))
    assert not res.feasible and res.certificate.deficiency > 0


def test_feasibility_is_monotone_in_cap():
    rng = random.Random(3)
    left = [(F(rng.randint(0, 20), 4), F(rng.randint(0, 20), 4)) for _ in range(7)]
    right = [(F(rng.randint(0, 20), 4), F(rng.randint(0, 20), 4)) for _ in range(7)]
    flags = [bd_matching_feasible(MatchingInstance(left, right, F(c, 4))).feasible for c in range(0, 40)]
    assert flags == sorted(flags)


@pytest.mark.parametrize("norm", ["euclidean", "max"])
def test_grid_edges_match_naive_edges(norm):
    rng = random.Random(5)
    for _ in range(20):
        left = [(F(rng.randint(-30, 30), 3), F(rng.randint(-30, 30), 3)) for _ in range(25)]
        right = [(F(rng.randint(-30, 30), 3), F(rng.randint(-30, 30), 3)) for _ in range(25)]
        limit = F(rng.randint(0, 40), 4)
        if norm == "euclidean":
            limit *= limit
        got = _edges(left, right, limit, norm)
        want = _edges(left, right, limit, norm, naive=True)
        assert [sorted(a) for a in got] == [sorted(a) for a in want]


def test_min_displacement_examples():
    pts = [(0, 0), (3, 4)]
    assert min_displacement(pts, pts) == 0
    shifted = [(F(7, 2), 0), (F(13, 2), 4)]
    assert min_displacement(pts, shifted) == F(7, 2)
    assert min_displacement_squared(pts, shifted) == F(49, 4)
    assert min_displacement([(0, 0)], [(1, 1)]) == pytest.approx(2**0.5)
    assert min_displacement([(0, 0)], [(1, 1)], "max") == 1


@pytest.mark.parametrize("norm", ["euclidean", "max"])
def test_min_displacement_against_permutations(norm):
    rng = random.Random(17)
    for _ in range(30):
        n = rng.randint(1, 6)
        left = [(F(rng.randint(0, 12), 2), F(rng.randint(0, 12), 2)) for _ in range(n)]
        right = [(F(rng.randint(0, 12), 2), F(rng.randint(0, 12), 2)) for _ in range(n)]
        assert min_displacement_squared(left, right, norm) == bottleneck_by_permutations(left, right, norm)


def test_min_displacement_between_tilings(family):
    """Centres of two tilings in a shared window, trimmed to equal size, against the assignment oracle."""
    q = box(-13, -13, 14, 14)
    a = tiling_points(OmegaTiling(family, "PQPQ").window(q))
    b = tiling_points(OmegaTiling(family, "QQQQ").window(q))
    a = sorted(p for p in a if q.contains_point(p))
    b = sorted(p for p in b if q.contains_point(p))
    n = min(len(a), len(b), 60)
    a, b = a[:n], b[:n]
    assert min_displacement_squared(a, b) == bottleneck_by_assignment(a, b)
