import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from segopt.strategies import (GuidingConfig, InfeasibleEnumeration, SamplingConfig, SearchRegion,
                               guide, orthogonal_points, region_direction, region_full,
                               region_range, round_half_away, sample_exhaustive,
                               sample_orthogonal, sample_random)


@pytest.mark.parametrize("x, want", [(0.5, 1), (-0.5, -1), (2.5, 3), (-2.5, -3), (0.49999999999999994, 0),
                                     (9.2, 9), (0.1, 0), (-0.1, 0), (1.5, 2), (0.0, 0)])
def test_round_half_away(x, want):
    assert round_half_away(x) == want


def test_region_full():
    assert region_full(0, 9) == (0, 9)
    assert region_full(1, 4) == (1, 4)
    with pytest.raises(ValueError):
        region_full(3, 2)


def test_region_direction_guided():
    assert region_direction(5, 0, 9, gradient=2.3) == (0, 4)
    assert region_direction(5, 0, 9, gradient=-0.7) == (6, 9)
    assert region_direction(0, 0, 9, gradient=1.0) == (0, 0)
    assert region_direction(9, 0, 9, gradient=-1.0) == (9, 9)
    assert region_direction(5, 0, 9, gradient=0.0) == (5, 5)


def test_region_direction_random_sides(rng):
    seen = {region_direction(5, 0, 9, rng=rng) for _ in range(50)}
    assert seen == {(0, 4), (6, 9)}


def test_region_range_guided():
    # 50 - round(4 * 2.3) = 50 - 9 = 41, widened by 3
    assert region_range(50, 0, 99, 4, 3, gradient=2.3) == (38, 44)
    assert region_range(50, 0, 99, 1, 0, gradient=0.1) == (50, 50)
    # 2 - 10 = -8, widened to [-10, -6], outside [0, 9] -> nearest valid index
    assert region_range(2, 0, 9, 1, 2, gradient=10) == (0, 0)
    assert region_range(2, 0, 9, 1, 3, gradient=3) == (0, 2)


def test_region_range_random_within_step(rng):
    for _ in range(200):
        lo, hi = region_range(50, 0, 99, 8, 0, rng=rng)
        assert lo == hi and 1 <= abs(lo - 50) <= 8 or lo == hi == 50


def test_guide_requires_gradient_when_guided(rng):
    with pytest.raises(ValueError):
        guide(GuidingConfig("range", True, 2, 1), 5, 0, 9, None, rng)
    assert guide(GuidingConfig("full", True), 5, 0, 9, None, rng) == (0, 9)


def test_config_validation():
    with pytest.raises(ValueError):
        GuidingConfig("range", step_size=0)
    with pytest.raises(ValueError):
        GuidingConfig("sideways")
    with pytest.raises(ValueError):
        SamplingConfig("random", 0)


def test_sample_exhaustive():
    assert sample_exhaustive(SearchRegion.of((2, 5))) == [2, 3, 4, 5]
    assert sample_exhaustive(SearchRegion.of((0, 1), (3, 4))) == [(0, 3), (0, 4), (1, 3), (1, 4)]
    assert sample_exhaustive(SearchRegion.of((7, 7))) == [7]
    with pytest.raises(InfeasibleEnumeration):
        sample_exhaustive(SearchRegion.of((0, 1000), (0, 1000)))


def test_sample_random_examples():
    r = SearchRegion.of((0, 9))
    got = sample_random(r, 4, np.random.default_rng(0))
    assert len(got) == len(set(got)) == 4 and all(0 <= x <= 9 for x in got)
    assert sample_random(SearchRegion.of((3, 3)), 5, np.random.default_rng(0)) == [3]
    a = sample_random(r, 4, np.random.default_rng(11))
    b = sample_random(r, 4, np.random.default_rng(11))
    assert a == b


def test_sample_random_uniform():
    rng = np.random.default_rng(2024)
    r = SearchRegion.of((10, 19))
    draws = [sample_random(r, 1, rng)[0] for _ in range(10_000)]
    counts = np.bincount(np.array(draws) - 10, minlength=10)
    assert chisquare(counts).pvalue > 0.001


def test_sample_orthogonal_examples():
    assert sample_orthogonal(SearchRegion.of((0, 10)), 5) == [0, 3, 5, 8, 10]
    assert sample_orthogonal(SearchRegion.of((0, 2)), 5) == [0, 1, 2]
    assert sample_orthogonal(SearchRegion.of((4, 4)), 7) == [4]
    assert sample_orthogonal(SearchRegion.of((0, 2), (5, 6)), 2) == [(0, 5), (0, 6), (2, 5), (2, 6)]
    with pytest.raises(ValueError):
        orthogonal_points(0, 5, 1)


intervals = st.integers(0, 40).flatmap(lambda lo: st.tuples(st.just(lo), st.integers(lo, lo + 30)))
regions = st.lists(intervals, min_size=1, max_size=2).map(lambda iv: SearchRegion.of(*iv))


@settings(max_examples=200, deadline=None)
@given(regions, st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_samplers_stay_inside(region, k, seed):
    ex = sample_exhaustive(region)
    assert len(ex) == region.cardinality
    rnd = sample_random(region, k, np.random.default_rng(seed))
    assert len(rnd) == min(k, region.cardinality) and len(set(rnd)) == len(rnd)
    orth = sample_orthogonal(region, k)
    for pts in (ex, rnd, orth):
        assert all(p in region for p in pts)
    for d, (lo, hi) in enumerate(region.intervals):
        coords = {p if len(region.intervals) == 1 else p[d] for p in orth}
        assert lo in coords and hi in coords


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 50), st.floats(-50, 50), st.floats(0.01, 10),
       st.integers(0, 10))
def test_guided_regions_within_range(a, b, grad, step, width):
    lo, hi = min(a, b), max(a, b)
    cur = (lo + hi) // 2
    for r in (region_direction(cur, lo, hi, gradient=grad),
              region_range(cur, lo, hi, step, width, gradient=grad)):
        assert lo <= r[0] <= r[1] <= hi


def test_stall_regions_are_singletons():
    assert region_direction(7, 0, 20, gradient=0.0) == (7, 7)
    assert region_range(7, 0, 20, 0.1, 0, gradient=3.0) == (7, 7)
