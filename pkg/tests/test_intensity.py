import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from loopoffload.errors import InvalidConfig
from loopoffload.frontend import ArrayRef, BodyProfile, LoopInfo, TripEstimate
from loopoffload.intensity import IntensityScore, compute_intensity, rank_scores, rank_top_a, score_loops

from conftest import loops_of


def loop(trip=1000, ops=1, access=2, arrays=(), scalars=0, lid=1):
    bp = BodyProfile(ops_add=ops, access_exprs=access, arrays=tuple(arrays), scalars_bytes=scalars)
    t = TripEstimate("static_const", trip) if trip else TripEstimate()
    return LoopInfo(lid, "for", ("t.c", 1), None, 0, bp, t)


def test_hand_evaluated_example():
    lp = loop(trip=1000, ops=1, access=2, arrays=[ArrayRef("a", 8, 1000)])
    s = compute_intensity(lp)
    assert s.footprint_bytes == 8000
    assert s.intensity == 4_000_000


def test_zero_ops_gives_zero():
    s = compute_intensity(loop(ops=0, arrays=[ArrayRef("a", 8, 10)]))
    assert s.ops_total == 0 and s.intensity == 0


def test_unknown_trip_uses_default():
    lp = loop(trip=None, arrays=[ArrayRef("a", 4, None)])
    assert compute_intensity(lp, default_trip=50).ops_total == 50
    assert compute_intensity(lp, default_trip=50).footprint_bytes == 200


def test_enclosing_trips_multiply_ops():
    s = compute_intensity(loop(trip=20, ops=3), enclosing_trips=[10, 4])
    assert s.ops_total == 3 * 20 * 10 * 4


def test_configured_intensities_keep_order():
    ranked = rank_scores([IntensityScore(1, 1, 1, 1, 3.0), IntensityScore(2, 1, 1, 1, 10.0)])
    assert [s.intensity for s in ranked] == [10.0, 3.0]
    assert [s.rank for s in ranked] == [1, 2]


def test_top_a_counts():
    scores = [IntensityScore(i, 1, 1, 1, float(i)) for i in range(1, 37)]
    assert len(rank_top_a(scores, 5)) == 5
    assert len(rank_top_a(scores[:3], 5)) == 3
    with pytest.raises(InvalidConfig):
        rank_top_a(scores, 0)


def test_tie_goes_to_lower_loop_id():
    ranked = rank_top_a([IntensityScore(7, 1, 1, 1, 5.0), IntensityScore(2, 1, 1, 1, 5.0)], 2)
    assert [s.loop_id for s in ranked] == [2, 7]


def test_score_loops_ranks_are_permutation():
    _, loops = loops_of("""
    float a[100], b[100]; double m[10][10];
    void f(int x){ int i, j;
      for (i = 0; i < 100; i++) a[i] = a[i] * b[i];
      for (i = 0; i < 10; i++) for (j = 0; j < 10; j++) m[i][j] = m[j][i] + 1.0;
      while (x) { x--; }
    }""")
    scores = score_loops(loops)
    assert sorted(s.rank for s in scores) == list(range(1, len(loops) + 1))
    assert scores[0].intensity == max(s.intensity for s in scores)
    for s in scores:
        assert (s.intensity == 0) == (s.ops_total == 0)


profiles = st.builds(
    lambda ops, acc, n_elem, eb, scal: (ops, acc, n_elem, eb, scal),
    st.integers(1, 50), st.integers(0, 20), st.integers(1, 10_000), st.sampled_from([1, 2, 4, 8]),
    st.integers(0, 64),
)


@given(profiles, st.integers(1, 10_000), st.integers(1, 1000))
def test_strictly_increasing_in_trip(p, trip, dt):
    ops, acc, n, eb, scal = p
    lo = compute_intensity(loop(trip, ops, acc, [ArrayRef("a", eb, n)], scal))
    hi = compute_intensity(loop(trip + dt, ops, acc, [ArrayRef("a", eb, n)], scal))
    assert hi.intensity > lo.intensity


@given(profiles, st.integers(1, 10_000), st.integers(1, 1000))
def test_strictly_increasing_in_footprint(p, trip, dn):
    ops, acc, n, eb, scal = p
    lo = compute_intensity(loop(trip, ops, acc, [ArrayRef("a", eb, n)], scal))
    hi = compute_intensity(loop(trip, ops, acc, [ArrayRef("a", eb, n + dn)], scal))
    assert hi.footprint_bytes > lo.footprint_bytes
    assert hi.intensity > lo.intensity


@given(profiles, st.integers(1, 10_000), st.integers(1, 20))
def test_non_increasing_in_access_count(p, trip, da):
    ops, acc, n, eb, scal = p
    lo = compute_intensity(loop(trip, ops, acc + da, [ArrayRef("a", eb, n)], scal))
    hi = compute_intensity(loop(trip, ops, acc, [ArrayRef("a", eb, n)], scal))
    assert lo.intensity <= hi.intensity


@given(st.lists(st.floats(0, 1e9, allow_nan=False), min_size=1, max_size=30),
       st.floats(1e-3, 1e3, allow_nan=False))
def test_ranking_invariant_under_common_scaling(values, k):
    scores = [IntensityScore(i + 1, 1, 1, 1, v) for i, v in enumerate(values)]
    scaled = [IntensityScore(s.loop_id, 1, 1, 1, s.intensity * k) for s in scores]
    # scaling can merge values that were distinct by less than one ulp; skip those
    assume(len({s.intensity for s in scaled}) == len({s.intensity for s in scores}))
    assert [s.loop_id for s in rank_scores(scores)] == [s.loop_id for s in rank_scores(scaled)]


@given(st.integers(1, 100), st.floats(0.01, 100, allow_nan=False))
def test_ops_scale_covariance(ops, k):
    lp = loop(100, ops, 3, [ArrayRef("a", 4, 100)])
    base = compute_intensity(lp)
    scaled = compute_intensity(lp, op_weights=(k, k, k, k))
    assert math.isclose(scaled.intensity, base.intensity * k, rel_tol=1e-12)
