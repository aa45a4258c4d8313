import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcel0.errors import ParameterError
from wcel0.localizations import LocalizationSet
from wcel0.metrics import MatchResult, evaluate_stack, extract_localizations, jaccard, match_detections
from wcel0.operator import GridSpec

GRID = GridSpec(64, 4, 100.0)


def px(rc, frame=0, grid=GRID):
    rc = np.asarray(rc, dtype=float).reshape(-1, 2)
    n = rc.shape[0]
    p = grid.fine_pixel_nm
    return LocalizationSet(np.full(n, frame), (rc[:, 1] + 0.5) * p, (rc[:, 0] + 0.5) * p, np.ones(n))


class TestExtract:
    def test_zero(self):
        assert len(extract_localizations(np.zeros(256 * 256), GRID)) == 0

    def test_geometry(self):
        x = np.zeros((256, 256))
        x[7, 200] = 5.0
        loc = extract_localizations(x.ravel(), GRID, frame=3)
        assert len(loc) == 1
        assert (loc.x_nm[0], loc.y_nm[0], loc.intensity[0], loc.frame[0]) == (200.5 * 25, 7.5 * 25, 5.0, 3)

    def test_threshold(self):
        x = np.zeros((256, 256))
        x[1, 1] = 5.0
        assert len(extract_localizations(x.ravel(), GRID, min_intensity=10)) == 0
        assert len(extract_localizations(x.ravel(), GRID, min_intensity=5)) == 0
        assert len(extract_localizations(x.ravel(), GRID, min_intensity=4.9)) == 1


class TestMatch:
    def test_identical(self):
        t = px([(0, 0), (10, 10), (100, 3)])
        m = match_detections(t, t, 0, GRID)
        assert (m.cd, m.fn, m.fp, jaccard(m)) == (3, 0, 0, 1.0)

    def test_empty_estimate(self):
        m = match_detections(LocalizationSet.empty(), px([(i, i) for i in range(5)]), 4, GRID)
        assert (m.cd, m.fn, m.fp, jaccard(m)) == (0, 5, 0, 0.0)

    def test_nearest_first(self):
        m = match_detections(px([(0, 1)]), px([(0, 0), (0, 3)]), 2, GRID)
        assert (m.cd, m.fn, m.fp) == (1, 1, 0)
        assert m.pairs == [(0, 0, 1.0)]

    def test_zero_delta_is_same_pixel(self):
        est = LocalizationSet([0, 0], [1.0, 30.0], [1.0, 1.0], [1.0, 1.0])
        truth = LocalizationSet([0], [24.9], [20.0], [1.0])
        m = match_detections(est, truth, 0, GRID)
        assert (m.cd, m.fn, m.fp) == (1, 0, 1)

    def test_diagonal_distance(self):
        est, truth = px([(3, 4)]), px([(0, 0)])
        assert match_detections(est, truth, 5, GRID).cd == 1
        assert match_detections(est, truth, 4.99, GRID).cd == 0

    def test_tie_break_lower_estimate_first(self):
        m = match_detections(px([(0, 0), (0, 2)]), px([(0, 1)]), 1, GRID)
        assert m.pairs == [(0, 0, 1.0)]

    def test_hungarian_beats_greedy(self):
        est = px([(0, 1), (0, 3)])
        truth = px([(0, 2), (0, 0)])
        # est0 is at distance 1 from both truths; greedy pairs it with truth0
        assert match_detections(est, truth, 1, GRID).cd == 1
        assert match_detections(est, truth, 1, GRID, method="hungarian").cd == 2

    def test_frame_mismatch(self):
        with pytest.raises(ParameterError):
            match_detections(px([(0, 0)], frame=1), px([(0, 0)], frame=2), 1, GRID)

    def test_bad_arguments(self):
        with pytest.raises(ParameterError):
            match_detections(px([(0, 0)]), px([(0, 0)]), -1, GRID)
        with pytest.raises(ParameterError):
            match_detections(px([(0, 0)]), px([(0, 0)]), 1, GRID, method="auction")


class TestJaccard:
    def test_table_counts(self):
        assert jaccard(MatchResult(121, 96, 3)) == pytest.approx(0.550, abs=1e-3)

    def test_empty_perfect(self):
        assert jaccard(MatchResult(0, 0, 0)) == 1.0

    def test_half(self):
        assert jaccard(MatchResult(1, 1, 0)) == 0.5


points = st.lists(st.tuples(st.integers(0, 40), st.integers(0, 40)), max_size=25)


@settings(max_examples=150, deadline=None)
@given(e=points, t=points, method=st.sampled_from(["greedy", "hungarian"]))
def test_conservation_and_monotonicity(e, t, method):
    est, truth = px(e), px(t)
    prev_cd, prev_j = -1, -1.0
    for d in (0, 1, 2, 4, 8):
        m = match_detections(est, truth, d, GRID, method)
        assert m.cd + m.fn == len(t) and m.cd + m.fp == len(e)
        assert all(dist <= d + 1e-9 for _, _, dist in m.pairs)
        j = jaccard(m)
        assert 0.0 <= j <= 1.0
        assert (j == 1.0) == (m.fn == 0 and m.fp == 0)
        # new candidates at a larger delta sort after all old ones, so greedy is monotone too
        assert m.cd >= prev_cd and j >= prev_j
        prev_cd, prev_j = m.cd, j


@settings(max_examples=150, deadline=None)
@given(e=points, t=points, d=st.sampled_from([0, 1.5, 3]))
def test_swap_symmetry(e, t, d):
    a = match_detections(px(e), px(t), d, GRID, method="hungarian")
    b = match_detections(px(t), px(e), d, GRID, method="hungarian")
    assert (a.cd, a.fn, a.fp) == (b.cd, b.fp, b.fn)
    if e and t:
        dist = np.hypot(*(np.array(e)[:, None, :] - np.array(t)[None, :, :]).transpose(2, 0, 1))
        cand = dist[dist <= d + 1e-9]
        if np.unique(cand).size < cand.size:
            return  # greedy tie-breaks depend on which side is "estimate"
    a = match_detections(px(e), px(t), d, GRID)
    b = match_detections(px(t), px(e), d, GRID)
    assert (a.cd, a.fn, a.fp) == (b.cd, b.fp, b.fn)


class TestEvaluate:
    def test_identical(self):
        t = LocalizationSet.concat([px([(1, 1), (5, 9)], frame=0), px([(3, 3)], frame=1)])
        rep = evaluate_stack(t, t, grid=GRID)
        assert all(rep.means[d]["J"] == 1.0 for d in rep.deltas)

    def test_mean_of_ratios(self):
        truth = LocalizationSet.concat([px([(1, 1)], frame=0), px([(3, 3)], frame=1)])
        est = LocalizationSet.concat([px([(1, 1)], frame=0), px([(50, 50)], frame=1)])
        rep = evaluate_stack(est, truth, deltas=[4], grid=GRID)
        assert rep.means[4.0]["J"] == 0.5
        assert rep.means[4.0]["fp"] == 0.5

    def test_monotone_columns(self):
        rng = np.random.default_rng(1)
        rc = rng.integers(0, 256, (40, 2))
        truth = px(rc)
        est = px(np.clip(rc + rng.integers(-3, 4, rc.shape), 0, 255))
        rep = evaluate_stack(est, truth, grid=GRID)
        j = [rep.means[d]["J"] for d in (0.0, 2.0, 4.0)]
        assert j[0] <= j[1] <= j[2]

    def test_empty_truth(self):
        with pytest.raises(ParameterError):
            evaluate_stack(px([(0, 0)]), LocalizationSet.empty(), grid=GRID)

    def test_serialization(self):
        t = px([(1, 1), (2, 9)])
        rep = evaluate_stack(px([(1, 1)]), t, grid=GRID)
        row = rep.table_row("wcel0")
        assert list(row) == ["model", "J0", "J2", "J4", "CD", "FN", "FP"]
        assert (row["J4"], row["CD"], row["FN"], row["FP"]) == (0.5, 1.0, 1.0, 0.0)
        d = json.loads(rep.to_json())
        assert d["means"]["4"]["J"] == 0.5
        lines = rep.to_csv().splitlines()
        assert lines[0] == "frame,delta,J,cd,fn,fp" and len(lines) == 1 + 3 + 3
