"""Front metrics: filtering, convex coverage, recovery F1, hypervolume."""

import numpy as np
import pytest

from intentctl.pareto import (
    RefNotDominated,
    TooFewPoints,
    ccs,
    crf1,
    hypervolume,
    pareto_filter,
    sparsity,
)


def brute_front(points):
    """Quadratic reference filter, written independently of the library."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    keep = []
    for i, p in enumerate(pts):
        if not any(np.all(q >= p) and np.any(q > p) for q in pts):
            keep.append(i)
    return pts[keep]


class TestParetoFilter:
    def test_simple(self):
        out = pareto_filter([(1, 1), (2, 2), (0, 3)])
        assert sorted(map(tuple, out)) == [(0.0, 3.0), (2.0, 2.0)]

    def test_duplicates_collapse(self):
        out = pareto_filter([(1, 2), (1, 2), (2, 1)])
        assert out.shape == (2, 2)

    @pytest.mark.parametrize("seed", [0, 3, 8])
    def test_matches_brute_force_on_random_clouds(self, seed):
        rng = np.random.default_rng(seed)
        cloud = rng.random((60, 3))
        assert np.array_equal(pareto_filter(cloud), brute_front(cloud))

    def test_single_point(self):
        assert pareto_filter([(5.0, 5.0)]).shape == (1, 2)


class TestCcs:
    def test_collinear_points_kept(self):
        # three points on w1*x + w2*y with equal weights; all are supported
        out = ccs([(0, 2), (1, 1), (2, 0), (0.6, 0.6)])
        assert sorted(map(tuple, out)) == [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]

    def test_unsupported_interior_point_dropped(self):
        # (0.9, 0.9) is nondominated but under the chord between the extremes
        out = ccs([(0, 2), (2, 0), (0.9, 0.9)])
        assert sorted(map(tuple, out)) == [(0.0, 2.0), (2.0, 0.0)]

    def test_agrees_with_scalarization_sweep_2d(self):
        """Every CCS member must win some weight; every winner must be in CCS."""
        rng = np.random.default_rng(4)
        pts = rng.random((40, 2))
        hull = {tuple(p) for p in ccs(pts)}
        winners = set()
        for t in np.linspace(0, 1, 2001):
            w = np.array([t, 1 - t])
            scores = pts @ w
            best = scores.max()
            for p in pts[scores >= best - 1e-12]:
                winners.add(tuple(p))
        assert winners <= hull
        # non-winners can only be hull members through exact collinearity,
        # which a 2001-point sweep may miss; require near-equality instead
        for p in hull - winners:
            gap = min(max(pts @ np.array([t, 1 - t])) - np.array(p) @ np.array([t, 1 - t])
                      for t in np.linspace(0, 1, 2001))
            assert gap < 1e-6

    def test_three_objectives_via_lp(self):
        # corner points of a simplex face are all supported; the dominated
        # centroid-minus-epsilon is not even on the front
        pts = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0.3, 0.3, 0.3)]
        out = ccs(pts)
        assert sorted(map(tuple, out)) == [(0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)]

    def test_three_objectives_unsupported_point(self):
        # nondominated but beneath the plane through the three unit corners
        pts = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0.32, 0.32, 0.32)]
        out = ccs(pts)
        assert (0.32, 0.32, 0.32) not in set(map(tuple, out))


class TestCrf1:
    def test_perfect_recovery(self):
        tru = np.array([(0.0, 2.0), (1.0, 1.0)])
        assert crf1(tru + 1e-9, tru) == pytest.approx(1.0)

    def test_partial_recovery(self):
        tru = np.array([(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)])
        rec = tru[:2]
        # precision 1, recall 2/3 -> F1 = 0.8
        assert crf1(rec, tru) == pytest.approx(0.8)

    def test_spurious_points_cost_precision(self):
        tru = np.array([(1.0, 1.0)])
        rec = np.array([(1.0, 1.0), (5.0, 5.0)])
        assert crf1(rec, tru) == pytest.approx(2 * 0.5 / 1.5)

    def test_eps_ball_is_max_norm(self):
        tru = np.array([(0.0, 0.0)])
        assert crf1(np.array([(5e-7, 5e-7)]), tru) == pytest.approx(1.0)
        assert crf1(np.array([(2e-6, 0.0)]), tru) == pytest.approx(0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            crf1(np.zeros((1, 2)), np.zeros((1, 3)))


class TestHypervolume:
    def test_two_objectives_exact(self):
        r = hypervolume([(3, 1), (1, 3)], (0, 0))
        assert r.method == "exact"
        assert r.value == pytest.approx(5.0)
        assert r.std_error == 0.0

    def test_two_objectives_dominated_points_ignored(self):
        r = hypervolume([(3, 1), (1, 3), (1, 1)], (0, 0))
        assert r.value == pytest.approx(5.0)

    def test_three_objectives_monte_carlo(self):
        # union of boxes (1,1,0.5) and (0.5,0.5,1): volume 0.5 + 0.25*0.5
        r = hypervolume([(1, 1, 0.5), (0.5, 0.5, 1)], (0, 0, 0))
        assert r.method == "monte_carlo"
        assert r.std_error > 0
        assert r.value == pytest.approx(0.625, abs=4 * r.std_error)

    def test_monte_carlo_deterministic_for_fixed_seed(self):
        a = hypervolume([(1, 1, 1)], (0, 0, 0))
        b = hypervolume([(1, 1, 1)], (0, 0, 0))
        assert a.value == b.value

    def test_ref_must_be_dominated(self):
        with pytest.raises(RefNotDominated):
            hypervolume([(1, 1), (3, -1)], (0, 0))


class TestSparsity:
    def test_unit_gaps(self):
        assert sparsity([(1, 3), (2, 2), (3, 1)]) == pytest.approx(1.0)

    def test_uneven_gaps(self):
        # both coordinates have sorted gaps (1, 3): mean of squares is 5
        assert sparsity([(0, 4), (1, 3), (4, 0)]) == pytest.approx(5.0)

    def test_needs_two_points(self):
        with pytest.raises(TooFewPoints):
            sparsity([(1.0, 2.0)])
