"""Simplex projection, stratification, and preference sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intentctl.simplex import (
    BadAlpha,
    BadResolution,
    StratifiedPreferenceSampler,
    build_strata,
    barycentric_coords,
    check_preference,
    project_to_simplex,
    sample_dirichlet,
    sample_stratum,
    strata_for_actor,
    stratum_contains,
)

vectors = st.lists(
    st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=12,
).map(np.asarray)


class TestProjection:
    # expected values cross-checked against an SLSQP solve of
    # min 0.5*||w - u||^2 s.t. sum w = 1, w >= 0
    @pytest.mark.parametrize(
        "u,expect",
        [
            ([0.2, 0.9], [0.15, 0.85]),
            ([1.5, -0.3, 0.1], [1.0, 0.0, 0.0]),
            ([-1.0, -2.0, -3.0], [1.0, 0.0, 0.0]),
            ([0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]),
            ([10.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ],
    )
    def test_known_projections(self, u, expect):
        assert project_to_simplex(np.asarray(u)) == pytest.approx(expect, abs=1e-9)

    @given(vectors)
    @settings(max_examples=200, deadline=None)
    def test_output_is_on_simplex(self, u):
        p = project_to_simplex(u)
        assert p.min() >= 0.0
        assert p.sum() == pytest.approx(1.0, abs=1e-9)

    @given(vectors)
    @settings(max_examples=100, deadline=None)
    def test_idempotent(self, u):
        p = project_to_simplex(u)
        assert np.allclose(project_to_simplex(p), p, atol=1e-9)

    @given(vectors)
    @settings(max_examples=100, deadline=None)
    def test_closest_point_property(self, u):
        """No random simplex point may be closer to u than the projection."""
        p = project_to_simplex(u)
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.dirichlet(np.ones(u.size))
            assert np.sum((p - u) ** 2) <= np.sum((q - u) ** 2) + 1e-9

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            project_to_simplex(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            project_to_simplex(np.array([]))


def test_check_preference_accepts_and_rejects():
    w = check_preference(np.array([0.3, 0.7]))
    assert w.dtype == np.float64
    with pytest.raises(ValueError):
        check_preference(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        check_preference(np.array([-0.1, 1.1]))


def test_sample_dirichlet_validates_alpha():
    rng = np.random.default_rng(0)
    w = sample_dirichlet(np.ones(4), rng)
    assert w.sum() == pytest.approx(1.0)
    with pytest.raises(BadAlpha):
        sample_dirichlet(np.array([1.0, 0.0]), rng)


class TestStrata:
    @pytest.mark.parametrize("m,L", [(2, 1), (2, 4), (3, 2), (3, 3), (4, 2), (5, 2)])
    def test_cell_count(self, m, L):
        assert len(build_strata(m, L)) == L ** (m - 1)

    def test_two_objectives_resolution_four_intervals(self):
        # 1-d simplex: cells are the four quarter intervals in w_1
        strata = build_strata(2, 4)
        first = sorted(tuple(sorted(st.vertices[:, 0])) for st in strata)
        assert first == [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]

    def test_three_objectives_resolution_two_gives_four_cells(self):
        strata = build_strata(3, 2)
        assert len(strata) == 4
        for st_ in strata:
            assert st_.vertices.shape == (3, 3)
            assert np.allclose(st_.vertices.sum(axis=1), 1.0)
            assert st_.vertices.min() >= 0.0

    def test_all_vertices_on_simplex(self):
        for st_ in build_strata(4, 3):
            assert np.allclose(st_.vertices.sum(axis=1), 1.0, atol=1e-12)
            assert st_.vertices.min() >= -1e-12

    def test_equal_volume_by_monte_carlo(self):
        """Uniform simplex draws land in each cell with equal frequency."""
        strata = build_strata(3, 2)
        rng = np.random.default_rng(17)
        counts = np.zeros(len(strata))
        hits = 0
        for _ in range(4000):
            w = rng.dirichlet(np.ones(3))
            owners = [i for i, st_ in enumerate(strata) if stratum_contains(st_, w, tol=1e-9)]
            if len(owners) == 1:  # skip draws on shared faces
                counts[owners[0]] += 1
                hits += 1
        assert hits > 3800
        assert np.all(np.abs(counts / hits - 0.25) < 0.05)

    def test_partition_covers_simplex(self):
        strata = build_strata(3, 3)
        rng = np.random.default_rng(23)
        for _ in range(500):
            w = rng.dirichlet(np.ones(3))
            assert any(stratum_contains(st_, w, tol=1e-7) for st_ in strata)

    def test_permutation_relabels_coordinates(self):
        base = build_strata(3, 2)
        perm = build_strata(3, 2, permutation=np.array([2, 0, 1]))
        assert np.allclose(perm[0].vertices, base[0].vertices[:, [2, 0, 1]])

    def test_bad_inputs(self):
        with pytest.raises(BadResolution):
            build_strata(2, 0)
        with pytest.raises(BadResolution):
            build_strata(0, 2)
        with pytest.raises(ValueError):
            build_strata(3, 2, permutation=np.array([0, 0, 1]))


def test_sample_stratum_stays_inside_and_has_right_mean():
    # cell [1/4, 1/2] of the 1-d simplex: mean of w_1 is (1/4 + 1/2)/2 = 0.375
    cell = build_strata(2, 4)[1]
    rng = np.random.default_rng(7)
    draws = np.array([sample_stratum(cell, rng) for _ in range(20_000)])
    assert draws[:, 0].min() >= 0.25 - 1e-12
    assert draws[:, 0].max() <= 0.50 + 1e-12
    assert draws[:, 0].mean() == pytest.approx(0.375, abs=0.002)


def test_barycentric_reconstruction():
    cell = build_strata(3, 2)[2]
    rng = np.random.default_rng(11)
    w = sample_stratum(cell, rng)
    lam = barycentric_coords(cell, w)
    assert lam.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(lam @ cell.vertices, w, atol=1e-9)


class TestActorAssignment:
    def test_contiguous_blocks_and_full_coverage(self):
        strata = build_strata(3, 2)  # 4 cells
        blocks = [strata_for_actor(u, 2, strata) for u in range(2)]
        assert [[c.index for c in b] for b in blocks] == [[0, 1], [2, 3]]

    def test_uneven_split(self):
        strata = build_strata(3, 2)
        blocks = [[c.index for c in strata_for_actor(u, 3, strata)] for u in range(3)]
        assert blocks == [[0], [1], [2, 3]]
        assert sorted(i for b in blocks for i in b) == [0, 1, 2, 3]

    def test_more_actors_than_cells_wraps(self):
        strata = build_strata(3, 2)
        blocks = [[c.index for c in strata_for_actor(u, 8, strata)] for u in range(8)]
        assert blocks == [[0], [1], [2], [3], [0], [1], [2], [3]]

    def test_bad_actor_id(self):
        strata = build_strata(2, 2)
        with pytest.raises(ValueError):
            strata_for_actor(2, 2, strata)


def test_stratified_sampler_draws_only_from_own_block():
    strata = build_strata(2, 4)
    sampler = StratifiedPreferenceSampler(actor_id=0, n_actors=2, strata=strata)
    rng = np.random.default_rng(2)
    for _ in range(200):
        w = sampler.draw(rng)
        assert w[0] <= 0.5 + 1e-12  # block owns cells [0, 1/4] and [1/4, 1/2]
