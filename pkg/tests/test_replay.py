"""Sharded prioritized replay: sampling law, weights, routing, snapshots."""

import numpy as np
import pytest

from intentctl.replay import (
    BetaSchedule,
    LengthMismatch,
    NonPositivePriority,
    ReplayShard,
    Transition,
    _allocate,
    anneal_beta,
    route_shard,
    sample_batch,
    update_priorities,
)

# chi-square critical value at 99% for 15 degrees of freedom
CHI2_CRIT_DF15_99 = 30.578


def mk(v, dim=3):
    s = np.full(dim, float(v))
    return Transition(s, int(v) % 4, np.array([v, -v]), s + 1, False)


def filled_shard(n, alpha=0.7, capacity=None, seed=0, shard_id=0):
    rng = np.random.default_rng(seed)
    sh = ReplayShard(capacity or n, alpha=alpha, shard_id=shard_id)
    sh.add_batch([mk(i) for i in range(n)], rng.random(n) + 0.1)
    return sh


class TestShardBasics:
    def test_add_batch_returns_routable_indices(self):
        sh = ReplayShard(8, shard_id=3)
        idx = sh.add_batch([mk(1), mk(2)], np.array([1.0, 2.0]))
        assert idx == [(3, 0, 0), (3, 1, 1)]
        assert sh.size == 2

    def test_ring_overwrite_keeps_size_at_capacity(self):
        sh = ReplayShard(4)
        for i in range(10):
            sh.add_batch([mk(i)], np.array([1.0]))
        assert sh.size == 4
        s, a, r, ns, d = sh.gather(np.arange(4))
        # slots hold the last four insertions, cursor wrapped
        assert sorted(s[:, 0].tolist()) == [6.0, 7.0, 8.0, 9.0]

    def test_priority_stored_as_power_alpha(self):
        sh = ReplayShard(2, alpha=0.5)
        sh.add_batch([mk(0)], np.array([4.0]))
        assert sh.mass == pytest.approx(2.0)  # 4 ** 0.5

    def test_mismatched_lengths_rejected(self):
        sh = ReplayShard(4)
        with pytest.raises(LengthMismatch):
            sh.add_batch([mk(0)], np.array([1.0, 2.0]))

    def test_nonpositive_priority_rejected(self):
        sh = ReplayShard(4)
        with pytest.raises(NonPositivePriority):
            sh.add_batch([mk(0)], np.array([0.0]))


def test_mass_conservation_under_mixed_ops():
    """Tree total tracks the leaf sum to 1e-6 relative through ~1e4 ops."""
    rng = np.random.default_rng(42)
    sh = ReplayShard(512, alpha=0.7)
    live = []
    ops = 0
    while ops < 10_000:
        n = int(rng.integers(1, 20))
        live.extend(sh.add_batch([mk(float(rng.random())) for _ in range(n)], rng.random(n) + 1e-3))
        ops += n
        if sh.size >= 32:
            k = int(rng.integers(1, 30))
            pick = [live[int(rng.integers(len(live)))] for _ in range(k)]
            sh.update_priorities(
                np.array([p[1] for p in pick]),
                np.array([p[2] for p in pick]),
                rng.random(k) + 1e-3,
            )
            ops += k
    rel = abs(sh.mass - sh._tree.leaves[: sh.size].sum()) / sh.mass
    assert rel < 1e-6
    assert sh.stale_skipped > 0  # overwritten slots were encountered and skipped


def test_sampling_frequency_matches_priority_law():
    """16 items with priorities 1..16, 1e5 draws: chi-square at 99%."""
    sh = ReplayShard(16, alpha=1.0)
    pr = np.arange(1, 17, dtype=np.float64)
    sh.add_batch([mk(i) for i in range(16)], pr)
    rng = np.random.default_rng(910)
    slots, probs = sh.sample_slots(100_000, rng)
    counts = np.bincount(slots, minlength=16)
    expect = pr / pr.sum() * 100_000
    stat = ((counts - expect) ** 2 / expect).sum()
    assert stat < CHI2_CRIT_DF15_99
    # reported probabilities are the exact law, not the empirical one
    assert np.allclose(np.unique(probs), np.unique(pr / pr.sum()))


def test_importance_weights_two_item_example():
    # priorities (1, 3) at alpha=1: Pr = (1/4, 3/4); with beta=1 and N=2 the
    # raw weights are (2, 2/3); max-normalizing by the rarest item gives (1, 1/3)
    sh = ReplayShard(2, alpha=1.0)
    sh.add_batch([mk(0), mk(1)], np.array([1.0, 3.0]))
    batch = sample_batch([sh], 64, beta=1.0, rng=np.random.default_rng(0))
    by_slot = {slot: w for (_, slot, _), w in zip(batch.indices, batch.weights)}
    assert by_slot[0] == pytest.approx(1.0)
    assert by_slot[1] == pytest.approx(1.0 / 3.0)


def test_weights_flat_at_beta_zero():
    sh = filled_shard(32, alpha=0.7, seed=5)
    batch = sample_batch([sh], 16, beta=0.0, rng=np.random.default_rng(1))
    assert np.allclose(batch.weights, 1.0)


def test_largest_remainder_allocation():
    assert _allocate(np.array([2.0, 6.0]), 4).tolist() == [1, 3]
    assert _allocate(np.array([5.0, 3.0, 2.0]), 7).tolist() == [4, 2, 1]
    # always exactly B draws
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = rng.random(int(rng.integers(1, 8))) + 1e-6
        B = int(rng.integers(1, 300))
        alloc = _allocate(w, B)
        assert alloc.sum() == B
        assert (alloc >= 0).all()


def test_cross_shard_sampling_proportional_to_mass():
    # shard masses ~ (1, 3): shard 1 should receive ~3x the draws
    a = ReplayShard(64, alpha=1.0, shard_id=0)
    b = ReplayShard(64, alpha=1.0, shard_id=1)
    a.add_batch([mk(i) for i in range(64)], np.full(64, 1.0 / 64))
    b.add_batch([mk(i) for i in range(64)], np.full(64, 3.0 / 64))
    rng = np.random.default_rng(3)
    counts = np.zeros(2)
    for _ in range(200):
        batch = sample_batch([a, b], 32, beta=0.4, rng=rng)
        for sid, _, _ in batch.indices:
            counts[sid] += 1
    assert counts[1] / counts.sum() == pytest.approx(0.75, abs=0.02)


def test_stale_update_skipped_after_overwrite():
    sh = ReplayShard(2, alpha=1.0)
    idx = sh.add_batch([mk(0), mk(1)], np.array([1.0, 1.0]))
    sh.add_batch([mk(2)], np.array([1.0]))  # overwrites slot 0
    applied = update_priorities([sh], idx, np.array([9.0, 9.0]))
    assert applied == 1
    assert sh.stale_skipped == 1
    # slot 0 kept the overwriting insertion's priority, slot 1 was refreshed
    assert sh._tree.values(np.array([0, 1])) == pytest.approx([1.0, 9.0])


def test_route_shard_is_mod():
    assert [route_shard(u, 4) for u in range(6)] == [0, 1, 2, 3, 0, 1]


def test_beta_schedule_linear_anneal():
    s = BetaSchedule(beta0=0.4, beta_final=1.0, horizon=20_000)
    assert s.at(0) == pytest.approx(0.4)
    assert s.at(10_000) == pytest.approx(0.7)
    assert s.at(20_000) == pytest.approx(1.0)
    assert s.at(50_000) == pytest.approx(1.0)  # clamps past the horizon
    assert anneal_beta(s, 5_000) == pytest.approx(0.55)


def test_snapshot_round_trip(tmp_path):
    sh = filled_shard(40, alpha=0.7, capacity=64, seed=9)
    path = tmp_path / "shard.bin"
    sh.save(str(path))
    back = ReplayShard.load(str(path), shard_id=7)
    assert back.size == sh.size
    assert back.alpha == sh.alpha
    assert back.mass == pytest.approx(sh.mass, rel=1e-9)
    s0, a0, r0, ns0, d0 = sh.gather(np.arange(sh.size))
    s1, a1, r1, ns1, d1 = back.gather(np.arange(back.size))
    assert np.allclose(np.sort(s0[:, 0]), np.sort(s1[:, 0]))
    assert np.allclose(np.sort(r0[:, 0]), np.sort(r1[:, 0]))


def test_snapshot_round_trip_after_wraparound(tmp_path):
    sh = ReplayShard(8, alpha=0.7)
    for i in range(13):  # wraps: live items are 5..12
        sh.add_batch([mk(i)], np.array([float(i + 1)]))
    path = tmp_path / "wrapped.bin"
    sh.save(str(path))
    back = ReplayShard.load(str(path))
    s, *_ = back.gather(np.arange(back.size))
    assert sorted(s[:, 0].tolist()) == [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
    assert back.mass == pytest.approx(sh.mass, rel=1e-9)
