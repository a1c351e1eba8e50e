"""Sharded prioritized experience replay.

Priorities are stored pre-exponentiated (the tree holds p**alpha), so
sampling within a shard is proportional to p**alpha / Z_k and shards are
weighted by their mass Z_k.  Importance weights are max-normalized against
the smallest selection probability currently in memory.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from intentctl._kernels import SumTree

PRIORITY_FLOOR = 1e-6


class LengthMismatch(ValueError):
    pass


class NonPositivePriority(ValueError):
    pass


class EmptyShard(RuntimeError):
    pass


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: np.ndarray
    next_state: np.ndarray
    done: bool


@dataclass
class SampledBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    indices: list[tuple[int, int, int]]  # (shard_id, slot, stamp)
    weights: np.ndarray
    probabilities: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class BetaSchedule:
    """Linear anneal of the importance-weight exponent."""

    beta0: float = 0.4
    beta_final: float = 1.0
    horizon: int = 20_000

    def at(self, t: int) -> float:
        if self.horizon <= 0:
            return self.beta_final
        frac = min(max(t / self.horizon, 0.0), 1.0)
        return self.beta0 + (self.beta_final - self.beta0) * frac


def anneal_beta(schedule: BetaSchedule, t: int) -> float:
    return schedule.at(t)


class ReplayShard:
    """Ring buffer of transitions plus a sum tree over p**alpha.

    Args:
        capacity: max transitions held; oldest overwritten first.
        alpha: priority exponent, fixed at construction.
        shard_id: identity used in sampled indices for routing updates.
    """

    def __init__(self, capacity: int, alpha: float = 0.7, shard_id: int = 0):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.shard_id = int(shard_id)
        self.size = 0
        self._cursor = 0
        self._tree = SumTree(capacity)
        # per-slot insertion stamps detect overwritten (stale) indices
        self._stamps = np.full(capacity, -1, dtype=np.int64)
        self._insertions = 0
        self.stale_skipped = 0
        self._states = None
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = None
        self._next_states = None
        self._dones = np.zeros(capacity, dtype=bool)

    def _ensure_storage(self, state: np.ndarray, reward: np.ndarray) -> None:
        if self._states is None:
            sd = np.asarray(state).shape
            rd = np.asarray(reward).shape
            self._states = np.zeros((self.capacity, *sd), dtype=np.float64)
            self._next_states = np.zeros((self.capacity, *sd), dtype=np.float64)
            self._rewards = np.zeros((self.capacity, *rd), dtype=np.float64)

    def add_batch(self, transitions: list[Transition], priorities: np.ndarray) -> list[tuple[int, int, int]]:
        """Insert transitions with raw priorities p; returns their indices."""
        pr = np.asarray(priorities, dtype=np.float64).ravel()
        if len(transitions) != pr.size:
            raise LengthMismatch(f"{len(transitions)} transitions vs {pr.size} priorities")
        if pr.size and pr.min() <= 0:
            raise NonPositivePriority(f"min priority {pr.min()}")
        if not transitions:
            return []
        self._ensure_storage(transitions[0].state, transitions[0].reward)
        slots = []
        for tr in transitions:
            slot = self._cursor
            self._states[slot] = tr.state
            self._actions[slot] = tr.action
            self._rewards[slot] = tr.reward
            self._next_states[slot] = tr.next_state
            self._dones[slot] = tr.done
            self._stamps[slot] = self._insertions
            self._insertions += 1
            slots.append(slot)
            self._cursor = (self._cursor + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)
        slots = np.asarray(slots, dtype=np.int64)
        self._tree.set_many(slots, pr**self.alpha)
        return [(self.shard_id, int(s), int(self._stamps[s])) for s in slots]

    @property
    def mass(self) -> float:
        """Z_k: total p**alpha over live slots."""
        return self._tree.total()

    def min_mass(self) -> float:
        """Smallest live p**alpha (for weight normalization)."""
        if self.size == 0:
            raise EmptyShard("shard holds no transitions")
        return float(self._tree.leaves[: self.size].min())

    def sample_slots(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw n slots iid proportional to p**alpha; returns (slots, probabilities)."""
        if self.size == 0:
            raise EmptyShard("shard holds no transitions")
        total = self.mass
        prefix = rng.uniform(0.0, total, size=n)
        slots = self._tree.find(prefix)
        probs = self._tree.values(slots) / total
        return slots, probs

    def update_priorities(self, slots: np.ndarray, stamps: np.ndarray, priorities: np.ndarray) -> int:
        """Refresh priorities; slots whose stamp changed are skipped and counted.

        Returns the number of slots actually updated.
        """
        slots = np.asarray(slots, dtype=np.int64)
        stamps = np.asarray(stamps, dtype=np.int64)
        pr = np.asarray(priorities, dtype=np.float64)
        if not (slots.size == stamps.size == pr.size):
            raise LengthMismatch("slots, stamps, priorities must align")
        if pr.size and pr.min() <= 0:
            raise NonPositivePriority(f"min priority {pr.min()}")
        fresh = self._stamps[slots] == stamps
        self.stale_skipped += int((~fresh).sum())
        if fresh.any():
            self._tree.set_many(slots[fresh], pr[fresh] ** self.alpha)
        return int(fresh.sum())

    def gather(self, slots: np.ndarray) -> tuple[np.ndarray, ...]:
        return (
            self._states[slots],
            self._actions[slots],
            self._rewards[slots],
            self._next_states[slots],
            self._dones[slots],
        )

    # --- snapshot (length-prefixed records) -------------------------------

    def save(self, path: str) -> None:
        """Write live transitions as length-prefixed binary records."""
        with open(path, "wb") as fh:
            header = struct.pack("<4sqqd", b"SHRD", self.capacity, self.size, self.alpha)
            fh.write(struct.pack("<q", len(header)) + header)
            order = self._live_slots_oldest_first()
            for slot in order:
                rec = self._pack_record(slot)
                fh.write(struct.pack("<q", len(rec)) + rec)

    def _live_slots_oldest_first(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return np.roll(np.arange(self.capacity), -self._cursor)

    def _pack_record(self, slot: int) -> bytes:
        s = self._states[slot].astype(np.float64).tobytes()
        ns = self._next_states[slot].astype(np.float64).tobytes()
        r = self._rewards[slot].astype(np.float64).tobytes()
        p = float(self._tree.values(np.array([slot]))[0]) ** (1.0 / self.alpha) if self.alpha > 0 else 1.0
        head = struct.pack(
            "<qqqq?d", len(s), len(r), self._actions[slot], self._stamps[slot], bool(self._dones[slot]), p
        )
        return head + s + ns + r

    @classmethod
    def load(cls, path: str, shard_id: int = 0) -> "ReplayShard":
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<q", fh.read(8))
            magic, capacity, size, alpha = struct.unpack("<4sqqd", fh.read(hlen))
            if magic != b"SHRD":
                raise ValueError("not a shard snapshot")
            shard = cls(capacity, alpha=alpha, shard_id=shard_id)
            transitions, priorities = [], []
            for _ in range(size):
                (rlen,) = struct.unpack("<q", fh.read(8))
                rec = fh.read(rlen)
                fixed = struct.calcsize("<qqqq?d")
                slen, rewlen, action, _stamp, done, p = struct.unpack("<qqqq?d", rec[:fixed])
                off = fixed
                s = np.frombuffer(rec[off : off + slen]).copy()
                off += slen
                ns = np.frombuffer(rec[off : off + slen]).copy()
                off += slen
                r = np.frombuffer(rec[off : off + rewlen]).copy()
                transitions.append(Transition(s, int(action), r, ns, bool(done)))
                priorities.append(p)
            if transitions:
                shard.add_batch(transitions, np.asarray(priorities))
        return shard


def route_shard(actor_id: int, n_shards: int) -> int:
    """Actor u feeds shard u mod K."""
    return actor_id % n_shards


def _allocate(counts_weight: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of `total` draws over shards."""
    w = counts_weight / counts_weight.sum()
    raw = w * total
    base = np.floor(raw).astype(np.int64)
    rem = total - base.sum()
    if rem > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:rem]] += 1
    return base


def sample_batch(
    shards: list[ReplayShard], batch_size: int, beta: float, rng: np.random.Generator
) -> SampledBatch:
    """Draw a batch across shards proportional to shard mass, then priority.

    Selection probability of item i in shard k is (Z_k/Z) * (p_i^a/Z_k) =
    p_i^a / Z.  Weights are ((1/N) / Pr)^beta, normalized so the maximum
    possible weight in memory equals 1.
    """
    live = [sh for sh in shards if sh.size > 0]
    if not live:
        raise EmptyShard("no shard holds transitions")
    alphas = {sh.alpha for sh in shards}
    if len(alphas) != 1:
        raise ValueError(f"shards disagree on alpha: {sorted(alphas)}")
    masses = np.array([sh.mass for sh in live])
    counts = _allocate(masses, batch_size)
    total_mass = masses.sum()
    n_total = sum(sh.size for sh in live)

    parts = []
    for sh, n in zip(live, counts):
        if n == 0:
            continue
        slots, in_shard = sh.sample_slots(int(n), rng)
        probs = in_shard * (sh.mass / total_mass)
        parts.append((sh, slots, probs))

    states, actions, rewards, next_states, dones = [], [], [], [], []
    indices: list[tuple[int, int, int]] = []
    all_probs = []
    for sh, slots, probs in parts:
        s, a, r, ns, d = sh.gather(slots)
        states.append(s)
        actions.append(a)
        rewards.append(r)
        next_states.append(ns)
        dones.append(d)
        indices.extend((sh.shard_id, int(slot), int(sh._stamps[slot])) for slot in slots)
        all_probs.append(probs)
    probs = np.concatenate(all_probs)
    weights = (1.0 / (n_total * probs)) ** beta
    min_prob = min(sh.min_mass() for sh in live) / total_mass
    max_weight = (1.0 / (n_total * min_prob)) ** beta
    weights = weights / max_weight
    return SampledBatch(
        states=np.concatenate(states),
        actions=np.concatenate(actions),
        rewards=np.concatenate(rewards),
        next_states=np.concatenate(next_states),
        dones=np.concatenate(dones),
        indices=indices,
        weights=weights,
        probabilities=probs,
    )


def update_priorities(
    shards: list[ReplayShard], indices: list[tuple[int, int, int]], priorities: np.ndarray
) -> int:
    """Route refreshed priorities back to their shards; returns updates applied."""
    pr = np.asarray(priorities, dtype=np.float64).ravel()
    if len(indices) != pr.size:
        raise LengthMismatch(f"{len(indices)} indices vs {pr.size} priorities")
    by_shard: dict[int, ReplayShard] = {sh.shard_id: sh for sh in shards}
    applied = 0
    groups: dict[int, list[int]] = {}
    for pos, (sid, _, _) in enumerate(indices):
        groups.setdefault(sid, []).append(pos)
    for sid, positions in groups.items():
        sh = by_shard[sid]
        slots = np.array([indices[p][1] for p in positions], dtype=np.int64)
        stamps = np.array([indices[p][2] for p in positions], dtype=np.int64)
        applied += sh.update_priorities(slots, stamps, pr[positions])
    return applied
