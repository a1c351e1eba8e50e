"""Full binary decision tree with vector-valued fruit at the leaves.

Each episode walks root to leaf in exactly d steps (actions: left/right).
Leaf rewards are six-dimensional, pinned by seed: rows of |N(0,1)|^6
normalized to unit length, i.e. points on the positive part of the unit
sphere.  Distinct points there can never dominate each other and every one
is a vertex of the convex coverage set, so all 2^d leaves are candidates.
"""

from __future__ import annotations

import numpy as np

from intentctl.envs.base import Env, MomdpSpec, Step

LEAF_SEED = 910
REWARD_DIM = 6


def leaf_rewards(depth: int, seed: int = LEAF_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed + depth)
    raw = np.abs(rng.normal(size=(2**depth, REWARD_DIM)))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


class FruitTreeEnv(Env):
    def __init__(self, depth: int = 6, gamma: float = 0.99):
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        self.depth = depth
        self.leaves = leaf_rewards(depth)
        self.spec = MomdpSpec(state_dim=2, n_actions=2, reward_dim=REWARD_DIM, gamma=gamma, horizon=depth)

    def reset(self, rng: np.random.Generator):
        return (0, 0)  # (level, index within level)

    def step(self, state, action: int, rng: np.random.Generator) -> Step:
        action = self._check_action(action)
        level, idx = state
        nxt = (level + 1, 2 * idx + action)
        if nxt[0] == self.depth:
            reward = self.leaves[nxt[1]].copy()
            return Step(state, action, reward, nxt, True)
        return Step(state, action, np.zeros(REWARD_DIM), nxt, False)

    def encode(self, state) -> np.ndarray:
        level, idx = state
        span = max(2**level - 1, 1)
        return np.array([level / self.depth, idx / span])

    def true_pareto_set(self) -> np.ndarray:
        """gamma^(d-1) scaled leaves; all are non-dominated by construction."""
        return self.spec.gamma ** (self.depth - 1) * self.leaves

    def config(self) -> dict:
        return {
            "kind": "FruitTreeEnv",
            "depth": self.depth,
            "leaf_seed": LEAF_SEED,
            "gamma": self.spec.gamma,
        }
