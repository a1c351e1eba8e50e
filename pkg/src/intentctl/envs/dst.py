"""Deep-sea grid world with a convex front of treasure/time trade-offs.

Versioned constants: 10 treasure columns on an 11x10 grid, value growing
with depth so that every treasure is a vertex of the convex coverage set.
Reward is (treasure value on pickup else 0, -1 per step), m=2.
"""

from __future__ import annotations

import numpy as np

from intentctl.envs.base import Env, InvalidAction, MomdpSpec, Step

MAP_VERSION = "convex-v1"
TREASURE_DEPTHS = (1, 2, 3, 4, 4, 4, 7, 7, 9, 10)
TREASURE_VALUES = (0.7, 8.2, 11.5, 14.0, 15.1, 16.1, 19.6, 20.3, 22.4, 23.7)
N_ROWS = 11
N_COLS = 10
# actions: 0 up, 1 down, 2 left, 3 right
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


class DeepSeaEnv(Env):
    def __init__(self, gamma: float = 0.99, horizon: int = 200):
        self.spec = MomdpSpec(state_dim=2, n_actions=4, reward_dim=2, gamma=gamma, horizon=horizon)
        self.treasures = {(d, c): v for c, (d, v) in enumerate(zip(TREASURE_DEPTHS, TREASURE_VALUES))}

    def _valid(self, row: int, col: int) -> bool:
        if not (0 <= row < N_ROWS and 0 <= col < N_COLS):
            return False
        # seabed: nothing below a column's treasure depth
        return row <= TREASURE_DEPTHS[col]

    def reset(self, rng: np.random.Generator):
        return (0, 0)

    def step(self, state, action: int, rng: np.random.Generator) -> Step:
        action = self._check_action(action)
        row, col = state
        dr, dc = MOVES[action]
        nr, nc = row + dr, col + dc
        if not self._valid(nr, nc):
            nr, nc = row, col
        value = self.treasures.get((nr, nc), 0.0)
        done = (nr, nc) in self.treasures
        return Step(state, action, np.array([value, -1.0]), (nr, nc), done)

    def encode(self, state) -> np.ndarray:
        row, col = state
        return np.array([row / (N_ROWS - 1), col / (N_COLS - 1)])

    def true_pareto_set(self) -> np.ndarray:
        """Discounted return per treasure via its shortest path.

        The shortest path to column c's treasure takes depth(c) + c moves
        (surface-right then down, all cells valid); every detour only adds
        time, so these dominate all other returns to that treasure.
        """
        gamma = self.spec.gamma
        points = []
        for col, (depth, value) in enumerate(zip(TREASURE_DEPTHS, TREASURE_VALUES)):
            steps = depth + col
            r1 = gamma ** (steps - 1) * value
            r2 = -sum(gamma**t for t in range(steps))
            points.append((r1, r2))
        return np.asarray(points)

    def enumerate_returns(self, max_steps: int = 25) -> np.ndarray:
        """Exhaustive oracle: every terminal discounted return reachable in
        at most max_steps moves, by breadth-first expansion over (cell, t)
        through the real step function (all actions tried everywhere)."""
        gamma = self.spec.gamma
        results: set[tuple[float, float]] = set()
        frontier = {(0, 0)}
        for t in range(max_steps):
            nxt = set()
            for pos in frontier:
                for a in range(4):
                    tr = self.step(pos, a, None)
                    if tr.done:
                        taken = t + 1
                        r1 = gamma ** (taken - 1) * float(tr.reward[0])
                        r2 = -sum(gamma**k for k in range(taken))
                        results.add((r1, r2))
                    else:
                        nxt.add(tr.next_state)
            frontier = nxt
        return np.asarray(sorted(results))

    def config(self) -> dict:
        return {
            "kind": "DeepSeaEnv",
            "map_version": MAP_VERSION,
            "depths": list(TREASURE_DEPTHS),
            "values": list(TREASURE_VALUES),
            "gamma": self.spec.gamma,
            "horizon": self.spec.horizon,
        }
