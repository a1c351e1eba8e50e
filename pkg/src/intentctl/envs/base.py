"""Environment abstraction: stateless dynamics over explicit state values.

Environments expose spec metadata, reset/step, a float encoding of states
for function approximators, and (where the MDP is finite) exhaustive
enumeration of the true Pareto front of discounted returns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Any

import numpy as np


class InvalidAction(ValueError):
    pass


class NotEnumerable(RuntimeError):
    pass


@dataclass(frozen=True)
class MomdpSpec:
    state_dim: int
    n_actions: int
    reward_dim: int
    gamma: float
    horizon: int

    def __post_init__(self):
        if self.reward_dim < 2:
            raise ValueError(f"reward_dim must be >= 2, got {self.reward_dim}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class Step:
    state: Any
    action: int
    reward: np.ndarray
    next_state: Any
    done: bool


class Env:
    """Interface; concrete environments override everything."""

    spec: MomdpSpec

    def reset(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def step(self, state: Any, action: int, rng: np.random.Generator) -> Step:
        raise NotImplementedError

    def encode(self, state: Any) -> np.ndarray:
        raise NotImplementedError

    def true_pareto_set(self) -> np.ndarray:
        raise NotEnumerable(f"{type(self).__name__} has no enumerable front")

    def config(self) -> dict:
        return {"kind": type(self).__name__, "spec": vars(self.spec)}

    def _check_action(self, action: int) -> int:
        if not 0 <= action < self.spec.n_actions:
            raise InvalidAction(f"action {action} outside [0, {self.spec.n_actions})")
        return int(action)


def discounted_return(rewards: list[np.ndarray], gamma: float) -> np.ndarray:
    total = np.zeros_like(np.asarray(rewards[0], dtype=np.float64))
    for t, r in enumerate(rewards):
        total += (gamma**t) * np.asarray(r, dtype=np.float64)
    return total


def rollout(env: Env, policy, rng: np.random.Generator, max_steps: int | None = None) -> list[Step]:
    """Run one episode; policy maps an encoded state to an action."""
    limit = max_steps if max_steps is not None else env.spec.horizon
    state = env.reset(rng)
    trace: list[Step] = []
    for _ in range(limit):
        action = int(policy(env.encode(state)))
        tr = env.step(state, action, rng)
        trace.append(tr)
        state = tr.next_state
        if tr.done:
            break
    return trace


def write_trace_csv(path: str, trace: list[Step], env: Env) -> None:
    m = env.spec.reward_dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "state", "action"] + [f"r{i + 1}" for i in range(m)] + ["done"])
        for t, tr in enumerate(trace):
            writer.writerow(
                [t, json.dumps(np.asarray(env.encode(tr.state)).tolist()), tr.action]
                + [f"{x:.10g}" for x in tr.reward]
                + [int(tr.done)]
            )


def save_env_config(path: str, env: Env) -> None:
    with open(path, "w") as fh:
        json.dump(env.config(), fh, indent=2)
        fh.write("\n")
