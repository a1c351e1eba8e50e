"""Synthetic constrained preference problems with brute-force oracles.

Each problem exposes objective(W) and constraints(W) over a weight matrix
W of shape (reward_dim, n_services), plus a dense-grid optimum used as the
benchmark reference. The single-service problem hides its best raw
objective inside the infeasible band, so a feasibility-blind search gets
punished — that is the property the trust-region comparison leans on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SyntheticProblem:
    name: str
    n_services: int
    reward_dim: int
    n_constraints: int
    _objective: Callable
    _constraints: Callable

    def objective(self, w: np.ndarray) -> float:
        return float(self._objective(np.asarray(w, dtype=np.float64)))

    def constraints(self, w: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._constraints(np.asarray(w, dtype=np.float64)), dtype=np.float64))

    def evaluate(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        return self.objective(w), self.constraints(w)


def _one_service_objective(w: np.ndarray) -> float:
    w1 = w[0, 0]
    # feasible peak at 0.85 (height 2.2); the taller hill at 0.25 sits deep
    # inside the infeasible band and exists purely to bait feasibility-blind
    # search
    return 2.2 * np.exp(-(((w1 - 0.85) / 0.14) ** 2)) + 4.0 * np.exp(-(((w1 - 0.25) / 0.15) ** 2))


def _one_service_constraint(w: np.ndarray) -> float:
    w1 = w[0, 0]
    # residual <= 0 iff w1 >= 0.45: smooth quadratic, infeasible on [0, 0.45)
    return (0.45 - w1) * (w1 + 0.40)


def _two_service_objective(w: np.ndarray) -> float:
    a, b = w[0, 0], w[0, 1]
    return 2.0 * np.exp(-(((a - 0.70) / 0.18) ** 2)) + 1.5 * np.exp(-(((b - 0.25) / 0.15) ** 2))


def _two_service_constraint(w: np.ndarray) -> np.ndarray:
    # joint budget: the first-objective weights cannot both run high
    return np.array([w[0, 0] + w[0, 1] - 1.1])


SYNTHETIC_ONE = SyntheticProblem(
    name="synthetic1",
    n_services=1,
    reward_dim=2,
    n_constraints=1,
    _objective=_one_service_objective,
    _constraints=_one_service_constraint,
)

SYNTHETIC_TWO = SyntheticProblem(
    name="synthetic2",
    n_services=2,
    reward_dim=2,
    n_constraints=1,
    _objective=_two_service_objective,
    _constraints=_two_service_constraint,
)

_REGISTRY = {p.name: p for p in (SYNTHETIC_ONE, SYNTHETIC_TWO)}


def get_problem(name: str) -> SyntheticProblem:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; have {sorted(_REGISTRY)}") from None


def grid_optimum(problem: SyntheticProblem, step: float = 1e-3) -> tuple[float, np.ndarray]:
    """Best feasible objective on a dense weight grid (exhaustive oracle).

    Single-service problems sweep w1 in {0, step, ..., 1}; the two-service
    variant sweeps the product grid. Returns (value, W)."""
    ticks = np.round(np.arange(0.0, 1.0 + step / 2, step), 9)
    best_val, best_w = -np.inf, None
    if problem.n_services == 1:
        grids = (ticks,)
    elif problem.n_services == 2:
        grids = (ticks, ticks)
    else:
        raise ValueError("grid oracle implemented for one or two services")
    mesh = np.meshgrid(*grids, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    if problem.reward_dim != 2:
        raise ValueError("grid oracle implemented for reward_dim == 2")
    for row in flat:
        w = np.vstack([row, 1.0 - row])
        val, res = problem.evaluate(w)
        if np.all(res <= 0.0) and val > best_val:
            best_val, best_w = val, w
    return best_val, best_w


@dataclass(frozen=True)
class BenchResult:
    """One benchmark run, scored against the noiseless problem."""

    best_true: float | None
    best_w: np.ndarray | None
    true_violations: int
    n_evals: int
    events: tuple
    trace: tuple


def run_benchmark(
    problem: SyntheticProblem,
    trust_region: bool,
    seed: int,
    n_evals: int = 60,
    obs_noise: float = 0.02,
    res_noise: float = 0.01,
    config=None,
):
    """Drive the optimizer against a problem with noisy measurements.

    The optimizer sees objective and residual values corrupted by Gaussian
    measurement noise (KPIs are episode estimates, not exact functionals);
    scoring uses the true functions. The recommendation is the
    observed-feasible evaluation with the highest observed objective.
    """
    from intentctl.bo.loop import OptimizerConfig, PreferenceOptimizer

    if config is None:
        config = OptimizerConfig(
            n_services=problem.n_services,
            reward_dim=problem.reward_dim,
            n_constraints=problem.n_constraints,
            trust_region=trust_region,
            seed=seed,
        )
    opt = PreferenceOptimizer(config)
    noise_rng = np.random.default_rng([seed, 60313])
    rows, events = [], []
    best_obs, best_true, best_w = -np.inf, None, None
    true_violations = 0
    for t in range(n_evals):
        u, w = opt.ask()
        true_o, true_c = problem.evaluate(w)
        obs_o = true_o + obs_noise * noise_rng.standard_normal()
        obs_c = true_c + res_noise * noise_rng.standard_normal(true_c.shape)
        events.append(opt.tell(obs_o, obs_c))
        if np.any(true_c > 0.0):
            true_violations += 1
        if np.all(obs_c <= 0.0) and obs_o > best_obs:
            best_obs, best_true, best_w = obs_o, true_o, w
        rows.append(
            {
                "t": t + 1,
                "w1": float(w[0, 0]),
                "true_objective": true_o,
                "observed_objective": obs_o,
                "true_residual_max": float(true_c.max()),
                "event": events[-1],
            }
        )
    return BenchResult(
        best_true=best_true,
        best_w=best_w,
        true_violations=true_violations,
        n_evals=n_evals,
        events=tuple(events),
        trace=tuple(rows),
    )
