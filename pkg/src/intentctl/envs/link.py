"""Episodic link-adaptation toy: one packet, up to five transmission tries.

Action picks one of eight modulation/coding aggressiveness levels with
geometrically spaced spectral efficiencies.  The first attempt fixes the
transport block size TBS = SE * alloc; retransmissions carry the same TBS
but may pick a different level, so their resource use is TBS / SE capped
at the allocation ceiling.  Success is Bernoulli in the gap between the
transmitted spectral efficiency and the channel capacity (logistic, slope
k).  Reward is two-dimensional and normalized by the ceiling: success
gives (TBS, -resources), failure (0, -resources).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from intentctl.envs.base import Env, MomdpSpec, Step

N_MCS = 8
SE_MIN = 0.25
SE_MAX = 6.0
SPECTRAL_EFFICIENCIES = tuple(SE_MIN * (SE_MAX / SE_MIN) ** (i / (N_MCS - 1)) for i in range(N_MCS))
LOGISTIC_SLOPE = 4.0
MAX_ATTEMPTS = 5


def la_success_prob(channel_capacity: float, chosen_spectral_efficiency: float, k: float = LOGISTIC_SLOPE) -> float:
    """P(decode) = logistic in (capacity - SE); 0.5 at SE == capacity."""
    gap = chosen_spectral_efficiency - channel_capacity
    return 1.0 / (1.0 + np.exp(k * gap))


@dataclass(frozen=True)
class LaEpisodeState:
    capacity: float  # channel quality, bits per resource element
    attempt: int  # 1-based attempt index, <= MAX_ATTEMPTS
    tbs: float  # transport block size fixed by the first attempt (0 before)


class LinkAdaptEnv(Env):
    def __init__(
        self,
        cap_min: float = 0.5,
        cap_max: float = 5.0,
        re_alloc: float = 250.0,
        re_max: float = 1000.0,
        ar_rho: float = 0.9,
        ar_sigma: float = 0.15,
        gamma: float = 1.0,
    ):
        if not 0 < cap_min < cap_max:
            raise ValueError(f"need 0 < cap_min < cap_max, got [{cap_min}, {cap_max}]")
        self.cap_min = cap_min
        self.cap_max = cap_max
        self.re_alloc = re_alloc
        self.re_max = re_max
        self.ar_rho = ar_rho
        self.ar_sigma = ar_sigma
        self.spec = MomdpSpec(
            state_dim=3, n_actions=N_MCS, reward_dim=2, gamma=gamma, horizon=MAX_ATTEMPTS
        )

    def reset(self, rng: np.random.Generator) -> LaEpisodeState:
        cap = float(rng.uniform(self.cap_min, self.cap_max))
        return LaEpisodeState(capacity=cap, attempt=1, tbs=0.0)

    def _drift(self, cap: float, rng: np.random.Generator) -> float:
        mu = 0.5 * (self.cap_min + self.cap_max)
        nxt = mu + self.ar_rho * (cap - mu) + self.ar_sigma * float(rng.normal())
        return float(np.clip(nxt, self.cap_min, self.cap_max))

    def step(self, state: LaEpisodeState, action: int, rng: np.random.Generator) -> Step:
        action = self._check_action(action)
        se = SPECTRAL_EFFICIENCIES[action]
        if state.attempt == 1:
            tbs = se * self.re_alloc
            n_re = self.re_alloc
        else:
            tbs = state.tbs
            n_re = min(tbs / se, self.re_max)
        se_tx = tbs / n_re
        p = la_success_prob(state.capacity, se_tx)
        success = bool(rng.uniform() < p)
        cost = n_re / self.re_max
        if success:
            reward = np.array([tbs / self.re_max, -cost])
            return Step(state, action, reward, LaEpisodeState(state.capacity, state.attempt, tbs), True)
        reward = np.array([0.0, -cost])
        dropped = state.attempt >= MAX_ATTEMPTS
        nxt = LaEpisodeState(
            capacity=self._drift(state.capacity, rng),
            attempt=state.attempt + 1,
            tbs=tbs,
        )
        return Step(state, action, reward, nxt, dropped)

    def encode(self, state: LaEpisodeState) -> np.ndarray:
        return np.array(
            [
                state.capacity / SE_MAX,
                (state.attempt - 1) / (MAX_ATTEMPTS - 1),
                state.tbs / self.re_max,
            ]
        )

    def config(self) -> dict:
        return {
            "kind": "LinkAdaptEnv",
            "cap_range": [self.cap_min, self.cap_max],
            "re_alloc": self.re_alloc,
            "re_max": self.re_max,
            "ar": [self.ar_rho, self.ar_sigma],
            "spectral_efficiencies": list(SPECTRAL_EFFICIENCIES),
            "logistic_slope": LOGISTIC_SLOPE,
            "max_attempts": MAX_ATTEMPTS,
        }


@dataclass(frozen=True)
class EpisodeOutcome:
    delivered: bool
    bits: float  # delivered transport block size (0 on drop), re_max-normalized
    attempts: int
    failures: int
    resources: float  # total resource cost, re_max-normalized


def summarize_episode(trace) -> EpisodeOutcome:
    failures = sum(1 for tr in trace if tr.reward[0] == 0.0)
    delivered = trace[-1].reward[0] > 0.0
    return EpisodeOutcome(
        delivered=delivered,
        bits=float(trace[-1].reward[0]),
        attempts=len(trace),
        failures=failures,
        resources=float(-sum(tr.reward[1] for tr in trace)),
    )
