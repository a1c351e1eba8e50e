from intentctl.envs.base import (
    Env,
    InvalidAction,
    MomdpSpec,
    NotEnumerable,
    Step,
    discounted_return,
    rollout,
    save_env_config,
    write_trace_csv,
)
from intentctl.envs.dst import DeepSeaEnv
from intentctl.envs.ftn import FruitTreeEnv
from intentctl.envs.link import LinkAdaptEnv, la_success_prob

__all__ = [
    "Env",
    "InvalidAction",
    "MomdpSpec",
    "NotEnumerable",
    "Step",
    "discounted_return",
    "rollout",
    "save_env_config",
    "write_trace_csv",
    "DeepSeaEnv",
    "FruitTreeEnv",
    "LinkAdaptEnv",
    "la_success_prob",
]
