"""Preference-conditioned Q-learning: networks, envelope ops, trainers."""

from intentctl.morl.net import Adam, Mlp, QNet, ShapeMismatch
from intentctl.morl.core import (
    LinearSchedule,
    act,
    actor_td,
    envelope_select,
    envelope_select_values,
    envelope_target,
    envelope_target_values,
    epsilon_at,
    initial_priority,
    learner_loss,
    loss_terms,
    q_forward,
    refresh_priorities,
    scalarize,
    target_update,
)
from intentctl.morl.train import (
    ChecksumMismatch,
    InsufficientData,
    TrainConfig,
    TrainResult,
    canonical_config,
    config_hash,
    desk_config,
    evaluate_front,
    load_checkpoint,
    recover_front,
    run_deql,
    run_eql_baseline,
    save_checkpoint,
)

__all__ = [
    "Adam",
    "Mlp",
    "QNet",
    "ShapeMismatch",
    "LinearSchedule",
    "act",
    "actor_td",
    "envelope_select",
    "envelope_select_values",
    "envelope_target",
    "envelope_target_values",
    "epsilon_at",
    "initial_priority",
    "learner_loss",
    "loss_terms",
    "q_forward",
    "refresh_priorities",
    "scalarize",
    "target_update",
    "ChecksumMismatch",
    "InsufficientData",
    "TrainConfig",
    "TrainResult",
    "canonical_config",
    "config_hash",
    "desk_config",
    "evaluate_front",
    "load_checkpoint",
    "recover_front",
    "run_deql",
    "run_eql_baseline",
    "save_checkpoint",
]
