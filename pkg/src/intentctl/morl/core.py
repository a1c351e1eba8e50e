"""Envelope Q-learning primitives.

These are the pure functions shared by the distributed trainer and the
single-process baseline: scalarization, epsilon schedules, the joint
action/preference envelope maximization, vector TD targets, the Cartesian
training loss with its analytic gradient, and priority refresh.

Two calling conventions coexist.  The `*_values` functions operate on
precomputed Q tensors, which keeps them cheap inside the learner (one big
forward pass, then pure tensor math) and lets tabular fixtures exercise the
exact same selection/backup code.  The wrappers without the suffix take a
QNet and do the forward passes themselves.

Ties in every argmax resolve to the lowest action index, then the lowest
candidate-preference index.  The cosine loss term is defined as 0 with zero
gradient when the predicted vector is exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from intentctl.morl.net import QNet, ShapeMismatch
from intentctl.replay import Transition


@dataclass(frozen=True)
class LinearSchedule:
    """Linear anneal from `start` to `end` over `horizon` steps, then clamp."""

    start: float
    end: float
    horizon: int

    def at(self, t: int) -> float:
        if t < 0:
            raise ValueError(f"negative step {t}")
        if self.horizon <= 0:
            return self.end
        frac = min(t / self.horizon, 1.0)
        return self.start + (self.end - self.start) * frac


def epsilon_at(schedule: LinearSchedule, t: int) -> float:
    return schedule.at(t)


def q_forward(net: QNet, state: np.ndarray, pref: np.ndarray) -> np.ndarray:
    """Action-value block (n_actions, reward_dim) for one (state, pref) pair."""
    return net.q(state, pref)


def scalarize(q: np.ndarray, pref: np.ndarray) -> np.ndarray:
    """Project vector values onto a preference: (..., A, m) @ (m,) -> (..., A)."""
    q = np.asarray(q, dtype=np.float64)
    pref = np.asarray(pref, dtype=np.float64)
    if q.shape[-1] != pref.shape[-1]:
        raise ShapeMismatch(f"reward dim {q.shape[-1]} vs pref dim {pref.shape[-1]}")
    return q @ pref


def act(net: QNet, state: np.ndarray, pref: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy action under a fixed preference.

    Exactly one uniform draw happens per call; the integer draw only happens
    on the explore branch, so greedy runs stay reproducible.
    """
    if rng.uniform() < eps:
        return int(rng.integers(net.n_actions))
    values = scalarize(q_forward(net, state, pref), pref)
    return int(np.argmax(values))


def actor_td(
    tr: Transition,
    pref: np.ndarray,
    online: QNet,
    target: QNet,
    gamma: float,
) -> float:
    """Scalar double-DQN TD error under one preference (select with the online
    net, evaluate with the target net)."""
    w = np.asarray(pref, dtype=np.float64)
    q_s = q_forward(online, tr.state, w)
    bootstrap = 0.0
    if not tr.done:
        a_star = int(np.argmax(scalarize(q_forward(online, tr.next_state, w), w)))
        bootstrap = gamma * float(scalarize(q_forward(target, tr.next_state, w), w)[a_star])
    return float(w @ tr.reward) + bootstrap - float(scalarize(q_s, w)[tr.action])


def initial_priority(
    tr: Transition,
    pref: np.ndarray,
    online: QNet,
    target: QNet,
    gamma: float,
    eps0: float = 1e-2,
) -> float:
    return abs(actor_td(tr, pref, online, target, gamma)) + eps0


def envelope_select_values(
    q_candidates: np.ndarray, query_prefs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Joint argmax over actions and candidate preferences.

    q_candidates: (B, K, A, m) — values at the next state under each of the K
        candidate preferences (the network input, axis 1).
    query_prefs: (P, m) — the directions being maximized (the omega outside
        the Q in the scalar product).
    Returns (a_star, k_star), both (B, P) int64.  Flattening the (A, K) grid
    action-major means numpy's first-max rule lands on the lowest action, then
    the lowest candidate index.
    """
    q = np.asarray(q_candidates, dtype=np.float64)
    w = np.asarray(query_prefs, dtype=np.float64)
    if q.ndim != 4 or w.ndim != 2 or q.shape[3] != w.shape[1]:
        raise ShapeMismatch(f"candidates {q.shape} vs prefs {w.shape}")
    b, k, n_actions, _ = q.shape
    scores = np.einsum("pm,bkam->bpak", w, q)
    best = scores.reshape(b, w.shape[0], n_actions * k).argmax(axis=2)
    return best // k, best % k


def envelope_select(
    online: QNet,
    next_states: np.ndarray,
    query_prefs: np.ndarray,
    candidate_prefs: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Network-facing wrapper; candidates default to the query set itself."""
    if candidate_prefs is None:
        candidate_prefs = query_prefs
    q_cand = online.q_grid(next_states, candidate_prefs)
    return envelope_select_values(q_cand, query_prefs)


def envelope_target_values(
    q_candidates_target: np.ndarray,
    a_star: np.ndarray,
    k_star: np.ndarray,
    rewards: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Vector TD target y = r + gamma*(1-d)*Q_target(s', a*, w*): (B, P, m)."""
    q = np.asarray(q_candidates_target, dtype=np.float64)
    b = q.shape[0]
    picked = q[np.arange(b)[:, None], k_star, a_star]  # (B, P, m)
    scale = gamma * (1.0 - np.asarray(dones, dtype=np.float64))[:, None, None]
    return np.asarray(rewards, dtype=np.float64)[:, None, :] + scale * picked


def envelope_target(
    target: QNet,
    next_states: np.ndarray,
    a_star: np.ndarray,
    k_star: np.ndarray,
    candidate_prefs: np.ndarray,
    rewards: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    q_cand = target.q_grid(next_states, candidate_prefs)
    return envelope_target_values(q_cand, a_star, k_star, rewards, dones, gamma)


def loss_terms(
    q_pred: np.ndarray,
    targets: np.ndarray,
    prefs: np.ndarray,
    weights: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cartesian loss over (transition, preference) pairs.

    q_pred, targets: (B, P, m); prefs: (P, m); weights: (B,) importance
    weights replicated over each transition's preference copies.

    Returns (loss, grad, deltas): the scalar loss, its gradient w.r.t.
    q_pred, and the scalarized residuals pref_j . (y_ij - q_ij), shape (B, P).
    Targets are treated as constants.
    """
    q = np.asarray(q_pred, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(prefs, dtype=np.float64)
    wi = np.asarray(weights, dtype=np.float64)
    if q.shape != y.shape or q.ndim != 3:
        raise ShapeMismatch(f"predictions {q.shape} vs targets {y.shape}")
    b, p, m = q.shape
    if w.shape != (p, m) or wi.shape != (b,):
        raise ShapeMismatch(f"prefs {w.shape} / weights {wi.shape} for batch ({b},{p},{m})")

    diff = q - y
    mse = np.einsum("bpm,bpm->bp", diff, diff)

    w_norm = np.linalg.norm(w, axis=1)  # (P,), > 0 on the simplex
    q_norm = np.linalg.norm(q, axis=2)  # (B, P)
    dot = np.einsum("bpm,pm->bp", q, w)
    nonzero = q_norm > 0.0
    cos = np.zeros_like(q_norm)
    np.divide(dot, w_norm[None, :] * q_norm, out=cos, where=nonzero)

    coeff = wi[:, None] / (b * p)
    loss = float(np.sum(coeff * (mse + lam * (1.0 - cos))))

    grad = 2.0 * diff
    if lam != 0.0:
        # d(-cos)/dq = dot*q/(|w||q|^3) - w/(|w||q|); zero where q == 0.
        denom = w_norm[None, :] * q_norm
        inv = np.zeros_like(q_norm)
        np.divide(1.0, denom, out=inv, where=nonzero)
        inv3 = np.zeros_like(q_norm)
        np.divide(inv, q_norm * q_norm, out=inv3, where=nonzero)
        grad = grad + lam * ((dot * inv3)[:, :, None] * q - inv[:, :, None] * w[None, :, :])
    grad = coeff[:, :, None] * grad

    deltas = np.einsum("bpm,pm->bp", y - q, w)
    return loss, grad, deltas


def learner_loss(
    online: QNet,
    target: QNet,
    states: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    prefs: np.ndarray,
    weights: np.ndarray,
    lam: float,
    gamma: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Full learner objective on a batch: envelope targets from the current
    nets, Cartesian loss, analytic gradient in flat-parameter form.

    Returns (loss, flat_grad, deltas).  The candidate set for the envelope
    maximization is the preference batch itself.
    """
    states = np.atleast_2d(np.asarray(states, float))
    prefs = np.atleast_2d(np.asarray(prefs, float))
    actions = np.asarray(actions, dtype=np.int64)
    b, p = states.shape[0], prefs.shape[0]

    a_star, k_star = envelope_select(online, next_states, prefs)
    y = envelope_target(target, next_states, a_star, k_star, prefs, rewards, dones, gamma)

    # Predictions for every (transition, query pref) pair in one pass.
    grid_states = np.repeat(states, p, axis=0)
    grid_prefs = np.tile(prefs, (b, 1))
    q_all, cache = online.q_batch(grid_states, grid_prefs, want_cache=True)
    q_all = q_all.reshape(b, p, online.n_actions, online.reward_dim)
    q_pred = q_all[np.arange(b)[:, None], np.arange(p)[None, :], actions[:, None]]

    loss, grad_q, deltas = loss_terms(q_pred, y, prefs, weights, lam)

    # Scatter per-pair gradients back into the taken-action slots.
    grad_out = np.zeros((b, p, online.n_actions, online.reward_dim))
    grad_out[np.arange(b)[:, None], np.arange(p)[None, :], actions[:, None]] = grad_q
    flat_grad = online.net.backward(cache, grad_out.reshape(b * p, -1))
    return loss, flat_grad, deltas


def refresh_priorities(deltas: np.ndarray, eps0: float = 1e-2) -> np.ndarray:
    """Aggregate the (B, P) residual matrix to one priority per transition."""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=np.float64))
    return np.abs(deltas).max(axis=1) + eps0


def target_update(target: QNet, online: QNet, tau: float | None = None) -> None:
    """Hard copy when tau is None, else soft blend toward the online params."""
    if tau is None:
        target.set_flat_params(online.flat_params())
        return
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    blended = (1.0 - tau) * target.flat_params() + tau * online.flat_params()
    target.set_flat_params(blended)
