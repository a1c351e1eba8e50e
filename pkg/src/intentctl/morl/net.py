"""Small dense networks with hand-rolled backprop.

Everything runs in float64 numpy.  A tensor framework would be overkill here:
the models are a few hundred thousand weights at most, and keeping the whole
training loop in plain numpy makes runs bit-reproducible across machines,
which the tests lean on heavily.

Parameter serialization order is fixed as W0, b0, W1, b1, ... so that flat
vectors, checksums and checkpoints all agree.
"""

from __future__ import annotations

import zlib

import numpy as np
from scipy.special import expit


class ShapeMismatch(ValueError):
    pass


def silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


class Mlp:
    """Fully connected network, SiLU on hidden layers, linear output."""

    def __init__(self, in_dim: int, out_dim: int, hidden: int, n_hidden: int = 3, seed: int = 0):
        if min(in_dim, out_dim, hidden) < 1 or n_hidden < 1:
            raise ValueError(
                f"bad shape: in={in_dim} out={out_dim} hidden={hidden} n_hidden={n_hidden}"
            )
        self.dims = [in_dim] + [hidden] * n_hidden + [out_dim]
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            # He init; right variance regime for the SiLU family.
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def in_dim(self) -> int:
        return self.dims[0]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def forward(self, x: np.ndarray, want_cache: bool = False):
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if h.shape[1] != self.in_dim:
            raise ShapeMismatch(f"expected input dim {self.in_dim}, got {h.shape[1]}")
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < last:
                pre.append(z)
                h = silu(z)
                post.append(h)
            else:
                h = z
        if want_cache:
            return h, (pre, post)
        return h

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        """Gradient of sum(grad_out * forward(x)) w.r.t. the flat parameters.

        `cache` must come from the forward pass that produced the output the
        caller differentiated.  Returns a vector aligned with flat_params().
        """
        pre, post = cache
        g = np.asarray(grad_out, dtype=np.float64)
        n = len(self.weights)
        grads_w: list[np.ndarray] = [np.empty(0)] * n
        grads_b: list[np.ndarray] = [np.empty(0)] * n
        for i in range(n - 1, -1, -1):
            grads_w[i] = post[i].T @ g
            grads_b[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * silu_grad(pre[i - 1])
        return np.concatenate([a.ravel() for pair in zip(grads_w, grads_b) for a in pair])

    def flat_params(self) -> np.ndarray:
        return np.concatenate(
            [a.ravel() for pair in zip(self.weights, self.biases) for a in pair]
        )

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64).ravel()
        if flat.size != self.n_params:
            raise ShapeMismatch(f"expected {self.n_params} params, got {flat.size}")
        at = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[at : at + w.size].reshape(w.shape).copy()
            at += w.size
            self.biases[i] = flat[at : at + b.size].copy()
            at += b.size

    def checksum(self) -> int:
        return zlib.crc32(np.ascontiguousarray(self.flat_params()).tobytes())

    def clone(self) -> "Mlp":
        twin = Mlp.__new__(Mlp)
        twin.dims = list(self.dims)
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin


class Adam:
    """Adaptive-moment gradient descent on a flat parameter vector."""

    def __init__(
        self,
        n_params: int,
        lr: float = 3.5e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if params.size != self.m.size or grad.size != self.m.size:
            raise ShapeMismatch(
                f"optimizer built for {self.m.size} params, got {params.size}/{grad.size}"
            )
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class QNet:
    """Preference-conditioned action-value network.

    Input is the concatenation [state encoding, preference]; the flat output
    is reshaped to an (n_actions, reward_dim) block of vector values.
    """

    def __init__(
        self,
        state_dim: int,
        n_actions: int,
        reward_dim: int,
        hidden: int,
        n_hidden: int = 3,
        seed: int = 0,
    ):
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.reward_dim = reward_dim
        self.net = Mlp(state_dim + reward_dim, n_actions * reward_dim, hidden, n_hidden, seed)

    def q(self, state: np.ndarray, pref: np.ndarray) -> np.ndarray:
        """Single (state, preference) pair -> (n_actions, reward_dim)."""
        x = np.concatenate([np.asarray(state, float).ravel(), np.asarray(pref, float).ravel()])
        return self.net.forward(x)[0].reshape(self.n_actions, self.reward_dim)

    def q_batch(self, states: np.ndarray, prefs: np.ndarray, want_cache: bool = False):
        """Row-wise pairs: states (n, s), prefs (n, m) -> (n, A, m)."""
        states = np.atleast_2d(np.asarray(states, float))
        prefs = np.atleast_2d(np.asarray(prefs, float))
        if states.shape[0] != prefs.shape[0]:
            raise ShapeMismatch(f"{states.shape[0]} states vs {prefs.shape[0]} prefs")
        x = np.concatenate([states, prefs], axis=1)
        out = self.net.forward(x, want_cache=want_cache)
        if want_cache:
            y, cache = out
            return y.reshape(-1, self.n_actions, self.reward_dim), cache
        return out.reshape(-1, self.n_actions, self.reward_dim)

    def q_grid(self, states: np.ndarray, prefs: np.ndarray) -> np.ndarray:
        """Cartesian product: states (n, s) x prefs (K, m) -> (n, K, A, m)."""
        states = np.atleast_2d(np.asarray(states, float))
        prefs = np.atleast_2d(np.asarray(prefs, float))
        n, k = states.shape[0], prefs.shape[0]
        x = np.concatenate(
            [np.repeat(states, k, axis=0), np.tile(prefs, (n, 1))], axis=1
        )
        return self.net.forward(x).reshape(n, k, self.n_actions, self.reward_dim)

    @property
    def n_params(self) -> int:
        return self.net.n_params

    def flat_params(self) -> np.ndarray:
        return self.net.flat_params()

    def set_flat_params(self, flat: np.ndarray) -> None:
        self.net.set_flat_params(flat)

    def checksum(self) -> int:
        return self.net.checksum()

    def clone(self) -> "QNet":
        twin = QNet.__new__(QNet)
        twin.state_dim = self.state_dim
        twin.n_actions = self.n_actions
        twin.reward_dim = self.reward_dim
        twin.net = self.net.clone()
        return twin
