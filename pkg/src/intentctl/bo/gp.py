"""Exact Gaussian-process regression with fixed kernel hyperparameters.

Small, deterministic surrogate: RBF kernel, Cholesky posterior, min-max
input normalization and target standardization. No hyperparameter training
— the desk-scale oracle comparisons need the model to be a fixed function
of its data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

DEFAULT_LENGTHSCALE = 0.2  # on normalized inputs
DEFAULT_SIGNAL = 1.0
DEFAULT_NOISE_VAR = 1e-4

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)


class SingularKernel(RuntimeError):
    """Cholesky failed even after the documented jitter escalation."""


@dataclass
class GpHyper:
    lengthscale: float = DEFAULT_LENGTHSCALE
    signal: float = DEFAULT_SIGNAL
    noise_var: float = DEFAULT_NOISE_VAR


def rbf_kernel(a: np.ndarray, b: np.ndarray, lengthscale: float, signal: float) -> np.ndarray:
    """k(x, x') = signal^2 * exp(-||x-x'||^2 / (2 l^2)) for all row pairs."""
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * a @ b.T
    return signal**2 * np.exp(-np.maximum(sq, 0.0) / (2.0 * lengthscale**2))


@dataclass
class GpModel:
    """Posterior GP conditioned on (X, y), ready for mean/std queries.

    All internal algebra runs on normalized inputs and standardized targets;
    `predict` maps back to the original units.
    """

    x_raw: np.ndarray
    y_raw: np.ndarray
    hyper: GpHyper
    lo: np.ndarray
    span: np.ndarray
    y_mean: float
    y_scale: float
    jitter: float
    _chol: tuple = field(repr=False)
    _alpha: np.ndarray = field(repr=False)
    _xn: np.ndarray = field(repr=False)

    def _normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.lo) / self.span

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation of the latent function.

        Returns arrays of shape (n,); accepts a single point as a 1-d array.
        """
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        xn = self._normalize(x)
        ks = rbf_kernel(xn, self._xn, self.hyper.lengthscale, self.hyper.signal)
        mean_std = ks @ self._alpha
        v = cho_solve(self._chol, ks.T)
        var = self.hyper.signal**2 - np.einsum("nm,mn->n", ks, v)
        std_std = np.sqrt(np.maximum(var, 0.0))
        return self.y_mean + self.y_scale * mean_std, self.y_scale * std_std

    @property
    def n_train(self) -> int:
        return self.x_raw.shape[0]


def gp_fit(
    x: np.ndarray,
    y: np.ndarray,
    hyper: GpHyper | None = None,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> GpModel:
    """Condition a fixed-hyperparameter GP on data.

    Args:
        x: (n, d) inputs, n >= 1.
        y: (n,) targets.
        hyper: kernel constants; defaults are the pinned desk values.
        bounds: optional (lo, hi) per input dimension for normalization;
            defaults to the unit cube (inputs already live there).

    Raises:
        SingularKernel: if the Gram matrix stays indefinite after the full
            jitter ladder (duplicate rows at zero noise can do this).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] < 1:
        raise ValueError("need at least one training point")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{x.shape[0]} inputs vs {y.shape[0]} targets")
    hyper = hyper or GpHyper()

    if bounds is None:
        lo = np.zeros(x.shape[1])
        span = np.ones(x.shape[1])
    else:
        lo = np.asarray(bounds[0], dtype=np.float64)
        span = np.asarray(bounds[1], dtype=np.float64) - lo
        span = np.where(span <= 0, 1.0, span)

    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale < 1e-12:
        y_scale = 1.0
    y_std = (y - y_mean) / y_scale

    xn = (x - lo) / span
    gram = rbf_kernel(xn, xn, hyper.lengthscale, hyper.signal)
    eye = np.eye(xn.shape[0])
    for jitter in _JITTERS:
        try:
            chol = cho_factor(gram + (hyper.noise_var + jitter) * eye, lower=True)
        except np.linalg.LinAlgError:
            continue
        alpha = cho_solve(chol, y_std)
        return GpModel(
            x_raw=x,
            y_raw=y,
            hyper=hyper,
            lo=lo,
            span=span,
            y_mean=y_mean,
            y_scale=y_scale,
            jitter=jitter,
            _chol=chol,
            _alpha=alpha,
            _xn=xn,
        )
    raise SingularKernel(f"kernel matrix indefinite after jitter ladder {_JITTERS}")
