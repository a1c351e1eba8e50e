"""Probability-simplex machinery: projection, sampling, and lattice strata.

A preference over m objectives is a length-m numpy vector on the simplex
(non-negative, sums to one).  Strata are the simplicial cells of the
resolution-L lattice subdivision; there are exactly L**(m-1) of them, all
with equal volume, and together they tile the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

SIMPLEX_TOL = 1e-9


class BadAlpha(ValueError):
    pass


class BadResolution(ValueError):
    pass


def check_preference(w: np.ndarray, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate w lies on the simplex; returns it as a float array."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"preference must be a 1-d vector, got shape {w.shape}")
    if w.min() < -tol or abs(w.sum() - 1.0) > tol:
        raise ValueError(f"not on the simplex: min={w.min()}, sum={w.sum()}")
    return w


def project_to_simplex(u: np.ndarray) -> np.ndarray:
    """Euclidean projection of u onto the probability simplex.

    Sort-and-threshold: find the largest k with u_(k) + (1 - cumsum_k)/k > 0,
    subtract the resulting shift, clip at zero.  O(m log m).
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise ValueError(f"expected a 1-d vector, got shape {u.shape}")
    s = np.sort(u)[::-1]
    css = np.cumsum(s)
    k = np.arange(1, u.size + 1)
    cond = s + (1.0 - css) / k > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1.0)
    p = np.maximum(u - theta, 0.0)
    return p / p.sum()


def sample_dirichlet(alpha: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from Dirichlet(alpha), renormalized to kill rounding residue."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size == 0 or np.any(alpha <= 0):
        raise BadAlpha(f"alpha must be positive, got {alpha}")
    w = rng.dirichlet(alpha)
    return w / w.sum()


@dataclass(frozen=True)
class Stratum:
    """One simplicial cell: m vertex rows, each on the simplex."""

    index: int
    vertices: np.ndarray  # shape (m, m)

    @property
    def m(self) -> int:
        return self.vertices.shape[1]


def _staircase_to_simplex(s: np.ndarray, m: int) -> np.ndarray:
    """Map ordered-cube coordinates 0<=s_1<=...<=s_{m-1}<=1 to the simplex."""
    x = np.empty(m, dtype=np.float64)
    prev = 0.0
    for i in range(m - 1):
        x[i] = s[i] - prev
        prev = s[i]
    x[m - 1] = 1.0 - prev
    return x


def build_strata(m: int, L: int, permutation: np.ndarray | None = None) -> list[Stratum]:
    """Equal-volume simplicial cells of the resolution-L lattice on the simplex.

    Construction: the simplex is isomorphic to the ordered region
    {0 <= s_1 <= ... <= s_{m-1} <= 1} of the unit cube via partial sums.
    Cube cells at resolution L are cut into (m-1)! path simplices; the paths
    whose vertices all stay in the ordered region map back to exactly
    L**(m-1) cells that tile the simplex.

    Args:
        m: number of objectives (simplex lives in R^m).
        L: lattice resolution, >= 1.
        permutation: optional relabeling of the m coordinates, applied to
            every vertex; identity by default.
    """
    if m < 1:
        raise BadResolution(f"m must be >= 1, got {m}")
    if L < 1:
        raise BadResolution(f"resolution must be >= 1, got {L}")
    if permutation is None:
        perm = np.arange(m)
    else:
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(m)):
            raise ValueError(f"not a permutation of 0..{m-1}: {perm}")
    d = m - 1
    if d == 0:
        return [Stratum(0, np.ones((1, 1)))]
    strata: list[Stratum] = []
    inv = 1.0 / L
    idx = 0
    for corner in product(range(L), repeat=d):
        base = np.asarray(corner, dtype=np.float64) * inv
        for path in permutations(range(d)):
            verts_s = np.empty((m, d))
            verts_s[0] = base
            ok = _is_ordered(base)
            for r, axis in enumerate(path, start=1):
                verts_s[r] = verts_s[r - 1]
                verts_s[r][axis] += inv
                ok = ok and _is_ordered(verts_s[r])
                if not ok:
                    break
            if not ok:
                continue
            verts = np.stack([_staircase_to_simplex(vs, m) for vs in verts_s])
            strata.append(Stratum(idx, verts[:, perm].copy()))
            idx += 1
    return strata


def _is_ordered(s: np.ndarray) -> bool:
    return bool(np.all(np.diff(s) >= -1e-12) and s[0] >= -1e-12 and s[-1] <= 1.0 + 1e-12)


def sample_stratum(stratum: Stratum, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw inside a cell: flat-Dirichlet mixture of its vertices."""
    z = rng.dirichlet(np.ones(stratum.m))
    w = z @ stratum.vertices
    w = np.maximum(w, 0.0)
    return w / w.sum()


def barycentric_coords(stratum: Stratum, w: np.ndarray) -> np.ndarray:
    """Coefficients lam with lam @ vertices = w, sum(lam) = 1 (least squares)."""
    A = np.vstack([stratum.vertices.T, np.ones(stratum.m)])
    b = np.concatenate([np.asarray(w, dtype=np.float64), [1.0]])
    lam, *_ = np.linalg.lstsq(A, b, rcond=None)
    return lam


def stratum_contains(stratum: Stratum, w: np.ndarray, tol: float = 1e-9) -> bool:
    lam = barycentric_coords(stratum, w)
    recon = lam @ stratum.vertices
    return bool(lam.min() >= -tol and np.abs(recon - w).max() <= 1e-7)


def strata_for_actor(actor_id: int, n_actors: int, strata: list[Stratum]) -> list[Stratum]:
    """Deterministic stratum-to-actor grouping.

    With at least as many strata as actors, actor u owns a contiguous block;
    with fewer strata than actors, assignment wraps round-robin.
    """
    S = len(strata)
    if n_actors <= 0 or actor_id < 0 or actor_id >= n_actors:
        raise ValueError(f"bad actor id {actor_id} for {n_actors} actors")
    if S == 0:
        raise ValueError("no strata to assign")
    if n_actors <= S:
        lo = actor_id * S // n_actors
        hi = (actor_id + 1) * S // n_actors
        return strata[lo:hi]
    return [strata[actor_id % S]]


class StratifiedPreferenceSampler:
    """Draws preferences from an actor's stratum block, uniformly per draw."""

    def __init__(self, actor_id: int, n_actors: int, strata: list[Stratum]):
        self.block = strata_for_actor(actor_id, n_actors, strata)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        cell = self.block[rng.integers(len(self.block))]
        return sample_stratum(cell, rng)
