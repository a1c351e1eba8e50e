"""Front metrics for multi-objective returns (maximization everywhere).

All inputs are (n, m) arrays of return vectors.  Dominance: r' dominates r
when r' >= r in every coordinate and r' > r in at least one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

EPS_MATCH = 1e-6


class TooFewPoints(ValueError):
    pass


class RefNotDominated(ValueError):
    pass


@dataclass(frozen=True)
class FrontSet:
    points: np.ndarray  # (n, m)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class HypervolumeResult:
    value: float
    std_error: float
    method: str  # "exact" | "monte_carlo"


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"expected a non-empty (n, m) array, got shape {pts.shape}")
    return pts


def pareto_filter(points) -> np.ndarray:
    """Non-dominated subset, duplicates collapsed. O(n^2)."""
    pts = np.unique(_as_points(points), axis=0)
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        ge = np.all(pts >= pts[i], axis=1)
        gt = np.any(pts > pts[i], axis=1)
        if np.any(ge & gt):
            keep[i] = False
    return pts[keep]


def _upper_hull_2d(pts: np.ndarray) -> np.ndarray:
    """Upper-left convex hull of a 2-d front, keeping collinear points."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    sorted_pts = pts[order]
    hull: list[np.ndarray] = []
    for p in sorted_pts:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            # pop only strictly-below points; collinear (cross == 0) stays
            if cross > 1e-12:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.asarray(hull)


def _supported_lp(pts: np.ndarray, i: int, tol: float = 1e-9) -> bool:
    """Is point i the maximizer of some non-negative weighting? LP feasibility.

    Variables (w in R^m, t): maximize t subject to w @ (p_i - p_j) >= t for
    all j != i, sum w = 1, w >= 0.  Supported (incl. collinear) iff t* >= -tol.
    """
    n, m = pts.shape
    diffs = pts[i] - np.delete(pts, i, axis=0)
    if diffs.shape[0] == 0:
        return True
    # linprog minimizes: c = [0..0, -1] over x = (w, t)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-diffs, np.ones((diffs.shape[0], 1))])  # t - w@diff <= 0
    b_ub = np.zeros(diffs.shape[0])
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0.0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        return False
    return -res.fun >= -tol


def ccs(points) -> np.ndarray:
    """Convex-coverage subset: points attaining the max of some linear
    scalarization with non-negative weights.  Collinear support points kept.
    """
    front = pareto_filter(points)
    if front.shape[1] == 2:
        return _upper_hull_2d(front)
    keep = [i for i in range(front.shape[0]) if _supported_lp(front, i)]
    return front[keep]


def _match_counts(a: np.ndarray, b: np.ndarray, eps: float) -> int:
    """Number of rows of a having some row of b within eps in max-norm."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    d = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
    return int((d.min(axis=1) <= eps).sum())


def crf1(recovered, truth, eps_match: float = EPS_MATCH) -> float:
    """F1 of eps-ball matching between a recovered front and the true front."""
    rec = _as_points(recovered)
    tru = _as_points(truth)
    if rec.shape[1] != tru.shape[1]:
        raise ValueError("objective dimensions differ")
    precision = _match_counts(rec, tru, eps_match) / rec.shape[0]
    recall = _match_counts(tru, rec, eps_match) / tru.shape[0]
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def hypervolume(
    points,
    ref_point,
    n_samples: int = 200_000,
    seed: int = 20240813,
) -> HypervolumeResult:
    """Volume dominated by the front and bounded below by ref_point.

    Exact sweep for two objectives; Monte Carlo with a fixed seed (and a
    reported standard error) for three or more.
    """
    pts = pareto_filter(points)
    ref = np.asarray(ref_point, dtype=np.float64)
    if ref.shape != (pts.shape[1],):
        raise ValueError(f"ref_point shape {ref.shape} vs m={pts.shape[1]}")
    if np.any(pts < ref):
        raise RefNotDominated(f"some point fails to dominate ref {ref}")
    m = pts.shape[1]
    if m == 2:
        order = np.argsort(-pts[:, 0])
        area = 0.0
        prev_y = ref[1]
        for x, y in pts[order]:
            area += (x - ref[0]) * (y - prev_y)
            prev_y = max(prev_y, y)
        return HypervolumeResult(float(area), 0.0, "exact")
    hi = pts.max(axis=0)
    box = np.prod(hi - ref)
    if box == 0.0:
        return HypervolumeResult(0.0, 0.0, "monte_carlo")
    rng = np.random.default_rng(seed)
    dominated = 0
    chunk = 50_000
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        samples = rng.uniform(ref, hi, size=(k, m))
        hit = np.zeros(k, dtype=bool)
        for p in pts:
            hit |= np.all(samples <= p, axis=1)
        dominated += int(hit.sum())
        done += k
    frac = dominated / n_samples
    value = frac * box
    se = box * np.sqrt(max(frac * (1 - frac), 1e-12) / n_samples)
    return HypervolumeResult(float(value), float(se), "monte_carlo")


def sparsity(points) -> float:
    """Mean over objectives of the mean squared gap between consecutive
    sorted coordinate values on the front."""
    pts = _as_points(points)
    n, m = pts.shape
    if n < 2:
        raise TooFewPoints(f"sparsity needs >= 2 points, got {n}")
    acc = 0.0
    for j in range(m):
        col = np.sort(pts[:, j])
        gaps = np.diff(col)
        acc += float(np.mean(gaps**2))
    return acc / m
