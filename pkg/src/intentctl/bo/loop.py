"""Trust-region preference optimizer over product simplices.

Search runs in an unconstrained lift space (one [0,1]^m block per service);
every proposal is projected columnwise onto the simplex before it touches
the system under optimization. A single l-inf trust region governs step
size, with a success/failure counter automaton for expand/shrink and a
novelty-scored reset when progress stalls at the minimum radius.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from intentctl.bo.acquisition import LOG_FLOOR, constrained_log_acquisition
from intentctl.bo.gp import GpModel, gp_fit
from intentctl.simplex import project_to_simplex


class StaleObservation(RuntimeError):
    """tell() did not match the outstanding proposal."""


class NotStuck(RuntimeError):
    """Reset requested while the trust region is not at its floor."""


@dataclass
class OptimizerConfig:
    n_services: int = 1
    reward_dim: int = 2
    n_constraints: int = 1
    eps: float = 1e-3  # success margin, on the standardized objective scale
    l0: float = 0.15
    l_min: float = 0.05
    l_max: float = 0.5
    shrink: float = 0.7  # 0.5 reproduces the halving variant exactly
    s_th: int = 3
    f_th: int = 2
    stuck_window: int = 5
    n_init: int = 20
    keep_window: int = 60
    raw_samples: int = 512
    n_restarts: int = 10
    reset_candidates: int = 128
    novelty_beta: float = 1.0
    acq_kind: str = "logei"
    ucb_beta: float = 2.0
    trust_region: bool = True
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.reward_dim * self.n_services


def lift_of(w: np.ndarray) -> np.ndarray:
    """vec(W): the simplex already sits inside the unit-cube lift space."""
    return np.asarray(w, dtype=np.float64).ravel(order="F")


def weights_of(u: np.ndarray, reward_dim: int, n_services: int) -> np.ndarray:
    """Columnwise simplex projection of a lift vector, as an (m, S) array."""
    mat = np.asarray(u, dtype=np.float64).reshape(reward_dim, n_services, order="F")
    return np.column_stack([project_to_simplex(mat[:, s]) for s in range(n_services)])


def sobol_init_points(dim: int, n: int) -> np.ndarray:
    """First n points of the unscrambled Sobol sequence in [0,1]^dim.

    Unscrambled so the list is a fixed constant of the sequence; drawn in a
    power-of-two block to keep the generator on its balanced stride.
    """
    block = 1 << max(int(np.ceil(np.log2(max(n, 2)))), 1)
    return qmc.Sobol(d=dim, scramble=False).random(block)[:n]


@dataclass
class OptimizerState:
    xs: list = field(default_factory=list)  # lift-space points, in order
    ws: list = field(default_factory=list)  # matching projected weights
    os: list = field(default_factory=list)
    cs: list = field(default_factory=list)  # (p,) residuals per observation
    f_star: float | None = None
    center: np.ndarray | None = None
    radius: float = 0.0
    k_success: int = 0
    k_fail: int = 0
    k_floor: int = 0
    t: int = 0


class PreferenceOptimizer:
    """ask/tell loop: propose a weight matrix, observe objective + residuals.

    `ask` yields (u, W); the caller evaluates the system at W and reports
    (objective, residuals) through `tell`, which runs the trust-region
    automaton and returns the event label for the trace.
    """

    def __init__(self, config: OptimizerConfig):
        if config.n_init < 1:
            raise ValueError("need at least one initialization sample")
        self.cfg = config
        self.state = OptimizerState()
        self.rng = np.random.default_rng([config.seed, 4817])
        self._init_points = sobol_init_points(config.dim, config.n_init)
        self._pending: np.ndarray | None = None
        self.trace: list[dict] = []

    # ---------------------------------------------------------------- ask

    def ask(self) -> tuple[np.ndarray, np.ndarray]:
        if self._pending is not None:
            raise StaleObservation("previous proposal has no observation yet")
        st = self.state
        if st.t < self.cfg.n_init:
            u = self._init_points[st.t].copy()
        elif self.cfg.trust_region:
            u = self._propose_in_box(st.center, st.radius)
        else:
            u = self._propose_in_box(np.full(self.cfg.dim, 0.5), 0.5)
        self._pending = u
        return u, weights_of(u, self.cfg.reward_dim, self.cfg.n_services)

    # --------------------------------------------------------------- tell

    def tell(self, objective: float, residuals) -> str:
        if self._pending is None:
            raise StaleObservation("no outstanding proposal")
        cfg, st = self.cfg, self.state
        u = self._pending
        self._pending = None
        residuals = np.atleast_1d(np.asarray(residuals, dtype=np.float64))
        if residuals.shape != (cfg.n_constraints,):
            raise ValueError(f"expected {cfg.n_constraints} residuals, got {residuals.shape}")
        feasible = bool(np.all(residuals <= 0.0))

        st.xs.append(u)
        st.ws.append(weights_of(u, cfg.reward_dim, cfg.n_services))
        st.os.append(float(objective))
        st.cs.append(residuals)
        st.t += 1

        if st.t <= cfg.n_init:
            if feasible and (st.f_star is None or objective > st.f_star):
                st.f_star = float(objective)
            event = "init"
            if st.t == cfg.n_init:
                self._activate_trust_region()
        else:
            event = self._automaton(u, float(objective), feasible)
        self._record(u, objective, residuals, event)
        return event

    # ---------------------------------------------------- automaton guts

    def _success_margin(self) -> float:
        scale = float(np.std(self._window(self.state.os)))
        return self.cfg.eps * max(scale, 1e-12)

    def _automaton(self, u: np.ndarray, objective: float, feasible: bool) -> str:
        cfg, st = self.cfg, self.state
        improved = st.f_star is None or objective >= st.f_star + self._success_margin()
        if feasible and improved:
            st.f_star = objective
            st.center = u.copy()
            st.k_success += 1
            st.k_fail = 0
            st.k_floor = 0
            if st.k_success >= cfg.s_th and cfg.trust_region:
                st.radius = min(2.0 * st.radius, cfg.l_max)
                st.k_success = 0
                return "expand"
            return "success"
        st.k_fail += 1
        st.k_success = 0
        if st.k_fail >= cfg.f_th and cfg.trust_region:
            st.radius = max(cfg.shrink * st.radius, cfg.l_min)
            st.k_success = 0
            st.k_fail = 0
            if st.radius == cfg.l_min:
                st.k_floor += 1
            if st.radius == cfg.l_min and st.k_floor >= cfg.stuck_window:
                self.smart_reset()
                return "reset"
            return "shrink"
        return "fail"

    def _activate_trust_region(self):
        """Center the box on the incumbent (best feasible, else best raw)."""
        st = self.state
        feas = [k for k in range(st.t) if np.all(st.cs[k] <= 0.0)]
        pool = feas if feas else range(st.t)
        best = max(pool, key=lambda k: st.os[k])
        st.center = st.xs[best].copy()
        st.radius = self.cfg.l0

    def smart_reset(self) -> None:
        """Re-center at a fresh candidate scored by value, feasibility, novelty."""
        cfg, st = self.cfg, self.state
        if not (st.radius == cfg.l_min and st.k_floor >= cfg.stuck_window):
            raise NotStuck(f"radius={st.radius}, floor count={st.k_floor}")
        n = cfg.reset_candidates
        cand_w = np.stack(
            [
                np.column_stack(
                    [self.rng.dirichlet(np.ones(cfg.reward_dim)) for _ in range(cfg.n_services)]
                )
                for _ in range(n)
            ]
        )
        cand_u = np.stack([lift_of(w) for w in cand_w])
        obj_gp, con_gps = self._fit_models()
        log_acq = self._acq_values(cand_u, obj_gp, con_gps)
        feas = self._feas_values(cand_u, con_gps)
        past = np.stack(st.ws)
        novelty = np.array(
            [np.min(np.linalg.norm(past - w[None], axis=(1, 2))) for w in cand_w]
        )
        score = (
            _minmax(log_acq) * _minmax(feas) * _minmax(novelty) ** cfg.novelty_beta
        )
        if np.all(score == 0.0):
            best = int(np.argmax(log_acq))  # degenerate factors: fall back to raw value
        else:
            best = int(np.argmax(score))
        st.center = cand_u[best].copy()
        st.radius = cfg.l0
        st.k_success = 0
        st.k_fail = 0
        st.k_floor = 0

    # ------------------------------------------------------ model fitting

    def _window(self, seq: list) -> list:
        return seq[-self.cfg.keep_window :]

    def _fit_models(self) -> tuple[GpModel, list[GpModel]]:
        xs = np.stack(self._window(self.state.xs))
        os_ = np.array(self._window(self.state.os))
        cs = np.stack(self._window(self.state.cs))
        obj_gp = gp_fit(xs, os_)
        con_gps = [gp_fit(xs, cs[:, i]) for i in range(self.cfg.n_constraints)]
        return obj_gp, con_gps

    def _acq_values(self, u: np.ndarray, obj_gp: GpModel, con_gps: list[GpModel]) -> np.ndarray:
        if self.state.f_star is None:
            # no incumbent yet: chase feasibility alone
            return self._feas_log(u, con_gps)
        return constrained_log_acquisition(
            u, obj_gp, con_gps, self.state.f_star, kind=self.cfg.acq_kind, ucb_beta=self.cfg.ucb_beta
        )

    def _feas_log(self, u: np.ndarray, con_gps: list[GpModel]) -> np.ndarray:
        from intentctl.bo.acquisition import log_feasibility

        stats = [g.predict(np.atleast_2d(u)) for g in con_gps]
        mus = np.stack([m for m, _ in stats])
        sigmas = np.stack([s for _, s in stats])
        return np.atleast_1d(log_feasibility(mus, sigmas))

    def _feas_values(self, u: np.ndarray, con_gps: list[GpModel]) -> np.ndarray:
        return np.exp(np.maximum(self._feas_log(u, con_gps), -700.0))

    # -------------------------------------------------- inner maximization

    def _propose_in_box(self, center: np.ndarray, radius: float) -> np.ndarray:
        cfg = self.cfg
        lo = np.clip(center - radius, 0.0, 1.0)
        hi = np.clip(center + radius, 0.0, 1.0)
        obj_gp, con_gps = self._fit_models()

        raws = self.rng.uniform(lo, hi, size=(cfg.raw_samples, cfg.dim))
        values = self._acq_values(raws, obj_gp, con_gps)
        order = np.argsort(values)[::-1]
        seeds = raws[order[: cfg.n_restarts]]

        def neg(v):
            return -float(self._acq_values(v[None, :], obj_gp, con_gps)[0])

        best_u = raws[order[0]]
        best_val = values[order[0]]
        for x0 in seeds:
            res = minimize(
                neg,
                x0,
                method="L-BFGS-B",
                bounds=list(zip(lo, hi)),
                options={"maxiter": 30, "maxfun": 90},
            )
            if -res.fun > best_val:
                best_val = -res.fun
                best_u = res.x
        return np.clip(best_u, lo, hi)

    # -------------------------------------------------------------- trace

    def _record(self, u, objective, residuals, event):
        st = self.state
        self.trace.append(
            {
                "t": st.t,
                "u": ";".join(f"{v:.6f}" for v in u),
                "w": ";".join(f"{v:.6f}" for v in lift_of(st.ws[-1])),
                "objective": float(objective),
                **{f"c{i}": float(residuals[i]) for i in range(self.cfg.n_constraints)},
                "f_star": float("nan") if st.f_star is None else st.f_star,
                "radius": st.radius,
                "event": event,
            }
        )

    def save_trace(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.trace[0].keys()))
            writer.writeheader()
            writer.writerows(self.trace)

    # ---------------------------------------------------------- summaries

    @property
    def best_feasible(self) -> tuple[float, np.ndarray] | None:
        st = self.state
        feas = [k for k in range(st.t) if np.all(st.cs[k] <= 0.0)]
        if not feas:
            return None
        best = max(feas, key=lambda k: st.os[k])
        return st.os[best], st.ws[best]

    @property
    def n_violations(self) -> int:
        return sum(bool(np.any(c > 0.0)) for c in self.state.cs)


def _minmax(z: np.ndarray) -> np.ndarray:
    """Min-max map to [0,1]; a spread-free factor collapses to all-zero
    when its common value is the factor's own floor, else all-one."""
    z = np.asarray(z, dtype=np.float64)
    zmin, zmax = z.min(), z.max()
    if zmax - zmin < 1e-15:
        floor_like = zmax <= 0.0 if zmin >= 0.0 else zmax <= LOG_FLOOR / 2
        return np.zeros_like(z) if floor_like else np.ones_like(z)
    return (z - zmin) / (zmax - zmin)
