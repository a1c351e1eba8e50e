"""Deterministic supervisory loop over one monitored constraint.

Monitor: ring buffer of KPI samples with O(1) incremental window stats and
hysteresis alerting.  Advisor: rule table mapping window stats plus an
auxiliary KPI posture to a direction (never a magnitude).  Adaptor: bounded
threshold steps under deadband, gains, per-update cap, lifetime budget,
cooldown, and floor/ceiling clamps, persisted into the template document
and an append-only audit log.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal

from intentctl import otm as otm_mod

_BUDGET_TOL = 1e-12
_REFRESH_PERIOD = 4096  # periodic from-scratch sum refresh bounds float drift


class EmptyWindow(RuntimeError):
    pass


class BadThresholds(ValueError):
    pass


class CooldownActive(RuntimeError):
    pass


class BudgetExhausted(RuntimeError):
    pass


def round_half_up(x: float, decimals: int = 2) -> float:
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def sense_for_operator(operator: str) -> int:
    """+1 for lower-bound constraints (ge/gt), -1 for upper bounds (le/lt)."""
    return +1 if operator in ("ge", "gt") else -1


@dataclass(frozen=True)
class WindowStats:
    violation_ratio: float
    mean: float
    y_min: float
    y_max: float
    shortfall_avg: float
    slack_avg: float
    start: int
    end: int
    window: int


class Monitor:
    """Sliding-window monitor with signed margins m_i = sense * (y_i - b).

    All summaries update in O(1) per push (min/max via monotonic deques,
    amortized); no rescans of the ring on the hot path.
    """

    def __init__(self, window: int, threshold: float, sense: int = +1, alert: bool = False):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if sense not in (+1, -1):
            raise ValueError(f"sense must be +1 or -1, got {sense}")
        self.window = window
        self.threshold = float(threshold)
        self.sense = sense
        self.alert = alert
        self.t = 0  # samples pushed so far
        self._ring: deque[float] = deque(maxlen=window)
        self._sum = 0.0
        self._violations = 0
        self._shortfall = 0.0
        self._slack = 0.0
        self._min_q: deque[tuple[int, float]] = deque()
        self._max_q: deque[tuple[int, float]] = deque()

    def _margin(self, y: float) -> float:
        return self.sense * (y - self.threshold)

    def push(self, y: float) -> None:
        y = float(y)
        if len(self._ring) == self.window:
            old = self._ring[0]
            m_old = self._margin(old)
            self._sum -= old
            if m_old < 0:
                self._violations -= 1
                self._shortfall -= -m_old
            else:
                self._slack -= m_old
        evict_before = self.t - self.window + 1
        self._ring.append(y)
        self.t += 1
        m = self._margin(y)
        self._sum += y
        if m < 0:
            self._violations += 1
            self._shortfall += -m
        else:
            self._slack += m
        while self._min_q and self._min_q[-1][1] >= y:
            self._min_q.pop()
        self._min_q.append((self.t - 1, y))
        while self._max_q and self._max_q[-1][1] <= y:
            self._max_q.pop()
        self._max_q.append((self.t - 1, y))
        while self._min_q[0][0] < evict_before:
            self._min_q.popleft()
        while self._max_q[0][0] < evict_before:
            self._max_q.popleft()
        if self.t % _REFRESH_PERIOD == 0:
            self._refresh()

    def _refresh(self) -> None:
        self._sum = sum(self._ring)
        margins = [self._margin(v) for v in self._ring]
        self._violations = sum(1 for m in margins if m < 0)
        self._shortfall = sum(-m for m in margins if m < 0)
        self._slack = sum(m for m in margins if m >= 0)

    def set_threshold(self, b: float) -> None:
        """Change b and rebuild margin summaries (rare, actuation only)."""
        self.threshold = float(b)
        self._refresh()

    def stats(self) -> WindowStats:
        n = len(self._ring)
        if n == 0:
            raise EmptyWindow("no samples in window")
        return WindowStats(
            violation_ratio=self._violations / n,
            mean=self._sum / n,
            y_min=self._min_q[0][1],
            y_max=self._max_q[0][1],
            shortfall_avg=max(self._shortfall, 0.0) / n,
            slack_avg=max(self._slack, 0.0) / n,
            start=self.t - n,
            end=self.t - 1,
            window=n,
        )

    def alert_transition(self, rho_on: float, rho_off: float) -> str | None:
        """Hysteresis step: 'ALERT_START' | 'ALERT_END' | None; flag updated."""
        if rho_on <= rho_off:
            raise BadThresholds(f"rho_on {rho_on} must exceed rho_off {rho_off}")
        vr = self.stats().violation_ratio
        if not self.alert and vr > rho_on:
            self.alert = True
            return "ALERT_START"
        if self.alert and vr < rho_off:
            self.alert = False
            return "ALERT_END"
        return None


@dataclass(frozen=True)
class AuxPosture:
    """Auxiliary KPI summary; aggressive iff running above its target hint."""

    name: str
    avg: float
    target_hint: float

    @property
    def label(self) -> str:
        return "aggressive" if self.avg > self.target_hint else "conservative"


@dataclass(frozen=True)
class RulePolicy:
    """Deterministic advisory rule table.

    Relax when the constraint is persistently violated (VR above vr_high)
    and the auxiliary posture is aggressive; tighten back when the window
    shows persistent slack (VR at or below vr_low, slack above slack_min)
    under a conservative posture; otherwise hold.
    """

    vr_high: float = 0.55
    vr_low: float = 0.0
    slack_min: float = 0.0
    relax_phrase: str = "relax to reduce MCS pressure and HARQ overhead."
    tighten_phrase: str = "tighten to reclaim headroom."


@dataclass(frozen=True)
class Advisory:
    action: str  # "increase" | "decrease" | "no_change"
    justification: str


def _numeric_cite(stats: WindowStats, aux: AuxPosture, b: float) -> str:
    rel = "<" if stats.mean < b else ">="
    return (
        f"VR={round_half_up(stats.violation_ratio):.2f}; "
        f"avg={stats.mean:.2f}{rel}b={b:.2f}; min={stats.y_min:.2f}; "
        f"{aux.name} posture {aux.label}"
    )


def advise(stats: WindowStats, aux: AuxPosture, policy: RulePolicy, sense: int, threshold: float) -> Advisory:
    """Pure rule-based direction choice with a numeric justification."""
    violated = stats.violation_ratio > policy.vr_high
    slackish = stats.violation_ratio <= policy.vr_low and stats.slack_avg > policy.slack_min
    cite = _numeric_cite(stats, aux, threshold)
    if violated and aux.label == "aggressive":
        action = "decrease" if sense > 0 else "increase"
        return Advisory(action, f"{cite}; {policy.relax_phrase}")
    if slackish and aux.label == "conservative":
        action = "increase" if sense > 0 else "decrease"
        return Advisory(action, f"{cite}; {policy.tighten_phrase}")
    return Advisory("no_change", "")


@dataclass
class Guardrails:
    """Actuation limits; b_min/b_max clamp the threshold itself."""

    deadband: float = 0.05
    gain_up: float = 1.0
    gain_down: float = 1.0
    step: float = 0.08
    s_max: float | None = None  # per-update cap; defaults to step
    budget: float = 0.40
    b_min: float = 5.00
    b_max: float = 9.00
    cooldown: int = 2
    budget_left: float = field(default=None)  # type: ignore[assignment]
    cooldown_left: int = 0

    def __post_init__(self):
        if self.s_max is None:
            self.s_max = self.step
        if self.budget_left is None:
            self.budget_left = self.budget

    def reset_episode(self) -> None:
        self.budget_left = self.budget
        self.cooldown_left = 0


def compute_step(advisory: Advisory, stats: WindowStats, guardrails: Guardrails, current_b: float) -> float:
    """Raw proportional magnitude outside the deadband; 0 to hold."""
    if advisory.action == "decrease":
        return guardrails.gain_down * max(0.0, (current_b - stats.mean) - guardrails.deadband)
    if advisory.action == "increase":
        return guardrails.gain_up * max(0.0, (stats.mean - current_b) - guardrails.deadband)
    return 0.0


def apply_guardrails(
    delta_b: float, guardrails: Guardrails, current_b: float, direction: str
) -> tuple[float, Guardrails, float]:
    """Clip a requested magnitude and actuate.

    The raw magnitude is floored at `step` (so any out-of-deadband request
    actuates at least one step) then capped by s_max, the remaining budget,
    and the distance to the relevant bound.  Returns the signed applied
    delta, the updated guardrails, and the new threshold.
    """
    if direction not in ("increase", "decrease"):
        raise ValueError(f"direction must be increase/decrease, got {direction!r}")
    if guardrails.cooldown_left > 0:
        raise CooldownActive(f"{guardrails.cooldown_left} steps remaining")
    if guardrails.budget_left <= _BUDGET_TOL:
        raise BudgetExhausted(f"budget left {guardrails.budget_left}")
    room = current_b - guardrails.b_min if direction == "decrease" else guardrails.b_max - current_b
    magnitude = min(max(delta_b, guardrails.step), guardrails.s_max, guardrails.budget_left, room)
    magnitude = max(magnitude, 0.0)
    signed = -magnitude if direction == "decrease" else magnitude
    new_b = min(max(current_b + signed, guardrails.b_min), guardrails.b_max)
    updated = replace(
        guardrails,
        budget_left=guardrails.budget_left - magnitude,
        cooldown_left=guardrails.cooldown if magnitude > 0 else guardrails.cooldown_left,
    )
    return signed, updated, new_b


# --------------------------------------------------------------------------
# loop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StatsComputed:
    stats: WindowStats


@dataclass(frozen=True)
class AlertStarted:
    episode: str


@dataclass(frozen=True)
class AlertEnded:
    episode: str


@dataclass(frozen=True)
class AdvisoryIssued:
    payload: dict
    advisory: Advisory


@dataclass(frozen=True)
class ThresholdUpdated:
    audit: dict
    otm_snapshot: "otm_mod.Otm | None"


Effect = StatsComputed | AlertStarted | AlertEnded | AdvisoryIssued | ThresholdUpdated


def _next_episode_id(current: str | None) -> str:
    if current:
        head, _, tail = current.rpartition("_")
        if head and tail.isdigit():
            return f"{head}_{int(tail) + 1:0{len(tail)}d}"
    base = int(current.split("_")[-1]) + 1 if current and current.split("_")[-1].isdigit() else 1
    return f"alert_{base:03d}"


class InterpreterLoop:
    """One monitored constraint driven by a serialized telemetry stream.

    Each step() consumes one KPI sample (plus an auxiliary posture sample),
    runs monitor -> advisor -> adaptor, persists threshold changes into the
    held template document, and returns the effects of the step.  Audit
    records go to `audit_log` (list of dicts) and optionally to a
    line-delimited JSON file.
    """

    def __init__(
        self,
        template: "otm_mod.Otm",
        constraint_id: str,
        guardrails: Guardrails | None = None,
        policy: RulePolicy | None = None,
        window: int = 12,
        rho_on: float = 0.55,
        rho_off: float = 0.45,
        metric_name: str | None = None,
        aux_name: str = "bler",
        aux_target_hint: float = 0.10,
        audit_path: str | None = None,
    ):
        self.otm = template
        self.constraint_id = constraint_id
        spec = template.constraint(constraint_id)
        self.sense = sense_for_operator(spec.operator)
        self.guardrails = guardrails if guardrails is not None else Guardrails()
        self.policy = policy if policy is not None else RulePolicy()
        self.rho_on = rho_on
        self.rho_off = rho_off
        self.metric_name = metric_name if metric_name is not None else spec.kpi
        self.aux_name = aux_name
        self.aux_target_hint = aux_target_hint
        self.monitor = Monitor(window, spec.threshold, self.sense)
        self._aux_ring: deque[float] = deque(maxlen=window)
        self.episode: str | None = None
        self._episode_seed = template.metadata.episode.id if template.metadata.episode else None
        self.audit_log: list[dict] = []
        self.audit_path = audit_path

    @property
    def threshold(self) -> float:
        return self.monitor.threshold

    def _posture(self) -> AuxPosture:
        avg = sum(self._aux_ring) / len(self._aux_ring) if self._aux_ring else 0.0
        return AuxPosture(self.aux_name, avg, self.aux_target_hint)

    def build_payload(self, stats: WindowStats, aux: AuxPosture) -> dict:
        spec = self.otm.constraint(self.constraint_id)
        return {
            "window": {
                "start": stats.start,
                "end": stats.end,
                "W": stats.window,
                "violation_ratio": round_half_up(stats.violation_ratio),
            },
            "constraint_metric": {
                "name": self.metric_name,
                "avg": round_half_up(stats.mean),
                "min": round_half_up(stats.y_min),
                "monitor_threshold": self.threshold,
                "unit": spec.unit,
            },
            "radio_kpis": {aux.name: {"avg": round_half_up(aux.avg), "target_hint": aux.target_hint}},
        }

    def _audit(self, record: dict) -> None:
        self.audit_log.append(record)
        if self.audit_path:
            with open(self.audit_path, "a") as fh:
                fh.write(json.dumps(record) + "\n")

    def step(self, y_t: float, aux_value: float = 0.0, timestamp: str | None = None) -> list[Effect]:
        effects: list[Effect] = []
        self.monitor.push(y_t)
        self._aux_ring.append(float(aux_value))
        if self.guardrails.cooldown_left > 0:
            self.guardrails.cooldown_left -= 1
        stats = self.monitor.stats()
        effects.append(StatsComputed(stats))

        if not self.monitor.alert and stats.violation_ratio > self.rho_on:
            self.monitor.alert = True
            self.episode = _next_episode_id(self._episode_seed)
            self._episode_seed = self.episode
            self.guardrails.reset_episode()
            effects.append(AlertStarted(self.episode))

        if self.monitor.alert:
            aux = self._posture()
            payload = self.build_payload(stats, aux)
            advisory = advise(stats, aux, self.policy, self.sense, self.threshold)
            effects.append(AdvisoryIssued(payload, advisory))
            if (
                advisory.action != "no_change"
                and self.guardrails.cooldown_left == 0
                and self.guardrails.budget_left > _BUDGET_TOL
            ):
                raw = compute_step(advisory, stats, self.guardrails, self.threshold)
                if raw > 0.0:
                    direction = advisory.action
                    signed, self.guardrails, new_b = apply_guardrails(
                        raw, self.guardrails, self.threshold, direction
                    )
                    if signed != 0.0:
                        spec = self.otm.constraint(self.constraint_id)
                        self.otm = otm_mod.apply_threshold_update(
                            self.otm,
                            self.constraint_id,
                            delta=signed,
                            rationale=advisory.justification,
                            episode=self.episode,
                            timestamp=timestamp,
                        )
                        self.monitor.set_threshold(new_b)
                        audit = {
                            "kpi": self.metric_name,
                            "aggregation": spec.aggregation,
                            "old_threshold": spec.threshold,
                            "new_threshold": new_b,
                            "delta": signed,
                            "episode": self.episode,
                            "rationale": advisory.justification,
                        }
                        self._audit(audit)
                        effects.append(ThresholdUpdated(audit, self.otm))
            if stats.violation_ratio < self.rho_off:
                self.monitor.alert = False
                effects.append(AlertEnded(self.episode))
        return effects
