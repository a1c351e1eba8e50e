"""Versioned optimization-template documents.

An Otm is a JSON contract with four blocks: objective, constraints,
metadata, version.  Parsing accepts both field spellings seen in the wild
(`origin`/`adapted_by` and `created_by`/`modified_by`) plus flat or nested
metadata; serialization always emits one canonical shape, documented below.

Canonical key order: version, objective, constraints, metadata.
  objective:  service, kpi, scope?, aggregation, unit, maximize
  constraint: id, service?, kpi, scope, aggregation, unit, operator,
              threshold, modified?, created_by?, modified_by?
  metadata:   otm_id?, created_by?, timescale, timestamp?, episode?,
              adaptation_log
  log entry:  id, old_threshold, new_threshold, delta, rationale,
              episode?, timestamp?
Optional keys are omitted when unset; `modified` is omitted when False.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

SERVICES = {"mbb", "urllc", "mmtc", "gaming", "streaming", "web", "voice", "slice"}
HIGHER_IS_BETTER = {"throughput", "reliability", "spectral_efficiency", "tpt_min_mbps"}
LOWER_IS_BETTER = {"latency", "latency_ms", "bler", "jitter"}
KPIS = HIGHER_IS_BETTER | LOWER_IS_BETTER
SCOPES = {
    "per_user",
    "per_cell",
    "per_slice",
    "per_user_group",
    "per_cell_group",
    "per_cell_window",
    "per_user_window",
}
AGGREGATIONS = {"mean", "min", "max", "p95", "sum"}
UNITS = {"", "Mbps", "Gbps", "Kbps", "bps", "ms", "s", "%"}
OPERATORS = {"lt", "le", "ge", "gt"}
LOWER_BOUND_OPS = {"ge", "gt"}


class OtmError(Exception):
    pass


class OtmSyntaxError(OtmError):
    """Document is not well-formed JSON."""


class SchemaError(OtmError):
    """Well-formed JSON that does not fit the contract (fail-closed)."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnknownConstraintError(OtmError):
    pass


class TranslationError(OtmError):
    pass


class OutOfBoundsError(OtmError):
    pass


@dataclass(frozen=True)
class Objective:
    service: str
    kpi: str
    aggregation: str
    unit: str
    maximize: bool
    scope: str | None = None


@dataclass(frozen=True)
class ConstraintSpec:
    id: str
    kpi: str
    scope: str
    aggregation: str
    unit: str
    operator: str
    threshold: float
    service: str | None = None
    modified: bool = False
    created_by: str | None = None
    modified_by: str | None = None


@dataclass(frozen=True)
class AdaptationRecord:
    constraint_id: str
    old_threshold: float
    new_threshold: float
    delta: float
    rationale: str
    episode: str | None = None
    timestamp: str | None = None


@dataclass(frozen=True)
class EpisodeInfo:
    id: str
    episode_type: str | None = None
    modified_by: str | None = None
    timestamp: str | None = None

    @property
    def compact(self) -> bool:
        return self.episode_type is None and self.modified_by is None and self.timestamp is None


@dataclass(frozen=True)
class OtmMetadata:
    timescale: str
    timestamp: str | None = None
    episode: EpisodeInfo | None = None
    otm_id: str | None = None
    created_by: str | None = None
    adaptation_log: tuple[AdaptationRecord, ...] = ()


@dataclass(frozen=True)
class Otm:
    objective: Objective
    constraints: tuple[ConstraintSpec, ...]
    metadata: OtmMetadata
    version: str = "1.0"

    def constraint(self, constraint_id: str) -> ConstraintSpec:
        for c in self.constraints:
            if c.id == constraint_id:
                return c
        raise UnknownConstraintError(f"no constraint with id {constraint_id!r}")


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return obj[key]


def _enum(value, allowed: set, path: str) -> str:
    if not isinstance(value, str) or value not in allowed:
        raise SchemaError(path, f"unknown value {value!r} (allowed: {sorted(allowed)})")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    return float(value)


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {value!r}")
    return value


def _opt_string(obj: dict, key: str, path: str) -> str | None:
    if key not in obj or obj[key] is None:
        return None
    return _string(obj[key], f"{path}.{key}")


def _parse_objective(obj, path: str = "objective") -> Objective:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    scope = obj.get("scope")
    return Objective(
        service=_enum(_require(obj, "service", path), SERVICES, f"{path}.service"),
        kpi=_enum(_require(obj, "kpi", path), KPIS, f"{path}.kpi"),
        scope=None if scope is None else _enum(scope, SCOPES, f"{path}.scope"),
        aggregation=_enum(_require(obj, "aggregation", path), AGGREGATIONS, f"{path}.aggregation"),
        unit=_enum(_require(obj, "unit", path), UNITS, f"{path}.unit"),
        maximize=_bool(_require(obj, "maximize", path), f"{path}.maximize"),
    )


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected a boolean, got {value!r}")
    return value


def _parse_constraint(obj, idx: int) -> ConstraintSpec:
    path = f"constraints[{idx}]"
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    service = obj.get("service")
    created = obj.get("created_by", obj.get("origin"))
    modified_by = obj.get("modified_by", obj.get("adapted_by"))
    modified = obj.get("modified", False)
    return ConstraintSpec(
        id=_string(_require(obj, "id", path), f"{path}.id"),
        service=None if service is None else _enum(service, SERVICES, f"{path}.service"),
        kpi=_enum(_require(obj, "kpi", path), KPIS, f"{path}.kpi"),
        scope=_enum(_require(obj, "scope", path), SCOPES, f"{path}.scope"),
        aggregation=_enum(_require(obj, "aggregation", path), AGGREGATIONS, f"{path}.aggregation"),
        unit=_enum(_require(obj, "unit", path), UNITS, f"{path}.unit"),
        operator=_enum(_require(obj, "operator", path), OPERATORS, f"{path}.operator"),
        threshold=_number(_require(obj, "threshold", path), f"{path}.threshold"),
        modified=_bool(modified, f"{path}.modified"),
        created_by=None if created is None else _string(created, f"{path}.created_by"),
        modified_by=None if modified_by is None else _string(modified_by, f"{path}.modified_by"),
    )


def _parse_record(obj, idx: int) -> AdaptationRecord:
    path = f"metadata.adaptation_log[{idx}]"
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    cid = obj.get("constraint_id", obj.get("id"))
    if cid is None:
        raise SchemaError(f"{path}.id", "missing required field")
    return AdaptationRecord(
        constraint_id=_string(cid, f"{path}.id"),
        old_threshold=_number(_require(obj, "old_threshold", path), f"{path}.old_threshold"),
        new_threshold=_number(_require(obj, "new_threshold", path), f"{path}.new_threshold"),
        delta=_number(_require(obj, "delta", path), f"{path}.delta"),
        rationale=_string(_require(obj, "rationale", path), f"{path}.rationale"),
        episode=_opt_string(obj, "episode", path),
        timestamp=_opt_string(obj, "timestamp", path),
    )


def _parse_episode(value, path: str) -> EpisodeInfo:
    if isinstance(value, str):
        return EpisodeInfo(id=value)
    if isinstance(value, dict):
        return EpisodeInfo(
            id=_string(_require(value, "id", path), f"{path}.id"),
            episode_type=_opt_string(value, "episode_type", path),
            modified_by=_opt_string(value, "modified_by", path),
            timestamp=_opt_string(value, "timestamp", path),
        )
    raise SchemaError(path, f"expected a string or object, got {value!r}")


def _parse_metadata(obj) -> OtmMetadata:
    path = "metadata"
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    otm_block = obj.get("otm")
    if isinstance(otm_block, dict):
        otm_id = _opt_string(otm_block, "id", f"{path}.otm")
        created_by = _opt_string(otm_block, "created_by", f"{path}.otm")
        timestamp = _opt_string(otm_block, "timestamp", f"{path}.otm")
        timescale = _string(_require(otm_block, "timescale", f"{path}.otm"), f"{path}.otm.timescale")
    else:
        otm_id = _opt_string(obj, "otm_id", path)
        created_by = _opt_string(obj, "created_by", path)
        timestamp = _opt_string(obj, "timestamp", path)
        timescale = _string(_require(obj, "timescale", path), f"{path}.timescale")
    episode = obj.get("episode")
    log = obj.get("adaptation_log", [])
    if not isinstance(log, list):
        raise SchemaError(f"{path}.adaptation_log", "expected a list")
    return OtmMetadata(
        timescale=timescale,
        timestamp=timestamp,
        episode=None if episode is None else _parse_episode(episode, f"{path}.episode"),
        otm_id=otm_id,
        created_by=created_by,
        adaptation_log=tuple(_parse_record(r, i) for i, r in enumerate(log)),
    )


def parse_otm(document: str | dict) -> Otm:
    """Parse a JSON document (text or mapping) into an Otm value.

    Raises OtmSyntaxError for malformed text and SchemaError for anything
    that does not fit the contract; unknown enum values fail closed.
    A constraint referenced by an adaptation-log entry parses with
    modified=True even when the flag is absent from the document.
    """
    if isinstance(document, str):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise OtmSyntaxError(str(exc)) from exc
    else:
        raw = document
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be an object")
    version = raw.get("version", "1.0")
    objective = _parse_objective(_require(raw, "objective", "$"))
    constraints_raw = _require(raw, "constraints", "$")
    if not isinstance(constraints_raw, list):
        raise SchemaError("constraints", "expected a list")
    constraints = tuple(_parse_constraint(c, i) for i, c in enumerate(constraints_raw))
    ids = [c.id for c in constraints]
    if len(set(ids)) != len(ids):
        raise SchemaError("constraints", f"duplicate constraint ids in {ids}")
    metadata = _parse_metadata(_require(raw, "metadata", "$"))
    adapted_ids = {rec.constraint_id for rec in metadata.adaptation_log}
    constraints = tuple(
        replace(c, modified=True) if c.id in adapted_ids and not c.modified else c for c in constraints
    )
    return Otm(
        objective=objective,
        constraints=constraints,
        metadata=metadata,
        version=_string(version, "version"),
    )


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _objective_dict(o: Objective) -> dict:
    out = {"service": o.service, "kpi": o.kpi}
    if o.scope is not None:
        out["scope"] = o.scope
    out.update(aggregation=o.aggregation, unit=o.unit, maximize=o.maximize)
    return out


def _constraint_dict(c: ConstraintSpec) -> dict:
    out: dict = {"id": c.id}
    if c.service is not None:
        out["service"] = c.service
    out.update(
        kpi=c.kpi,
        scope=c.scope,
        aggregation=c.aggregation,
        unit=c.unit,
        operator=c.operator,
        threshold=c.threshold,
    )
    if c.modified:
        out["modified"] = True
    if c.created_by is not None:
        out["created_by"] = c.created_by
    if c.modified_by is not None:
        out["modified_by"] = c.modified_by
    return out


def _record_dict(r: AdaptationRecord) -> dict:
    out = {
        "id": r.constraint_id,
        "old_threshold": r.old_threshold,
        "new_threshold": r.new_threshold,
        "delta": r.delta,
        "rationale": r.rationale,
    }
    if r.episode is not None:
        out["episode"] = r.episode
    if r.timestamp is not None:
        out["timestamp"] = r.timestamp
    return out


def _metadata_dict(m: OtmMetadata) -> dict:
    out: dict = {}
    if m.otm_id is not None:
        out["otm_id"] = m.otm_id
    if m.created_by is not None:
        out["created_by"] = m.created_by
    out["timescale"] = m.timescale
    if m.timestamp is not None:
        out["timestamp"] = m.timestamp
    if m.episode is not None:
        if m.episode.compact:
            out["episode"] = m.episode.id
        else:
            ep: dict = {"id": m.episode.id}
            if m.episode.episode_type is not None:
                ep["episode_type"] = m.episode.episode_type
            if m.episode.modified_by is not None:
                ep["modified_by"] = m.episode.modified_by
            if m.episode.timestamp is not None:
                ep["timestamp"] = m.episode.timestamp
            out["episode"] = ep
    out["adaptation_log"] = [_record_dict(r) for r in m.adaptation_log]
    return out


def otm_to_dict(otm: Otm) -> dict:
    return {
        "version": otm.version,
        "objective": _objective_dict(otm.objective),
        "constraints": [_constraint_dict(c) for c in otm.constraints],
        "metadata": _metadata_dict(otm.metadata),
    }


def serialize_otm(otm: Otm) -> str:
    """Canonical JSON text (2-space indent, fixed key order, trailing newline)."""
    return json.dumps(otm_to_dict(otm), indent=2) + "\n"


def _strip_timestamps(node):
    if isinstance(node, dict):
        return {k: _strip_timestamps(v) for k, v in node.items() if k != "timestamp"}
    if isinstance(node, list):
        return [_strip_timestamps(v) for v in node]
    return node


def semantically_equal(a: Otm, b: Otm, ignore_timestamps: bool = False) -> bool:
    """Field equality on canonical forms, optionally blind to timestamps."""
    da, db = otm_to_dict(a), otm_to_dict(b)
    if ignore_timestamps:
        da, db = _strip_timestamps(da), _strip_timestamps(db)
    return da == db


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    rule: str  # "units" | "directionality" | "bounds"
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def is_valid(self) -> bool:
        return not self.findings


def _check_units(kpi: str, unit, aggregation, path: str, findings: list[Finding]) -> None:
    if unit is None or unit not in UNITS:
        findings.append(Finding("units", f"{path}.unit", f"kpi {kpi!r} must declare a known unit"))
    if aggregation is None or aggregation not in AGGREGATIONS:
        findings.append(
            Finding("units", f"{path}.aggregation", f"kpi {kpi!r} must declare a known aggregation")
        )


def validate_otm(otm: Otm, bounds: dict[str, tuple[float, float]] | None = None) -> ValidationReport:
    """Semantic validation; returns findings, never raises.

    Rules: (i) every KPI declares unit and aggregation; (ii) operator (or
    optimization sense) is consistent with KPI directionality -- lower bounds
    on lower-is-better KPIs and upper bounds on higher-is-better KPIs fail
    closed; (iii) thresholds lie within domain bounds, keyed by constraint
    id first, then KPI name; constraints without an entry are skipped.
    """
    findings: list[Finding] = []
    obj = otm.objective
    _check_units(obj.kpi, obj.unit, obj.aggregation, "objective", findings)
    if obj.kpi in HIGHER_IS_BETTER and not obj.maximize or obj.kpi in LOWER_IS_BETTER and obj.maximize:
        findings.append(
            Finding(
                "directionality",
                "objective.maximize",
                f"optimization sense inconsistent with kpi {obj.kpi!r}",
            )
        )
    for i, c in enumerate(otm.constraints):
        path = f"constraints[{i}]"
        _check_units(c.kpi, c.unit, c.aggregation, path, findings)
        lower_bound = c.operator in LOWER_BOUND_OPS
        if lower_bound and c.kpi in LOWER_IS_BETTER:
            findings.append(
                Finding("directionality", f"{path}.operator", f"lower bound on lower-is-better kpi {c.kpi!r}")
            )
        if not lower_bound and c.kpi in HIGHER_IS_BETTER:
            findings.append(
                Finding("directionality", f"{path}.operator", f"upper bound on higher-is-better kpi {c.kpi!r}")
            )
        if bounds:
            entry = bounds.get(c.id, bounds.get(c.kpi))
            if entry is not None:
                lo, hi = entry
                if not (lo <= c.threshold <= hi):
                    findings.append(
                        Finding(
                            "bounds",
                            f"{path}.threshold",
                            f"threshold {c.threshold} outside [{lo}, {hi}]",
                        )
                    )
    return ValidationReport(tuple(findings))


# --------------------------------------------------------------------------
# threshold updates
# --------------------------------------------------------------------------


def apply_threshold_update(
    otm: Otm,
    constraint_id: str,
    *,
    delta: float | None = None,
    new_threshold: float | None = None,
    rationale: str,
    episode: str | None = None,
    timestamp: str | None = None,
    modified_by: str | None = None,
    bounds: tuple[float, float] | None = None,
) -> Otm:
    """Pure update: returns a new Otm with one threshold changed and logged.

    Exactly one of delta / new_threshold must be given; the other is derived
    so that new_threshold == old_threshold + delta holds exactly in floats.
    episode/timestamp update the metadata snapshot; the log entry itself
    stays positional (matching the document layout), with the audit trail
    carrying episode context.  When bounds are supplied, a target outside
    [lo, hi] raises OutOfBoundsError (the schema itself carries no bounds,
    so enforcement is opt-in).
    """
    if (delta is None) == (new_threshold is None):
        raise ValueError("provide exactly one of delta or new_threshold")
    target = otm.constraint(constraint_id)
    old = target.threshold
    if delta is None:
        delta = new_threshold - old
    else:
        new_threshold = old + delta
    if bounds is not None and not (bounds[0] <= new_threshold <= bounds[1]):
        raise OutOfBoundsError(f"threshold {new_threshold} outside [{bounds[0]}, {bounds[1]}]")
    record = AdaptationRecord(
        constraint_id=constraint_id,
        old_threshold=old,
        new_threshold=new_threshold,
        delta=delta,
        rationale=rationale,
    )
    new_constraints = tuple(
        replace(
            c,
            threshold=new_threshold,
            modified=True,
            modified_by=modified_by if modified_by is not None else c.modified_by,
        )
        if c.id == constraint_id
        else c
        for c in otm.constraints
    )
    meta = otm.metadata
    new_meta = replace(
        meta,
        timestamp=timestamp if timestamp is not None else meta.timestamp,
        episode=EpisodeInfo(id=episode) if episode is not None else meta.episode,
        adaptation_log=meta.adaptation_log + (record,),
    )
    return replace(otm, constraints=new_constraints, metadata=new_meta)


# --------------------------------------------------------------------------
# intent translation
# --------------------------------------------------------------------------

_SERVICE_HINTS = [
    ("streaming", "streaming"),
    ("ultra-reliable", "urllc"),
    ("urllc", "urllc"),
    ("gaming", "gaming"),
    ("voice", "voice"),
    ("web", "web"),
    ("mobile broadband", "mbb"),
    ("mbb", "mbb"),
]


def _service_near(text: str, default: str = "mbb") -> str:
    for needle, service in _SERVICE_HINTS:
        if needle in text:
            return service
    return default


@dataclass(frozen=True)
class IntentRule:
    """One deterministic pattern -> OTM fragment mapping."""

    name: str
    pattern: re.Pattern
    kind: str  # "objective" | "constraint"
    build: "callable"


def _objective_throughput(match: re.Match, text: str) -> Objective:
    return Objective(
        service=_service_near(text[: match.end() + 40]),
        kpi="throughput",
        scope="per_cell",
        aggregation="mean",
        unit="Mbps",
        maximize=True,
    )


def _constraint_reliability(match: re.Match, text: str, cid: str) -> ConstraintSpec:
    pct = float(match.group(1))
    threshold = pct / 100.0 if pct > 1.0 else pct
    return ConstraintSpec(
        id=cid,
        service=_service_near(text[match.start() : match.end() + 60], default="urllc"),
        kpi="reliability",
        scope="per_user",
        aggregation="mean",
        unit="",
        operator="ge",
        threshold=threshold,
    )


def _constraint_min_rate(match: re.Match, text: str, cid: str) -> ConstraintSpec:
    return ConstraintSpec(
        id=cid,
        service=_service_near(text[max(0, match.start() - 60) : match.end()]),
        kpi="throughput",
        scope="per_user",
        aggregation="min",
        unit="Mbps",
        operator="ge",
        threshold=float(match.group(1)),
    )


def _constraint_bler(match: re.Match, text: str, cid: str) -> ConstraintSpec:
    return ConstraintSpec(
        id=cid,
        service=_service_near(text),
        kpi="bler",
        scope="per_user",
        aggregation="mean",
        unit="%",
        operator="le",
        threshold=float(match.group(1)),
    )


def _constraint_latency(match: re.Match, text: str, cid: str) -> ConstraintSpec:
    return ConstraintSpec(
        id=cid,
        service=_service_near(text),
        kpi="latency",
        scope="per_user",
        aggregation="p95",
        unit="ms",
        operator="le",
        threshold=float(match.group(1)),
    )


def default_catalog() -> list[IntentRule]:
    num = r"(\d+(?:\.\d+)?)"
    return [
        IntentRule(
            "maximize_throughput",
            re.compile(r"maximi[sz]e\b[^.;]*?\bthroughput"),
            "objective",
            _objective_throughput,
        ),
        IntentRule(
            "reliability_floor",
            re.compile(num + r"\s*%?\s*reliability"),
            "constraint",
            _constraint_reliability,
        ),
        IntentRule(
            "min_rate",
            re.compile(
                r"minimum (?:average )?(?:data |user )?rate (?:of|above|at least)\s*" + num + r"\s*mbps"
            ),
            "constraint",
            _constraint_min_rate,
        ),
        IntentRule(
            "bler_ceiling",
            re.compile(r"bler\s+(?:smaller|less|lower) than\s*" + num + r"\s*%"),
            "constraint",
            _constraint_bler,
        ),
        IntentRule(
            "latency_ceiling",
            re.compile(r"latency\b[^.;]*?" + num + r"\s*ms\b"),
            "constraint",
            _constraint_latency,
        ),
    ]


def translate_intent(text: str, catalog: list[IntentRule] | None = None, timescale: str = "10s_window") -> Otm:
    """Deterministic keyword translation of a service intent into an Otm.

    Raises TranslationError when no objective pattern matches.
    """
    rules = catalog if catalog is not None else default_catalog()
    lowered = text.lower()
    objective: Objective | None = None
    constraints: list[ConstraintSpec] = []
    for rule in rules:
        if rule.kind == "objective":
            m = rule.pattern.search(lowered)
            if m and objective is None:
                objective = rule.build(m, lowered)
        else:
            for m in rule.pattern.finditer(lowered):
                cid = f"C{len(constraints) + 1}"
                constraints.append(rule.build(m, lowered, cid))
    if objective is None:
        raise TranslationError(f"no objective pattern matched: {text!r}")
    return Otm(
        objective=objective,
        constraints=tuple(constraints),
        metadata=OtmMetadata(timescale=timescale, created_by="template_catalog"),
    )
