"""Coordination-node policy semantics, written as pure step functions.

A coordination node sits between risky publishers and their consumer. Each
step takes the node's mutable state, its active policy, the batch of inbound
messages that arrived at one instant, and the current time; it returns what
gets re-published and what gets dropped. Nothing here knows about transport,
so the same functions run under the simulator, the benchmark harness, and
the tests' reference interpreter.

Payloads are plain dicts. Velocity-like flows carry {"kind": "scalar",
"value": x}; predicates address nested fields with dotted paths.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, Iterable, List, Optional, Sequence, Tuple

Payload = Dict[str, Any]
Inbound = Sequence[Tuple[str, Payload]]

# Defaults for the time-window knobs; all overridable per policy config.
DEFAULT_QUEUE_TIMEOUT = 0.2
DEFAULT_ACTIVITY_WINDOW = 0.5
DEFAULT_FRESHNESS_WINDOW = 1.0
DEFAULT_FPS_WINDOW = 1.0
DEFAULT_FPS_PERIOD = 1.0

# Raw event-tap arrivals are buffered this long so bits can be re-judged
# under whatever policy is in force, including one configured after the
# arrival. Freshness windows may not exceed it.
EVENT_HORIZON = 10.0


class PolicyError(Exception):
    pass


class InvalidPolicy(PolicyError):
    """Policy name not available on this coordination node type."""


class InvalidParams(PolicyError):
    """Policy parameters missing, malformed, or referencing unknown flows."""


class RoleViolation(PolicyError):
    """Caller's role may not configure this policy."""


class CnType(str, Enum):
    GRCN = "grcn"
    RSRCN = "rsrcn"
    MSRCN = "msrcn"
    FPS_MONITOR = "fps_monitor"


class FlowRole(str, Enum):
    GENERIC = "generic"
    VFLOW = "vflow"
    IFLOW = "iflow"
    EFLOW = "eflow"
    AFLOW = "aflow"
    FPS = "fps"


class Role(str, Enum):
    DEVELOPER = "developer"
    END_USER = "end_user"


class PolicyName(str, Enum):
    BLOCK = "block"
    FIFO_QUEUE = "fifo_queue"
    PRIORITY_QUEUE = "priority_queue"
    PREEMPTION = "preemption"
    SAFE = "safe"
    CONSTRAIN = "constrain"
    MSR_BLOCK = "msr_block"


VALID_POLICIES: Dict[CnType, Tuple[PolicyName, ...]] = {
    CnType.GRCN: (
        PolicyName.BLOCK,
        PolicyName.FIFO_QUEUE,
        PolicyName.PRIORITY_QUEUE,
        PolicyName.PREEMPTION,
    ),
    CnType.RSRCN: (PolicyName.BLOCK, PolicyName.SAFE, PolicyName.CONSTRAIN),
    CnType.MSRCN: (PolicyName.MSR_BLOCK,),
    CnType.FPS_MONITOR: (),
}

# Who may select each policy. Developers may set anything valid; end users
# only what is explicitly theirs.
END_USER_POLICIES: Dict[CnType, Tuple[PolicyName, ...]] = {
    CnType.GRCN: (),
    CnType.RSRCN: (PolicyName.CONSTRAIN,),
    CnType.MSRCN: (PolicyName.MSR_BLOCK,),
    CnType.FPS_MONITOR: (),
}

# Queueing policies share in-flight state; switching within the class keeps it.
_POLICY_CLASS = {
    PolicyName.BLOCK: "gate",
    PolicyName.FIFO_QUEUE: "queue",
    PolicyName.PRIORITY_QUEUE: "queue",
    PolicyName.PREEMPTION: "preempt",
    PolicyName.SAFE: "velocity",
    PolicyName.CONSTRAIN: "velocity",
    PolicyName.MSR_BLOCK: "rules",
}


def payload_number(payload: Payload, path: str) -> Optional[float]:
    """Resolve a dotted path to a numeric leaf; None when absent or non-numeric."""
    current: Any = payload
    for part in path.split("."):
        if not isinstance(current, dict) or part not in current:
            return None
        current = current[part]
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        return None
    return float(current)


def scalar(value: float) -> Payload:
    return {"kind": "scalar", "value": float(value)}


@dataclass(frozen=True)
class TriggerSpec:
    """Optional content predicate behind an event bit.

    Either a numeric comparison on one field, or point-in-rectangle on a
    position-like field (field resolving to {"x": ..., "y": ...}). With
    neither, any message qualifies.
    """

    field: Optional[str] = None
    op: Optional[str] = None
    value: Optional[float] = None
    region: Optional[Dict[str, float]] = None

    _OPS = {
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "==": lambda a, b: a == b,
    }

    def evaluate(self, payload: Payload) -> bool:
        if self.region is not None:
            base = self.field or "position"
            x = payload_number(payload, base + ".x")
            y = payload_number(payload, base + ".y")
            if x is None or y is None:
                return False
            return (
                self.region["x_min"] <= x <= self.region["x_max"]
                and self.region["y_min"] <= y <= self.region["y_max"]
            )
        if self.field is None:
            return True
        if self.op not in self._OPS or self.value is None:
            return False
        actual = payload_number(payload, self.field)
        if actual is None:
            return False
        return self._OPS[self.op](actual, self.value)

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {}
        if self.field is not None:
            doc["field"] = self.field
        if self.op is not None:
            doc["op"] = self.op
        if self.value is not None:
            doc["value"] = self.value
        if self.region is not None:
            doc["region"] = dict(self.region)
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "TriggerSpec":
        return cls(
            field=doc.get("field"),
            op=doc.get("op"),
            value=doc.get("value"),
            region=doc.get("region"),
        )


def eval_condition(cond: Any, bits: Dict[str, int]) -> bool:
    """Boolean expression over event bits: {"flow": id} leaves, and/or/not."""
    if not isinstance(cond, dict):
        raise InvalidParams(f"condition must be an object, got {cond!r}")
    if "flow" in cond:
        return bits.get(cond["flow"], 0) == 1
    op = cond.get("op")
    if op == "and":
        return all(eval_condition(c, bits) for c in cond["args"])
    if op == "or":
        return any(eval_condition(c, bits) for c in cond["args"])
    if op == "not":
        return not eval_condition(cond["arg"], bits)
    raise InvalidParams(f"unknown condition {cond!r}")


def _check_condition_flows(cond: Any, known: set) -> None:
    if not isinstance(cond, dict):
        raise InvalidParams(f"condition must be an object, got {cond!r}")
    if "flow" in cond:
        if cond["flow"] not in known:
            raise InvalidParams(f"condition references unknown flow {cond['flow']}")
        return
    op = cond.get("op")
    if op in ("and", "or"):
        args = cond.get("args", [])
        if not args:
            raise InvalidParams(f"{op} needs at least one argument")
        for c in args:
            _check_condition_flows(c, known)
    elif op == "not":
        _check_condition_flows(cond.get("arg"), known)
    else:
        raise InvalidParams(f"unknown condition {cond!r}")


@dataclass(frozen=True)
class MsrRule:
    rule_id: str
    target_aflow: str
    effect: str  # "allow" | "block"
    condition: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "target_aflow": self.target_aflow,
            "effect": self.effect,
            "condition": self.condition,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "MsrRule":
        return cls(
            rule_id=doc["rule_id"],
            target_aflow=doc["target_aflow"],
            effect=doc["effect"],
            condition=doc["condition"],
        )


@dataclass(frozen=True)
class DerivedEflow:
    """An event bit fed by messages of another flow instead of its own topic."""

    source_flow: str
    trigger: TriggerSpec

    def to_dict(self) -> Dict[str, Any]:
        return {"source_flow": self.source_flow, "trigger": self.trigger.to_dict()}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "DerivedEflow":
        return cls(
            source_flow=doc["source_flow"],
            trigger=TriggerSpec.from_dict(doc.get("trigger", {})),
        )


@dataclass
class PolicyConfig:
    policy: PolicyName
    block_bits: Dict[str, int] = field(default_factory=dict)  # 0 allow, 1 block
    timeout: Optional[float] = None
    priority: Dict[str, int] = field(default_factory=dict)  # lower wins
    threshold: Optional[float] = None
    max_vel_limit: Optional[float] = None
    msr_rules: List[MsrRule] = field(default_factory=list)
    activity_window: float = DEFAULT_ACTIVITY_WINDOW
    freshness_window: float = DEFAULT_FRESHNESS_WINDOW
    eflow_triggers: Dict[str, TriggerSpec] = field(default_factory=dict)
    derived_eflows: Dict[str, DerivedEflow] = field(default_factory=dict)
    strict_deny: bool = False
    mandatory: bool = False

    def validate(self, cn_type: CnType, flows: Iterable[str]) -> None:
        known = set(flows)
        if self.policy not in VALID_POLICIES[cn_type]:
            raise InvalidPolicy(f"{self.policy.value} is not valid for {cn_type.value}")
        for flow, bit in self.block_bits.items():
            if flow not in known:
                raise InvalidParams(f"block bit for unknown flow {flow}")
            if bit not in (0, 1):
                raise InvalidParams(f"block bit must be 0 or 1, got {bit!r}")
        for flow in self.priority:
            if flow not in known:
                raise InvalidParams(f"priority for unknown flow {flow}")
        if self.priority:
            values = list(self.priority.values())
            if len(set(values)) != len(values):
                raise InvalidParams("priorities must be distinct")
        if self.policy in (PolicyName.FIFO_QUEUE, PolicyName.PRIORITY_QUEUE):
            if self.timeout is None or self.timeout <= 0:
                raise InvalidParams(f"{self.policy.value} needs timeout > 0")
        if self.policy in (PolicyName.PRIORITY_QUEUE, PolicyName.PREEMPTION):
            if not self.priority:
                raise InvalidParams(f"{self.policy.value} needs per-flow priorities")
        if self.policy == PolicyName.PREEMPTION and self.activity_window <= 0:
            raise InvalidParams("activity window must be positive")
        if self.policy == PolicyName.SAFE:
            if self.threshold is None or self.threshold <= 0:
                raise InvalidParams("safe needs threshold > 0")
        if self.policy == PolicyName.CONSTRAIN:
            if self.max_vel_limit is None or self.max_vel_limit <= 0:
                raise InvalidParams("constrain needs max_vel_limit > 0")
        if self.freshness_window <= 0:
            raise InvalidParams("freshness window must be positive")
        if self.freshness_window > EVENT_HORIZON:
            raise InvalidParams(f"freshness window must be within {EVENT_HORIZON}s")
        rule_flows = known | set(self.derived_eflows)
        for name, derived in self.derived_eflows.items():
            if derived.source_flow not in known:
                raise InvalidParams(f"derived event bit {name} reads unknown flow")
        for rule in self.msr_rules:
            if rule.effect not in ("allow", "block"):
                raise InvalidParams(f"rule {rule.rule_id} has effect {rule.effect!r}")
            if rule.target_aflow not in known:
                raise InvalidParams(f"rule {rule.rule_id} targets unknown flow")
            _check_condition_flows(rule.condition, rule_flows)
        for flow in self.eflow_triggers:
            if flow not in known:
                raise InvalidParams(f"trigger for unknown flow {flow}")

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"policy": self.policy.value}
        if self.block_bits:
            doc["block_bits"] = dict(self.block_bits)
        if self.timeout is not None:
            doc["timeout"] = self.timeout
        if self.priority:
            doc["priority"] = dict(self.priority)
        if self.threshold is not None:
            doc["threshold"] = self.threshold
        if self.max_vel_limit is not None:
            doc["max_vel_limit"] = self.max_vel_limit
        if self.msr_rules:
            doc["msr_rules"] = [r.to_dict() for r in self.msr_rules]
        if self.activity_window != DEFAULT_ACTIVITY_WINDOW:
            doc["activity_window"] = self.activity_window
        if self.freshness_window != DEFAULT_FRESHNESS_WINDOW:
            doc["freshness_window"] = self.freshness_window
        if self.eflow_triggers:
            doc["eflow_triggers"] = {k: v.to_dict() for k, v in self.eflow_triggers.items()}
        if self.derived_eflows:
            doc["derived_eflows"] = {k: v.to_dict() for k, v in self.derived_eflows.items()}
        if self.strict_deny:
            doc["strict_deny"] = True
        if self.mandatory:
            doc["mandatory"] = True
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "PolicyConfig":
        known = {
            "policy", "block_bits", "timeout", "priority", "threshold",
            "max_vel_limit", "msr_rules", "activity_window", "freshness_window",
            "eflow_triggers", "derived_eflows", "strict_deny", "mandatory",
        }
        unknown = set(doc) - known
        if unknown:
            raise InvalidParams(f"unknown policy fields {sorted(unknown)}")
        return cls(
            policy=PolicyName(doc["policy"]),
            block_bits=dict(doc.get("block_bits", {})),
            timeout=doc.get("timeout"),
            priority=dict(doc.get("priority", {})),
            threshold=doc.get("threshold"),
            max_vel_limit=doc.get("max_vel_limit"),
            msr_rules=[MsrRule.from_dict(r) for r in doc.get("msr_rules", [])],
            activity_window=doc.get("activity_window", DEFAULT_ACTIVITY_WINDOW),
            freshness_window=doc.get("freshness_window", DEFAULT_FRESHNESS_WINDOW),
            eflow_triggers={
                k: TriggerSpec.from_dict(v) for k, v in doc.get("eflow_triggers", {}).items()
            },
            derived_eflows={
                k: DerivedEflow.from_dict(v) for k, v in doc.get("derived_eflows", {}).items()
            },
            strict_deny=bool(doc.get("strict_deny", False)),
            mandatory=bool(doc.get("mandatory", False)),
        )

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class Decision:
    """One step's outcome: what the node re-publishes and what it swallows."""

    emitted: List[Tuple[str, Payload]] = field(default_factory=list)
    dropped: List[Tuple[str, Payload, str]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def emitted_flows(self) -> List[str]:
        return [flow for flow, _ in self.emitted]


@dataclass
class CnState:
    """Mutable per-node runtime state shared by every policy of that node."""

    cn_type: CnType
    flow_roles: Dict[str, FlowRole]
    # Output topic per flow; identity by default so engine-only callers can
    # ignore topics entirely.
    flow_topics: Dict[str, str] = field(default_factory=dict)
    last_seen: Dict[str, float] = field(default_factory=dict)
    queue: Deque[Tuple[float, int, str, Payload]] = field(default_factory=deque)
    fps_values: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    event_buffer: Deque[Tuple[float, str, Payload]] = field(default_factory=deque)
    trigger_log: List[Dict[str, Any]] = field(default_factory=list)
    _seq: int = 0

    def __post_init__(self):
        for flow in self.flow_roles:
            self.flow_topics.setdefault(flow, flow)

    def topic_of(self, flow: str) -> str:
        return self.flow_topics.get(flow, flow)

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def flows_with_role(self, role: FlowRole) -> List[str]:
        return sorted(f for f, r in self.flow_roles.items() if r == role)


def _split_known(state: CnState, inbound: Inbound, decision: Decision) -> List[Tuple[str, Payload]]:
    known = []
    for flow, payload in inbound:
        if flow not in state.flow_roles:
            decision.dropped.append((flow, payload, "unknown_flow"))
            decision.notes.append(f"unknown flow {flow}")
        else:
            known.append((flow, payload))
    return known


def _winner_per_topic(
    state: CnState,
    candidates: List[Tuple[str, Payload]],
    priority: Dict[str, int],
) -> Tuple[List[Tuple[str, Payload]], List[Tuple[str, Payload, str]]]:
    """Keep one message per output topic: best priority, then flow id, last payload."""
    by_topic: Dict[str, Tuple[str, Payload]] = {}
    losers: List[Tuple[str, Payload, str]] = []
    for flow, payload in candidates:
        topic = state.topic_of(flow)
        if topic not in by_topic:
            by_topic[topic] = (flow, payload)
            continue
        held_flow, held_payload = by_topic[topic]
        held_rank = (priority.get(held_flow, float("inf")), held_flow)
        new_rank = (priority.get(flow, float("inf")), flow)
        if new_rank < held_rank:
            losers.append((held_flow, held_payload, "superseded"))
            by_topic[topic] = (flow, payload)
        elif flow == held_flow:
            # Same flow twice in one step: newest message wins.
            losers.append((held_flow, held_payload, "superseded"))
            by_topic[topic] = (flow, payload)
        else:
            losers.append((flow, payload, "superseded"))
    ordered = sorted(by_topic.values(), key=lambda item: item[0])
    return ordered, losers


def grcn_step(state: CnState, config: PolicyConfig, inbound: Inbound, now: float) -> Decision:
    decision = Decision()
    arrivals = _split_known(state, inbound, decision)
    for flow, _ in arrivals:
        state.last_seen[flow] = now

    if config.policy == PolicyName.BLOCK:
        allowed = []
        for flow, payload in arrivals:
            if config.block_bits.get(flow, 0) == 1:
                decision.dropped.append((flow, payload, "blocked"))
            else:
                allowed.append((flow, payload))
        winners, losers = _winner_per_topic(state, allowed, config.priority)
        decision.emitted.extend(winners)
        decision.dropped.extend(losers)
        return decision

    if config.policy in (PolicyName.FIFO_QUEUE, PolicyName.PRIORITY_QUEUE):
        for flow, payload in arrivals:
            state.queue.append((now, state.next_seq(), flow, payload))
        timeout = config.timeout if config.timeout is not None else DEFAULT_QUEUE_TIMEOUT
        fresh: Deque[Tuple[float, int, str, Payload]] = deque()
        for entry in state.queue:
            if now - entry[0] > timeout:
                decision.dropped.append((entry[2], entry[3], "timeout"))
            else:
                fresh.append(entry)
        state.queue = fresh
        if state.queue:
            if config.policy == PolicyName.FIFO_QUEUE:
                entry = state.queue.popleft()
            else:
                entry = min(
                    state.queue,
                    key=lambda e: (config.priority.get(e[2], float("inf")), e[0], e[1]),
                )
                state.queue.remove(entry)
            decision.emitted.append((entry[2], entry[3]))
        return decision

    if config.policy == PolicyName.PREEMPTION:
        active = [
            flow
            for flow, seen in state.last_seen.items()
            if now - seen <= config.activity_window
        ]
        if active:
            winner = min(active, key=lambda f: (config.priority.get(f, float("inf")), f))
            winning_payload = None
            for flow, payload in arrivals:
                if flow == winner:
                    if winning_payload is not None:
                        decision.dropped.append((flow, winning_payload, "superseded"))
                    winning_payload = payload
                else:
                    decision.dropped.append((flow, payload, "preempted"))
            if winning_payload is not None:
                decision.emitted.append((winner, winning_payload))
        return decision

    raise InvalidPolicy(f"{config.policy.value} is not valid for grcn")


def rsrcn_step(state: CnState, config: PolicyConfig, inbound: Inbound, now: float) -> Decision:
    decision = Decision()
    arrivals = _split_known(state, inbound, decision)
    velocities: List[Tuple[str, Payload]] = []
    for flow, payload in arrivals:
        state.last_seen[flow] = now
        if state.flow_roles[flow] == FlowRole.FPS:
            value = payload_number(payload, "value")
            if value is not None:
                state.fps_values[flow] = (value, now)
            continue
        velocities.append((flow, payload))

    if config.policy == PolicyName.BLOCK:
        allowed = []
        for flow, payload in velocities:
            if config.block_bits.get(flow, 0) == 1:
                decision.dropped.append((flow, payload, "blocked"))
            else:
                allowed.append((flow, payload))
        winners, losers = _winner_per_topic(state, allowed, config.priority)
        decision.emitted.extend(winners)
        decision.dropped.extend(losers)
        return decision

    winners, losers = _winner_per_topic(state, velocities, config.priority)
    decision.dropped.extend(losers)

    if config.policy == PolicyName.SAFE:
        fps_flows = state.flows_with_role(FlowRole.FPS)
        fps_min = None
        for flow in fps_flows:
            sample = state.fps_values.get(flow)
            if sample is None or now - sample[1] > config.freshness_window:
                fps_min = 0.0
                decision.notes.append(f"stale_fps:{flow}")
                break
            fps_min = sample[0] if fps_min is None else min(fps_min, sample[0])
        if fps_min is None:
            fps_min = 0.0
            decision.notes.append("stale_fps:none_configured")
        ceiling = config.threshold * fps_min
        for flow, payload in winners:
            value = payload_number(payload, "value")
            if value is None:
                decision.dropped.append((flow, payload, "not_numeric"))
                continue
            out = min(value, ceiling)
            if out < value:
                decision.notes.append(f"clamped:{flow}:{value}->{out}")
            decision.emitted.append((flow, scalar(out)))
        return decision

    if config.policy == PolicyName.CONSTRAIN:
        for flow, payload in winners:
            value = payload_number(payload, "value")
            if value is None:
                decision.dropped.append((flow, payload, "not_numeric"))
                continue
            out = min(value, config.max_vel_limit)
            if out < value:
                decision.notes.append(f"clamped:{flow}:{value}->{out}")
            decision.emitted.append((flow, scalar(out)))
        return decision

    raise InvalidPolicy(f"{config.policy.value} is not valid for rsrcn")


def msrcn_step(state: CnState, config: PolicyConfig, inbound: Inbound, now: float) -> Decision:
    if config.policy != PolicyName.MSR_BLOCK:
        raise InvalidPolicy(f"{config.policy.value} is not valid for msrcn")
    decision = Decision()
    arrivals = _split_known(state, inbound, decision)

    # Every known arrival lands in the event buffer; bits are judged below
    # against the policy in force right now, so a reconfigured trigger sees
    # recent history instead of stale pre-switch bits. Actions arriving in
    # the same instant as a qualifying event do see its bit.
    actions: List[Tuple[str, Payload]] = []
    for flow, payload in arrivals:
        state.last_seen[flow] = now
        state.event_buffer.append((now, flow, payload))
        role = state.flow_roles[flow]
        if role == FlowRole.EFLOW:
            trigger = config.eflow_triggers.get(flow)
            if trigger is None or trigger.evaluate(payload):
                state.trigger_log.append({"time": now, "flow": flow, "kind": "event"})
        else:
            actions.append((flow, payload))
        for name, derived in config.derived_eflows.items():
            if derived.source_flow == flow and derived.trigger.evaluate(payload):
                state.trigger_log.append({"time": now, "flow": name, "kind": "derived"})
    while state.event_buffer and state.event_buffer[0][0] < now - EVENT_HORIZON:
        state.event_buffer.popleft()

    def bit_for(source: str, trigger: Optional[TriggerSpec]) -> int:
        for when, flow, payload in reversed(state.event_buffer):
            if now - when > config.freshness_window:
                break
            if flow != source:
                continue
            if trigger is None or trigger.evaluate(payload):
                return 1
        return 0

    bits: Dict[str, int] = {}
    for flow, role in state.flow_roles.items():
        if role == FlowRole.EFLOW:
            bits[flow] = bit_for(flow, config.eflow_triggers.get(flow))
    for name, derived in config.derived_eflows.items():
        bits[name] = bit_for(derived.source_flow, derived.trigger)

    allowed: List[Tuple[str, Payload]] = []
    for flow, payload in actions:
        verdict: Optional[MsrRule] = None
        for rule in config.msr_rules:
            if rule.target_aflow == flow and eval_condition(rule.condition, bits):
                verdict = rule
                break
        if verdict is not None and verdict.effect == "block":
            decision.dropped.append((flow, payload, f"rule:{verdict.rule_id}"))
            state.trigger_log.append(
                {"time": now, "flow": flow, "kind": "block", "rule": verdict.rule_id}
            )
        elif verdict is None and config.strict_deny:
            decision.dropped.append((flow, payload, "default_deny"))
        else:
            allowed.append((flow, payload))
    winners, losers = _winner_per_topic(state, allowed, config.priority)
    decision.emitted.extend(winners)
    decision.dropped.extend(losers)
    return decision


@dataclass
class FpsMonitorState:
    """Sliding-window rate estimator for one watched detection stream."""

    window: float = DEFAULT_FPS_WINDOW
    period: float = DEFAULT_FPS_PERIOD
    samples: Deque[float] = field(default_factory=deque)
    next_emit: float = 0.0

    def record(self, now: float) -> None:
        self.samples.append(now)

    def fps_at(self, now: float) -> float:
        while self.samples and self.samples[0] <= now - self.window:
            self.samples.popleft()
        return len(self.samples) / self.window


def fps_monitor_step(
    state: FpsMonitorState, inbound: Inbound, now: float
) -> Optional[Payload]:
    """Record arrivals; emit the current rate when the publish period elapses."""
    for _flow, _payload in inbound:
        state.record(now)
    if now >= state.next_emit:
        state.next_emit = now + state.period
        return scalar(state.fps_at(now))
    return None


def step_fn(cn_type: CnType):
    return {
        CnType.GRCN: grcn_step,
        CnType.RSRCN: rsrcn_step,
        CnType.MSRCN: msrcn_step,
    }[cn_type]


def configure(
    state: CnState,
    new_config: PolicyConfig,
    old_config: Optional[PolicyConfig] = None,
    role: Role = Role.DEVELOPER,
    enforce_roles: bool = True,
) -> PolicyConfig:
    """Validate and activate a policy between steps.

    In-flight queue entries survive switches within the queueing class and
    are cleared on any class change.
    """
    new_config.validate(state.cn_type, state.flow_roles.keys())
    if enforce_roles and role == Role.END_USER:
        if new_config.policy not in END_USER_POLICIES[state.cn_type]:
            raise RoleViolation(
                f"{role.value} may not set {new_config.policy.value} on {state.cn_type.value}"
            )
    if old_config is not None and _POLICY_CLASS[old_config.policy] != _POLICY_CLASS[new_config.policy]:
        state.queue.clear()
    return new_config
