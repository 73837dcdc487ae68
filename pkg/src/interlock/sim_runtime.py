"""Deterministic discrete-event simulation of a pub/sub graph.

The simulator replays scripted node behaviors over virtual time, routes
messages through whatever coordination nodes the instrumentor installed,
and records every delivery and policy decision. Two runs of the same
scenario produce identical traces; there is no wall-clock anywhere in the
loop, so assertions about delivered traffic are exact.

Scenarios are JSON files: behaviors for the benign system, extra behaviors
that only run when the attack flag is up, policies to install when the
graph is instrumented, and checks evaluated over the delivery log. Policy
parameters in scenarios may name flows by source node or topic; they are
resolved to flow ids against the concrete plan at run time.
"""
from __future__ import annotations

import heapq
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .graph_model import InteractionGraph, graph_from_dict, load_graph
from .instrumentor import (
    CnPlan,
    InstrumentationPlan,
    carried_to_flow,
    cn_state_for,
    emission_bindings,
    fps_state_for,
    instrument,
)
from .policy_engine import (
    CnType,
    FpsMonitorState,
    PolicyConfig,
    Role,
    TriggerSpec,
    configure,
    fps_monitor_step,
    step_fn,
)

EVENT_BUDGET = 1_000_000


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class ScriptStep:
    at: float
    topic: str
    payload: Dict[str, Any]
    repeat: Optional[float] = None
    until: Optional[float] = None


@dataclass(frozen=True)
class BehaviorSpec:
    """What one node does during the run.

    periodic: publish `payload` on `topic` every `period` from `start`.
    script: publish the listed steps, each optionally repeating.
    transform: re-publish `payload` on `topic` after each delivery on
    `on_topic`, `delay` seconds later.
    """

    kind: str
    topic: str = ""
    payload: Dict[str, Any] = field(default_factory=dict)
    period: float = 0.0
    start: float = 0.0
    stop: Optional[float] = None
    steps: Tuple[ScriptStep, ...] = ()
    on_topic: str = ""
    delay: float = 0.0

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "BehaviorSpec":
        kind = doc.get("kind")
        if kind == "periodic":
            allowed = {"kind", "topic", "payload", "period", "start", "stop"}
            _reject_unknown(doc, allowed, "periodic behavior")
            if doc.get("period", 0.0) <= 0:
                raise ScenarioError("periodic behavior needs period > 0")
            return cls(
                kind=kind,
                topic=doc["topic"],
                payload=dict(doc["payload"]),
                period=float(doc["period"]),
                start=float(doc.get("start", 0.0)),
                stop=doc.get("stop"),
            )
        if kind == "script":
            _reject_unknown(doc, {"kind", "steps"}, "script behavior")
            steps = []
            for step in doc["steps"]:
                _reject_unknown(
                    step, {"at", "topic", "payload", "repeat", "until"}, "script step"
                )
                steps.append(
                    ScriptStep(
                        at=float(step["at"]),
                        topic=step["topic"],
                        payload=dict(step["payload"]),
                        repeat=step.get("repeat"),
                        until=step.get("until"),
                    )
                )
            return cls(kind=kind, steps=tuple(steps))
        if kind == "transform":
            allowed = {"kind", "on_topic", "topic", "payload", "delay"}
            _reject_unknown(doc, allowed, "transform behavior")
            return cls(
                kind=kind,
                on_topic=doc["on_topic"],
                topic=doc["topic"],
                payload=dict(doc["payload"]),
                delay=float(doc.get("delay", 0.0)),
            )
        raise ScenarioError(f"unknown behavior kind {kind!r}")


@dataclass(frozen=True)
class Check:
    check_id: str
    kind: str  # never | always | eventually
    topic: str
    to: Optional[str] = None
    where: Optional[TriggerSpec] = None
    count_at_least: int = 1

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "Check":
        allowed = {"id", "kind", "topic", "to", "where", "count_at_least"}
        _reject_unknown(doc, allowed, "check")
        if doc["kind"] not in ("never", "always", "eventually"):
            raise ScenarioError(f"unknown check kind {doc['kind']!r}")
        where = TriggerSpec.from_dict(doc["where"]) if "where" in doc else None
        return cls(
            check_id=doc["id"],
            kind=doc["kind"],
            topic=doc["topic"],
            to=doc.get("to"),
            where=where,
            count_at_least=int(doc.get("count_at_least", 1)),
        )


@dataclass(frozen=True)
class PolicyBinding:
    finding: str
    policy: Dict[str, Any]


@dataclass
class Scenario:
    name: str
    duration: float
    behaviors: Dict[str, Tuple[BehaviorSpec, ...]]
    attack: Dict[str, Tuple[BehaviorSpec, ...]]
    policies: Tuple[PolicyBinding, ...]
    checks: Tuple[Check, ...]
    seed: int = 0
    graph_path: Optional[Path] = None
    graph_doc: Optional[Dict[str, Any]] = None

    def load_graph(self) -> InteractionGraph:
        if self.graph_doc is not None:
            return graph_from_dict(json.loads(json.dumps(self.graph_doc)))
        if self.graph_path is not None:
            return load_graph(self.graph_path)
        raise ScenarioError("scenario names no graph")


def _reject_unknown(doc: Dict[str, Any], allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ScenarioError(f"unknown fields {sorted(unknown)} in {where}")


def _behavior_map(doc: Dict[str, Any], where: str) -> Dict[str, Tuple[BehaviorSpec, ...]]:
    out: Dict[str, Tuple[BehaviorSpec, ...]] = {}
    for node, specs in doc.items():
        if not isinstance(specs, list):
            raise ScenarioError(f"{where} for {node} must be a list")
        out[node] = tuple(BehaviorSpec.from_dict(s) for s in specs)
    return out


def scenario_from_dict(doc: Dict[str, Any], base_dir: Optional[Path] = None) -> Scenario:
    """Parse a scenario document; `graph` is a file reference resolved
    against base_dir, `graph_doc` an inline graph object."""
    allowed = {
        "name", "graph", "graph_doc", "duration", "behaviors", "attack",
        "policies", "checks", "seed",
    }
    _reject_unknown(doc, allowed, "scenario")
    checks = tuple(Check.from_dict(c) for c in doc.get("checks", []))
    ids = [c.check_id for c in checks]
    if len(ids) != len(set(ids)):
        raise ScenarioError("check ids must be unique")
    policies = []
    for entry in doc.get("policies", []):
        _reject_unknown(entry, {"finding", "policy"}, "policy binding")
        policies.append(PolicyBinding(finding=entry["finding"], policy=dict(entry["policy"])))
    graph_path = None
    if "graph" in doc:
        if base_dir is None:
            raise ScenarioError("graph file reference needs a base directory")
        graph_path = (base_dir / doc["graph"]).resolve()
    elif "graph_doc" not in doc:
        raise ScenarioError("scenario needs graph or graph_doc")
    scenario = Scenario(
        name=doc["name"],
        duration=float(doc["duration"]),
        behaviors=_behavior_map(doc.get("behaviors", {}), "behaviors"),
        attack=_behavior_map(doc.get("attack", {}), "attack"),
        policies=tuple(policies),
        checks=checks,
        seed=int(doc.get("seed", 0)),
        graph_path=graph_path,
        graph_doc=doc.get("graph_doc"),
    )
    if scenario.duration <= 0:
        raise ScenarioError("duration must be positive")
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


def _validate_behaviors(graph: InteractionGraph, behaviors, where: str) -> None:
    for node, specs in behaviors.items():
        if node not in graph.nodes:
            raise ScenarioError(f"{where}: unknown node {node}")
        pubs = set(graph.nodes[node].publishes)
        subs = set(graph.nodes[node].subscribes)
        for spec in specs:
            if spec.kind == "periodic":
                if spec.topic not in pubs:
                    raise ScenarioError(f"{where}: {node} does not publish {spec.topic}")
            elif spec.kind == "script":
                for step in spec.steps:
                    if step.topic not in pubs:
                        raise ScenarioError(f"{where}: {node} does not publish {step.topic}")
            else:
                if spec.on_topic not in subs:
                    raise ScenarioError(f"{where}: {node} does not subscribe {spec.on_topic}")
                if spec.topic not in pubs:
                    raise ScenarioError(f"{where}: {node} does not publish {spec.topic}")


def _resolve_condition(cond: Any, eflow_by_topic: Dict[str, str]) -> Dict[str, Any]:
    if not isinstance(cond, dict):
        raise ScenarioError(f"condition must be an object, got {cond!r}")
    if "flow_topic" in cond:
        topic = cond["flow_topic"]
        if topic not in eflow_by_topic:
            raise ScenarioError(f"no event flow for topic {topic}")
        return {"flow": eflow_by_topic[topic]}
    if "derived" in cond:
        return {"flow": cond["derived"]}
    if "flow" in cond:
        return dict(cond)
    op = cond.get("op")
    if op in ("and", "or"):
        return {"op": op, "args": [_resolve_condition(c, eflow_by_topic) for c in cond["args"]]}
    if op == "not":
        return {"op": "not", "arg": _resolve_condition(cond["arg"], eflow_by_topic)}
    raise ScenarioError(f"unknown condition {cond!r}")


def resolve_policy_doc(doc: Dict[str, Any], cn: CnPlan) -> Dict[str, Any]:
    """Translate source- and topic-addressed policy params into flow ids."""
    by_source: Dict[str, List[str]] = {}
    by_topic: Dict[str, List[str]] = {}
    eflow_by_topic: Dict[str, str] = {}
    aflow_by_topic: Dict[str, List[str]] = {}
    for flow in cn.flows:
        if flow.source_node:
            by_source.setdefault(flow.source_node, []).append(flow.flow_id)
        by_topic.setdefault(flow.topic, []).append(flow.flow_id)
        if flow.role.value == "eflow":
            eflow_by_topic[flow.topic] = flow.flow_id
        if flow.role.value == "aflow":
            aflow_by_topic.setdefault(flow.topic, []).append(flow.flow_id)

    out: Dict[str, Any] = {}
    for key, value in doc.items():
        if key in ("priority_by_source", "block_bits_by_source"):
            target = key.replace("_by_source", "")
            resolved: Dict[str, Any] = dict(out.get(target, {}))
            for source, entry in value.items():
                flows = by_source.get(source)
                if not flows:
                    raise ScenarioError(f"{cn.cn_id} has no flow sourced from {source}")
                for flow_id in flows:
                    resolved[flow_id] = entry
            out[target] = resolved
        elif key in ("priority_by_topic", "block_bits_by_topic"):
            target = key.replace("_by_topic", "")
            resolved = dict(out.get(target, {}))
            for topic, entry in value.items():
                flows = by_topic.get(topic)
                if not flows:
                    raise ScenarioError(f"{cn.cn_id} has no flow for topic {topic}")
                for flow_id in flows:
                    resolved[flow_id] = entry
            out[target] = resolved
        elif key == "eflow_triggers_by_topic":
            resolved = dict(out.get("eflow_triggers", {}))
            for topic, trigger in value.items():
                if topic not in eflow_by_topic:
                    raise ScenarioError(f"{cn.cn_id} has no event flow for {topic}")
                resolved[eflow_by_topic[topic]] = trigger
            out["eflow_triggers"] = resolved
        elif key == "derived_eflows":
            resolved = {}
            for name, entry in value.items():
                entry = dict(entry)
                if "source_topic" in entry:
                    topic = entry.pop("source_topic")
                    flows = by_topic.get(topic)
                    if not flows:
                        raise ScenarioError(f"{cn.cn_id} has no flow for topic {topic}")
                    if len(flows) > 1:
                        raise ScenarioError(f"{cn.cn_id} has several flows for {topic}")
                    entry["source_flow"] = flows[0]
                resolved[name] = entry
            out["derived_eflows"] = resolved
        elif key == "msr_rules":
            resolved_rules = []
            for rule in value:
                rule = dict(rule)
                if "target_topic" in rule:
                    topic = rule.pop("target_topic")
                    flows = aflow_by_topic.get(topic)
                    if not flows:
                        raise ScenarioError(f"{cn.cn_id} has no action flow for {topic}")
                    if len(flows) > 1:
                        raise ScenarioError(f"{cn.cn_id} has several action flows for {topic}")
                    rule["target_aflow"] = flows[0]
                rule["condition"] = _resolve_condition(rule["condition"], eflow_by_topic)
                resolved_rules.append(rule)
            out["msr_rules"] = resolved_rules
        else:
            out[key] = value
    return out


@dataclass
class ScenarioResult:
    scenario: str
    instrumented: bool
    attack: bool
    deliveries: List[Dict[str, Any]]
    violations: List[Dict[str, Any]]
    trace: List[Dict[str, Any]]
    checks: Dict[str, bool]
    assertion_report: Dict[str, Dict[str, Any]]
    summary: Dict[str, Any]
    plan: Optional[InstrumentationPlan] = None

    @property
    def all_checks_pass(self) -> bool:
        return all(self.checks.values())

    def delivery_signature(self) -> List[Tuple[float, str, str, str]]:
        """Order-independent fingerprint of delivered traffic."""
        return sorted(
            (d["time"], d["node"], d["topic"], json.dumps(d["payload"], sort_keys=True))
            for d in self.deliveries
        )


def check_assertions(
    trace: Sequence[Dict[str, Any]], checks: Sequence[Check]
) -> Dict[str, Dict[str, Any]]:
    """Evaluate trace predicates over the deliver events of a trace.

    Each entry reports whether the check passed, how many deliveries
    matched, and for safety checks the first offending event.
    """
    deliveries = [e for e in trace if e.get("event") == "deliver"]
    report: Dict[str, Dict[str, Any]] = {}
    for check in checks:
        on_topic = [
            d for d in deliveries
            if d["topic"] == check.topic and (check.to is None or d["node"] == check.to)
        ]
        matching = [
            d for d in on_topic
            if check.where is None or check.where.evaluate(d["payload"])
        ]
        entry: Dict[str, Any] = {
            "kind": check.kind,
            "match_count": len(matching),
            "total_count": len(on_topic),
            "first_offender": None,
        }
        if check.kind == "never":
            entry["passed"] = len(matching) == 0
            if matching:
                entry["first_offender"] = matching[0]
        elif check.kind == "always":
            misses = [
                d for d in on_topic
                if check.where is not None and not check.where.evaluate(d["payload"])
            ]
            entry["passed"] = not misses
            if misses:
                entry["first_offender"] = misses[0]
        else:
            entry["passed"] = len(matching) >= check.count_at_least
        report[check.check_id] = entry
    return report


class _Sim:
    def __init__(self, graph: InteractionGraph, plan: Optional[InstrumentationPlan]):
        self.graph = graph
        self.plan = plan
        self.heap: List[Tuple[float, int, str, str, Dict[str, Any]]] = []
        self.seq = 0
        self.deliveries: List[Dict[str, Any]] = []
        self.violations: List[Dict[str, Any]] = []
        self.trace: List[Dict[str, Any]] = []
        self.transforms: Dict[Tuple[str, str], List[BehaviorSpec]] = {}
        self.publish_map: Dict[Tuple[str, str], str] = {}
        self.cn_by_node: Dict[str, CnPlan] = {}
        self.cn_states: Dict[str, Any] = {}
        self.cn_configs: Dict[str, PolicyConfig] = {}
        self.cn_inputs: Dict[str, Dict[str, str]] = {}
        self._budget = EVENT_BUDGET
        if plan is not None:
            for node_name, table in emission_bindings(plan).items():
                for original, actual in table.items():
                    self.publish_map[(node_name, original)] = actual
            for cn in plan.cns:
                self.cn_by_node[cn.node_name] = cn
                self.cn_inputs[cn.node_name] = carried_to_flow(cn)
                if cn.cn_type == CnType.FPS_MONITOR:
                    self.cn_states[cn.node_name] = fps_state_for(cn)
                else:
                    self.cn_states[cn.node_name] = cn_state_for(cn)
                    self.cn_configs[cn.node_name] = PolicyConfig.from_dict(cn.default_policy)
                for flow in cn.flows:
                    if flow.remapped:
                        self.publish_map.setdefault(
                            (flow.source_node, flow.topic), flow.carried_topic
                        )

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def push(self, when: float, node: str, topic: str, payload: Dict[str, Any]) -> None:
        heapq.heappush(self.heap, (when, self.next_seq(), node, topic, payload))

    def set_policy(self, cn: CnPlan, config: PolicyConfig) -> None:
        old = self.cn_configs.get(cn.node_name)
        state = self.cn_states[cn.node_name]
        self.cn_configs[cn.node_name] = configure(state, config, old, Role.DEVELOPER)

    def run(self, duration: float) -> None:
        self.run_until(duration)

    def run_until(self, horizon: float) -> None:
        """Process every queued event with time at or before the horizon."""
        while self.heap and self.heap[0][0] <= horizon:
            when, _seq, node, topic, payload = heapq.heappop(self.heap)
            self._budget -= 1
            if self._budget <= 0:
                raise ScenarioError("event budget exceeded; runaway transform loop?")
            actual_topic = self.publish_map.get((node, topic), topic)
            self.trace.append(
                {"time": when, "event": "publish", "node": node, "topic": actual_topic}
            )
            for sub in sorted(self.graph.subscribers_of(actual_topic)):
                if sub in self.cn_by_node:
                    self._cn_receive(sub, actual_topic, payload, when)
                    continue
                record = {
                    "time": when,
                    "event": "deliver",
                    "node": sub,
                    "topic": actual_topic,
                    "payload": payload,
                }
                self.deliveries.append(record)
                self.trace.append(record)
                for spec in self.transforms.get((sub, actual_topic), []):
                    self.push(when + spec.delay, sub, spec.topic, dict(spec.payload))

    def _cn_receive(self, node: str, topic: str, payload: Dict[str, Any], now: float) -> None:
        cn = self.cn_by_node[node]
        flow_id = self.cn_inputs[node].get(topic)
        if flow_id is None:
            return
        state = self.cn_states[node]
        if isinstance(state, FpsMonitorState):
            out = fps_monitor_step(state, [(flow_id, payload)], now)
            if out is not None:
                self.push(now, node, cn.output_topics[0], out)
            return
        config = self.cn_configs[node]
        decision = step_fn(cn.cn_type)(state, config, [(flow_id, payload)], now)
        for out_flow, out_payload in decision.emitted:
            original = cn.flow_by_id(out_flow).topic
            self.push(now, node, original, out_payload)
        for drop_flow, drop_payload, reason in decision.dropped:
            entry = {
                "time": now,
                "event": "cn_decision",
                "cn_id": cn.cn_id,
                "node": node,
                "flow": drop_flow,
                "topic": cn.flow_by_id(drop_flow).topic,
                "action": "drop",
                "reason": reason,
                "payload": drop_payload,
            }
            self.trace.append(entry)
            if reason != "superseded":
                self.violations.append(entry)
        for note in decision.notes:
            entry = {
                "time": now,
                "event": "cn_decision",
                "cn_id": cn.cn_id,
                "node": node,
                "flow": "",
                "topic": "",
                "action": "note",
                "reason": note,
            }
            self.trace.append(entry)
            if note.startswith("clamped:") or note.startswith("stale_fps:"):
                self.violations.append(entry)


def _schedule_behaviors(sim: _Sim, behaviors, duration: float) -> None:
    for node in sorted(behaviors):
        for spec in behaviors[node]:
            if spec.kind == "periodic":
                stop = duration if spec.stop is None else min(spec.stop, duration)
                t = spec.start
                while t <= stop + 1e-9:
                    sim.push(round(t, 9), node, spec.topic, dict(spec.payload))
                    t += spec.period
            elif spec.kind == "script":
                for step in spec.steps:
                    if step.repeat is None:
                        if step.at <= duration + 1e-9:
                            sim.push(round(step.at, 9), node, step.topic, dict(step.payload))
                        continue
                    stop = duration if step.until is None else min(step.until, duration)
                    t = step.at
                    while t <= stop + 1e-9:
                        sim.push(round(t, 9), node, step.topic, dict(step.payload))
                        t += step.repeat
            else:
                sim.transforms.setdefault((node, spec.on_topic), []).append(spec)


def prepare_sim(
    scenario: Scenario,
    *,
    instrumented: bool,
    attack: bool,
    apply_policies: bool = True,
) -> _Sim:
    """Build a ready-to-run simulation with behaviors scheduled."""
    graph = scenario.load_graph()
    _validate_behaviors(graph, scenario.behaviors, "behaviors")
    _validate_behaviors(graph, scenario.attack, "attack")

    plan = None
    if instrumented:
        graph, plan = instrument(graph)

    sim = _Sim(graph, plan)
    if plan is not None and apply_policies:
        for binding in scenario.policies:
            matches = [cn for cn in plan.cns if binding.finding in cn.findings]
            if not matches:
                raise ScenarioError(f"no coordination node covers {binding.finding}")
            for cn in matches:
                resolved = resolve_policy_doc(binding.policy, cn)
                sim.set_policy(cn, PolicyConfig.from_dict(resolved))

    _schedule_behaviors(sim, scenario.behaviors, scenario.duration)
    if attack:
        _schedule_behaviors(sim, scenario.attack, scenario.duration)
    return sim


def finish_result(
    sim: _Sim, scenario: Scenario, *, instrumented: bool, attack: bool
) -> ScenarioResult:
    """Evaluate checks over a completed simulation and assemble the result."""
    report = check_assertions(sim.trace, scenario.checks)
    for check_id, entry in report.items():
        if entry["passed"]:
            continue
        offender = entry["first_offender"]
        sim.trace.append(
            {
                "time": offender["time"] if offender else scenario.duration,
                "event": "violation",
                "check": check_id,
                "cause": f"{entry['kind']} assertion failed",
                "detail": offender,
            }
        )
    summary = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "instrumented": instrumented,
        "attack": attack,
        "events": len(sim.trace),
        "deliveries": len(sim.deliveries),
        "cn_decisions": sum(1 for e in sim.trace if e["event"] == "cn_decision"),
        "failed_checks": sorted(k for k, v in report.items() if not v["passed"]),
    }
    return ScenarioResult(
        scenario=scenario.name,
        instrumented=instrumented,
        attack=attack,
        deliveries=sim.deliveries,
        violations=sim.violations,
        trace=sim.trace,
        checks={k: v["passed"] for k, v in report.items()},
        assertion_report=report,
        summary=summary,
        plan=sim.plan,
    )


def run_scenario(
    scenario: Scenario,
    *,
    instrumented: bool,
    attack: bool,
    apply_policies: bool = True,
) -> ScenarioResult:
    """Replay one scenario configuration and evaluate its checks."""
    sim = prepare_sim(
        scenario, instrumented=instrumented, attack=attack, apply_policies=apply_policies
    )
    sim.run(scenario.duration)
    return finish_result(sim, scenario, instrumented=instrumented, attack=attack)


def write_trace(trace: Sequence[Dict[str, Any]], path) -> None:
    lines = [json.dumps(entry, sort_keys=True) for entry in trace]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_trace(path) -> List[Dict[str, Any]]:
    text = Path(path).read_text(encoding="utf-8")
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def measure_cn_overhead(
    chain_lengths: Sequence[int] = tuple(range(0, 11)),
    messages: int = 2000,
) -> Dict[str, Any]:
    """Wall-clock cost of pushing one message through n chained gate nodes.

    Returns per-chain-length mean latency in milliseconds with the empty
    chain subtracted as loop baseline, plus a linear fit over chain length.
    """
    from .policy_engine import CnState, FlowRole, PolicyName, grcn_step

    payload = {"kind": "scalar", "value": 0.1}
    config = PolicyConfig(policy=PolicyName.BLOCK)

    def run_chain(n: int) -> float:
        states = [
            CnState(cn_type=CnType.GRCN, flow_roles={"f": FlowRole.GENERIC})
            for _ in range(n)
        ]
        start = time.perf_counter()
        for i in range(messages):
            msg = payload
            now = i * 0.01
            for state in states:
                decision = grcn_step(state, config, [("f", msg)], now)
                msg = decision.emitted[0][1]
        return (time.perf_counter() - start) / messages * 1000.0

    run_chain(max(chain_lengths))  # warm caches before timing
    raw = {n: run_chain(n) for n in chain_lengths}
    baseline = raw[min(chain_lengths)]
    adjusted = {n: raw[n] - baseline for n in chain_lengths}
    xs = list(chain_lengths)
    ys = [adjusted[n] for n in xs]
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return {
        "per_n_ms": adjusted,
        "slope_ms_per_cn": slope,
        "intercept_ms": intercept,
        "r_squared": r * r,
        "overhead_at_max_ms": adjusted[max(chain_lengths)],
    }
