"""Planning and applying coordination-node instrumentation on a graph.

Instrumentation rewires risky publishers onto private per-flow topics and
seats a coordination node between them and the original topic. The node
re-publishes allowed traffic on the original name, so subscribers never
change. Taps (event, detection, and fps inputs) subscribe in place without
rewiring anything.

Planners run in a fixed order: general-risk nodes first, then fps monitors,
then velocity gates, then the mission gate. Each stage rewires against the
graph as already rewritten by earlier stages, so coordination nodes chain
(publishers feed a general-risk node whose output feeds the mission gate).
Every plan applies with pass-through default policies; instrumentation by
itself must not change what gets delivered.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .graph_model import InteractionGraph, MessageType, graph_from_dict, graph_to_dict
from .policy_engine import CnState, CnType, FlowRole, FpsMonitorState
from .risk_discovery import (
    MatchTables,
    RiskKind,
    RiskReport,
    discover_all,
    same_type_sub_groups,
    type_matches,
)

CN_NODE_PREFIX = "/coord/"
FPS_TOPIC_SUFFIX = "/fps"
FPS_MSG_TYPE = "std_msgs/Float64"


class InstrumentationError(Exception):
    pass


class AlreadyInstrumented(InstrumentationError):
    """The graph already contains coordination nodes."""


class FingerprintMismatch(InstrumentationError):
    """Report or plan refers to a different graph revision."""


@dataclass(frozen=True)
class FlowSpec:
    """One labelled stream through a coordination node.

    Remapped flows carry a publisher's rewired topic; taps carry the
    original topic unchanged. `topic` is always the original name the flow
    stands for.
    """

    flow_id: str
    role: FlowRole
    source_node: str
    topic: str
    carried_topic: str
    remapped: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flow_id": self.flow_id,
            "role": self.role.value,
            "source_node": self.source_node,
            "topic": self.topic,
            "carried_topic": self.carried_topic,
            "remapped": self.remapped,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "FlowSpec":
        unknown = set(doc) - {"flow_id", "role", "source_node", "topic", "carried_topic", "remapped"}
        if unknown:
            raise InstrumentationError(f"unknown flow fields {sorted(unknown)}")
        return cls(
            flow_id=doc["flow_id"],
            role=FlowRole(doc["role"]),
            source_node=doc["source_node"],
            topic=doc["topic"],
            carried_topic=doc["carried_topic"],
            remapped=bool(doc["remapped"]),
        )


@dataclass(frozen=True)
class CnPlan:
    cn_id: str
    cn_type: CnType
    node_name: str
    findings: Tuple[str, ...]
    flows: Tuple[FlowSpec, ...]
    output_topics: Tuple[str, ...]
    added_topics: Tuple[str, ...]
    suggested_policy: str
    default_policy: Dict[str, Any]

    def flow_by_id(self, flow_id: str) -> FlowSpec:
        for flow in self.flows:
            if flow.flow_id == flow_id:
                return flow
        raise KeyError(flow_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cn_id": self.cn_id,
            "cn_type": self.cn_type.value,
            "node_name": self.node_name,
            "findings": list(self.findings),
            "flows": [f.to_dict() for f in self.flows],
            "output_topics": list(self.output_topics),
            "added_topics": list(self.added_topics),
            "suggested_policy": self.suggested_policy,
            "default_policy": self.default_policy,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CnPlan":
        known = {
            "cn_id", "cn_type", "node_name", "findings", "flows",
            "output_topics", "added_topics", "suggested_policy", "default_policy",
        }
        unknown = set(doc) - known
        if unknown:
            raise InstrumentationError(f"unknown plan fields {sorted(unknown)}")
        return cls(
            cn_id=doc["cn_id"],
            cn_type=CnType(doc["cn_type"]),
            node_name=doc["node_name"],
            findings=tuple(doc["findings"]),
            flows=tuple(FlowSpec.from_dict(f) for f in doc["flows"]),
            output_topics=tuple(doc["output_topics"]),
            added_topics=tuple(doc["added_topics"]),
            suggested_policy=doc["suggested_policy"],
            default_policy=dict(doc["default_policy"]),
        )


@dataclass(frozen=True)
class InstrumentationPlan:
    graph_name: str
    original_fingerprint: str
    instrumented_fingerprint: str
    cns: Tuple[CnPlan, ...]

    def cn_by_id(self, cn_id: str) -> CnPlan:
        for cn in self.cns:
            if cn.cn_id == cn_id:
                return cn
        raise KeyError(cn_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "graph_name": self.graph_name,
            "original_fingerprint": self.original_fingerprint,
            "instrumented_fingerprint": self.instrumented_fingerprint,
            "cns": [cn.to_dict() for cn in self.cns],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "InstrumentationPlan":
        known = {"graph_name", "original_fingerprint", "instrumented_fingerprint", "cns"}
        unknown = set(doc) - known
        if unknown:
            raise InstrumentationError(f"unknown plan fields {sorted(unknown)}")
        return cls(
            graph_name=doc["graph_name"],
            original_fingerprint=doc["original_fingerprint"],
            instrumented_fingerprint=doc["instrumented_fingerprint"],
            cns=tuple(CnPlan.from_dict(cn) for cn in doc["cns"]),
        )

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def parse(cls, text: str) -> "InstrumentationPlan":
        return cls.from_dict(json.loads(text))


class _Working:
    """Mutable graph scratchpad the planners rewrite in place."""

    def __init__(self, graph: InteractionGraph):
        doc = graph_to_dict(graph)
        self.name = doc["name"]
        self.topics: Dict[str, Dict[str, Any]] = {t["name"]: t for t in doc["topics"]}
        self.nodes: Dict[str, Dict[str, Any]] = {n["name"]: n for n in doc["nodes"]}

    def publishers_of(self, topic: str) -> List[str]:
        return sorted(n["name"] for n in self.nodes.values() if topic in n["pub"])

    def add_topic(self, name: str, msg_type: str) -> None:
        if name in self.topics:
            raise InstrumentationError(f"instrumentation topic {name} already exists")
        self.topics[name] = {"name": name, "type": msg_type}

    def rewire_pub(self, node_name: str, old_topic: str, new_topic: str) -> None:
        pubs = self.nodes[node_name]["pub"]
        pubs[pubs.index(old_topic)] = new_topic

    def add_cn_node(self, name: str, subs: List[str], pubs: List[str]) -> None:
        if name in self.nodes:
            raise InstrumentationError(f"node {name} already exists")
        self.nodes[name] = {"name": name, "pub": list(pubs), "sub": list(subs)}

    def remove_node(self, name: str) -> None:
        if name not in self.nodes:
            raise InstrumentationError(f"node {name} missing during reversal")
        del self.nodes[name]

    def remove_topic(self, name: str) -> None:
        if name not in self.topics:
            raise InstrumentationError(f"topic {name} missing during reversal")
        del self.topics[name]

    def to_graph(self) -> InteractionGraph:
        return graph_from_dict(
            {
                "name": self.name,
                "topics": sorted(self.topics.values(), key=lambda t: t["name"]),
                "nodes": sorted(self.nodes.values(), key=lambda n: n["name"]),
            }
        )


def _suggest_grcn_policy(
    working: _Working, topics: Tuple[str, ...], tables: MatchTables
) -> str:
    for topic in topics:
        parsed = MessageType.parse(working.topics[topic]["type"])
        if any(type_matches(a, parsed) for a in tables.action_msg_types):
            return "preemption"
    if any("goal" in topic.lower() for topic in topics):
        return "fifo_queue"
    return "block"


def instrument(
    graph: InteractionGraph,
    report: Optional[RiskReport] = None,
    tables: Optional[MatchTables] = None,
) -> Tuple[InteractionGraph, InstrumentationPlan]:
    """Plan and apply coordination nodes for every covered finding."""
    tables = tables or MatchTables()
    if any(name.startswith(CN_NODE_PREFIX) for name in graph.nodes):
        raise AlreadyInstrumented("graph already contains coordination nodes")
    original_fingerprint = graph.fingerprint()
    if report is None:
        report = discover_all(graph, tables)
    if report.graph_fingerprint != original_fingerprint:
        raise FingerprintMismatch(
            f"report is for {report.graph_fingerprint[:12]}, graph is {original_fingerprint[:12]}"
        )

    working = _Working(graph)
    cns: List[CnPlan] = []
    flow_counter = 0
    counters = {"grcn": 0, "fpm": 0, "rsrcn": 0, "msrcn": 0}

    def next_flow() -> str:
        nonlocal flow_counter
        flow_counter += 1
        return f"f{flow_counter}"

    def next_cn(prefix: str) -> str:
        counters[prefix] += 1
        return f"{prefix}{counters[prefix]}"

    def remap_publishers(topic: str, role: FlowRole) -> List[FlowSpec]:
        flows = []
        msg_type = working.topics[topic]["type"]
        for publisher in working.publishers_of(topic):
            flow_id = next_flow()
            carried = f"{topic}/{flow_id}"
            working.add_topic(carried, msg_type)
            working.rewire_pub(publisher, topic, carried)
            flows.append(
                FlowSpec(
                    flow_id=flow_id,
                    role=role,
                    source_node=publisher,
                    topic=topic,
                    carried_topic=carried,
                    remapped=True,
                )
            )
        return flows

    def tap(topic: str, role: FlowRole) -> FlowSpec:
        return FlowSpec(
            flow_id=next_flow(),
            role=role,
            source_node="",
            topic=topic,
            carried_topic=topic,
            remapped=False,
        )

    gr_findings = sorted(
        report.by_kind(RiskKind.GR_SHARED_TOPIC) + report.by_kind(RiskKind.GR_MULTI_TOPIC),
        key=lambda f: f.sort_key(),
    )
    for finding in gr_findings:
        if finding.kind == RiskKind.GR_MULTI_TOPIC:
            covered: Optional[Tuple[str, ...]] = None
            for type_name, group in same_type_sub_groups(graph, finding.successor, tables):
                if group[0] == finding.topic and type_name == finding.msg_type:
                    covered = group
                    break
            if covered is None:
                raise InstrumentationError(
                    f"multi-topic group for {finding.topic} not found on {finding.successor}"
                )
        else:
            covered = (finding.topic,)
        cn_id = next_cn("grcn")
        flows: List[FlowSpec] = []
        for topic in covered:
            flows.extend(remap_publishers(topic, FlowRole.GENERIC))
        node_name = CN_NODE_PREFIX + cn_id
        working.add_cn_node(
            node_name,
            subs=[f.carried_topic for f in flows],
            pubs=list(covered),
        )
        cns.append(
            CnPlan(
                cn_id=cn_id,
                cn_type=CnType.GRCN,
                node_name=node_name,
                findings=(f"{finding.kind.value}:{finding.topic}",),
                flows=tuple(flows),
                output_topics=covered,
                added_topics=tuple(f.carried_topic for f in flows),
                suggested_policy=_suggest_grcn_policy(working, covered, tables),
                default_policy={"policy": "block"},
            )
        )

    image_findings = sorted(report.by_kind(RiskKind.RSR_IMAGE), key=lambda f: f.sort_key())
    fps_topics: List[str] = []
    monitored: Dict[str, List[str]] = {}
    for finding in image_findings:
        monitored.setdefault(finding.topic, []).append(
            f"{finding.kind.value}:{finding.topic}"
        )
    for detection_topic in sorted(monitored):
        cn_id = next_cn("fpm")
        node_name = CN_NODE_PREFIX + cn_id
        fps_topic = detection_topic + FPS_TOPIC_SUFFIX
        working.add_topic(fps_topic, FPS_MSG_TYPE)
        flow = tap(detection_topic, FlowRole.IFLOW)
        working.add_cn_node(node_name, subs=[detection_topic], pubs=[fps_topic])
        fps_topics.append(fps_topic)
        cns.append(
            CnPlan(
                cn_id=cn_id,
                cn_type=CnType.FPS_MONITOR,
                node_name=node_name,
                findings=tuple(monitored[detection_topic]),
                flows=(flow,),
                output_topics=(fps_topic,),
                added_topics=(fps_topic,),
                suggested_policy="",
                default_policy={},
            )
        )

    for finding in sorted(report.by_kind(RiskKind.RSR_MAX_VEL), key=lambda f: f.sort_key()):
        cn_id = next_cn("rsrcn")
        node_name = CN_NODE_PREFIX + cn_id
        flows = remap_publishers(finding.topic, FlowRole.VFLOW)
        for fps_topic in fps_topics:
            flows.append(tap(fps_topic, FlowRole.FPS))
        working.add_cn_node(
            node_name,
            subs=[f.carried_topic for f in flows],
            pubs=[finding.topic],
        )
        cns.append(
            CnPlan(
                cn_id=cn_id,
                cn_type=CnType.RSRCN,
                node_name=node_name,
                findings=(f"{finding.kind.value}:{finding.topic}",),
                flows=tuple(flows),
                output_topics=(finding.topic,),
                added_topics=tuple(f.carried_topic for f in flows if f.remapped),
                suggested_policy="safe",
                default_policy={"policy": "block"},
            )
        )

    event_findings = sorted(report.by_kind(RiskKind.MSR_EVENT), key=lambda f: f.sort_key())
    action_findings = sorted(report.by_kind(RiskKind.MSR_ACTION), key=lambda f: f.sort_key())
    if event_findings or action_findings:
        cn_id = next_cn("msrcn")
        node_name = CN_NODE_PREFIX + cn_id
        eflow_topics = sorted(
            {f.topic for f in event_findings} | {f.topic for f in image_findings}
        )
        action_topics = sorted({f.topic for f in action_findings})
        flows = [tap(topic, FlowRole.EFLOW) for topic in eflow_topics]
        for topic in action_topics:
            flows.extend(remap_publishers(topic, FlowRole.AFLOW))
        working.add_cn_node(
            node_name,
            subs=[f.carried_topic for f in flows],
            pubs=list(action_topics),
        )
        labels = [f"{f.kind.value}:{f.topic}" for f in event_findings + action_findings]
        cns.append(
            CnPlan(
                cn_id=cn_id,
                cn_type=CnType.MSRCN,
                node_name=node_name,
                findings=tuple(labels),
                flows=tuple(flows),
                output_topics=tuple(action_topics),
                added_topics=tuple(f.carried_topic for f in flows if f.remapped),
                suggested_policy="msr_block",
                default_policy={"policy": "msr_block"},
            )
        )

    instrumented = working.to_graph()
    plan = InstrumentationPlan(
        graph_name=graph.name,
        original_fingerprint=original_fingerprint,
        instrumented_fingerprint=instrumented.fingerprint(),
        cns=tuple(cns),
    )
    return instrumented, plan


def un_instrument(graph: InteractionGraph, plan: InstrumentationPlan) -> InteractionGraph:
    """Reverse a plan exactly; the result must match the original fingerprint."""
    if graph.fingerprint() != plan.instrumented_fingerprint:
        raise FingerprintMismatch(
            "graph does not match the plan's instrumented fingerprint"
        )
    working = _Working(graph)
    for cn in reversed(plan.cns):
        working.remove_node(cn.node_name)
        for flow in cn.flows:
            if flow.remapped:
                working.rewire_pub(flow.source_node, flow.carried_topic, flow.topic)
        for topic in cn.added_topics:
            working.remove_topic(topic)
    restored = working.to_graph()
    if restored.fingerprint() != plan.original_fingerprint:
        raise FingerprintMismatch("reversal did not restore the original graph")
    return restored


def cn_state_for(cn: CnPlan) -> CnState:
    """Fresh runtime state for one planned coordination node."""
    if cn.cn_type == CnType.FPS_MONITOR:
        raise InstrumentationError("fps monitors use FpsMonitorState")
    return CnState(
        cn_type=cn.cn_type,
        flow_roles={f.flow_id: f.role for f in cn.flows},
        flow_topics={f.flow_id: f.topic for f in cn.flows},
    )


def fps_state_for(cn: CnPlan) -> FpsMonitorState:
    if cn.cn_type != CnType.FPS_MONITOR:
        raise InstrumentationError(f"{cn.cn_id} is not an fps monitor")
    return FpsMonitorState()


def emission_bindings(plan: InstrumentationPlan) -> Dict[str, Dict[str, str]]:
    """Actual publish topic per (coordination node, original topic).

    A node emits on the original topic unless a later node rewired its
    output, in which case the message goes to the rewired carrier instead.
    """
    bindings: Dict[str, Dict[str, str]] = {}
    for cn in plan.cns:
        bindings[cn.node_name] = {t: t for t in cn.output_topics}
    for cn in plan.cns:
        for flow in cn.flows:
            if flow.remapped and flow.source_node in bindings:
                table = bindings[flow.source_node]
                if flow.topic in table:
                    table[flow.topic] = flow.carried_topic
    return bindings


def carried_to_flow(cn: CnPlan) -> Dict[str, str]:
    """Input topic to flow id map for one coordination node."""
    return {f.carried_topic: f.flow_id for f in cn.flows}


def cn_config_doc(plan: InstrumentationPlan) -> List[Dict[str, Any]]:
    """Coordination-node config artifact: one entry per node with its flows
    and the policy currently assigned, in a shape stable enough to diff."""
    doc = []
    for cn in plan.cns:
        policy = dict(cn.default_policy)
        doc.append(
            {
                "id": cn.cn_id,
                "type": cn.cn_type.value,
                "flows": [
                    {
                        "flow_id": f.flow_id,
                        "source_node": f.source_node,
                        "original_topic": f.topic,
                        "rewired_topic": f.carried_topic,
                        "role": f.role.value,
                    }
                    for f in cn.flows
                ],
                "policy": policy.pop("policy", ""),
                "params": policy,
            }
        )
    return doc
