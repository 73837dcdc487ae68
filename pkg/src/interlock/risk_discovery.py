"""Rule-based discovery of risky interaction patterns in a pub/sub graph.

Three families come out of the scan:

* general risks (GR): topic contention between publishers, and nodes fusing
  several same-type topics where any one input can steer the result;
* robot-specific risks (RSR): velocity-bound topics and image recognizers
  whose output gates downstream motion;
* mission-specific risks (MSR): event sources and action channels that a
  mission-level policy may need to veto.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from .graph_model import InteractionGraph, MessageType, TopicSpec


class RiskKind(str, Enum):
    GR_SHARED_TOPIC = "gr_shared_topic"
    GR_MULTI_TOPIC = "gr_multi_topic"
    RSR_MAX_VEL = "rsr_max_vel"
    RSR_IMAGE = "rsr_image"
    MSR_EVENT = "msr_event"
    MSR_ACTION = "msr_action"


DEFAULT_EVENT_MSG_TYPES: Tuple[str, ...] = (
    "sensor_msgs/BatteryState",
    "sensor_msgs/Temperature",
    "sensor_msgs/RelativeHumidity",
    "sensor_msgs/MagneticField",
    "sensor_msgs/FluidPressure",
    "sensor_msgs/NavSatFix",
    "sensor_msgs/Illuminance",
    "nav_msgs/Odometry",
)

DEFAULT_ACTION_MSG_TYPES: Tuple[str, ...] = (
    "geometry_msgs/Twist",
    "control_msgs/FollowJointTrajectoryAction",
    "audio_common_msgs/AudioData",
)

DEFAULT_RECOG_KEYWORDS: Tuple[str, ...] = (
    "detect",
    "people",
    "face",
    "object",
    "person",
    "sign",
    "traffic",
    "lane",
)

DEFAULT_LOG_VIZ_KEYWORDS: Tuple[str, ...] = (
    "rosout",
    "log",
    "rviz",
    "visual",
    "status_viz",
)

MAX_VEL_TOPIC_KEYWORD = "max_vel"
MAX_VEL_MSG_TYPE = "std_msgs/Float64"
IMAGE_MSG_TYPE = "sensor_msgs/Image"
EVENT_NAME_KEYWORD = "detect"
ACTION_NAME_KEYWORD = "goal"


def canonical_type_entry(entry: str) -> str:
    """Message packages come in singular/plural spellings in the wild; fold `_msg` to `_msgs`."""
    if "/" in entry:
        package, rest = entry.split("/", 1)
        if package.endswith("_msg"):
            package += "s"
        return f"{package}/{rest}"
    return entry


def type_matches(entry: str, msg_type: MessageType) -> bool:
    """Exact full-name match after normalization, with substring fallback.

    Name comparisons elsewhere are case-insensitive; type packages stay
    case-sensitive on purpose (std_msgs and Std_Msgs are different packages).
    """
    entry = canonical_type_entry(entry)
    full = msg_type.full_name
    return entry == full or entry in full


@dataclass(frozen=True)
class MatchTables:
    """The keyword/type tables the scan matches against; all fields overridable."""

    event_msg_types: Tuple[str, ...] = DEFAULT_EVENT_MSG_TYPES
    action_msg_types: Tuple[str, ...] = DEFAULT_ACTION_MSG_TYPES
    recog_keywords: Tuple[str, ...] = DEFAULT_RECOG_KEYWORDS
    log_viz_keywords: Tuple[str, ...] = DEFAULT_LOG_VIZ_KEYWORDS

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "MatchTables":
        kwargs = {}
        for key in ("event_msg_types", "action_msg_types", "recog_keywords", "log_viz_keywords"):
            if key in doc:
                kwargs[key] = tuple(doc[key])
        unknown = set(doc) - set(kwargs)
        if unknown:
            raise ValueError(f"unknown match table fields {sorted(unknown)}")
        return cls(**kwargs)


def is_log_viz_topic(topic: TopicSpec, tables: MatchTables) -> bool:
    if topic.tags & {"log", "visualization"}:
        return True
    lowered = topic.name.lower()
    return any(word in lowered for word in tables.log_viz_keywords)


@dataclass(frozen=True)
class RiskFinding:
    kind: RiskKind
    risky_nodes: FrozenSet[str]
    topic: str
    msg_type: str
    successor: Optional[str]
    evidence: str

    def sort_key(self) -> Tuple[str, str, str]:
        return (self.topic, min(self.risky_nodes), self.kind.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "risky_nodes": sorted(self.risky_nodes),
            "topic": self.topic,
            "msg_type": self.msg_type,
            "successor": self.successor,
            "evidence": self.evidence,
        }


def _finding_from_dict(doc: Dict[str, Any]) -> RiskFinding:
    return RiskFinding(
        kind=RiskKind(doc["kind"]),
        risky_nodes=frozenset(doc["risky_nodes"]),
        topic=doc["topic"],
        msg_type=doc["msg_type"],
        successor=doc.get("successor"),
        evidence=doc["evidence"],
    )


def _first_subscriber(graph: InteractionGraph, topic: str) -> Optional[str]:
    subs = graph.subscribers_of(topic)
    return min(subs) if subs else None


def same_type_sub_groups(
    graph: InteractionGraph, node_name: str, tables: MatchTables
) -> List[Tuple[str, Tuple[str, ...]]]:
    """Groups of two or more same-type subscriptions for one node.

    Log and visualization topics are excluded before grouping. Pairs come
    back as (type full name, sorted topic tuple), ordered by type name; the
    instrumentation planner keys off the same grouping the scan flags.
    """
    node = graph.nodes[node_name]
    by_type: Dict[str, List[str]] = {}
    for sub in node.subscribes:
        topic = graph.topics[sub]
        if is_log_viz_topic(topic, tables):
            continue
        by_type.setdefault(topic.msg_type.full_name, []).append(sub)
    return [
        (type_name, tuple(sorted(by_type[type_name])))
        for type_name in sorted(by_type)
        if len(by_type[type_name]) >= 2
    ]


def discover_gr(graph: InteractionGraph, tables: MatchTables) -> List[RiskFinding]:
    """General risks: shared-topic contention and same-type multi-topic fusion."""
    findings: List[RiskFinding] = []
    for name in sorted(graph.topics):
        topic = graph.topics[name]
        if is_log_viz_topic(topic, tables):
            continue
        publishers = graph.publishers_of(name)
        if len(publishers) > 1:
            findings.append(
                RiskFinding(
                    kind=RiskKind.GR_SHARED_TOPIC,
                    risky_nodes=publishers,
                    topic=name,
                    msg_type=topic.msg_type.full_name,
                    successor=_first_subscriber(graph, name),
                    evidence=(
                        f"{len(publishers)} publishers contend on {name}: "
                        f"{sorted(publishers)}; consumers={sorted(graph.subscribers_of(name))}"
                    ),
                )
            )
    for node_name in sorted(graph.nodes):
        for type_name, group in same_type_sub_groups(graph, node_name, tables):
            publishers = sorted(set().union(*(graph.publishers_of(t) for t in group)))
            findings.append(
                RiskFinding(
                    kind=RiskKind.GR_MULTI_TOPIC,
                    risky_nodes=frozenset({node_name}),
                    topic=group[0],
                    msg_type=type_name,
                    successor=node_name,
                    evidence=(
                        f"{node_name} fuses {len(group)} {type_name} topics: "
                        f"{list(group)}; publishers={publishers}"
                    ),
                )
            )
    return findings


def discover_rsr(graph: InteractionGraph, tables: MatchTables) -> List[RiskFinding]:
    """Robot-specific risks: velocity-bound topics and recognition pipelines."""
    findings: List[RiskFinding] = []
    for name in sorted(graph.topics):
        topic = graph.topics[name]
        if MAX_VEL_TOPIC_KEYWORD in name.lower() and topic.msg_type.full_name == MAX_VEL_MSG_TYPE:
            publishers = graph.publishers_of(name)
            if not publishers:
                continue
            findings.append(
                RiskFinding(
                    kind=RiskKind.RSR_MAX_VEL,
                    risky_nodes=publishers,
                    topic=name,
                    msg_type=topic.msg_type.full_name,
                    successor=_first_subscriber(graph, name),
                    evidence=(
                        f"velocity bound {name} set by {sorted(publishers)}; "
                        f"consumers={sorted(graph.subscribers_of(name))}"
                    ),
                )
            )
    for node_name in sorted(graph.nodes):
        node = graph.nodes[node_name]
        image_subs = [
            t for t in node.subscribes
            if graph.topics[t].msg_type.full_name == IMAGE_MSG_TYPE
        ]
        if not image_subs:
            continue
        recog_outs = [
            t for t in node.publishes
            if any(word in t.lower() for word in tables.recog_keywords)
        ]
        if not recog_outs:
            continue
        out = sorted(recog_outs)[0]
        findings.append(
            RiskFinding(
                kind=RiskKind.RSR_IMAGE,
                risky_nodes=frozenset({node_name}),
                topic=out,
                msg_type=graph.topics[out].msg_type.full_name,
                successor=_first_subscriber(graph, out),
                evidence=(
                    f"{node_name} recognizes from {sorted(image_subs)} and "
                    f"publishes {sorted(recog_outs)}"
                ),
            )
        )
    return findings


def discover_msr(graph: InteractionGraph, tables: MatchTables) -> List[RiskFinding]:
    """Mission-specific risks: event sources and action channels."""
    findings: List[RiskFinding] = []
    for name in sorted(graph.topics):
        topic = graph.topics[name]
        publishers = graph.publishers_of(name)
        if not publishers:
            continue
        is_event = any(type_matches(e, topic.msg_type) for e in tables.event_msg_types) or (
            EVENT_NAME_KEYWORD in name.lower()
        )
        if is_event:
            findings.append(
                RiskFinding(
                    kind=RiskKind.MSR_EVENT,
                    risky_nodes=publishers,
                    topic=name,
                    msg_type=topic.msg_type.full_name,
                    successor=_first_subscriber(graph, name),
                    evidence=(
                        f"event source {name} from {sorted(publishers)}; "
                        f"consumers={sorted(graph.subscribers_of(name))}"
                    ),
                )
            )
        is_action = any(type_matches(a, topic.msg_type) for a in tables.action_msg_types) or (
            ACTION_NAME_KEYWORD in name.lower()
        )
        if is_action:
            findings.append(
                RiskFinding(
                    kind=RiskKind.MSR_ACTION,
                    risky_nodes=publishers,
                    topic=name,
                    msg_type=topic.msg_type.full_name,
                    successor=_first_subscriber(graph, name),
                    evidence=(
                        f"action channel {name} driven by {sorted(publishers)}; "
                        f"consumers={sorted(graph.subscribers_of(name))}"
                    ),
                )
            )
    return findings


@dataclass
class RiskReport:
    graph_name: str
    graph_fingerprint: str
    findings: List[RiskFinding] = field(default_factory=list)

    def by_kind(self, kind: RiskKind) -> List[RiskFinding]:
        return [f for f in self.findings if f.kind == kind]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "graph_name": self.graph_name,
            "graph_fingerprint": self.graph_fingerprint,
            "findings": [f.to_dict() for f in self.findings],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RiskReport":
        return cls(
            graph_name=doc["graph_name"],
            graph_fingerprint=doc["graph_fingerprint"],
            findings=[_finding_from_dict(f) for f in doc["findings"]],
        )

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RiskReport":
        return cls.from_dict(json.loads(text))


def discover_all(graph: InteractionGraph, tables: Optional[MatchTables] = None) -> RiskReport:
    """Run every rule family and return a deterministically ordered report."""
    tables = tables or MatchTables()
    findings = (
        discover_gr(graph, tables)
        + discover_rsr(graph, tables)
        + discover_msr(graph, tables)
    )
    findings.sort(key=lambda f: f.sort_key())
    return RiskReport(
        graph_name=graph.name,
        graph_fingerprint=graph.fingerprint(),
        findings=findings,
    )
