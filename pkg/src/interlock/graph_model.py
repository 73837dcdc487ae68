"""Typed pub/sub interaction graphs: nodes, topics, and their wiring."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple


class GraphError(Exception):
    """Base class for graph loading problems."""


class ParseError(GraphError):
    """Raised when the input is not well-formed JSON or not an object."""

    def __init__(self, reason: str, line: Optional[int] = None):
        self.reason = reason
        self.line = line
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"parse error{loc}: {reason}")


class ValidationError(GraphError):
    """Raised when the document is well-formed but violates the graph schema."""

    def __init__(self, reason: str, where: str = ""):
        self.reason = reason
        self.where = where
        at = f" at {where}" if where else ""
        super().__init__(f"invalid graph{at}: {reason}")


class Domain(str, Enum):
    PERCEPTION = "perception"
    PLANNING = "planning"
    CONTROL = "control"
    DRIVER = "driver"
    OTHER = "other"


TOPIC_TAGS = frozenset({"log", "visualization"})

_TOPIC_KEYS = {"name", "type", "tags"}
_NODE_KEYS = {"name", "pub", "sub", "domain", "behavior"}
_GRAPH_KEYS = {"name", "topics", "nodes"}


def normalize_topic_name(name: str) -> str:
    """Topic names are rooted: a missing leading slash is added, never guessed beyond that."""
    if not name:
        raise ValidationError("empty topic name")
    return name if name.startswith("/") else "/" + name


@dataclass(frozen=True)
class MessageType:
    """A message type split as package/type, e.g. geometry_msgs/Twist."""

    package: str
    type_name: str

    @property
    def full_name(self) -> str:
        return f"{self.package}/{self.type_name}"

    @classmethod
    def parse(cls, text: str) -> "MessageType":
        if not isinstance(text, str) or text.count("/") != 1:
            raise ValidationError(f"message type must look like pkg/Name, got {text!r}")
        package, type_name = text.split("/")
        if not package or not type_name:
            raise ValidationError(f"message type must look like pkg/Name, got {text!r}")
        return cls(package=package, type_name=type_name)

    def __str__(self) -> str:
        return self.full_name


@dataclass(frozen=True)
class TopicSpec:
    name: str
    msg_type: MessageType
    tags: FrozenSet[str] = frozenset()

    def __post_init__(self):
        bad = self.tags - TOPIC_TAGS
        if bad:
            raise ValidationError(f"unknown tags {sorted(bad)}", where=self.name)


@dataclass(frozen=True)
class NodeSpec:
    name: str
    publishes: Tuple[str, ...] = ()
    subscribes: Tuple[str, ...] = ()
    domain: Optional[Domain] = None
    # Behavior is an opaque document here; the simulator interprets it.
    behavior: Optional[Dict[str, Any]] = None


@dataclass
class GraphStats:
    node_count: int
    topic_count: int
    edge_count: int

    def to_dict(self) -> Dict[str, int]:
        return {
            "node_count": self.node_count,
            "topic_count": self.topic_count,
            "edge_count": self.edge_count,
        }


@dataclass
class InteractionGraph:
    """An immutable-by-convention pub/sub graph with precomputed direction indexes."""

    name: str
    topics: Dict[str, TopicSpec]
    nodes: Dict[str, NodeSpec]
    _pubs_index: Dict[str, FrozenSet[str]] = field(default_factory=dict, repr=False)
    _subs_index: Dict[str, FrozenSet[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for node in self.nodes.values():
            for topic in node.publishes + node.subscribes:
                if topic not in self.topics:
                    raise ValidationError(
                        f"references undeclared topic {topic}", where=node.name
                    )
        pubs: Dict[str, set] = {t: set() for t in self.topics}
        subs: Dict[str, set] = {t: set() for t in self.topics}
        for node in self.nodes.values():
            for topic in node.publishes:
                pubs[topic].add(node.name)
            for topic in node.subscribes:
                subs[topic].add(node.name)
        self._pubs_index = {t: frozenset(v) for t, v in pubs.items()}
        self._subs_index = {t: frozenset(v) for t, v in subs.items()}

    def publishers_of(self, topic: str) -> FrozenSet[str]:
        return self._pubs_index.get(topic, frozenset())

    def subscribers_of(self, topic: str) -> FrozenSet[str]:
        return self._subs_index.get(topic, frozenset())

    def pubs_of_node(self, node: str) -> Tuple[str, ...]:
        return self.nodes[node].publishes if node in self.nodes else ()

    def subs_of_node(self, node: str) -> Tuple[str, ...]:
        return self.nodes[node].subscribes if node in self.nodes else ()

    def stats(self) -> GraphStats:
        edges = sum(len(n.publishes) + len(n.subscribes) for n in self.nodes.values())
        return GraphStats(
            node_count=len(self.nodes), topic_count=len(self.topics), edge_count=edges
        )

    def fingerprint(self) -> str:
        """Stable content hash; equal graphs hash equal regardless of declaration order."""
        return hashlib.sha256(serialize_graph(self).encode("utf-8")).hexdigest()


def _require_keys(obj: Dict[str, Any], allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"unknown fields {sorted(unknown)}", where=where)


def _build_topic(raw: Any, index: int) -> TopicSpec:
    where = f"topics[{index}]"
    if not isinstance(raw, dict):
        raise ValidationError("topic entry must be an object", where=where)
    _require_keys(raw, _TOPIC_KEYS, where)
    if "name" not in raw or "type" not in raw:
        raise ValidationError("topic needs name and type", where=where)
    name = normalize_topic_name(raw["name"])
    tags = raw.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ValidationError("tags must be a list of strings", where=name)
    return TopicSpec(name=name, msg_type=MessageType.parse(raw["type"]), tags=frozenset(tags))


def _build_node(raw: Any, index: int) -> NodeSpec:
    where = f"nodes[{index}]"
    if not isinstance(raw, dict):
        raise ValidationError("node entry must be an object", where=where)
    _require_keys(raw, _NODE_KEYS, where)
    if "name" not in raw or not raw["name"]:
        raise ValidationError("node needs a name", where=where)
    name = raw["name"]
    for key in ("pub", "sub"):
        val = raw.get(key, [])
        if not isinstance(val, list) or not all(isinstance(t, str) for t in val):
            raise ValidationError(f"{key} must be a list of topic names", where=name)
    domain = None
    if "domain" in raw:
        try:
            domain = Domain(raw["domain"])
        except ValueError:
            raise ValidationError(f"unknown domain {raw['domain']!r}", where=name)
    behavior = raw.get("behavior")
    if behavior is not None and not isinstance(behavior, dict):
        raise ValidationError("behavior must be an object", where=name)
    pubs = tuple(sorted({normalize_topic_name(t) for t in raw.get("pub", [])}))
    subs = tuple(sorted({normalize_topic_name(t) for t in raw.get("sub", [])}))
    return NodeSpec(name=name, publishes=pubs, subscribes=subs, domain=domain, behavior=behavior)


def graph_from_dict(doc: Dict[str, Any]) -> InteractionGraph:
    """Validate a decoded graph document. Declaration order never matters."""
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    _require_keys(doc, _GRAPH_KEYS, "graph")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ValidationError("graph needs a non-empty name")
    topics: Dict[str, TopicSpec] = {}
    for i, raw in enumerate(doc.get("topics", [])):
        topic = _build_topic(raw, i)
        if topic.name in topics:
            raise ValidationError("duplicate topic", where=topic.name)
        topics[topic.name] = topic
    nodes: Dict[str, NodeSpec] = {}
    for i, raw in enumerate(doc.get("nodes", [])):
        node = _build_node(raw, i)
        if node.name in nodes:
            raise ValidationError("duplicate node", where=node.name)
        nodes[node.name] = node
    return InteractionGraph(name=name, topics=topics, nodes=nodes)


def parse_graph(text: str) -> InteractionGraph:
    """Parse graph JSON from a string; see graph_from_dict for the semantic checks."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return graph_from_dict(doc)


def load_graph(path: str) -> InteractionGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def graph_to_dict(graph: InteractionGraph) -> Dict[str, Any]:
    topics: List[Dict[str, Any]] = []
    for topic in sorted(graph.topics.values(), key=lambda t: t.name):
        entry: Dict[str, Any] = {"name": topic.name, "type": topic.msg_type.full_name}
        if topic.tags:
            entry["tags"] = sorted(topic.tags)
        topics.append(entry)
    nodes: List[Dict[str, Any]] = []
    for node in sorted(graph.nodes.values(), key=lambda n: n.name):
        entry = {"name": node.name, "pub": list(node.publishes), "sub": list(node.subscribes)}
        if node.domain is not None:
            entry["domain"] = node.domain.value
        if node.behavior is not None:
            entry["behavior"] = node.behavior
        nodes.append(entry)
    return {"name": graph.name, "topics": topics, "nodes": nodes}


def serialize_graph(graph: InteractionGraph) -> str:
    """Canonical serialization: sorted entries, sorted keys, stable across runs."""
    return json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"


def save_graph(graph: InteractionGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_graph(graph))
