"""Seeded random interaction-graph generator, used for fuzzing and scale tests."""
from __future__ import annotations

import random
from typing import Optional

from .graph_model import InteractionGraph, graph_from_dict

# A mix of plain types and types the risk rules care about, so random graphs
# exercise every rule family.
TYPE_POOL = (
    "sensor_msgs/Image",
    "sensor_msgs/LaserScan",
    "sensor_msgs/BatteryState",
    "nav_msgs/Odometry",
    "geometry_msgs/Twist",
    "geometry_msgs/PoseStamped",
    "std_msgs/Float64",
    "std_msgs/UInt8",
    "std_msgs/String",
    "std_msgs/Float32MultiArray",
    "audio_common_msgs/AudioData",
)

NAME_STEMS = (
    "camera", "scan", "status", "objects", "goal", "cmd", "detect",
    "max_vel", "pose", "audio", "light", "lane", "state", "buffer",
    "rviz_marker", "log_feed",
)


def random_graph(
    seed: int,
    max_nodes: int = 20,
    max_topics: int = 30,
    name: Optional[str] = None,
) -> InteractionGraph:
    """Build a random but always-valid graph; the same seed yields the same graph."""
    rng = random.Random(seed)
    n_topics = rng.randint(2, max_topics)
    n_nodes = rng.randint(2, max_nodes)
    topics = []
    for i in range(n_topics):
        stem = rng.choice(NAME_STEMS)
        entry = {"name": f"/{stem}_{i}", "type": rng.choice(TYPE_POOL)}
        if rng.random() < 0.08:
            entry["tags"] = [rng.choice(["log", "visualization"])]
        topics.append(entry)
    topic_names = [t["name"] for t in topics]
    nodes = []
    for i in range(n_nodes):
        k_pub = rng.randint(0, min(4, n_topics))
        k_sub = rng.randint(0, min(4, n_topics))
        nodes.append(
            {
                "name": f"/node_{i}",
                "pub": rng.sample(topic_names, k_pub),
                "sub": rng.sample(topic_names, k_sub),
            }
        )
    return graph_from_dict(
        {"name": name or f"random_{seed}", "topics": topics, "nodes": nodes}
    )


def scale_graph(seed: int, n_nodes: int, n_topics: int, name: str = "scale") -> InteractionGraph:
    """A graph with exact node/topic counts for throughput checks."""
    rng = random.Random(seed)
    topics = [
        {"name": f"/t{i}_{rng.choice(NAME_STEMS)}", "type": rng.choice(TYPE_POOL)}
        for i in range(n_topics)
    ]
    topic_names = [t["name"] for t in topics]
    nodes = []
    for i in range(n_nodes):
        k_pub = rng.randint(1, min(8, n_topics))
        k_sub = rng.randint(1, min(8, n_topics))
        nodes.append(
            {
                "name": f"/n{i}",
                "pub": rng.sample(topic_names, k_pub),
                "sub": rng.sample(topic_names, k_sub),
            }
        )
    return graph_from_dict({"name": name, "topics": topics, "nodes": nodes})
