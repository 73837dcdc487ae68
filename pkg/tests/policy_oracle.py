"""Reference interpreter for coordination-node policies.

Independent of the engine on purpose: state is a plain dict, selection is
done with explicit sorts over full scans, and event bits are recomputed
from the arrival log instead of being maintained incrementally. The
property tests replay the same inputs through both and demand identical
emissions and drops at every step.
"""
import json
import math

_CLASS = {
    "block": "gate",
    "fifo_queue": "queue",
    "priority_queue": "queue",
    "preemption": "preempt",
    "safe": "velocity",
    "constrain": "velocity",
    "msr_block": "rules",
}


def canon(payload):
    return json.dumps(payload, sort_keys=True)


def _num(payload, path):
    node = payload
    for key in path.split("."):
        if not isinstance(node, dict):
            return None
        if key not in node:
            return None
        node = node[key]
    if isinstance(node, bool):
        return None
    if isinstance(node, (int, float)):
        return float(node)
    return None


def _trigger_ok(trigger, payload):
    if not trigger:
        return True
    region = trigger.get("region")
    if region is not None:
        base = trigger.get("field") or "position"
        x = _num(payload, base + ".x")
        y = _num(payload, base + ".y")
        if x is None or y is None:
            return False
        if x < region["x_min"] or x > region["x_max"]:
            return False
        if y < region["y_min"] or y > region["y_max"]:
            return False
        return True
    field = trigger.get("field")
    if field is None:
        return True
    actual = _num(payload, field)
    if actual is None:
        return False
    op = trigger.get("op")
    want = trigger.get("value")
    if op == "<":
        return actual < want
    if op == "<=":
        return actual <= want
    if op == ">":
        return actual > want
    if op == ">=":
        return actual >= want
    if op == "==":
        return actual == want
    return False


def _cond_ok(cond, bits):
    if "flow" in cond:
        return bits.get(cond["flow"], 0) == 1
    op = cond["op"]
    if op == "and":
        for sub in cond["args"]:
            if not _cond_ok(sub, bits):
                return False
        return True
    if op == "or":
        for sub in cond["args"]:
            if _cond_ok(sub, bits):
                return True
        return False
    if op == "not":
        return not _cond_ok(cond["arg"], bits)
    raise ValueError(f"bad condition {cond!r}")


class ReferenceCn:
    """Replays one coordination node's policy decisions step by step."""

    def __init__(self, cn_type, flow_roles, flow_topics=None):
        self.cn_type = cn_type
        self.flow_roles = dict(flow_roles)
        self.flow_topics = dict(flow_topics or {})
        for flow in self.flow_roles:
            if flow not in self.flow_topics:
                self.flow_topics[flow] = flow
        self.policy = None
        self.arrival_log = []  # (time, seq, flow, payload) for known flows
        self.pending = []  # queued entries as dicts
        self.seq = 0

    def configure(self, policy_doc):
        if self.policy is not None:
            if _CLASS[self.policy["policy"]] != _CLASS[policy_doc["policy"]]:
                self.pending = []
        self.policy = policy_doc

    def _priority_of(self, flow):
        return self.policy.get("priority", {}).get(flow, math.inf)

    def _pick_per_topic(self, entries):
        """entries: list of (idx, flow, payload) in batch order. Returns
        (emitted sorted by flow, dropped in batch order)."""
        groups = {}
        for idx, flow, payload in entries:
            groups.setdefault(self.flow_topics[flow], []).append((idx, flow, payload))
        emitted = []
        winner_ids = set()
        for topic in groups:
            batch = groups[topic]
            flows_here = sorted(
                {flow for _idx, flow, _p in batch},
                key=lambda f: (self._priority_of(f), f),
            )
            best = flows_here[0]
            best_entries = [e for e in batch if e[1] == best]
            winner = best_entries[-1]
            winner_ids.add(winner[0])
            emitted.append((winner[1], winner[2]))
        dropped = [
            (flow, payload, "superseded")
            for idx, flow, payload in entries
            if idx not in winner_ids
        ]
        emitted.sort(key=lambda item: item[0])
        return emitted, dropped

    def step(self, now, arrivals):
        emitted = []
        dropped = []
        known = []  # (idx, seq, flow, payload)
        for idx, (flow, payload) in enumerate(arrivals):
            if flow in self.flow_roles:
                self.seq += 1
                self.arrival_log.append((now, self.seq, flow, payload))
                known.append((idx, self.seq, flow, payload))
            else:
                dropped.append((flow, payload, "unknown_flow"))

        name = self.policy["policy"]
        if self.cn_type == "grcn":
            if name == "block":
                open_entries = []
                for idx, _seq, flow, payload in known:
                    if self.policy.get("block_bits", {}).get(flow, 0) == 1:
                        dropped.append((flow, payload, "blocked"))
                    else:
                        open_entries.append((idx, flow, payload))
                winners, losers = self._pick_per_topic(open_entries)
                emitted.extend(winners)
                dropped.extend(losers)
            elif name in ("fifo_queue", "priority_queue"):
                for _idx, seq, flow, payload in known:
                    self.pending.append(
                        {"time": now, "seq": seq, "flow": flow, "payload": payload}
                    )
                timeout = self.policy["timeout"]
                survivors = []
                for entry in self.pending:
                    if now - entry["time"] > timeout:
                        dropped.append((entry["flow"], entry["payload"], "timeout"))
                    else:
                        survivors.append(entry)
                self.pending = survivors
                if self.pending:
                    if name == "fifo_queue":
                        self.pending.sort(key=lambda e: (e["time"], e["seq"]))
                    else:
                        self.pending.sort(
                            key=lambda e: (self._priority_of(e["flow"]), e["time"], e["seq"])
                        )
                    head = self.pending.pop(0)
                    emitted.append((head["flow"], head["payload"]))
            elif name == "preemption":
                window = self.policy.get("activity_window", 0.5)
                latest = {}
                for t, _seq, flow, _payload in self.arrival_log:
                    if t <= now:
                        latest[flow] = max(latest.get(flow, t), t)
                active = sorted(
                    [f for f, t in latest.items() if now - t <= window],
                    key=lambda f: (self._priority_of(f), f),
                )
                if active:
                    champion = active[0]
                    champion_entries = [e for e in known if e[2] == champion]
                    last_idx = champion_entries[-1][0] if champion_entries else None
                    for idx, _seq, flow, payload in known:
                        if flow != champion:
                            dropped.append((flow, payload, "preempted"))
                        elif idx != last_idx:
                            dropped.append((flow, payload, "superseded"))
                    if champion_entries:
                        emitted.append((champion, champion_entries[-1][3]))
            else:
                raise ValueError(name)
            return emitted, dropped

        if self.cn_type == "rsrcn":
            velocity = [
                (idx, flow, payload)
                for idx, _seq, flow, payload in known
                if self.flow_roles[flow] != "fps"
            ]
            if name == "block":
                open_entries = []
                for idx, flow, payload in velocity:
                    if self.policy.get("block_bits", {}).get(flow, 0) == 1:
                        dropped.append((flow, payload, "blocked"))
                    else:
                        open_entries.append((idx, flow, payload))
                winners, losers = self._pick_per_topic(open_entries)
                emitted.extend(winners)
                dropped.extend(losers)
                return emitted, dropped
            winners, losers = self._pick_per_topic(velocity)
            dropped.extend(losers)
            if name == "safe":
                ceiling = self.policy["threshold"] * self._fps_floor(now)
            elif name == "constrain":
                ceiling = self.policy["max_vel_limit"]
            else:
                raise ValueError(name)
            for flow, payload in winners:
                value = _num(payload, "value")
                if value is None:
                    dropped.append((flow, payload, "not_numeric"))
                else:
                    emitted.append(
                        (flow, {"kind": "scalar", "value": float(min(value, ceiling))})
                    )
            return emitted, dropped

        if self.cn_type == "msrcn":
            if name != "msr_block":
                raise ValueError(name)
            freshness = self.policy.get("freshness_window", 1.0)
            actions = [
                (idx, flow, payload)
                for idx, _seq, flow, payload in known
                if self.flow_roles[flow] != "eflow"
            ]
            bits = {}
            for flow, role in self.flow_roles.items():
                if role == "eflow":
                    bits[flow] = self._event_bit_from_log(flow, now, freshness)
            for bit_name, derived in self.policy.get("derived_eflows", {}).items():
                bits[bit_name] = self._derived_bit_from_log(derived, now, freshness)
            open_entries = []
            for idx, flow, payload in actions:
                decided = None
                for rule in self.policy.get("msr_rules", []):
                    if rule["target_aflow"] != flow:
                        continue
                    if _cond_ok(rule["condition"], bits):
                        decided = rule
                        break
                if decided is not None and decided["effect"] == "block":
                    dropped.append((flow, payload, "rule:" + decided["rule_id"]))
                elif decided is None and self.policy.get("strict_deny", False):
                    dropped.append((flow, payload, "default_deny"))
                else:
                    open_entries.append((idx, flow, payload))
            winners, losers = self._pick_per_topic(open_entries)
            emitted.extend(winners)
            dropped.extend(losers)
            return emitted, dropped

        raise ValueError(self.cn_type)

    def _fps_floor(self, now):
        freshness = self.policy.get("freshness_window", 1.0)
        fps_flows = sorted(
            f for f, role in self.flow_roles.items() if role == "fps"
        )
        if not fps_flows:
            return 0.0
        floor = None
        for flow in fps_flows:
            sample = None
            for t, _seq, f, payload in self.arrival_log:
                if f != flow or t > now:
                    continue
                value = _num(payload, "value")
                if value is not None:
                    sample = (value, t)
            if sample is None or now - sample[1] > freshness:
                return 0.0
            floor = sample[0] if floor is None else min(floor, sample[0])
        return floor

    def _event_bit_from_log(self, flow, now, freshness):
        trigger = self.policy.get("eflow_triggers", {}).get(flow)
        newest = None
        for t, _seq, f, payload in self.arrival_log:
            if f != flow or t > now:
                continue
            if _trigger_ok(trigger, payload):
                newest = t
        if newest is None:
            return 0
        return 1 if now - newest <= freshness else 0

    def _derived_bit_from_log(self, derived, now, freshness):
        newest = None
        for t, _seq, f, payload in self.arrival_log:
            if f != derived["source_flow"] or t > now:
                continue
            if _trigger_ok(derived.get("trigger"), payload):
                newest = t
        if newest is None:
            return 0
        return 1 if now - newest <= freshness else 0
