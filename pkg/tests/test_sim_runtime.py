from __future__ import annotations

import json
from pathlib import Path

import pytest

from interlock import sim_runtime
from interlock.graph_model import load_graph, serialize_graph
from interlock.sim_runtime import (
    Scenario,
    ScenarioError,
    load_scenario,
    load_trace,
    measure_cn_overhead,
    run_scenario,
    write_trace,
)

SCENARIO_FILES = [
    "gr_cmd_vel_hijack.json",
    "rsr_speed_override.json",
    "msr_unstable_goal.json",
]

VIOLATION_CHECK = {
    "gr_cmd_vel_hijack": "no_hijack",
    "rsr_speed_override": "no_overspeed",
    "msr_unstable_goal": "no_unstable_goal",
}


@pytest.fixture(params=SCENARIO_FILES)
def scenario(request, fixtures_dir) -> Scenario:
    return load_scenario(fixtures_dir / "scenarios" / request.param)


def test_scenario_files_load(fixtures_dir):
    for name in SCENARIO_FILES:
        scenario = load_scenario(fixtures_dir / "scenarios" / name)
        assert scenario.duration > 0
        assert scenario.checks
        assert scenario.policies
        assert scenario.graph_path.exists()


def test_scenario_rejects_unknown_fields(tmp_path, fixtures_dir):
    doc = json.loads((fixtures_dir / "scenarios" / SCENARIO_FILES[0]).read_text())
    doc["surprise"] = 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_scenario_rejects_unknown_behavior_kind(tmp_path, fixtures_dir):
    doc = json.loads((fixtures_dir / "scenarios" / SCENARIO_FILES[0]).read_text())
    doc["behaviors"]["/move_base"][0]["kind"] = "sometimes"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_behavior_must_match_graph(fixtures_dir):
    scenario = load_scenario(fixtures_dir / "scenarios" / SCENARIO_FILES[0])
    scenario.behaviors["/ghost"] = scenario.behaviors["/move_base"]
    with pytest.raises(ScenarioError):
        run_scenario(scenario, instrumented=False, attack=False)


def test_runs_are_deterministic(scenario):
    first = run_scenario(scenario, instrumented=True, attack=True)
    second = run_scenario(scenario, instrumented=True, attack=True)
    dump = lambda trace: "\n".join(json.dumps(e, sort_keys=True) for e in trace)
    assert dump(first.trace) == dump(second.trace)
    assert first.checks == second.checks


def test_trace_round_trip(tmp_path, scenario):
    result = run_scenario(scenario, instrumented=True, attack=True)
    path = tmp_path / "trace.jsonl"
    write_trace(result.trace, path)
    assert load_trace(path) == json.loads(json.dumps(result.trace))


def test_benign_checks_pass_everywhere(scenario):
    plain = run_scenario(scenario, instrumented=False, attack=False)
    assert plain.all_checks_pass, plain.checks
    guarded = run_scenario(scenario, instrumented=True, attack=False)
    assert guarded.all_checks_pass, guarded.checks
    assert not plain.violations


def test_non_interference_of_default_policies(scenario):
    plain = run_scenario(scenario, instrumented=False, attack=False)
    defaults = run_scenario(
        scenario, instrumented=True, attack=False, apply_policies=False
    )
    assert plain.delivery_signature() == defaults.delivery_signature()
    assert not defaults.violations


def test_attack_succeeds_without_mitigation(scenario):
    result = run_scenario(scenario, instrumented=False, attack=True)
    violated = VIOLATION_CHECK[scenario.name]
    assert result.checks[violated] is False
    others = {k: v for k, v in result.checks.items() if k != violated}
    assert all(others.values()), others


def test_default_policies_do_not_mitigate(scenario):
    result = run_scenario(
        scenario, instrumented=True, attack=True, apply_policies=False
    )
    assert result.checks[VIOLATION_CHECK[scenario.name]] is False


def test_mitigation_blocks_attack(scenario):
    result = run_scenario(scenario, instrumented=True, attack=True)
    assert result.all_checks_pass, result.checks
    assert result.violations


def test_mitigation_reasons_name_the_policy(fixtures_dir):
    scenarios = {
        name: load_scenario(fixtures_dir / "scenarios" / f"{name}.json")
        for name in VIOLATION_CHECK
    }
    gr = run_scenario(scenarios["gr_cmd_vel_hijack"], instrumented=True, attack=True)
    assert any(v["reason"] == "preempted" for v in gr.violations)

    rsr = run_scenario(scenarios["rsr_speed_override"], instrumented=True, attack=True)
    clamps = [v for v in rsr.violations if v["reason"].startswith("clamped:")]
    assert clamps and all(v["action"] == "note" for v in clamps)

    msr = run_scenario(scenarios["msr_unstable_goal"], instrumented=True, attack=True)
    assert any(
        v["reason"] == "rule:block_unstable_goal" for v in msr.violations
    )


def test_instrumented_attack_preserves_benign_goal_delivery(fixtures_dir):
    scenario = load_scenario(fixtures_dir / "scenarios" / "msr_unstable_goal.json")
    result = run_scenario(scenario, instrumented=True, attack=True)
    goals = [
        d for d in result.deliveries
        if d["topic"] == "/move_base_simple/goal" and d["node"] == "/move_base"
    ]
    assert [g["payload"]["position"]["x"] for g in goals] == [5.0, 5.0]
    assert [g["time"] for g in goals] == [0.5, 4.4]


def test_resolver_rejects_unknown_source(fixtures_dir):
    scenario = load_scenario(fixtures_dir / "scenarios" / "gr_cmd_vel_hijack.json")
    bad = dict(scenario.policies[0].policy)
    bad["priority_by_source"] = {"/nobody": 1}
    scenario.policies = (
        sim_runtime.PolicyBinding(scenario.policies[0].finding, bad),
    )
    with pytest.raises(ScenarioError):
        run_scenario(scenario, instrumented=True, attack=False)


def test_resolver_rejects_unmatched_finding(fixtures_dir):
    scenario = load_scenario(fixtures_dir / "scenarios" / "gr_cmd_vel_hijack.json")
    scenario.policies = (
        sim_runtime.PolicyBinding("gr_shared_topic:/nowhere", {"policy": "block"}),
    )
    with pytest.raises(ScenarioError):
        run_scenario(scenario, instrumented=True, attack=False)


def test_event_budget_guard(tmp_path, monkeypatch):
    graph = {
        "name": "loop",
        "topics": [
            {"name": "/a", "type": "std_msgs/Float64"},
            {"name": "/b", "type": "std_msgs/String"},
        ],
        "nodes": [
            {"name": "/ping", "pub": ["/a"], "sub": ["/b"]},
            {"name": "/pong", "pub": ["/b"], "sub": ["/a"]},
        ],
    }
    graph_path = tmp_path / "loop.json"
    graph_path.write_text(json.dumps(graph))
    doc = {
        "name": "loop_forever",
        "graph": "loop.json",
        "duration": 1.0,
        "behaviors": {
            "/ping": [
                {
                    "kind": "script",
                    "steps": [{"at": 0.0, "topic": "/a", "payload": {"kind": "scalar", "value": 1.0}}],
                },
                {
                    "kind": "transform",
                    "on_topic": "/b",
                    "topic": "/a",
                    "payload": {"kind": "scalar", "value": 1.0},
                    "delay": 0.0,
                },
            ],
            "/pong": [
                {
                    "kind": "transform",
                    "on_topic": "/a",
                    "topic": "/b",
                    "payload": {"kind": "scalar", "value": 1.0},
                    "delay": 0.0,
                }
            ],
        },
    }
    scenario_path = tmp_path / "loop_forever.json"
    scenario_path.write_text(json.dumps(doc))
    scenario = load_scenario(scenario_path)
    monkeypatch.setattr(sim_runtime, "EVENT_BUDGET", 5000)
    with pytest.raises(ScenarioError):
        run_scenario(scenario, instrumented=False, attack=False)


def test_transform_emits_after_delay(tmp_path):
    graph = {
        "name": "relay",
        "topics": [
            {"name": "/in", "type": "std_msgs/Float64"},
            {"name": "/out", "type": "std_msgs/String"},
        ],
        "nodes": [
            {"name": "/src", "pub": ["/in"], "sub": []},
            {"name": "/relay", "pub": ["/out"], "sub": ["/in"]},
            {"name": "/sink", "pub": [], "sub": ["/out"]},
        ],
    }
    graph_path = tmp_path / "relay.json"
    graph_path.write_text(json.dumps(graph))
    doc = {
        "name": "relay_once",
        "graph": "relay.json",
        "duration": 2.0,
        "behaviors": {
            "/src": [
                {
                    "kind": "script",
                    "steps": [{"at": 0.5, "topic": "/in", "payload": {"kind": "scalar", "value": 3.0}}],
                }
            ],
            "/relay": [
                {
                    "kind": "transform",
                    "on_topic": "/in",
                    "topic": "/out",
                    "payload": {"kind": "token", "value": "seen"},
                    "delay": 0.25,
                }
            ],
        },
        "checks": [
            {"id": "relayed", "kind": "eventually", "topic": "/out", "to": "/sink"}
        ],
    }
    scenario_path = tmp_path / "relay_once.json"
    scenario_path.write_text(json.dumps(doc))
    result = run_scenario(load_scenario(scenario_path), instrumented=False, attack=False)
    assert result.checks["relayed"] is True
    out = [d for d in result.deliveries if d["topic"] == "/out"]
    assert len(out) == 1 and out[0]["time"] == 0.75


def test_periodic_stop_and_script_bounds(tmp_path):
    graph = {
        "name": "tick",
        "topics": [{"name": "/t", "type": "std_msgs/Float64"}],
        "nodes": [
            {"name": "/clock", "pub": ["/t"], "sub": []},
            {"name": "/ear", "pub": [], "sub": ["/t"]},
        ],
    }
    graph_path = tmp_path / "tick.json"
    graph_path.write_text(json.dumps(graph))
    doc = {
        "name": "tick_bounds",
        "graph": "tick.json",
        "duration": 2.0,
        "behaviors": {
            "/clock": [
                {
                    "kind": "periodic",
                    "topic": "/t",
                    "period": 0.5,
                    "start": 0.0,
                    "stop": 1.0,
                    "payload": {"kind": "scalar", "value": 1.0},
                },
                {
                    "kind": "script",
                    "steps": [
                        {"at": 5.0, "topic": "/t", "payload": {"kind": "scalar", "value": 9.0}}
                    ],
                },
            ]
        },
    }
    scenario_path = tmp_path / "tick_bounds.json"
    scenario_path.write_text(json.dumps(doc))
    result = run_scenario(load_scenario(scenario_path), instrumented=False, attack=False)
    times = [d["time"] for d in result.deliveries]
    assert times == [0.0, 0.5, 1.0]


def test_instrumentation_does_not_mutate_source_graph(scenario):
    before = serialize_graph(load_graph(scenario.graph_path))
    run_scenario(scenario, instrumented=True, attack=True)
    after = serialize_graph(load_graph(scenario.graph_path))
    assert before == after


def test_failed_safety_check_reports_first_offender(fixtures_dir):
    scenario = load_scenario(fixtures_dir / "scenarios" / "rsr_speed_override.json")
    result = run_scenario(scenario, instrumented=False, attack=True)
    entry = result.assertion_report["no_overspeed"]
    assert entry["passed"] is False
    offender = entry["first_offender"]
    assert offender["event"] == "deliver"
    assert offender["time"] == 2.0
    assert offender["payload"]["value"] == 2.0
    violations = [e for e in result.trace if e["event"] == "violation"]
    assert any(v["check"] == "no_overspeed" and v["time"] == 2.0 for v in violations)


def test_trace_event_vocabulary(scenario):
    result = run_scenario(scenario, instrumented=True, attack=True)
    kinds = {e["event"] for e in result.trace}
    assert kinds <= {"publish", "deliver", "cn_decision", "violation"}
    for entry in result.trace:
        if entry["event"] == "cn_decision":
            assert {"time", "cn_id", "flow", "action", "reason"} <= set(entry)


def test_overhead_measurement_shape():
    stats = measure_cn_overhead(chain_lengths=tuple(range(0, 6)), messages=300)
    assert set(stats["per_n_ms"]) == set(range(0, 6))
    assert stats["per_n_ms"][0] == 0.0
    assert 0.0 <= stats["r_squared"] <= 1.0
    assert stats["overhead_at_max_ms"] < 5.0
    assert stats["slope_ms_per_cn"] > 0.0
