"""Service and web console agree on wire shapes through one shared fixture."""
import json
from pathlib import Path

import pytest
from starlette.testclient import TestClient

from interlock.cli import build_serve_session
from interlock.policy_engine import (
    END_USER_POLICIES,
    VALID_POLICIES,
    CnState,
    CnType,
    FlowRole,
    PolicyConfig,
    Role,
    configure,
)
from interlock.security_service.api import build_app

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "fixtures" / "wire_samples.json"
SCENARIO = ROOT / "fixtures" / "scenarios" / "rsr_speed_override.json"


@pytest.fixture(scope="module")
def samples():
    return json.loads(FIXTURE.read_text())


@pytest.fixture(scope="module")
def client():
    session = build_serve_session(str(SCENARIO))
    return TestClient(build_app(session))


def _state(cn_type):
    roles = {
        "f1": FlowRole.GENERIC,
        "f2": FlowRole.GENERIC,
        "v1": FlowRole.VFLOW,
        "p1": FlowRole.FPS,
        "e1": FlowRole.EFLOW,
        "a1": FlowRole.AFLOW,
    }
    return CnState(cn_type, flow_roles=roles)


def test_policy_tables_match_engine(samples):
    for cn_type, names in samples["valid_policies"].items():
        assert [p.value for p in VALID_POLICIES[CnType(cn_type)]] == names
    for cn_type, names in samples["end_user_policies"].items():
        assert [p.value for p in END_USER_POLICIES[CnType(cn_type)]] == names


def test_sample_policy_docs_are_accepted_by_the_engine(samples):
    for name, doc in samples["policy_docs"].items():
        assert doc["policy"] == name
        config = PolicyConfig.from_dict(doc)
        hosts = [t for t, names in samples["valid_policies"].items() if name in names]
        assert hosts, f"{name} is valid on no cn type"
        for cn_type in hosts:
            configure(_state(CnType(cn_type)), config, None, Role.DEVELOPER)


def test_sample_policy_docs_round_trip(samples):
    for doc in samples["policy_docs"].values():
        config = PolicyConfig.from_dict(doc)
        assert PolicyConfig.from_dict(config.to_dict()) == config


def test_status_shape_matches_fixture(samples, client):
    body = client.get("/status").json()
    assert set(body) == set(samples["status"])
    for key, value in samples["status"].items():
        assert isinstance(body[key], type(value)), key


def test_risk_model_shape_matches_fixture(samples, client):
    sample = samples["risk_model"]
    models = client.get("/cns").json()
    assert models
    for body in models:
        assert set(body) == set(sample)
        assert set(body["risk_info"]) == set(sample["risk_info"])
        for flow in body["risk_info"]["flows"]:
            assert set(flow) == set(sample["risk_info"]["flows"][0])


def test_violation_and_result_shapes_match_fixture(samples, client):
    client.put(
        "/cns/rsrcn1/policy",
        json={"policy": samples["policy_docs"]["constrain"]},
        headers={"X-Role": "end_user"},
    )
    client.post("/advance", json={"to": 4.5})
    records = client.get("/violations").json()
    assert records
    assert set(records[0]) == set(samples["violation"])
    body = client.get("/result").json()
    assert set(body) == set(samples["result"])
    assert set(body["summary"]) == set(samples["result"]["summary"])


def test_error_shape_and_cors_headers(samples, client):
    doc = samples["policy_docs"]["preemption"]
    resp = client.put(
        "/cns/grcn1/policy",
        json={"policy": doc},
        headers={"X-Role": "end_user", "Origin": "http://localhost:5000"},
    )
    assert resp.status_code == 403
    assert set(resp.json()) == set(samples["error"])
    assert resp.headers["access-control-allow-origin"] == "*"
