"""HTTP facade over a live simulated run plus stateless batch operations.

The session owns one scenario execution on a virtual clock. Reads go to
the store; the only write path into the running simulation is the policy
endpoint, which funnels through the engine's configure step, so the
service can never corrupt coordination-node state. Mandatory policies
are re-asserted: an attempt to overwrite one is refused and the standing
config stays in force.
"""
from __future__ import annotations

import json
import threading
import time as wall_time
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from ..graph_model import GraphError, graph_from_dict, graph_to_dict
from ..instrumentor import InstrumentationError, cn_config_doc, instrument
from ..policy_engine import (
    CnType,
    PolicyConfig,
    PolicyError,
    Role,
    RoleViolation,
    configure,
)
from ..risk_discovery import MatchTables, RiskReport, discover_all
from ..sim_runtime import (
    Scenario,
    ScenarioError,
    finish_result,
    prepare_sim,
    run_scenario,
    scenario_from_dict,
)
from .store import MandatoryPolicy, RiskModel, SecurityStore, UnknownCn


class SimSession:
    """One scenario run driven over a virtual clock, feeding a store."""

    def __init__(
        self,
        scenario: Scenario,
        *,
        instrumented: bool = True,
        attack: bool = True,
        apply_policies: bool = False,
        enforce_roles: bool = True,
        store: Optional[SecurityStore] = None,
    ):
        self.scenario = scenario
        self.instrumented = instrumented
        self.attack = attack
        self.enforce_roles = enforce_roles
        self.lock = threading.RLock()
        self.sim = prepare_sim(
            scenario,
            instrumented=instrumented,
            attack=attack,
            apply_policies=apply_policies,
        )
        self.store = store if store is not None else SecurityStore()
        if self.sim.plan is not None:
            self.store.load_plan(self.sim.plan)
        self.clock = 0.0
        self.started = False
        self.result = None
        self._forwarded = 0

    @property
    def finished(self) -> bool:
        return self.result is not None

    def advance_to(self, t: float) -> float:
        """Run the simulation forward; the clock never moves backwards."""
        with self.lock:
            horizon = min(float(t), self.scenario.duration)
            if horizon > self.clock or not self.started:
                self.started = True
                self.clock = max(self.clock, horizon)
                self.sim.run_until(self.clock)
                self._forward_violations()
            if self.clock >= self.scenario.duration and self.result is None:
                self.result = finish_result(
                    self.sim,
                    self.scenario,
                    instrumented=self.instrumented,
                    attack=self.attack,
                )
            return self.clock

    def run_all(self):
        self.advance_to(self.scenario.duration)
        return self.result

    def _forward_violations(self) -> None:
        fresh = self.sim.violations[self._forwarded:]
        self._forwarded = len(self.sim.violations)
        for entry in fresh:
            node = entry["node"]
            rule = ""
            if node in self.sim.cn_configs:
                rule = self.sim.cn_configs[node].policy.value
            details = {
                k: entry[k] for k in ("flow", "topic", "action", "payload") if k in entry
            }
            self.store.record_violation(
                time=entry["time"],
                cn_id=entry["cn_id"],
                rule=rule,
                reason=entry["reason"],
                details=details,
            )

    def set_policy(self, cn_id: str, doc: Dict[str, Any], role: Role) -> RiskModel:
        with self.lock:
            if self.sim.plan is None:
                raise UnknownCn(cn_id)
            try:
                cn = self.sim.plan.cn_by_id(cn_id)
            except KeyError:
                raise UnknownCn(cn_id) from None
            if cn.cn_type == CnType.FPS_MONITOR:
                raise PolicyError(f"{cn_id} is a monitor and takes no policy")
            new_config = PolicyConfig.from_dict(doc)
            current = self.sim.cn_configs[cn.node_name]
            if current.mandatory and new_config.to_dict() != current.to_dict():
                raise MandatoryPolicy(
                    f"{cn_id} runs a mandatory policy; overwrite refused"
                )
            state = self.sim.cn_states[cn.node_name]
            applied = configure(
                state, new_config, current, role, enforce_roles=self.enforce_roles
            )
            self.sim.cn_configs[cn.node_name] = applied
            return self.store.set_policy(cn_id, applied.to_dict())


def pace(session: SimSession, speed: float = 1.0, tick: float = 0.02) -> threading.Thread:
    """Advance the session's virtual clock against wall time in a thread."""

    def loop():
        start = wall_time.monotonic()
        while not session.finished:
            elapsed = (wall_time.monotonic() - start) * speed
            session.advance_to(elapsed)
            wall_time.sleep(tick)

    thread = threading.Thread(target=loop, name="session-pacer", daemon=True)
    thread.start()
    return thread


class RiskModelOut(BaseModel):
    cn_id: str
    cn_type: str
    node_name: str
    description: str
    risk_info: Dict[str, Any]
    policy_params: Dict[str, Any]
    mandatory: bool
    trigger_time: Optional[str]
    updated_at: str


class ViolationOut(BaseModel):
    index: int
    time: float
    cn_id: str
    rule: str
    cause: str
    details: Dict[str, Any]
    recorded_at: str


class SetPolicyRequest(BaseModel):
    policy: Dict[str, Any]


class StatusOut(BaseModel):
    scenario: str
    clock: float
    duration: float
    finished: bool
    instrumented: bool
    attack: bool
    enforce_roles: bool
    violations: int


class AdvanceRequest(BaseModel):
    to: float


class ResultOut(BaseModel):
    summary: Dict[str, Any]
    checks: Dict[str, bool]


class AnalyzeRequest(BaseModel):
    graph: Dict[str, Any]
    tables: Optional[Dict[str, Any]] = None


class AnalyzeResponse(BaseModel):
    report: Dict[str, Any]


class InstrumentRequest(BaseModel):
    graph: Dict[str, Any]
    report: Optional[Dict[str, Any]] = None


class InstrumentResponse(BaseModel):
    graph: Dict[str, Any]
    plan: Dict[str, Any]
    cn_config: List[Dict[str, Any]]


class SimulateRequest(BaseModel):
    scenario: Dict[str, Any]
    instrumented: bool = True
    attack: bool = True
    apply_policies: bool = True


class SimulateResponse(BaseModel):
    summary: Dict[str, Any]
    checks: Dict[str, bool]
    assertion_report: Dict[str, Dict[str, Any]]
    violations: List[Dict[str, Any]]


def _parse_role(header: Optional[str]) -> Role:
    if header is None:
        return Role.END_USER
    try:
        return Role(header)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"unknown role {header!r}")


def build_app(session: SimSession, stream_poll: float = 0.02) -> FastAPI:
    app = FastAPI(title="interaction risk console API")
    # The operator console is served as static files from its own origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = session.store

    @app.get("/status", response_model=StatusOut)
    def status():
        return StatusOut(
            scenario=session.scenario.name,
            clock=session.clock,
            duration=session.scenario.duration,
            finished=session.finished,
            instrumented=session.instrumented,
            attack=session.attack,
            enforce_roles=session.enforce_roles,
            violations=store.violation_count(),
        )

    @app.get("/cns", response_model=List[RiskModelOut])
    def list_cns():
        return [RiskModelOut(**m.to_dict()) for m in store.list_models()]

    @app.get("/cns/{cn_id}", response_model=RiskModelOut)
    def get_cn(cn_id: str):
        try:
            return RiskModelOut(**store.get_model(cn_id).to_dict())
        except UnknownCn:
            raise HTTPException(status_code=404, detail=f"no such cn {cn_id}")

    @app.put("/cns/{cn_id}/policy", response_model=RiskModelOut)
    def set_policy(
        cn_id: str,
        body: SetPolicyRequest,
        x_role: Optional[str] = Header(default=None),
    ):
        role = _parse_role(x_role)
        try:
            model = session.set_policy(cn_id, body.policy, role)
        except UnknownCn:
            raise HTTPException(status_code=404, detail=f"no such cn {cn_id}")
        except MandatoryPolicy as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except RoleViolation as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except (PolicyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return RiskModelOut(**model.to_dict())

    @app.get("/violations", response_model=List[ViolationOut])
    def violations(since: Optional[str] = None, after_index: Optional[int] = None):
        records = store.violations(since=since, after_index=after_index)
        return [ViolationOut(**r.to_dict()) for r in records]

    @app.get("/stream")
    def stream(after_index: int = -1, max_events: Optional[int] = None):
        def gen():
            cursor = after_index
            sent = 0
            while True:
                batch = store.violations(after_index=cursor)
                for record in batch:
                    cursor = record.index
                    payload = json.dumps(record.to_dict(), sort_keys=True)
                    yield f"id: {record.index}\nevent: violation\ndata: {payload}\n\n"
                    sent += 1
                    if max_events is not None and sent >= max_events:
                        return
                if session.finished and not batch:
                    return
                wall_time.sleep(stream_poll)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/advance", response_model=StatusOut)
    def advance(body: AdvanceRequest):
        session.advance_to(body.to)
        return status()

    @app.get("/result", response_model=ResultOut)
    def result():
        if not session.finished:
            raise HTTPException(status_code=409, detail="run not finished")
        return ResultOut(
            summary=session.result.summary, checks=session.result.checks
        )

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(body: AnalyzeRequest):
        try:
            graph = graph_from_dict(body.graph)
            tables = (
                MatchTables.from_dict(body.tables) if body.tables is not None else None
            )
            report = discover_all(graph, tables)
        except (GraphError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return AnalyzeResponse(report=report.to_dict())

    @app.post("/instrument", response_model=InstrumentResponse)
    def instrument_graph(body: InstrumentRequest):
        try:
            graph = graph_from_dict(body.graph)
            report = (
                RiskReport.from_dict(body.report) if body.report is not None else None
            )
            instrumented, plan = instrument(graph, report)
        except (GraphError, InstrumentationError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return InstrumentResponse(
            graph=graph_to_dict(instrumented),
            plan=plan.to_dict(),
            cn_config=cn_config_doc(plan),
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(body: SimulateRequest):
        try:
            scenario = scenario_from_dict(body.scenario)
            result = run_scenario(
                scenario,
                instrumented=body.instrumented,
                attack=body.attack,
                apply_policies=body.apply_policies,
            )
        except (ScenarioError, GraphError, PolicyError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SimulateResponse(
            summary=result.summary,
            checks=result.checks,
            assertion_report=result.assertion_report,
            violations=[v for v in result.violations],
        )

    return app
