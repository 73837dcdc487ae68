"""Risk-model and violation bookkeeping behind the operator API.

The store is the console's single source of truth: one risk model per
coordination node (current policy included) and a monotone, append-only
violation log. Both survive restarts when a state directory is given,
so a crashed console can resume against the same run.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..instrumentor import CnPlan, InstrumentationPlan


class StoreError(Exception):
    pass


class UnknownCn(StoreError):
    pass


class MandatoryPolicy(StoreError):
    """Raised when a request tries to overwrite a mandatory policy."""


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def cause_for(reason: str) -> str:
    """Human-readable cause line for a coordination-node decision."""
    if reason.startswith("clamped:"):
        return "max_vel exceeds limit"
    if reason.startswith("stale_fps:"):
        return "stale fps signal, velocity floored"
    if reason.startswith("rule:"):
        return f"action matched rule {reason.split(':', 1)[1]}"
    return {
        "blocked": "flow blocked by gate bits",
        "preempted": "preempted by higher priority flow",
        "timeout": "queued message expired",
        "default_deny": "no rule matched under strict deny",
        "unknown_flow": "arrival on unknown flow",
        "not_numeric": "velocity payload not numeric",
    }.get(reason, reason)


@dataclass
class RiskModel:
    cn_id: str
    cn_type: str
    node_name: str
    description: str
    risk_info: Dict[str, Any]
    policy_params: Dict[str, Any]
    mandatory: bool = False
    trigger_time: Optional[str] = None
    updated_at: str = field(default_factory=now_iso)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cn_id": self.cn_id,
            "cn_type": self.cn_type,
            "node_name": self.node_name,
            "description": self.description,
            "risk_info": self.risk_info,
            "policy_params": self.policy_params,
            "mandatory": self.mandatory,
            "trigger_time": self.trigger_time,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RiskModel":
        return cls(**doc)


@dataclass
class ViolationRecord:
    index: int
    time: float
    cn_id: str
    rule: str
    cause: str
    details: Dict[str, Any]
    recorded_at: str = field(default_factory=now_iso)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "time": self.time,
            "cn_id": self.cn_id,
            "rule": self.rule,
            "cause": self.cause,
            "details": self.details,
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ViolationRecord":
        return cls(**doc)


def _risk_model_for(cn: CnPlan) -> RiskModel:
    policy = dict(cn.default_policy)
    return RiskModel(
        cn_id=cn.cn_id,
        cn_type=cn.cn_type.value,
        node_name=cn.node_name,
        description=f"{cn.cn_type.value} covering {', '.join(cn.findings)}",
        risk_info={
            "findings": list(cn.findings),
            "flows": [f.to_dict() for f in cn.flows],
            "output_topics": list(cn.output_topics),
            "suggested_policy": cn.suggested_policy,
        },
        policy_params=policy,
        mandatory=bool(policy.get("mandatory", False)),
    )


class SecurityStore:
    """Thread-safe store with optional JSON file persistence."""

    def __init__(self, state_dir: Optional[Path] = None):
        self._lock = threading.Lock()
        self._models: Dict[str, RiskModel] = {}
        self._violations: List[ViolationRecord] = []
        self._state_dir = Path(state_dir) if state_dir is not None else None
        if self._state_dir is not None:
            self._state_dir.mkdir(parents=True, exist_ok=True)
            self._resume()

    @property
    def _models_path(self) -> Path:
        return self._state_dir / "models.json"

    @property
    def _violations_path(self) -> Path:
        return self._state_dir / "violations.jsonl"

    def _resume(self) -> None:
        if self._models_path.exists():
            doc = json.loads(self._models_path.read_text(encoding="utf-8"))
            self._models = {m["cn_id"]: RiskModel.from_dict(m) for m in doc}
        if self._violations_path.exists():
            for line in self._violations_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._violations.append(ViolationRecord.from_dict(json.loads(line)))

    def _persist_models(self) -> None:
        if self._state_dir is None:
            return
        doc = [m.to_dict() for m in self._models.values()]
        self._models_path.write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def _persist_violation(self, record: ViolationRecord) -> None:
        if self._state_dir is None:
            return
        with self._violations_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def load_plan(self, plan: InstrumentationPlan) -> None:
        with self._lock:
            for cn in plan.cns:
                if cn.cn_id not in self._models:
                    self._models[cn.cn_id] = _risk_model_for(cn)
            self._persist_models()

    def list_models(self) -> List[RiskModel]:
        with self._lock:
            return [self._models[k] for k in sorted(self._models)]

    def get_model(self, cn_id: str) -> RiskModel:
        with self._lock:
            if cn_id not in self._models:
                raise UnknownCn(cn_id)
            return self._models[cn_id]

    def set_policy(self, cn_id: str, policy: Dict[str, Any]) -> RiskModel:
        with self._lock:
            if cn_id not in self._models:
                raise UnknownCn(cn_id)
            model = self._models[cn_id]
            model.policy_params = dict(policy)
            model.mandatory = bool(policy.get("mandatory", False))
            model.updated_at = now_iso()
            self._persist_models()
            return model

    def record_violation(
        self, time: float, cn_id: str, rule: str, reason: str, details: Dict[str, Any]
    ) -> ViolationRecord:
        with self._lock:
            record = ViolationRecord(
                index=len(self._violations),
                time=time,
                cn_id=cn_id,
                rule=rule,
                cause=cause_for(reason),
                details=details,
            )
            self._violations.append(record)
            if cn_id in self._models:
                model = self._models[cn_id]
                model.trigger_time = record.recorded_at
                self._persist_models()
            self._persist_violation(record)
            return record

    def violations(
        self, since: Optional[str] = None, after_index: Optional[int] = None
    ) -> List[ViolationRecord]:
        """Violations recorded strictly after `since` (ISO timestamp) or
        after the given log index; both filters may combine."""
        with self._lock:
            out = list(self._violations)
        if since is not None:
            out = [v for v in out if v.recorded_at > since]
        if after_index is not None:
            out = [v for v in out if v.index > after_index]
        return out

    def violation_count(self) -> int:
        with self._lock:
            return len(self._violations)
