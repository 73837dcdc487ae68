"""Operator-facing risk console: store, live session, and HTTP API."""
from .api import SimSession, build_app, pace
from .store import (
    MandatoryPolicy,
    RiskModel,
    SecurityStore,
    StoreError,
    UnknownCn,
    ViolationRecord,
    cause_for,
    now_iso,
)

__all__ = [
    "SimSession",
    "build_app",
    "pace",
    "MandatoryPolicy",
    "RiskModel",
    "SecurityStore",
    "StoreError",
    "UnknownCn",
    "ViolationRecord",
    "cause_for",
    "now_iso",
]
