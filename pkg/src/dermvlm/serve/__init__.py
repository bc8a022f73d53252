from .app import create_app
from .guard import GuardReport, connection_recorder, offline_guard, run_canonical_session
from .service import (
    DiagnosisService,
    GenerationTimeout,
    MissingImage,
    PayloadTooLarge,
    ServeConfig,
    ServiceNotReady,
    Session,
    SessionNotFound,
)

__all__ = [
    "DiagnosisService",
    "GenerationTimeout",
    "GuardReport",
    "MissingImage",
    "PayloadTooLarge",
    "ServeConfig",
    "ServiceNotReady",
    "Session",
    "SessionNotFound",
    "connection_recorder",
    "create_app",
    "offline_guard",
    "run_canonical_session",
]
