"""HTTP+JSON API over a loaded checkpoint.

Endpoints::

    POST /sessions
    POST /sessions/{id}/image      multipart upload
    POST /sessions/{id}/message    {"text": ..., "settings": {...}?}
    GET  /sessions/{id}
    GET  /prompts
    GET  /healthz
    POST /eval/records             questionnaire capture for the browser UI
    GET  /eval/records

Errors come back as {"error": {"code": ..., "message": ...}}. The service
binds to loopback by default; a non-loopback bind only emits a warning so
lab deployments remain possible.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import InvalidInputError
from ..prompts import CANONICAL_PROMPTS
from .service import (
    DiagnosisService,
    GenerationTimeout,
    MissingImage,
    PayloadTooLarge,
    ServeConfig,
    ServiceNotReady,
    SessionNotFound,
)

logger = logging.getLogger("dermvlm.serve")

_ERROR_STATUS = {
    ServiceNotReady: (503, "service_unavailable"),
    SessionNotFound: (404, "session_not_found"),
    MissingImage: (412, "image_required"),
    PayloadTooLarge: (413, "payload_too_large"),
    GenerationTimeout: (504, "generation_timeout"),
    InvalidInputError: (400, "invalid_input"),
}


class MessageBody(BaseModel):
    text: str
    settings: dict | None = None


def _error_response(exc: Exception) -> JSONResponse:
    for etype, (status, code) in _ERROR_STATUS.items():
        if isinstance(exc, etype):
            headers = {"Retry-After": "1"} if status == 503 else None
            return JSONResponse(
                {"error": {"code": code, "message": str(exc)}},
                status_code=status,
                headers=headers,
            )
    raise exc


def create_app(service: DiagnosisService) -> FastAPI:
    app = FastAPI(title="dermvlm", docs_url=None, redoc_url=None)
    app.state.service = service
    if not service.config.loopback_bind:
        logger.warning(
            "service configured to bind non-loopback address %s; "
            "replies will be reachable from other hosts",
            service.config.host,
        )

    @app.exception_handler(Exception)
    async def handle_errors(request: Request, exc: Exception):  # pragma: no cover
        return _error_response(exc)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "ready": service.ready}

    @app.get("/prompts")
    def prompts():
        return {"prompts": list(CANONICAL_PROMPTS)}

    @app.post("/sessions", status_code=201)
    def create_session():
        try:
            session = service.create_session()
        except Exception as exc:
            return _error_response(exc)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return service.get_session(session_id).public_view()
        except Exception as exc:
            return _error_response(exc)

    @app.post("/sessions/{session_id}/image")
    async def upload_image(session_id: str, file: UploadFile):
        data = await file.read()
        content_type = (file.content_type or "").lower()
        if content_type and not content_type.startswith("image/"):
            return JSONResponse(
                {
                    "error": {
                        "code": "unsupported_media",
                        "message": f"expected an image upload, got {content_type!r}",
                    }
                },
                status_code=415,
            )
        try:
            meta = service.upload_image(session_id, data)
        except InvalidInputError as exc:
            return JSONResponse(
                {"error": {"code": "unsupported_media", "message": str(exc)}},
                status_code=415,
            )
        except Exception as exc:
            return _error_response(exc)
        return meta

    @app.post("/sessions/{session_id}/message")
    def send_message(session_id: str, body: MessageBody):
        try:
            return service.send_message(session_id, body.text, body.settings)
        except Exception as exc:
            return _error_response(exc)

    @app.post("/eval/records", status_code=201)
    def post_eval_record(record: dict):
        try:
            count = service.record_eval(record)
        except Exception as exc:
            return _error_response(exc)
        return {"accepted": True, "count": count}

    @app.get("/eval/records")
    def get_eval_records():
        return {"records": list(service.eval_records)}

    static_dir = service.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
