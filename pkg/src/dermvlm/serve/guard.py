"""Offline guard: prove a full diagnosis session opens no outbound sockets.

The recorder monkeypatches the socket layer; anything that is not loopback
is recorded (and refused). The guard then drives a complete four-prompt
session through an in-process transport and reports every destination seen.
"""

from __future__ import annotations

import socket
from contextlib import contextmanager
from dataclasses import dataclass, field

import httpx

from ..prompts import CANONICAL_PROMPTS
from .app import create_app
from .service import DiagnosisService

_LOOPBACK_PREFIXES = ("127.", "::1", "localhost")


def _is_loopback(host: object) -> bool:
    if host is None:
        return True
    text = str(host)
    return any(text.startswith(p) or text == p for p in _LOOPBACK_PREFIXES)


@dataclass
class GuardReport:
    outbound: list[str] = field(default_factory=list)
    loopback_bind: bool = True
    replies: int = 0

    @property
    def ok(self) -> bool:
        return not self.outbound and self.loopback_bind

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "outbound": list(self.outbound),
            "loopback_bind": self.loopback_bind,
            "replies": self.replies,
        }


class OfflineViolation(ConnectionError):
    pass


@contextmanager
def connection_recorder(block: bool = True):
    """Record (and by default refuse) non-loopback connects and DNS lookups."""
    recorded: list[str] = []
    orig_connect = socket.socket.connect
    orig_connect_ex = socket.socket.connect_ex
    orig_getaddrinfo = socket.getaddrinfo

    def _note(dest: str):
        recorded.append(dest)
        if block:
            raise OfflineViolation(f"outbound connection attempt to {dest}")

    def connect(self, address):
        host = address[0] if isinstance(address, tuple) else address
        if not _is_loopback(host):
            _note(f"connect:{host}")
        return orig_connect(self, address)

    def connect_ex(self, address):
        host = address[0] if isinstance(address, tuple) else address
        if not _is_loopback(host):
            _note(f"connect:{host}")
        return orig_connect_ex(self, address)

    def getaddrinfo(host, *args, **kwargs):
        if not _is_loopback(host):
            _note(f"dns:{host}")
        return orig_getaddrinfo(host, *args, **kwargs)

    socket.socket.connect = connect
    socket.socket.connect_ex = connect_ex
    socket.getaddrinfo = getaddrinfo
    try:
        yield recorded
    finally:
        socket.socket.connect = orig_connect
        socket.socket.connect_ex = orig_connect_ex
        socket.getaddrinfo = orig_getaddrinfo


def run_canonical_session(client: httpx.Client, image_bytes: bytes) -> int:
    """create -> upload -> all four prompts; returns the reply count."""
    sid = client.post("/sessions").json()["session_id"]
    client.post(
        "/sessions/" + sid + "/image",
        files={"file": ("case.png", image_bytes, "image/png")},
    ).raise_for_status()
    replies = 0
    for prompt in CANONICAL_PROMPTS:
        r = client.post(f"/sessions/{sid}/message", json={"text": prompt})
        r.raise_for_status()
        replies += 1
    return replies


def offline_guard(service: DiagnosisService, image_bytes: bytes) -> GuardReport:
    """Full canonical session under the connection recorder.

    The session runs over an in-process transport; the recorder still
    catches any code path that tries to open a socket or resolve a name.
    """
    from starlette.testclient import TestClient

    report = GuardReport(loopback_bind=service.config.loopback_bind)
    app = create_app(service)
    with connection_recorder(block=False) as recorded:
        with TestClient(app, base_url="http://testserver") as client:
            report.replies = run_canonical_session(client, image_bytes)
    report.outbound = [d for d in recorded if not d.startswith("dns:testserver")]
    return report
