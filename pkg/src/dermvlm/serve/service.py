"""Session store and inference service behind the HTTP API.

Sessions live in memory (optionally persisted as JSONL transcripts) and
expire after a configurable idle time. One image per session: replacing it
clears the turns. Requests within a session serialize on a per-session lock;
generation runs on a bounded worker pool over the immutable checkpoint.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..config import GenerationSettings
from ..dialogue import fit_history
from ..errors import DermvlmError, InvalidInputError
from ..model.checkpoint import load_checkpoint
from ..model.patches import preprocess_image_bytes
from ..model.pipeline import PipelineModel, PrefixEmbedding, embed_image, generate
from ..model.tokenizer import TokenSequence

LOOPBACK_HOSTS = ("127.0.0.1", "::1", "localhost")


class ServiceNotReady(DermvlmError):
    pass


class SessionNotFound(DermvlmError):
    pass


class MissingImage(DermvlmError):
    pass


class PayloadTooLarge(DermvlmError):
    pass


class GenerationTimeout(DermvlmError):
    pass


@dataclass(frozen=True)
class ServeConfig:
    checkpoint_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8423
    max_upload_bytes: int = 2 * 1024 * 1024
    request_timeout_s: float = 30.0
    session_ttl_s: float = 3600.0
    max_workers: int = 4
    static_dir: str | None = None
    persist_dir: str | None = None
    default_max_new_tokens: int = 48

    @property
    def loopback_bind(self) -> bool:
        return self.host in LOOPBACK_HOSTS


@dataclass
class Session:
    session_id: str
    created_at: float
    last_active: float
    turns: list[dict] = field(default_factory=list)
    prefix: PrefixEmbedding | None = None
    image_meta: dict | None = None
    settings: GenerationSettings = field(default_factory=GenerationSettings)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def public_view(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "turns": [
                {k: v for k, v in turn.items()} for turn in self.turns
            ],
            "image": self.image_meta,
            "settings": {
                "mode": self.settings.mode,
                "temperature": self.settings.temperature,
                "max_new_tokens": self.settings.max_new_tokens,
                "seed": self.settings.seed,
            },
        }


class DiagnosisService:
    def __init__(self, config: ServeConfig, model: PipelineModel | None = None):
        self.config = config
        self.model = model
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=config.max_workers)
        self.request_log: list[dict] = []
        self.eval_records: list[dict] = []
        if model is None and config.checkpoint_path:
            self.load(config.checkpoint_path)

    # -- lifecycle ---------------------------------------------------------
    def load(self, checkpoint_path: str | Path) -> None:
        model, _, _, _ = load_checkpoint(checkpoint_path)
        model.eval()
        self.model = model

    @property
    def ready(self) -> bool:
        return self.model is not None

    def _require_ready(self) -> PipelineModel:
        if self.model is None:
            raise ServiceNotReady("no checkpoint loaded; retry after the model is ready")
        return self.model

    # -- sessions ----------------------------------------------------------
    def _purge_expired(self) -> None:
        now = time.time()
        ttl = self.config.session_ttl_s
        with self._sessions_lock:
            dead = [sid for sid, s in self.sessions.items() if now - s.last_active > ttl]
            for sid in dead:
                del self.sessions[sid]

    def create_session(self) -> Session:
        self._require_ready()
        self._purge_expired()
        sid = secrets.token_hex(16)  # 128 bits
        session = Session(session_id=sid, created_at=time.time(), last_active=time.time())
        with self._sessions_lock:
            self.sessions[sid] = session
        return session

    def get_session(self, session_id: str) -> Session:
        self._purge_expired()
        with self._sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise SessionNotFound(f"unknown or expired session {session_id!r}")
        session.last_active = time.time()
        return session

    # -- operations --------------------------------------------------------
    def upload_image(self, session_id: str, data: bytes) -> dict:
        model = self._require_ready()
        session = self.get_session(session_id)
        if len(data) > self.config.max_upload_bytes:
            raise PayloadTooLarge(
                f"payload of {len(data)} bytes exceeds limit {self.config.max_upload_bytes}"
            )
        array = preprocess_image_bytes(data, model.config)  # InvalidInputError if undecodable
        with session.lock:
            with torch.no_grad():
                session.prefix = embed_image(model, array)
            session.turns.clear()
            session.image_meta = {
                "bytes": len(data),
                "width": model.config.image_size,
                "height": model.config.image_size,
                "embedding_cached": True,
            }
            session.last_active = time.time()
        return dict(session.image_meta)

    def _settings(self, session: Session, overrides: dict | None) -> GenerationSettings:
        base = session.settings
        if not overrides:
            return base
        allowed = {"mode", "temperature", "max_new_tokens", "seed"}
        unknown = set(overrides) - allowed
        if unknown:
            raise InvalidInputError(f"unknown generation settings: {sorted(unknown)}")
        merged = {
            "mode": overrides.get("mode", base.mode),
            "temperature": overrides.get("temperature", base.temperature),
            "max_new_tokens": overrides.get("max_new_tokens", base.max_new_tokens),
            "seed": overrides.get("seed", base.seed),
        }
        return GenerationSettings(**merged)

    def send_message(
        self, session_id: str, text: str, settings: dict | None = None
    ) -> dict:
        model = self._require_ready()
        session = self.get_session(session_id)
        if not text or not text.strip():
            raise InvalidInputError("message text must be non-empty")
        gen = self._settings(session, settings)
        started = time.monotonic()
        with session.lock:
            if session.prefix is None:
                raise MissingImage("no image uploaded yet; upload an image first")
            turns = [(t["role"], t["text"]) for t in session.turns]
            turns.append(("user", text.strip()))
            capacity = model.decoder.max_positions - (3 + model.config.n_queries)
            # history keeps at least half the context even when the caller
            # asks for more new tokens than the model can seat
            budget = max(capacity - gen.max_new_tokens, capacity // 2, 1)
            ids, truncated = fit_history(model.tokenizer, turns, budget)
            future = self._pool.submit(
                generate, session.prefix, TokenSequence(ids), model, gen
            )
            try:
                result = future.result(timeout=self.config.request_timeout_s)
            except FutureTimeout:
                future.cancel()
                raise GenerationTimeout(
                    f"generation exceeded {self.config.request_timeout_s}s"
                ) from None
            latency_ms = (time.monotonic() - started) * 1000.0
            now = time.time()
            session.turns.append({"role": "user", "text": text.strip(), "timestamp": now})
            session.turns.append(
                {
                    "role": "assistant",
                    "text": result.text,
                    "timestamp": time.time(),
                    "latency_ms": latency_ms,
                }
            )
            session.last_active = time.time()
            self._persist(session)
        self.request_log.append(
            {"op": "message", "started_monotonic": started, "latency_s": latency_ms / 1000.0}
        )
        return {
            "reply": result.text,
            "truncated": truncated,
            "latency_ms": latency_ms,
            "generation": result.metadata,
        }

    def record_eval(self, record: dict) -> int:
        from ..evaluation.forms import EvalRecord, validate_record

        validate_record(EvalRecord.from_dict(record))
        self.eval_records.append(record)
        if self.config.persist_dir:
            out = Path(self.config.persist_dir)
            out.mkdir(parents=True, exist_ok=True)
            with (out / "eval_records.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return len(self.eval_records)

    def _persist(self, session: Session) -> None:
        if not self.config.persist_dir:
            return
        out = Path(self.config.persist_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"session_{session.session_id}.json").write_text(
            json.dumps(session.public_view(), sort_keys=True, indent=2) + "\n"
        )
