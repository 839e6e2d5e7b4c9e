"""HTTP service exposing sessions and the evaluation runner.

Plain stdlib threading server speaking JSON. Mutating endpoints honor an
``Idempotency-Key`` header: a replayed key returns the stored response
instead of re-running the mutation. Per-session locks serialize writes.
"""

from __future__ import annotations

import json
import logging
import re
import signal
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .backends import HttpModelBackends, ModelBackends
from .emotion import EmotionLabelSet
from .errors import FabulaError, InvalidArgument, NotFound
from .imageflow import StylePrefs
from .keywords import KeywordSet
from .metrics import BaselineSystem, CorpusItem, PromptedSystem, run_comparison
from .mock import MockModelBackends
from .prompting import GenerationConfig
from .session import (
    SessionOptions,
    SessionStore,
    StoryEngine,
    session_to_dict,
)

log = logging.getLogger(__name__)

STATUS_BY_CODE = {
    "invalid_argument": 400,
    "invalid_state": 409,
    "not_found": 404,
    "conflict": 409,
    "backend_unavailable": 502,
    "backend_error": 502,
    "unsupported_version": 422,
}

MAX_BODY_BYTES = 8 * 1024 * 1024

_SESSION_PATH = re.compile(r"^/sessions/([0-9a-f-]+)$")
_ACTION_PATH = re.compile(r"^/sessions/([0-9a-f-]+)/(override|generate|images|select)$")
_IMAGE_PATH = re.compile(r"^/sessions/([0-9a-f-]+)/images/([0-9a-f]+)$")


@dataclass
class ServiceConfig:
    port: int = 8765
    host: str = "127.0.0.1"
    sessions_dir: str | Path = "sessions"
    mock: bool = False
    seed: int = 0
    options: SessionOptions = field(default_factory=SessionOptions)
    generation: GenerationConfig = field(default_factory=GenerationConfig)


class Service:
    """Holds the engine, the store, and the idempotency replay cache."""

    def __init__(self, config: ServiceConfig, backends: ModelBackends | None = None):
        self.config = config
        if backends is not None:
            self.backends = backends
        elif config.mock:
            self.backends = MockModelBackends(seed=config.seed)
        else:
            self.backends = HttpModelBackends.from_env()
        self.engine = StoryEngine(self.backends, config.options, config.generation)
        self.store = SessionStore(config.sessions_dir)
        self._replay: dict[tuple[str, str, str], tuple[int, str, bytes]] = {}
        self._replay_lock = threading.Lock()

    # -- idempotency --------------------------------------------------------

    def cached_response(self, method: str, path: str, key: str | None):
        if not key:
            return None
        with self._replay_lock:
            return self._replay.get((method, path, key))

    def remember_response(
        self, method: str, path: str, key: str | None, status: int, ctype: str, body: bytes
    ) -> None:
        if not key:
            return
        with self._replay_lock:
            self._replay[(method, path, key)] = (status, ctype, body)

    # -- handlers -----------------------------------------------------------

    def create_session(self, body: dict) -> dict:
        first = body.get("first_sentence", "")
        seed = int(body.get("seed", self.config.seed))
        style = StylePrefs.from_dict(body.get("style"))
        session = self.engine.start_session(first, seed=seed, style=style)
        with self.store.lock(session.id):
            self.store.save(session)
        return session_to_dict(session)

    def list_sessions(self) -> dict:
        rows = []
        for session_id in self.store.list_ids():
            try:
                session = self.store.load(session_id)
            except FabulaError:
                continue
            rows.append(
                {
                    "id": session.id,
                    "phase": session.phase.value,
                    "sentences": len(session.story),
                    "updated_at": session.updated_at,
                }
            )
        return {"sessions": rows}

    def get_session(self, session_id: str) -> dict:
        return session_to_dict(self.store.load(session_id))

    def mutate_session(self, session_id: str, action: str, body: dict) -> dict:
        with self.store.lock(session_id):
            session = self.store.load(session_id)
            if action == "override":
                emotions = body.get("emotions")
                keywords = body.get("keywords")
                self.engine.override_suggestions(
                    session,
                    emotions=(
                        EmotionLabelSet.from_names(emotions) if emotions is not None else None
                    ),
                    keywords=KeywordSet(keywords) if keywords is not None else None,
                )
            elif action == "generate":
                self.engine.generate_next_sentence(session)
            elif action == "images":
                prefs = None
                if "artist" in body or "background" in body:
                    prefs = StylePrefs(
                        artist=body.get("artist"), background=body.get("background")
                    )
                self.engine.generate_turn_images(session, prefs)
            elif action == "select":
                if "index" not in body:
                    raise InvalidArgument("select needs an index")
                self.engine.select_image(session, int(body["index"]))
            else:
                raise NotFound(f"no such action {action!r}")
            self.store.save(session)
        return session_to_dict(session)

    def image_bytes(self, session_id: str, content_hash: str) -> bytes:
        if not self.store.exists(session_id):
            raise NotFound(f"no session {session_id}")
        path = self.store.image_path(content_hash)
        if not path.is_file():
            raise NotFound(f"no image {content_hash}")
        return path.read_bytes()

    def run_eval(self, body: dict) -> dict:
        corpus_raw = body.get("corpus")
        if not isinstance(corpus_raw, list) or not corpus_raw:
            raise InvalidArgument("eval needs a non-empty corpus list")
        corpus = [
            CorpusItem(tuple(item.get("context", ())), str(item.get("reference", "")))
            for item in corpus_raw
        ]
        seed = int(body.get("seed", self.config.seed))
        backends = (
            MockModelBackends(seed=seed)
            if self.config.mock or isinstance(self.backends, MockModelBackends)
            else self.backends
        )
        result = run_comparison(
            corpus,
            PromptedSystem(backends, self.config.generation),
            BaselineSystem(backends, self.config.generation),
        )
        return result.as_dict()


class _Handler(BaseHTTPRequestHandler):
    service: Service  # assigned by make_server
    protocol_version = "HTTP/1.1"

    # -- plumbing -----------------------------------------------------------

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        log.debug("%s %s", self.address_string(), format % args)

    def _send(self, status: int, body: bytes, ctype: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header(
            "Access-Control-Allow-Headers", "Content-Type, Idempotency-Key, Authorization"
        )
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict) -> None:
        self._send(status, json.dumps(payload).encode("utf-8"))

    def _send_error_payload(self, exc: Exception) -> None:
        if isinstance(exc, FabulaError):
            status = STATUS_BY_CODE.get(exc.code, 500)
            payload = {"error": {"code": exc.code, "message": str(exc)}}
        else:
            log.exception("unhandled error")
            status = 500
            payload = {"error": {"code": "internal", "message": "internal error"}}
        self._send_json(status, payload)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            raise InvalidArgument("request body too large")
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"request body is not valid JSON: {exc.msg}") from None
        if not isinstance(body, dict):
            raise InvalidArgument("request body must be a JSON object")
        return body

    # -- verbs --------------------------------------------------------------

    def do_OPTIONS(self):  # noqa: N802 - stdlib naming
        self._send(204, b"", ctype="text/plain")

    def do_GET(self):  # noqa: N802
        try:
            if self.path == "/healthz":
                self._send_json(200, {"status": "ok"})
                return
            if self.path == "/sessions":
                self._send_json(200, self.service.list_sessions())
                return
            match = _IMAGE_PATH.match(self.path)
            if match:
                png = self.service.image_bytes(match.group(1), match.group(2))
                self._send(200, png, ctype="image/png")
                return
            match = _SESSION_PATH.match(self.path)
            if match:
                self._send_json(200, self.service.get_session(match.group(1)))
                return
            raise NotFound(f"no route for GET {self.path}")
        except Exception as exc:  # noqa: BLE001 - boundary
            self._send_error_payload(exc)

    def do_POST(self):  # noqa: N802
        key = self.headers.get("Idempotency-Key")
        try:
            cached = self.service.cached_response("POST", self.path, key)
            if cached is not None:
                status, ctype, body = cached
                self._send(status, body, ctype=ctype)
                return
            body = self._read_body()
            if self.path == "/sessions":
                payload, status = self.service.create_session(body), 201
            elif self.path == "/eval/run":
                payload, status = self.service.run_eval(body), 200
            else:
                match = _ACTION_PATH.match(self.path)
                if not match:
                    raise NotFound(f"no route for POST {self.path}")
                payload = self.service.mutate_session(match.group(1), match.group(2), body)
                status = 200
            encoded = json.dumps(payload).encode("utf-8")
            self.service.remember_response(
                "POST", self.path, key, status, "application/json", encoded
            )
            self._send(status, encoded)
        except Exception as exc:  # noqa: BLE001 - boundary
            self._send_error_payload(exc)


def make_server(config: ServiceConfig, backends: ModelBackends | None = None) -> ThreadingHTTPServer:
    """Bind the service; raises OSError when the port is taken."""
    service = Service(config, backends=backends)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    server.service = service  # type: ignore[attr-defined]
    return server


def serve(config: ServiceConfig, backends: ModelBackends | None = None) -> None:
    """Run until SIGINT/SIGTERM; in-flight requests finish before exit."""
    try:
        server = make_server(config, backends=backends)
    except OSError as exc:
        raise SystemExit(f"cannot bind {config.host}:{config.port}: {exc}") from None

    def _stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%s (mock=%s)", host, port, config.mock)
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
