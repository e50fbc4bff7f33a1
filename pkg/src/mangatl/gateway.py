"""Backend-agnostic LLM access: live HTTP, record, and replay modes.

Every request is reduced to a canonical digest (model, temperature,
messages, image digests) so that recorded exchanges can be replayed
bit-for-bit without network access.  Cassettes are JSON files with
base64-encoded response payloads; API keys live only in process
memory and never reach a cassette or run artifact.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import GatewayError
from .imaging import EncodedImage

logger = logging.getLogger(__name__)

ENDPOINT_ENV = "MANGATL_LLM_ENDPOINT"
API_KEY_ENV = "MANGATL_LLM_API_KEY"

DEFAULT_TEMPERATURE = 0.5
DEFAULT_MAX_OUTPUT = 4096


@dataclass(frozen=True)
class Message:
    role: str
    text: str


@dataclass(frozen=True)
class LlmRequest:
    model: str
    messages: tuple[Message, ...]
    images: tuple[EncodedImage, ...] = ()
    temperature: float = DEFAULT_TEMPERATURE
    max_output: int = DEFAULT_MAX_OUTPUT

    def __post_init__(self):
        if sum(1 for m in self.messages if m.role == "user") != 1:
            raise ValueError("request must carry exactly one user message")
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")

    @property
    def prompt(self) -> str:
        return next(m.text for m in self.messages if m.role == "user")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: int = 0
    backend_id: str = ""


def canonical_request_payload(request: LlmRequest) -> dict:
    """Deterministic request form: image bytes replaced by digests."""
    return {
        "model": request.model,
        "temperature": request.temperature,
        "max_output": request.max_output,
        "messages": [{"role": m.role, "text": m.text} for m in request.messages],
        "image_digests": [hashlib.sha256(img.data).hexdigest()
                          for img in request.images],
    }


def request_hash(request: LlmRequest) -> str:
    canon = json.dumps(canonical_request_payload(request),
                       sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


class Cassette:
    """Recorded request-hash -> response store."""

    def __init__(self, entries: dict[str, LlmResponse] | None = None,
                 meta: dict | None = None):
        self.entries = dict(entries or {})
        self.meta = dict(meta or {})
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        path = Path(path)
        if not path.is_file():
            raise GatewayError("cassette_miss", f"cassette not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            entries = {}
            for key, entry in raw.get("entries", {}).items():
                entries[key] = LlmResponse(
                    text=base64.b64decode(entry["text_b64"]).decode("utf-8"),
                    input_tokens=int(entry.get("input_tokens", 0)),
                    output_tokens=int(entry.get("output_tokens", 0)),
                    latency_ms=int(entry.get("latency_ms", 0)),
                    backend_id=str(entry.get("backend_id", "")),
                )
        except (json.JSONDecodeError, KeyError, ValueError,
                binascii.Error) as exc:
            raise GatewayError("cassette_miss", f"corrupt cassette {path}: {exc}") from exc
        return cls(entries=entries, meta=raw.get("meta", {}))

    def save(self, path: str | Path) -> None:
        path = Path(path)
        doc = {
            "meta": self.meta,
            "entries": {
                key: {
                    "text_b64": base64.b64encode(resp.text.encode("utf-8")).decode("ascii"),
                    "input_tokens": resp.input_tokens,
                    "output_tokens": resp.output_tokens,
                    "latency_ms": resp.latency_ms,
                    "backend_id": resp.backend_id,
                }
                for key, resp in sorted(self.entries.items())
            },
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                json.dump(doc, handle, indent=2, sort_keys=True)
                handle.write("\n")
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def get(self, key: str) -> LlmResponse | None:
        return self.entries.get(key)

    def put(self, key: str, response: LlmResponse) -> None:
        with self._lock:
            self.entries[key] = response

    def digest(self) -> str:
        canon = json.dumps(
            {key: base64.b64encode(resp.text.encode("utf-8")).decode("ascii")
             for key, resp in sorted(self.entries.items())},
            sort_keys=True)
        return hashlib.sha256(canon.encode("ascii")).hexdigest()


class HttpChatBackend:
    """JSON-over-HTTP chat-completion backend with inline base64 images.

    Wire format (endpoint and headers are configurable; nothing here is
    tied to one provider):

        POST <endpoint>
        {"model", "temperature", "max_output",
         "messages": [{"role", "content": [{"type": "text", "text": ...},
                                           {"type": "image",
                                            "format": "jpeg",
                                            "data_b64": ...}]}]}
        -> {"text": ..., "input_tokens": n, "output_tokens": n}
    """

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 extra_headers: dict[str, str] | None = None,
                 auth_header: str = "Authorization", auth_scheme: str = "Bearer",
                 timeout: float = 120.0, retries: int = 3, backoff: float = 1.0):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise GatewayError("backend", f"no endpoint configured ({ENDPOINT_ENV})")
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._headers = {"Content-Type": "application/json"}
        if self._api_key:
            self._headers[auth_header] = (f"{auth_scheme} {self._api_key}"
                                          if auth_scheme else self._api_key)
        self._headers.update(extra_headers or {})
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.backend_id = self.endpoint

    def _payload(self, request: LlmRequest) -> dict:
        return {
            "model": request.model,
            "temperature": request.temperature,
            "max_output": request.max_output,
            "messages": self.messages_of(request),
        }

    @staticmethod
    def messages_of(request: LlmRequest) -> list[dict]:
        messages = []
        for message in request.messages:
            parts: list[dict] = [{"type": "text", "text": message.text}]
            if message.role == "user":
                parts.extend({
                    "type": "image",
                    "format": img.format,
                    "data_b64": base64.b64encode(img.data).decode("ascii"),
                } for img in request.images)
            messages.append({"role": message.role, "content": parts})
        return messages

    def complete(self, request: LlmRequest) -> LlmResponse:
        payload = self._payload(request)
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            started = time.monotonic()
            try:
                http = requests.post(self.endpoint, json=payload,
                                     headers=self._headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("backend request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if http.status_code >= 500 or http.status_code == 429:
                last_error = GatewayError("backend", f"HTTP {http.status_code}")
                logger.warning("backend HTTP %d (attempt %d)", http.status_code, attempt + 1)
                continue
            if http.status_code != 200:
                raise GatewayError("backend",
                                   f"HTTP {http.status_code}: {http.text[:500]}")
            try:
                body = http.json()
                text = body["text"]
            except (ValueError, KeyError) as exc:
                raise GatewayError("backend", f"malformed backend reply: {exc}") from exc
            return LlmResponse(
                text=text,
                input_tokens=int(body.get("input_tokens", 0)),
                output_tokens=int(body.get("output_tokens", 0)),
                latency_ms=int((time.monotonic() - started) * 1000),
                backend_id=self.backend_id,
            )
        raise GatewayError("backend", f"backend unreachable after "
                                      f"{self.retries + 1} attempts: {last_error}")


class ScriptedBackend:
    """In-process backend for tests and cassette synthesis."""

    def __init__(self, respond, backend_id: str = "scripted"):
        self._respond = respond
        self.backend_id = backend_id

    def complete(self, request: LlmRequest) -> LlmResponse:
        result = self._respond(request)
        if isinstance(result, LlmResponse):
            return result
        return LlmResponse(text=str(result),
                           input_tokens=len(request.prompt) // 4,
                           output_tokens=len(str(result)) // 4,
                           backend_id=self.backend_id)


class LlmGateway:
    """Mode-aware send() with bounded concurrency and cassette handling."""

    def __init__(self, mode: str = "replay", backend=None,
                 cassette: Cassette | None = None,
                 cassette_path: str | Path | None = None,
                 max_inflight: int = 4):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown gateway mode {mode!r}")
        if mode in ("live", "record") and backend is None:
            raise GatewayError("backend", f"{mode} mode needs a backend")
        if mode == "replay" and cassette is None and cassette_path is None:
            raise GatewayError("cassette_miss", "replay mode needs a cassette")
        self.mode = mode
        self.backend = backend
        self.cassette_path = Path(cassette_path) if cassette_path else None
        if cassette is not None:
            self.cassette = cassette
        elif mode == "replay":
            self.cassette = Cassette.load(self.cassette_path)
        elif mode == "record":
            self.cassette = (Cassette.load(self.cassette_path)
                             if self.cassette_path and self.cassette_path.is_file()
                             else Cassette())
        else:
            self.cassette = None
        self._send_slots = threading.Semaphore(max(1, max_inflight))
        self._save_lock = threading.Lock()

    def send(self, request: LlmRequest) -> LlmResponse:
        key = request_hash(request)
        if self.mode == "replay":
            response = self.cassette.get(key)
            if response is None:
                raise GatewayError("cassette_miss", f"no cassette entry for {key}")
            return response
        with self._send_slots:
            response = self.backend.complete(request)
        if self.mode == "record":
            self.cassette.put(key, response)
            self.cassette.meta.setdefault("model", request.model)
            self.cassette.meta.setdefault(
                "recorded_at", time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
            if self.cassette_path:
                with self._save_lock:
                    self.cassette.save(self.cassette_path)
        return response

    def cassette_digest(self) -> str:
        return self.cassette.digest() if self.cassette is not None else ""


@dataclass
class CostSummary:
    requests: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    cost: float = 0.0
    by_key: dict = field(default_factory=dict)


def cost_report(run, price_table: dict[str, float]) -> CostSummary:
    """Token/cost totals for a run at per-token prices.

    ``price_table`` holds ``input`` and ``output`` per-token prices.
    """
    input_price = float(price_table.get("input", 0.0))
    output_price = float(price_table.get("output", 0.0))
    summary = CostSummary()
    for record in run.requests:
        summary.requests += 1
        summary.input_tokens += record.input_tokens
        summary.output_tokens += record.output_tokens
    summary.cost = (summary.input_tokens * input_price
                    + summary.output_tokens * output_price)
    summary.by_key[f"{run.approach}/{run.volume_id}"] = summary.cost
    return summary
