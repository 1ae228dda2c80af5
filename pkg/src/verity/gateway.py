"""Single choke-point for model interactions.

Renders one template per prompt kind, calls a chat backend, and parses the
structured output. Three backends are provided: a live chat-completion HTTP
endpoint, a transcript-replay backend keyed by request hash, and (in
:mod:`verity.oracle`) a deterministic rule-based backend for tests.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Any, Callable, Optional, Protocol

import requests

from .errors import GatewayHardError, ReplayMissError, TransportError, ValidationError
from .verdict import Verdict


class PromptKind(Enum):
    EXTRACT_ENTITIES = "extract_entities"
    GENERATE_RELATIONS = "generate_relations"
    EXTRACT_EVENT_TRIPLES = "extract_event_triples"
    GENERATE_SUBQUESTION = "generate_subquestion"
    ANSWER_SUBQUESTION = "answer_subquestion"
    FINAL_VERDICT = "final_verdict"
    RANK_TRIPLES = "rank_triples"


REQUIRED_SLOTS: dict[PromptKind, tuple[str, ...]] = {
    PromptKind.EXTRACT_ENTITIES: ("document",),
    PromptKind.GENERATE_RELATIONS: ("document", "entities"),
    PromptKind.EXTRACT_EVENT_TRIPLES: ("document",),
    PromptKind.GENERATE_SUBQUESTION: ("claim", "transcript", "branch"),
    PromptKind.ANSWER_SUBQUESTION: ("claim", "transcript", "triples", "question"),
    PromptKind.FINAL_VERDICT: ("claim", "transcript"),
    PromptKind.RANK_TRIPLES: ("question", "candidates"),
}


@dataclass(frozen=True)
class LLMRequest:
    kind: PromptKind
    context: dict[str, str]
    temperature: float = 0.0
    seed: int = 0


@dataclass
class LLMResponse:
    raw: str
    parsed: Any
    parse_ok: bool
    warnings: int = 0


_template_cache: dict[PromptKind, str] = {}


def _template(kind: PromptKind) -> str:
    if kind not in _template_cache:
        ref = resources.files("verity.templates").joinpath(kind.value + ".txt")
        _template_cache[kind] = ref.read_text(encoding="utf-8")
    return _template_cache[kind]


def render_prompt(req: LLMRequest) -> str:
    """Pure function of (kind, context, template); raises on missing slots."""
    slots = REQUIRED_SLOTS[req.kind]
    for slot in slots:
        if slot not in req.context:
            raise ValidationError(f"{req.kind.value} request missing slot '{slot}'")
    # Single pass so slot values containing brace patterns stay inert.
    pattern = re.compile("|".join(re.escape("{" + s + "}") for s in slots))
    return pattern.sub(lambda m: req.context[m.group(0)[1:-1]], _template(req.kind))


def request_hash(req: LLMRequest, prompt: Optional[str] = None) -> str:
    if prompt is None:
        prompt = render_prompt(req)
    return hashlib.sha256((req.kind.value + "\x00" + prompt).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Output parsing

_ANSWER_LINE = re.compile(r"^\s*answer\s*:\s*(.*)$", re.IGNORECASE)


def parse_verdict(raw: str) -> Optional[Verdict]:
    """Find the two label tokens in the last 'Answer:' line.

    Exactly one of real/fake present -> that verdict; both or neither (or no
    answer line at all) -> None, signalling the caller's fallback rule.
    """
    answer_field = None
    for line in raw.splitlines():
        match = _ANSWER_LINE.match(line)
        if match:
            answer_field = match.group(1)
    if answer_field is None:
        return None
    has_real = re.search(r"\breal\b", answer_field, re.IGNORECASE) is not None
    has_fake = re.search(r"\bfake\b", answer_field, re.IGNORECASE) is not None
    if has_real == has_fake:
        return None
    return Verdict.REAL if has_real else Verdict.FAKE


def parse_triples(raw: str) -> tuple[list[tuple[str, str, str]], int]:
    """Parse '(subject | relation | object)' lines; skip malformed ones.

    Returns the triples plus the count of malformed non-empty lines.
    """
    triples: list[tuple[str, str, str]] = []
    malformed = 0
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("(") and line.endswith(")"):
            parts = [p.strip() for p in line[1:-1].split("|")]
            if len(parts) == 3 and all(parts):
                triples.append((parts[0], parts[1], parts[2]))
                continue
        malformed += 1
    return triples, malformed


_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def parse_entities(raw: str) -> list[str]:
    entities = []
    for line in raw.splitlines():
        line = _BULLET.sub("", line).strip()
        if line:
            entities.append(line)
    return entities


def parse_ranking(raw: str) -> list[int]:
    return [int(tok) for tok in re.findall(r"-?\d+", raw)]


def _parse_payload(kind: PromptKind, raw: str) -> LLMResponse:
    if kind == PromptKind.FINAL_VERDICT:
        verdict = parse_verdict(raw)
        return LLMResponse(raw, verdict, verdict is not None)
    if kind in (PromptKind.GENERATE_RELATIONS, PromptKind.EXTRACT_EVENT_TRIPLES):
        triples, malformed = parse_triples(raw)
        return LLMResponse(raw, triples, True, warnings=malformed)
    if kind == PromptKind.EXTRACT_ENTITIES:
        return LLMResponse(raw, parse_entities(raw), True)
    if kind == PromptKind.RANK_TRIPLES:
        indices = parse_ranking(raw)
        return LLMResponse(raw, indices, bool(indices))
    # Sub-question and answer payloads are the stripped text itself.
    text = raw.strip()
    return LLMResponse(raw, text if text else None, bool(text))


# ---------------------------------------------------------------------------
# Backends


class Backend(Protocol):
    def generate(self, req: LLMRequest, prompt: str) -> str: ...


class HttpChatBackend:
    """De-facto chat-completion HTTP endpoint: POST {base}/v1/chat/completions."""

    def __init__(self, base_url: str, model: str, api_key: str = "",
                 timeout: float = 60.0, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.session = session or requests.Session()

    def generate(self, req: LLMRequest, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": req.temperature,
            "seed": req.seed,
        }
        try:
            resp = self.session.post(f"{self.base_url}/v1/chat/completions",
                                     json=payload, headers=headers,
                                     timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise GatewayHardError(f"HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise GatewayHardError(f"malformed completion response: {exc}") from exc


class ScriptedBackend:
    """Test backend driven by a plain function of (request, prompt)."""

    def __init__(self, fn: Callable[[LLMRequest, str], str]):
        self._fn = fn

    def generate(self, req: LLMRequest, prompt: str) -> str:
        return self._fn(req, prompt)


class ReplayBackend:
    """Replays recorded responses keyed by request hash; misses are fatal."""

    def __init__(self, records: dict[str, str]):
        self._records = records

    @classmethod
    def from_path(cls, path: str) -> "ReplayBackend":
        records: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                records[record["hash"]] = record["response"]
        return cls(records)

    def generate(self, req: LLMRequest, prompt: str) -> str:
        key = request_hash(req, prompt)
        if key not in self._records:
            raise ReplayMissError(f"no recorded response for {req.kind.value} "
                                  f"request {key[:12]}")
        return self._records[key]


class RecordingBackend:
    """Wraps another backend and appends a transcript record per unique request."""

    def __init__(self, inner: Backend, path: str):
        self.inner = inner
        self.path = path
        self._seen: set[str] = set()
        self._lock = threading.Lock()
        # Truncate so a recording session starts clean.
        open(path, "w", encoding="utf-8").close()

    def generate(self, req: LLMRequest, prompt: str) -> str:
        response = self.inner.generate(req, prompt)
        key = request_hash(req, prompt)
        with self._lock:
            if key not in self._seen:
                self._seen.add(key)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({
                        "hash": key,
                        "kind": req.kind.value,
                        "prompt": prompt,
                        "response": response,
                    }, ensure_ascii=False) + "\n")
        return response


# ---------------------------------------------------------------------------


class Gateway:
    """Thread-safe front door: render, rate-limit, retry, parse."""

    def __init__(self, backend: Backend, max_retries: int = 3,
                 backoff: float = 0.25, max_in_flight: int = 4,
                 min_interval: float = 0.0):
        self.backend = backend
        self.max_retries = max_retries
        self.backoff = backoff
        self.min_interval = min_interval
        self._slots = threading.Semaphore(max_in_flight)
        self._pace_lock = threading.Lock()
        self._last_call = 0.0
        self._count_lock = threading.Lock()
        self.call_counts: dict[PromptKind, int] = {k: 0 for k in PromptKind}

    def _pace(self) -> None:
        if self.min_interval <= 0:
            return
        with self._pace_lock:
            wait = self._last_call + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def complete(self, req: LLMRequest) -> LLMResponse:
        prompt = render_prompt(req)
        last_error: Optional[Exception] = None
        with self._slots:
            for attempt in range(self.max_retries + 1):
                self._pace()
                try:
                    raw = self.backend.generate(req, prompt)
                    break
                except TransportError as exc:
                    last_error = exc
                    if attempt < self.max_retries:
                        time.sleep(self.backoff * (2 ** attempt))
            else:
                raise GatewayHardError(
                    f"{req.kind.value} failed after {self.max_retries + 1} "
                    f"attempts: {last_error}")
        with self._count_lock:
            self.call_counts[req.kind] += 1
        return _parse_payload(req.kind, raw)
