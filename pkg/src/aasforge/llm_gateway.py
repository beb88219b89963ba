"""Uniform access to chat-completion and embedding providers.

Two provider implementations share one duck-typed surface
(``complete(prompt) -> CompletionResult``, ``embed(text) -> list[float]``,
``healthy() -> bool``):

* :class:`HttpProvider` talks the de-facto chat-completions / embeddings
  HTTP+JSON interface, with retries on transport failure.
* :class:`StubProvider` is fully deterministic and answers from scripted
  rules, which is what every offline test runs against.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Union

import httpx

from .errors import (
    AuthError,
    ExtractError,
    MissingBindingError,
    ProviderError,
    SchemaError,
    StubMissError,
    TransportError,
    ValidationError,
)

# Base delay for exponential backoff between transport retries; tests shrink it.
_BACKOFF_BASE_S = 0.5

_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")
_CODE_FENCE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class PromptTemplate:
    """Structured prompt: role, task, context slot, output format, input slot."""

    role_definition: str
    task_instruction: str
    context_slot: str = ""
    output_format_spec: str = ""
    input_slot: str = "{input}"


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str = ""
    model_name: str = ""
    embedding_model: str = ""
    api_key_ref: str = ""  # name of the env var holding the key, never the key
    timeout_s: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    max_concurrent: int = 4

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValidationError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    raw_text: str
    latency_ms: float
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute placeholders; section order is role, task, context, format, input."""
    sections = [
        template.role_definition,
        template.task_instruction,
        template.context_slot,
        template.output_format_spec,
        template.input_slot,
    ]
    text = "\n\n".join(s for s in sections if s)

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingBindingError(name)
        return bindings[name]

    return _PLACEHOLDER.sub(_sub, text)


def parse_structured_output(raw: str, expected_schema: Any) -> Any:
    """Pull the first JSON payload out of a model response and validate it.

    Code fences and surrounding prose are stripped. The schema language is
    small: a dict maps required field names to types (a "?" suffix marks the
    field optional), a one-element list means "array of", and nesting works
    as expected. Raises ExtractError when no JSON is found and SchemaError
    when the payload does not fit.
    """
    data = _extract_json(raw)
    _check_schema(data, expected_schema, path="")
    return data


def _extract_json(raw: str) -> Any:
    fenced = _CODE_FENCE.search(raw)
    candidates = [fenced.group(1)] if fenced else []
    candidates.append(raw)
    decoder = json.JSONDecoder()
    for text in candidates:
        pos = 0
        while True:
            starts = [i for i in (text.find("{", pos), text.find("[", pos)) if i != -1]
            if not starts:
                break
            start = min(starts)
            try:
                value, _ = decoder.raw_decode(text, start)
                return value
            except json.JSONDecodeError:
                pos = start + 1
    raise ExtractError("no JSON object or array found in response")


def _check_schema(data: Any, schema: Any, path: str) -> None:
    where = path or "payload"
    if isinstance(schema, list):
        if len(schema) != 1:
            raise ValueError("array schema must have exactly one element")
        if not isinstance(data, list):
            raise SchemaError(f"{where}: expected an array")
        for i, item in enumerate(data):
            _check_schema(item, schema[0], f"{where}[{i}]")
        return
    if isinstance(schema, dict):
        if not isinstance(data, dict):
            raise SchemaError(f"{where}: expected an object")
        for key, sub in schema.items():
            optional = key.endswith("?")
            name = key[:-1] if optional else key
            if name not in data:
                if optional:
                    continue
                raise SchemaError(name if not path else f"{path}.{name}")
            _check_schema(data[name], sub, f"{path}.{name}" if path else name)
        return
    # leaf: a type
    if schema is float:
        ok = isinstance(data, (int, float)) and not isinstance(data, bool)
    elif schema is int:
        ok = isinstance(data, int) and not isinstance(data, bool)
    else:
        ok = isinstance(data, schema)
    if not ok:
        raise SchemaError(f"{where}: expected {schema.__name__}")


def hash_embedding(text: str, dimension: int, seed: int = 0) -> list[float]:
    """Deterministic pseudo-embedding: bytes of chained SHA-256 digests."""
    out: list[float] = []
    counter = 0
    while len(out) < dimension:
        digest = hashlib.sha256(f"{seed}:{counter}:{text}".encode("utf-8")).digest()
        for i in range(0, len(digest) - 3, 4):
            if len(out) >= dimension:
                break
            n = int.from_bytes(digest[i : i + 4], "big")
            out.append(n / 2**31 - 1.0)
        counter += 1
    return out


class HttpProvider:
    """Chat-completions / embeddings client over HTTP."""

    def __init__(self, config: ProviderConfig, *, transport: Optional[httpx.BaseTransport] = None):
        self.config = config
        self.max_concurrent = config.max_concurrent
        headers = {}
        if config.api_key_ref:
            key = os.environ.get(config.api_key_ref, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=config.endpoint_url.rstrip("/"),
            timeout=config.timeout_s,
            headers=headers,
            transport=transport,
        )

    def healthy(self) -> bool:
        return True

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(min(_BACKOFF_BASE_S * 2 ** (attempt - 1), 8.0))
            try:
                response = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                last_exc = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"provider rejected credentials (HTTP {response.status_code})")
            if response.status_code // 100 != 2:
                raise ProviderError(response.status_code, response.text)
            return response.json()
        raise TransportError(
            f"endpoint unreachable after {self.config.max_retries + 1} attempts: {last_exc}"
        )

    def complete(self, prompt: str) -> CompletionResult:
        started = time.monotonic()
        data = self._post(
            "/chat/completions",
            {
                "model": self.config.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.config.temperature,
            },
        )
        latency_ms = (time.monotonic() - started) * 1000.0
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(200, f"unexpected completion payload: {data!r}") from exc
        usage = data.get("usage") or {}
        return CompletionResult(
            raw_text=text,
            latency_ms=latency_ms,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )

    def embed(self, text: str) -> list[float]:
        if not text:
            raise ValidationError("cannot embed empty text")
        data = self._post(
            "/embeddings",
            {"model": self.config.embedding_model, "input": text},
        )
        try:
            return list(data["data"][0]["embedding"])
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(200, f"unexpected embedding payload: {data!r}") from exc


@dataclass
class StubProvider:
    """Deterministic offline provider.

    ``complete`` serves from ``sequence`` first (in order), then from
    ``rules``: a rule matches when every one of its substrings occurs in
    the prompt, and among matching rules the one covering the most matched
    characters wins. Plain ``{key: response}`` rules are the single-substring
    case. ``embed`` returns a seeded-hash vector, so identical text always
    embeds identically.
    """

    rules: Union[dict[str, str], list[dict]] = field(default_factory=dict)
    sequence: list[str] = field(default_factory=list)
    dimension: int = 64
    seed: int = 0
    delay_ms: float = 0.0
    is_healthy: bool = True
    max_concurrent: int = 4

    def __post_init__(self):
        self._lock = threading.Lock()
        self._cursor = 0
        if isinstance(self.rules, dict):
            self._rules = [((key,), response) for key, response in self.rules.items()]
        else:
            self._rules = [
                (tuple(rule["match"]), rule["response"]) for rule in self.rules
            ]

    @classmethod
    def from_script(cls, script: Mapping[str, Any]) -> "StubProvider":
        return cls(
            rules=script.get("rules", {}),
            sequence=list(script.get("sequence", [])),
            dimension=int(script.get("dimension", 64)),
            seed=int(script.get("seed", 0)),
            delay_ms=float(script.get("delayMs", 0.0)),
            is_healthy=bool(script.get("healthy", True)),
        )

    def healthy(self) -> bool:
        return self.is_healthy

    def complete(self, prompt: str) -> CompletionResult:
        started = time.monotonic()
        if self.delay_ms:
            time.sleep(self.delay_ms / 1000.0)
        with self._lock:
            if self._cursor < len(self.sequence):
                text = self.sequence[self._cursor]
                self._cursor += 1
                return CompletionResult(text, (time.monotonic() - started) * 1000.0)
        best: Optional[str] = None
        best_score = -1
        for parts, response in self._rules:
            if all(part in prompt for part in parts):
                score = sum(len(part) for part in parts)
                if score > best_score:
                    best, best_score = response, score
        if best is None:
            raise StubMissError(f"no stub rule matches prompt: {prompt[:120]!r}...")
        return CompletionResult(best, (time.monotonic() - started) * 1000.0)

    def embed(self, text: str) -> list[float]:
        if not text:
            raise ValidationError("cannot embed empty text")
        if self.delay_ms:
            time.sleep(self.delay_ms / 1000.0)
        return hash_embedding(text, self.dimension, self.seed)
