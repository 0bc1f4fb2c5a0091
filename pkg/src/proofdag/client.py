"""Abstract text-completion client over a chat-style HTTP endpoint.

The wire contract is a single JSON POST of ``{model, messages,
temperature, max_tokens}``; completion text and token counts are pulled
out of the response at configurable JSON paths.  Transport failures,
timeouts and malformed responses are retried with exponential backoff up
to a hard cap, after which a typed :class:`CompletionUnavailable` is
raised so callers can fall back to offline behaviour.

Credentials are never stored in configuration: the config names an
environment variable and the value is read at call time.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Sequence

__all__ = [
    "ClientError",
    "TransportError",
    "MalformedResponseError",
    "CompletionUnavailable",
    "ClientConfig",
    "CompletionRequest",
    "CompletionResult",
    "TextCompletionClient",
]


class ClientError(RuntimeError):
    pass


class TransportError(ClientError):
    """Network-level failure or timeout; retryable."""


class MalformedResponseError(ClientError):
    """Response body did not match the configured JSON paths; retryable."""


class CompletionUnavailable(ClientError):
    """All retries exhausted; callers convert this to fallback behaviour."""


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    model: str
    credential_env: str | None = None
    timeout: float = 30.0
    max_retries: int = 5
    backoff_base: float = 0.5
    text_path: tuple[Any, ...] = ("choices", 0, "message", "content")
    prompt_tokens_path: tuple[Any, ...] = ("usage", "prompt_tokens")
    completion_tokens_path: tuple[Any, ...] = ("usage", "completion_tokens")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClientConfig":
        kwargs = dict(data)
        for key in ("text_path", "prompt_tokens_path", "completion_tokens_path"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str
    max_tokens: int = 1024
    temperature: float = 0.0


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int | None
    completion_tokens: int | None


def _walk_path(data: Any, path: Sequence[Any]) -> Any:
    current = data
    for step in path:
        try:
            current = current[step]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"missing response field at {list(path)}") from exc
    return current


def _http_transport(payload: dict[str, Any], config: ClientConfig) -> dict[str, Any]:
    import requests

    headers = {"Content-Type": "application/json"}
    if config.credential_env:
        credential = os.environ.get(config.credential_env)
        if not credential:
            raise CompletionUnavailable(
                f"credential environment variable {config.credential_env} is not set"
            )
        headers["Authorization"] = f"Bearer {credential}"
    try:
        response = requests.post(
            config.endpoint, json=payload, headers=headers, timeout=config.timeout
        )
    except requests.Timeout as exc:
        raise TransportError("request timed out") from exc
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if response.status_code >= 400:
        raise TransportError(f"HTTP {response.status_code}")
    try:
        return response.json()
    except json.JSONDecodeError as exc:
        raise MalformedResponseError("response body is not JSON") from exc


class TextCompletionClient:
    """Synchronous completion client; safe for concurrent use."""

    def __init__(
        self,
        config: ClientConfig,
        transport: Callable[[dict[str, Any], ClientConfig], dict[str, Any]] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._transport = transport or _http_transport
        self._sleep = sleep
        self._lock = threading.Lock()
        self.total_completion_tokens = 0

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if not request.user_text.strip():
            raise ValueError("user_text must be non-empty")
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(1, self.config.max_retries + 1):
            try:
                body = self._transport(payload, self.config)
                result = self._extract(body)
            except CompletionUnavailable:
                raise
            except (TransportError, MalformedResponseError) as exc:
                last_error = exc
                if attempt < self.config.max_retries:
                    self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
                continue
            if result.completion_tokens is not None:
                with self._lock:
                    self.total_completion_tokens += result.completion_tokens
            return result
        raise CompletionUnavailable(
            f"completion failed after {self.config.max_retries} attempts: {last_error}"
        )

    def _extract(self, body: dict[str, Any]) -> CompletionResult:
        text = _walk_path(body, self.config.text_path)
        if not isinstance(text, str):
            raise MalformedResponseError("completion text is not a string")

        def optional(path: tuple[Any, ...]) -> int | None:
            try:
                value = _walk_path(body, path)
            except MalformedResponseError:
                return None
            return int(value) if isinstance(value, (int, float)) else None

        return CompletionResult(
            text=text,
            prompt_tokens=optional(self.config.prompt_tokens_path),
            completion_tokens=optional(self.config.completion_tokens_path),
        )
