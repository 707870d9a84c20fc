"""Model providers: an OpenAI-style HTTP client, a replay store, and a null stub."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

from ..errors import ProviderError

logger = logging.getLogger(__name__)

KEY_ENV = "PRICING_PROVIDER_KEY"


@dataclass(frozen=True)
class ProviderRequest:
    model: str
    prompt: str
    template_id: str
    payload_hash: str
    temperature: float = 0.0
    max_output_tokens: int = 8192
    structured: bool = True

    @property
    def key(self) -> str:
        return request_key(self.template_id, self.payload_hash)


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    finish_reason: str = "stop"
    input_tokens: int | None = None
    output_tokens: int | None = None


def payload_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def request_key(template_id: str, payload_digest: str) -> str:
    """Replay file stem for a request: digest of template id and payload digest."""
    return hashlib.sha256(f"{template_id}:{payload_digest}".encode("utf-8")).hexdigest()[:32]


class Provider(ABC):
    name: str = "provider"
    model: str = ""

    @abstractmethod
    def complete(self, request: ProviderRequest) -> ProviderResponse:
        ...

    def count_tokens(self, text: str) -> int | None:
        """Provider-side token count, or None when unsupported."""
        return None


class NullProvider(Provider):
    name = "null"
    model = "none"

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        raise ProviderError("no model provider configured (null provider)")


class ReplayProvider(Provider):
    """Answers from ``<dir>/<request key>.txt``; token counts from ``<dir>/token-counts.json``."""

    name = "replay"

    def __init__(self, directory: str | Path, model: str = "replay") -> None:
        self.directory = Path(directory)
        self.model = model

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        path = self.directory / f"{request.key}.txt"
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ProviderError(f"no recorded response for {request.template_id} ({path.name})") from None
        return ProviderResponse(text=text, finish_reason="replay")

    def count_tokens(self, text: str) -> int | None:
        path = self.directory / "token-counts.json"
        if not path.exists():
            return None
        counts = json.loads(path.read_text(encoding="utf-8"))
        return counts.get(payload_hash(text))


class RecordingProvider(Provider):
    """Pass-through that stores every response in the replay layout."""

    def __init__(self, inner: Provider, directory: str | Path) -> None:
        self.inner = inner
        self.directory = Path(directory)
        self.name = inner.name
        self.model = inner.model

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        response = self.inner.complete(request)
        self.directory.mkdir(parents=True, exist_ok=True)
        (self.directory / f"{request.key}.txt").write_text(response.text, encoding="utf-8")
        return response

    def count_tokens(self, text: str) -> int | None:
        return self.inner.count_tokens(text)


class RateLimiter:
    """Spaces calls at least ``60 / per_minute`` seconds apart across threads."""

    def __init__(self, per_minute: float | None, clock: Callable[[], float] = time.monotonic, sleep=time.sleep) -> None:
        self.interval = 60.0 / per_minute if per_minute else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            wait = self._next - now
            self._next = max(now, self._next) + self.interval
        if wait > 0:
            self._sleep(wait)


class HttpProvider(Provider):
    """Chat-completions client (``POST {base_url}/chat/completions``)."""

    name = "http"

    def __init__(
        self,
        base_url: str,
        model: str,
        key_env: str = KEY_ENV,
        timeout: float = 120.0,
        requests_per_minute: float | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.key_env = key_env
        self.timeout = timeout
        self.limiter = RateLimiter(requests_per_minute)
        self.session = session or requests.Session()

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        body = {
            "model": request.model or self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.structured:
            body["response_format"] = {"type": "json_object"}
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"

        self.limiter.acquire()
        try:
            resp = self.session.post(f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise ProviderError(f"transport error: {exc}", transient=True) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderError(f"provider returned HTTP {resp.status_code}", transient=True)
        if resp.status_code >= 400:
            raise ProviderError(f"provider returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected provider response shape: {exc}") from exc
        usage = data.get("usage") or {}
        return ProviderResponse(
            text=text,
            finish_reason=choice.get("finish_reason") or "",
            input_tokens=usage.get("prompt_tokens"),
            output_tokens=usage.get("completion_tokens"),
        )


def complete_with_retries(
    provider: Provider,
    request: ProviderRequest,
    attempts: int = 3,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> ProviderResponse:
    """Call the provider, retrying transient failures with exponential backoff."""
    for attempt in range(attempts):
        try:
            return provider.complete(request)
        except ProviderError as exc:
            if not exc.transient or attempt == attempts - 1:
                raise
            delay = backoff * 2**attempt
            logger.warning("transient provider failure (%s), retrying in %.1fs", exc, delay)
            sleep(delay)
    raise AssertionError("unreachable")
