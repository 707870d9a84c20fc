"""Minimal W3C WebDriver client: open a page, wait for it to settle, read the DOM."""

from __future__ import annotations

import logging
import threading
import time
from typing import Any, Callable

import requests

from ..errors import FetchError, RenderTimeout

logger = logging.getLogger(__name__)

DEFAULT_CAPABILITIES = {
    "alwaysMatch": {
        "goog:chromeOptions": {"args": ["--headless=new", "--no-sandbox", "--disable-gpu"]},
        "moz:firefoxOptions": {"args": ["-headless"]},
    }
}


class WebDriverClient:
    """One session per render; renders are serialized so a session is never shared."""

    def __init__(
        self,
        endpoint: str,
        capabilities: dict | None = None,
        poll_interval: float = 0.5,
        stable_samples: int = 2,
        request_timeout: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.capabilities = capabilities or DEFAULT_CAPABILITIES
        self.poll_interval = poll_interval
        self.stable_samples = stable_samples
        self.request_timeout = request_timeout
        self._clock = clock
        self._sleep = sleep
        self._http = session or requests.Session()
        self._lock = threading.Lock()

    def _command(self, method: str, path: str, body: dict | None = None) -> Any:
        try:
            resp = self._http.request(method, self.endpoint + path, json=body, timeout=self.request_timeout)
        except requests.RequestException as exc:
            raise FetchError(f"WebDriver endpoint unreachable: {exc}") from exc
        try:
            value = resp.json().get("value")
        except ValueError:
            raise FetchError(f"WebDriver returned non-JSON (HTTP {resp.status_code})") from None
        if resp.status_code >= 400:
            error = value.get("error", "") if isinstance(value, dict) else ""
            message = value.get("message", "") if isinstance(value, dict) else str(value)
            if error in ("timeout", "script timeout"):
                raise RenderTimeout(f"WebDriver {error}: {message}")
            raise FetchError(f"WebDriver error {error or resp.status_code}: {message}")
        return value

    def _source(self, sid: str) -> str:
        return self._command("GET", f"/session/{sid}/source") or ""

    def render(self, url: str, wait_budget: float) -> tuple[str, str]:
        """Return ``(page source, final url)`` once the DOM is stable or the budget is spent."""
        with self._lock:
            created = self._command("POST", "/session", {"capabilities": self.capabilities})
            sid = created.get("sessionId") if isinstance(created, dict) else None
            if not sid:
                raise FetchError("WebDriver did not return a session id")
            try:
                return self._render_in(sid, url, wait_budget)
            finally:
                try:
                    self._command("DELETE", f"/session/{sid}")
                except FetchError as exc:
                    logger.warning("could not close WebDriver session %s: %s", sid, exc)

    def _render_in(self, sid: str, url: str, wait_budget: float) -> tuple[str, str]:
        deadline = self._clock() + wait_budget
        self._command("POST", f"/session/{sid}/url", {"url": url})

        script = {"script": "return document.readyState", "args": []}
        while self._command("POST", f"/session/{sid}/execute/sync", script) != "complete":
            if self._clock() >= deadline:
                raise RenderTimeout(f"{url} did not finish loading within {wait_budget}s")
            self._sleep(self.poll_interval)

        # scripts may keep filling the DOM after load; wait for consecutive equal samples
        previous = self._source(sid)
        unchanged = 0
        while unchanged < self.stable_samples and self._clock() < deadline:
            self._sleep(self.poll_interval)
            current = self._source(sid)
            unchanged = unchanged + 1 if current == previous else 0
            previous = current
        if unchanged < self.stable_samples:
            logger.warning("%s still changing after %ss; using last snapshot", url, wait_budget)
        final_url = self._command("GET", f"/session/{sid}/url") or url
        return previous, final_url
