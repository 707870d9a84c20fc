"""Fetching one pricing page from disk, over HTTP, or through a WebDriver browser."""

from __future__ import annotations

import datetime as dt
import enum
import re
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

import requests

from ..errors import FetchError, FileNotFound

USER_AGENT = "ipricing/0.1 (+pricing page extraction)"
_CHARSET = re.compile(r"charset=([\w-]+)", re.I)


class Origin(str, enum.Enum):
    HTTP_URL = "HTTP_URL"
    WEBDRIVER_URL = "WEBDRIVER_URL"
    LOCAL_FILE = "LOCAL_FILE"


@dataclass(frozen=True)
class SourceDocument:
    origin: Origin
    locator: str
    raw_html: str
    fetched_at: dt.datetime
    final_url: str


def _now() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)


def _check_url(locator: str) -> None:
    parsed = urlparse(locator)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise FetchError(f"not an http(s) URL: {locator!r}")


def read_file(path: str | Path) -> SourceDocument:
    path = Path(path)
    try:
        data = path.read_bytes()
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError):
        raise FileNotFound(f"no such file: {path}") from None
    text = data.decode("utf-8", errors="replace")
    if not text.strip():
        raise FetchError(f"{path} is empty")
    return SourceDocument(Origin.LOCAL_FILE, str(path), text, _now(), path.resolve().as_uri())


def http_get(url: str, timeout: float = 30.0, session: requests.Session | None = None) -> SourceDocument:
    _check_url(url)
    getter = session or requests
    try:
        resp = getter.get(url, timeout=timeout, headers={"User-Agent": USER_AGENT})
    except requests.RequestException as exc:
        raise FetchError(f"could not fetch {url}: {exc}") from exc
    if resp.status_code >= 400:
        raise FetchError(f"HTTP {resp.status_code} for {url}")
    match = _CHARSET.search(resp.headers.get("Content-Type", ""))
    encoding = match.group(1) if match else "utf-8"
    try:
        text = resp.content.decode(encoding, errors="replace")
    except LookupError:
        text = resp.content.decode("utf-8", errors="replace")
    if not text.strip():
        raise FetchError(f"empty response body from {url}")
    return SourceDocument(Origin.HTTP_URL, url, text, _now(), resp.url or url)


def fetch(
    locator: str,
    mode: Origin | str = Origin.LOCAL_FILE,
    wait_budget: float = 30.0,
    *,
    webdriver=None,
    timeout: float = 30.0,
    session: requests.Session | None = None,
) -> SourceDocument:
    """Fetch ``locator`` according to ``mode``.

    WEBDRIVER_URL needs ``webdriver`` (a :class:`WebDriverClient`); the page is
    rendered and given up to ``wait_budget`` seconds to settle.  No clicking or
    other interaction is performed.
    """
    mode = Origin(mode)
    if mode is Origin.LOCAL_FILE:
        return read_file(locator)
    if mode is Origin.HTTP_URL:
        return http_get(locator, timeout=timeout, session=session)
    _check_url(locator)
    if webdriver is None:
        raise FetchError("WEBDRIVER_URL mode needs a WebDriver endpoint")
    raw, final_url = webdriver.render(locator, wait_budget)
    if not raw.strip():
        raise FetchError(f"browser returned an empty page for {locator}")
    return SourceDocument(Origin.WEBDRIVER_URL, locator, raw, _now(), final_url)
