from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


class FakeBrowser:
    """In-process stand-in for a WebDriver endpoint.

    ``pages`` maps URL to a list of successive DOM snapshots: each source read
    returns the next snapshot until the last one, which then stays put.  This
    mimics a page whose rows are injected by scripts after load.
    """

    def __init__(self, pages: dict[str, list[str]], ready_after: int = 1, redirects: dict[str, str] | None = None):
        self.pages = pages
        self.ready_after = ready_after
        self.redirects = redirects or {}
        self.sessions: dict[str, dict] = {}
        self.log: list[tuple[str, str]] = []
        self._next = 0

    def handle(self, method: str, path: str, body: dict) -> tuple[int, object]:
        self.log.append((method, path))
        parts = path.strip("/").split("/")
        if method == "POST" and parts == ["session"]:
            self._next += 1
            sid = f"s{self._next}"
            self.sessions[sid] = {"url": None, "reads": 0, "ready": 0}
            return 200, {"sessionId": sid, "capabilities": {}}
        if len(parts) < 2 or parts[1] not in self.sessions:
            return 404, {"error": "invalid session id", "message": path}
        state = self.sessions[parts[1]]
        rest = parts[2:]
        if method == "DELETE" and not rest:
            del self.sessions[parts[1]]
            return 200, None
        if method == "POST" and rest == ["url"]:
            url = body["url"]
            if url not in self.pages:
                return 500, {"error": "unknown error", "message": f"net::ERR_NAME_NOT_RESOLVED {url}"}
            state["url"] = url
            return 200, None
        if method == "POST" and rest == ["execute", "sync"]:
            state["ready"] += 1
            return 200, "complete" if state["ready"] >= self.ready_after else "loading"
        if method == "GET" and rest == ["source"]:
            snaps = self.pages[state["url"]]
            snap = snaps[min(state["reads"], len(snaps) - 1)]
            state["reads"] += 1
            return 200, snap
        if method == "GET" and rest == ["url"]:
            return 200, self.redirects.get(state["url"], state["url"])
        return 404, {"error": "unknown command", "message": path}


@pytest.fixture
def fake_browser():
    """Start a FakeBrowser over HTTP; yields ``(browser, endpoint)`` factory."""
    servers = []

    def start(pages, **kwargs):
        browser = FakeBrowser(pages, **kwargs)

        class Handler(BaseHTTPRequestHandler):
            def _reply(self, method):
                length = int(self.headers.get("Content-Length") or 0)
                body = json.loads(self.rfile.read(length) or b"{}") if length else {}
                status, value = browser.handle(method, self.path, body)
                data = json.dumps({"value": value}).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self):
                self._reply("GET")

            def do_POST(self):
                self._reply("POST")

            def do_DELETE(self):
                self._reply("DELETE")

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return browser, f"http://127.0.0.1:{server.server_address[1]}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
