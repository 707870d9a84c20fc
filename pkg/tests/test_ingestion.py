from __future__ import annotations

import html
import re
import threading
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipricing.errors import EmptyAfterClean, FetchError, FileNotFound, RenderTimeout
from ipricing.ingestion import CLEANER_VERSION, Origin, WebDriverClient, clean, estimate_tokens, fetch, read_file

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def corpus() -> list[Path]:
    pages = sorted((FIXTURES / "html").rglob("*.html")) + sorted((FIXTURES / "zoom").glob("*.html"))
    assert len(pages) >= 23
    return pages


def text_runs(cleaned: str) -> list[str]:
    """Maximal text runs: split on tags and line breaks, entities decoded, whitespace collapsed."""
    runs = []
    for chunk in re.split(r"<[^>]*>|\n", cleaned):
        run = " ".join(html.unescape(chunk).split())
        if run:
            runs.append(run)
    labels = re.findall(r'aria-label="([^"]*)"', cleaned)
    return runs + [" ".join(html.unescape(v).split()) for v in labels if v.strip()]


def normalized(raw: str) -> str:
    return " ".join(html.unescape(raw).split())


# -- clean ----------------------------------------------------------------------


def test_script_only_page():
    payload = clean("<script>var secret = 1;</script><p>Pro plan</p>", 100)
    assert "Pro plan" in payload.text and "secret" not in payload.text
    assert payload.cleaner_version == CLEANER_VERSION


def test_drops_noise_and_keeps_structure(fixtures):
    payload = clean(read_file(fixtures / "zoom" / "zoom.html"), 100_000)
    for gone in ("dataLayer", "Sign In", "Copyright", "pricing.css", ".tick"):
        assert gone not in payload.text
    assert payload.retained_tables == 2
    assert '<span aria-label="Included"></span>' in payload.text
    assert "<h2>Compare plans</h2>" in payload.text
    assert payload.passes == () and payload.dropped_byte_share == 0


def test_empty_after_clean():
    with pytest.raises(EmptyAfterClean):
        clean("<html><head><title>x</title></head><body><script>1</script><nav>menu</nav></body></html>", 100)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        clean("<p>x</p>", 0)


def test_pruning_order():
    page = "<p>" + "long prose " * 200 + "</p><table class='grid' data-x='1'><tr><td colspan='2'>Seats</td></tr></table>"
    full = clean(page, 10_000)
    assert full.passes == ()
    pruned = clean(page, 40)
    assert pruned.passes == ("attrs", "prose")
    assert "Seats" in pruned.text and "long prose" not in pruned.text
    assert 0 < pruned.dropped_byte_share < 1
    assert pruned.estimated_tokens <= 40


def test_truncation_keeps_first_block():
    page = "".join(f"<table><tr><td>row {i} " + "x" * 200 + "</td></tr></table>" for i in range(10))
    pruned = clean(page, 60)
    assert pruned.passes[-1] == "truncate"
    assert "row 0" in pruned.text and "row 9" not in pruned.text


def test_estimate_tokens():
    assert estimate_tokens("") == 0
    assert estimate_tokens("a" * 400) == 100
    assert estimate_tokens("a" * 401) == 101
    assert estimate_tokens("é") == 1
    assert estimate_tokens("abc", counter=lambda t: 42) == 42
    assert estimate_tokens("abcd", counter=lambda t: None) == 1


def test_provider_counter_matches_replay(fixtures):
    from ipricing.extractor import ReplayProvider

    replay = ReplayProvider(fixtures / "zoom" / "replay")
    payload = clean(read_file(fixtures / "zoom" / "zoom.html"), 100_000, replay.count_tokens)
    recorded = replay.count_tokens(payload.text)
    assert recorded is not None and payload.estimated_tokens == recorded


@pytest.mark.parametrize("path", corpus(), ids=lambda p: p.name)
def test_no_fabricated_text(path):
    raw = path.read_text(encoding="utf-8")
    haystack = normalized(raw)
    for budget in (100_000, 200, 50):
        try:
            payload = clean(raw, budget)
        except EmptyAfterClean:
            continue
        for run in text_runs(payload.text):
            assert run in haystack, (budget, run)


@pytest.mark.parametrize("path", sorted((FIXTURES / "html" / "generated").glob("*.html")), ids=lambda p: p.name)
def test_payload_size_monotone_in_budget(path):
    raw = path.read_text(encoding="utf-8")
    budgets = [5000, 400, 200, 100, 50, 25, 10]
    sizes = []
    for b in budgets:
        payload = clean(raw, b)
        assert payload.estimated_tokens == estimate_tokens(payload.text)
        sizes.append(payload.estimated_tokens)
    assert sizes == sorted(sizes, reverse=True)


@pytest.mark.parametrize("path", corpus(), ids=lambda p: p.name)
def test_clean_is_deterministic(path):
    raw = path.read_text(encoding="utf-8")
    assert clean(raw, 1000) == clean(raw, 1000)


_fragments = st.lists(
    st.sampled_from(
        ["<p>", "</p>", "<td>", "</td>", "<table>", "</table>", "<script>x()</script>", "&amp;", "&nbsp;", "<!-- c -->", "<b>", "</b>", "\n", "  "]
    )
    | st.text(alphabet=st.characters(blacklist_characters="<>&", blacklist_categories=("Cs",)), min_size=1, max_size=8),
    min_size=1,
    max_size=30,
).map("".join)


@given(_fragments, st.integers(1, 400))
def test_clean_property_safe_and_deterministic(raw, budget):
    try:
        first = clean(raw, budget)
    except EmptyAfterClean:
        return
    assert first == clean(raw, budget)
    assert first.estimated_tokens >= 0 and 0 <= first.dropped_byte_share <= 1
    haystack = normalized(raw)
    for run in text_runs(first.text):
        assert run in haystack


# -- fetch ----------------------------------------------------------------------


def test_local_file_is_identity(fixtures):
    path = fixtures / "zoom" / "zoom.html"
    doc = fetch(str(path), Origin.LOCAL_FILE)
    assert doc.raw_html.encode("utf-8") == path.read_bytes()
    assert doc.fetched_at is not None and doc.origin is Origin.LOCAL_FILE
    assert fetch(str(path)).raw_html == doc.raw_html


def test_missing_and_empty_file(tmp_path):
    with pytest.raises(FileNotFound) as info:
        read_file(tmp_path / "nope.html")
    assert info.value.code == "FILE_NOT_FOUND"
    (tmp_path / "empty.html").write_text("")
    with pytest.raises(FetchError):
        read_file(tmp_path / "empty.html")


def test_lossy_utf8(tmp_path):
    (tmp_path / "bad.html").write_bytes(b"<p>caf\xe9</p>")
    assert read_file(tmp_path / "bad.html").raw_html == "<p>caf�</p>"


@pytest.fixture
def static_server():
    handler = partial(SimpleHTTPRequestHandler, directory=str(FIXTURES / "html"))
    handler.log_message = lambda *a: None
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


INJECTED = ["Projects", "Guests", "Timeline view", "Storage"]


def test_http_fetch_sees_no_injected_rows(static_server):
    doc = fetch(f"{static_server}/scripted_rows.html", Origin.HTTP_URL)
    payload = clean(doc, 10_000)
    assert payload.text.count("<tr>") == 1  # header only
    assert not any(f"<td>{name}</td>" in payload.text for name in INJECTED)


def test_http_errors(static_server):
    with pytest.raises(FetchError):
        fetch(f"{static_server}/missing.html", Origin.HTTP_URL)
    with pytest.raises(FetchError):
        fetch("http://nonexistent.invalid/pricing", Origin.HTTP_URL, timeout=5)
    with pytest.raises(FetchError):
        fetch("not a url", Origin.HTTP_URL)


def _client(endpoint, **kw):
    return WebDriverClient(endpoint, poll_interval=0.01, **kw)


def test_webdriver_returns_script_rows(fake_browser):
    static = (FIXTURES / "html" / "scripted_rows.html").read_text(encoding="utf-8")
    rendered = (FIXTURES / "html" / "scripted_rows.rendered.html").read_text(encoding="utf-8")
    url = "https://pricing.example/scripted"
    browser, endpoint = fake_browser({url: [static, static, rendered]}, ready_after=2)
    doc = fetch(url, Origin.WEBDRIVER_URL, 5, webdriver=_client(endpoint))
    payload = clean(doc, 10_000)
    assert payload.text.count("<tr>") == 1 + len(INJECTED)
    assert all(f"<td>{name}</td>" in payload.text for name in INJECTED)
    assert browser.sessions == {}  # session closed
    reads = [p for m, p in browser.log if p.endswith("/source")]
    assert len(reads) >= 4  # initial + changes + 2 stable samples


def test_webdriver_waits_for_two_equal_samples():
    calls = []
    snaps = iter(["a", "b", "b", "b"])

    class Stub(WebDriverClient):
        def _command(self, method, path, body=None):
            calls.append(path)
            if path == "/session":
                return {"sessionId": "s"}
            if path.endswith("/execute/sync"):
                return "complete"
            if path.endswith("/source"):
                return next(snaps)
            return None

    sleeps = []
    source, final = Stub("http://x", sleep=sleeps.append).render("https://a", 30)
    assert source == "b" and final == "https://a"
    assert sleeps == [0.5, 0.5, 0.5]


def test_webdriver_redirect_final_url(fake_browser):
    url = "https://pricing.example/old"
    _, endpoint = fake_browser({url: ["<p>Pro</p>"]}, redirects={url: "https://pricing.example/new"})
    doc = fetch(url, Origin.WEBDRIVER_URL, 5, webdriver=_client(endpoint))
    assert doc.final_url == "https://pricing.example/new"


def test_webdriver_render_timeout(fake_browser):
    url = "https://pricing.example/slow"
    _, endpoint = fake_browser({url: ["<p>x</p>"]}, ready_after=10**6)
    with pytest.raises(RenderTimeout) as info:
        fetch(url, Origin.WEBDRIVER_URL, 0.1, webdriver=_client(endpoint))
    assert info.value.code == "RENDER_TIMEOUT"


def test_webdriver_errors(fake_browser):
    _, endpoint = fake_browser({})
    with pytest.raises(FetchError):
        fetch("https://dead.example/", Origin.WEBDRIVER_URL, 1, webdriver=_client(endpoint))
    with pytest.raises(FetchError):
        fetch("https://x.example/", Origin.WEBDRIVER_URL, 1, webdriver=_client("http://127.0.0.1:9"))
    with pytest.raises(FetchError):
        fetch("https://x.example/", Origin.WEBDRIVER_URL, 1)
