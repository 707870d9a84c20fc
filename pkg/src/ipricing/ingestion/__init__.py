from .clean import CLEANER_VERSION, CleanedPayload, clean, estimate_tokens, reduce_html, render
from .fetch import Origin, SourceDocument, fetch, http_get, read_file
from .webdriver import WebDriverClient

__all__ = [
    "CLEANER_VERSION",
    "CleanedPayload",
    "Origin",
    "SourceDocument",
    "WebDriverClient",
    "clean",
    "estimate_tokens",
    "fetch",
    "http_get",
    "read_file",
    "reduce_html",
    "render",
]
