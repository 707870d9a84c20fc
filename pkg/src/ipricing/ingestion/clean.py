"""Reducing a pricing page to compact markup for the extractor.

Cleaning keeps headings, paragraphs, lists, tables and ``aria-label``
attributes, and unwraps every other element.  Each raw text node becomes
its own text run (whitespace collapsed, runs separated by newlines), so the
output never contains text that is not in the page.

When the result is over the token budget, pruning passes run in this order
until it fits:

1. ``attrs``: drop images and all attributes.
2. ``prose``: drop top-level paragraphs and lists outside tables.
3. ``truncate``: drop trailing top-level blocks (the first block always stays).
"""

from __future__ import annotations

import html
import math
from dataclasses import dataclass, field
from typing import Callable, Union

from bs4 import BeautifulSoup, NavigableString, Tag
from bs4.element import CData, Comment, Declaration, Doctype, ProcessingInstruction

from ..errors import EmptyAfterClean
from .fetch import SourceDocument

CLEANER_VERSION = "1"

DROP = frozenset(
    {
        "script", "style", "noscript", "svg", "template", "iframe", "canvas", "nav", "footer",
        "head", "title", "meta", "link", "base", "object", "embed", "audio", "video", "source",
        "select", "option", "input", "textarea",
    }
)
KEEP = frozenset(
    {
        "h1", "h2", "h3", "h4", "h5", "h6", "p", "ul", "ol", "li", "dl", "dt", "dd",
        "table", "caption", "thead", "tbody", "tfoot", "tr", "th", "td", "img",
    }
)
KEEP_ATTRS = ("aria-label", "colspan", "rowspan")
CELLS = frozenset({"td", "th"})
LINE_BREAK_BEFORE = frozenset(KEEP - {"img", "td", "th"})
PROSE = frozenset({"p", "ul", "ol", "dl"})
_SKIPPED = (Comment, Declaration, Doctype, ProcessingInstruction, CData)


@dataclass
class Node:
    tag: str
    attrs: tuple[tuple[str, str], ...] = ()
    children: list[Union["Node", str]] = field(default_factory=list)


Child = Union[Node, str]


@dataclass(frozen=True)
class CleanedPayload:
    text: str
    retained_tables: int
    estimated_tokens: int
    dropped_byte_share: float
    passes: tuple[str, ...] = ()
    cleaner_version: str = CLEANER_VERSION


TokenCounter = Callable[[str], "int | None"]


def estimate_tokens(text: str, counter: TokenCounter | None = None) -> int:
    """``ceil(utf8 bytes / 4)``, or the provider count when ``counter`` gives one."""
    if counter is not None:
        counted = counter(text)
        if counted is not None:
            return int(counted)
    return math.ceil(len(text.encode("utf-8")) / 4)


# --------------------------------------------------------------------------
# tree reduction
# --------------------------------------------------------------------------


def _convert(element) -> list[Child]:
    if isinstance(element, _SKIPPED):
        return []
    if isinstance(element, NavigableString):
        text = " ".join(str(element).split())
        return [text] if text else []
    if not isinstance(element, Tag):
        return []

    name = element.name.lower()
    label = " ".join(str(element.get("aria-label", "")).split())
    if name in DROP:
        # an icon's label is often the only trace of a checkmark
        return [Node("span", (("aria-label", label),))] if name == "svg" and label else []

    children: list[Child] = []
    for child in element.children:
        children.extend(_convert(child))

    if name == "img":
        alt = " ".join(str(element.get("alt", "")).split())
        attrs = tuple(a for a in (("alt", alt), ("aria-label", label)) if a[1])
        return [Node("img", attrs)] if attrs else []
    if name in KEEP:
        attrs = []
        for key in KEEP_ATTRS:
            value = element.get(key)
            if value is not None and " ".join(str(value).split()):
                attrs.append((key, " ".join(str(value).split())))
        return [Node(name, tuple(attrs), children)]
    if label:
        return [Node("span", (("aria-label", label),), children)]
    return children


def _has_text(node: Child) -> bool:
    if isinstance(node, str):
        return True
    return any(_has_text(c) for c in node.children)


def _prune_empty(children: list[Child]) -> list[Child]:
    out: list[Child] = []
    for child in children:
        if isinstance(child, str):
            out.append(child)
            continue
        child.children = _prune_empty(child.children)
        if child.tag in CELLS or child.tag == "img":
            out.append(child)
        elif child.tag == "span" and child.attrs:
            out.append(child)
        elif child.tag == "tr":
            if any(isinstance(c, Node) and c.tag in CELLS for c in child.children):
                out.append(child)
        elif _has_text(child):
            out.append(child)
    return out


def _blocks(children: list[Child]) -> list[Node]:
    """Top-level blocks; loose text runs and inline nodes are grouped into paragraphs."""
    blocks: list[Node] = []
    loose: list[Child] = []
    for child in children:
        if isinstance(child, Node) and child.tag in KEEP and child.tag not in CELLS and child.tag != "img":
            if loose:
                blocks.append(Node("p", (), loose))
                loose = []
            blocks.append(child)
        else:
            loose.append(child)
    if loose:
        blocks.append(Node("p", (), loose))
    return blocks


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------


def _render(node: Child) -> str:
    if isinstance(node, str):
        return html.escape(node, quote=False)
    attrs = "".join(f' {k}="{html.escape(v, quote=True)}"' for k, v in node.attrs)
    if node.tag == "img":
        return f"<img{attrs}>"
    parts: list[str] = []
    previous: Child | None = None
    for child in node.children:
        if isinstance(child, str) and isinstance(previous, str):
            parts.append("\n")
        elif isinstance(child, Node) and child.tag in LINE_BREAK_BEFORE:
            parts.append("\n")
        parts.append(_render(child))
        previous = child
    inner = "".join(parts)
    if any(isinstance(c, Node) and c.tag in LINE_BREAK_BEFORE for c in node.children):
        inner += "\n"
    return f"<{node.tag}{attrs}>{inner}</{node.tag}>"


def render(blocks: list[Node]) -> str:
    return "\n".join(_render(b) for b in blocks)


def _count(node: Child, tag: str) -> int:
    if isinstance(node, str):
        return 0
    return (node.tag == tag) + sum(_count(c, tag) for c in node.children)


def _strip_attrs(children: list[Child]) -> list[Child]:
    out: list[Child] = []
    for child in children:
        if isinstance(child, str):
            out.append(child)
        elif child.tag == "img":
            continue
        elif child.tag == "span":
            out.extend(_strip_attrs(child.children))
        else:
            out.append(Node(child.tag, (), _strip_attrs(child.children)))
    return out


def reduce_html(raw_html: str) -> list[Node]:
    """Parse and reduce a document to its top-level blocks (no budget applied)."""
    soup = BeautifulSoup(raw_html, "html.parser")
    return _blocks(_prune_empty(_convert(soup)))


def clean(doc: SourceDocument | str, budget: int, counter: TokenCounter | None = None) -> CleanedPayload:
    """Clean ``doc`` and prune it to at most ``budget`` estimated tokens where possible."""
    if budget <= 0:
        raise ValueError("token budget must be positive")
    raw = doc if isinstance(doc, str) else doc.raw_html
    blocks = reduce_html(raw)
    if not any(_has_text(b) for b in blocks):
        raise EmptyAfterClean("no visible text left after cleaning")

    text = render(blocks)
    full_size = len(text.encode("utf-8"))
    passes: list[str] = []

    def over(t: str) -> bool:
        return estimate_tokens(t, counter) > budget

    if over(text):
        passes.append("attrs")
        blocks = _blocks(_prune_empty(_strip_attrs(blocks)))
        text = render(blocks)
    if over(text):
        passes.append("prose")
        kept = [b for b in blocks if b.tag not in PROSE]
        blocks = kept or blocks[:1]
        text = render(blocks)
    if over(text):
        passes.append("truncate")
        while len(blocks) > 1 and over(text):
            blocks = blocks[:-1]
            text = render(blocks)

    if not any(_has_text(b) for b in blocks):
        raise EmptyAfterClean("no visible text left after pruning")
    share = 1 - len(text.encode("utf-8")) / full_size if full_size else 0.0
    return CleanedPayload(
        text=text,
        retained_tables=sum(_count(b, "table") for b in blocks),
        estimated_tokens=estimate_tokens(text, counter),
        dropped_byte_share=max(0.0, share),
        passes=tuple(passes),
    )
