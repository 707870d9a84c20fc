"""Typing of raw cell values scraped from pricing tables.

The lexicon below is the published contract (see docs/lexicon.md); bump
LEXICON_VERSION whenever an entry changes.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from decimal import Decimal

from .model import CONTACT_SALES, FREE, UNLIMITED, Quantity, ValueType

LEXICON_VERSION = "1"

TRUE_WORDS = frozenset({"✓", "✔", "✔️", "☑", "☑️", "✅", "yes", "y", "true", "included", "available", "check", "checkmark", "tick"})
FALSE_WORDS = frozenset({"✗", "✘", "✕", "×", "❌", "-", "–", "—", "no", "n", "false", "not included", "not available", "unavailable"})
UNLIMITED_WORDS = frozenset({"unlimited", "∞", "no limit", "no limits", "infinite", "limitless"})
FREE_WORDS = frozenset({"free", "free forever", "free plan", "$0 forever"})
CONTACT_MARKERS = ("contact", "custom", "talk to sales", "quote", "let's talk", "get in touch", "call us")

_NUMBER = r"(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?"
_QUANTITY = re.compile(rf"^[$€£]?\s*{_NUMBER}\s*([A-Za-z%][\w%/ .-]*)?$")
_ANY_NUMBER = re.compile(_NUMBER)


def _key(raw: str) -> str:
    return " ".join(unicodedata.normalize("NFKC", raw).casefold().split()).rstrip(".")


def _amount(integer: str, fraction: str | None) -> Decimal:
    return Decimal(integer.replace(",", "") + (f".{fraction}" if fraction else ""))


@dataclass(frozen=True)
class TypedValue:
    kind: ValueType
    value: bool | str | Decimal
    unit: str | None = None


def classify_value(raw: str) -> TypedValue:
    """Checkmark/cross words become BOOLEAN, ``<number> [unit]`` becomes NUMERIC, anything else TEXT."""
    text = " ".join(str(raw).split())
    key = _key(text)
    # emoji variation selectors are not part of the lexicon key
    bare = key.replace("️", "")
    if key in TRUE_WORDS or bare in TRUE_WORDS:
        return TypedValue(ValueType.BOOLEAN, True)
    if key in FALSE_WORDS or bare in FALSE_WORDS:
        return TypedValue(ValueType.BOOLEAN, False)
    match = _QUANTITY.match(text)
    if match:
        unit = match.group(3).strip() if match.group(3) else None
        return TypedValue(ValueType.NUMERIC, _amount(match.group(1), match.group(2)), unit or None)
    return TypedValue(ValueType.TEXT, text)


def parse_price(raw) -> Decimal | None | object:
    """Raw price cell to a Decimal, FREE, CONTACT_SALES, or None when no price can be read."""
    if raw is None or isinstance(raw, bool):
        return None
    if isinstance(raw, (int, Decimal)):
        return Decimal(raw)
    if isinstance(raw, float):
        return Decimal(repr(raw))
    text = str(raw).strip()
    if not text:
        return None
    key = _key(text)
    if key in FREE_WORDS:
        return FREE
    if any(marker in key for marker in CONTACT_MARKERS):
        return CONTACT_SALES
    match = _ANY_NUMBER.search(text)
    if match:
        return _amount(match.group(1), match.group(2))
    return None


def parse_limit(raw: str, default_unit: str | None = None) -> Quantity | object | None:
    """Raw usage-limit cell to a Quantity or UNLIMITED; None when unreadable or unit-less."""
    text = " ".join(str(raw).split())
    if _key(text) in UNLIMITED_WORDS:
        return UNLIMITED
    typed = classify_value(text)
    if typed.kind is not ValueType.NUMERIC:
        return None
    unit = typed.unit or default_unit
    if not unit:
        return None
    return Quantity(typed.value, unit)


PRICE_FIELDS = frozenset({"monthly_price", "annual_price", "price"})


def equivalent(field_name: str, a, b) -> bool:
    """Whether two raw extracted values say the same thing.

    Prices compare by parsed amount, text ignores case and spacing.
    """
    if a == b:
        return True
    if field_name in PRICE_FIELDS:
        pa, pb = parse_price(str(a)), parse_price(str(b))
        return pa is not None and pa == pb
    if isinstance(a, str) and isinstance(b, str):
        return " ".join(a.split()).casefold() == " ".join(b.split()).casefold()
    if isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b):
        return all(equivalent(field_name, x, y) for x, y in zip(a, b))
    return False
