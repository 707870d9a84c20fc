"""Turning a model's free-form reply into ExtractedItems.

Replies are expected to hold a JSON array of objects.  Markdown fences and
surrounding prose are tolerated, as is a wrapper object holding exactly one
array.  A malformed element only costs that element.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..diagnostics import Diagnostic
from ..errors import ParseFailed
from .records import Category, ExtractedItem

_FENCE = re.compile(r"```[ \t]*[\w-]*[ \t]*\n(.*?)```", re.DOTALL)

# accepted spellings -> ExtractedItem field
_ALIASES = {
    "name": "name",
    "title": "name",
    "values": "values",
    "valuesperplan": "values",
    "rawvalueperplan": "values",
    "plans": "values",
    "monthlyprice": "monthly_price",
    "pricemonthly": "monthly_price",
    "annualprice": "annual_price",
    "yearlyprice": "annual_price",
    "priceannual": "annual_price",
    "price": "price",
    "currency": "currency",
    "unit": "unit",
    "description": "description",
    "availablefor": "available_for",
    "requiredplans": "available_for",
    "standalone": "standalone",
    "linkedfeatures": "linked_features",
    "extends": "extends",
    "usagelimitextensions": "extends",
    "notes": "notes",
}

# fields each category keeps; others are ignored
_SCHEMA = {
    Category.PLANS: {"name", "monthly_price", "annual_price", "currency", "description", "notes"},
    Category.FEATURES: {"name", "values", "description", "notes"},
    Category.USAGE_LIMITS: {"name", "values", "unit", "linked_features", "description", "notes"},
    Category.ADDONS: {"name", "price", "unit", "available_for", "standalone", "extends", "values", "description", "notes"},
}


@dataclass
class ParseResult:
    items: list[ExtractedItem] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)


def _canon_key(key: str) -> str:
    return re.sub(r"[^a-z]", "", key.lower())


def _cell(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        parts = [p for p in (_cell(v) for v in value) if p]
        return ", ".join(parts) if parts else None
    if isinstance(value, dict):
        return json.dumps(value, ensure_ascii=False, sort_keys=True)
    text = " ".join(str(value).split())
    return text or None


def _cells(value) -> dict[str, str]:
    if not isinstance(value, dict):
        return {}
    out = {}
    for k, v in value.items():
        cell = _cell(v)
        if cell is not None and str(k).strip():
            out[" ".join(str(k).split())] = cell
    return out


def _names(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)):
        return ()
    return tuple(c for c in (_cell(v) for v in value) if c)


def _recover_array(raw: str):
    candidates = [m.group(1) for m in _FENCE.finditer(raw)] + [raw]
    decoder = json.JSONDecoder()
    for text in candidates:
        text = text.strip()
        try:
            return json.loads(text)
        except ValueError:
            pass
        for match in re.finditer(r"[\[{]", text):
            try:
                value, _ = decoder.raw_decode(text, match.start())
            except ValueError:
                continue
            if isinstance(value, list) or _unwrap(value) is not None:
                return value
    return None


def _unwrap(value):
    if isinstance(value, list):
        return value
    if isinstance(value, dict):
        lists = [v for v in value.values() if isinstance(v, list)]
        if "items" in value and isinstance(value["items"], list):
            return value["items"]
        if len(lists) == 1:
            return lists[0]
    return None


def coerce_item(obj: dict, category: Category) -> ExtractedItem | None:
    """Build one item from a decoded object; None when it has no usable name."""
    allowed = _SCHEMA[category]
    fields: dict = {}
    for key, value in obj.items():
        target = _ALIASES.get(_canon_key(str(key)))
        if target is None or target not in allowed or target in fields:
            continue
        fields[target] = value

    name = _cell(fields.get("name"))
    if not name:
        return None
    available = fields.get("available_for")
    if isinstance(available, str) and available.strip().casefold() in ("all", "all plans", "any"):
        available = None
    return ExtractedItem(
        name=name,
        values=_cells(fields.get("values")),
        monthly_price=_cell(fields.get("monthly_price")),
        annual_price=_cell(fields.get("annual_price")),
        price=_cell(fields.get("price")),
        currency=_cell(fields.get("currency")),
        unit=_cell(fields.get("unit")),
        description=_cell(fields.get("description")),
        available_for=_names(available) or None if available is not None else None,
        standalone=fields.get("standalone") is True or _cell(fields.get("standalone")) in ("true", "yes"),
        linked_features=_names(fields.get("linked_features")),
        extends=_cells(fields.get("extends")),
        notes=_names(fields.get("notes")),
    )


def parse_structured_response(raw: str, category: Category) -> ParseResult:
    """Recover the item array from ``raw``; raises ParseFailed if there is none."""
    decoded = _recover_array(raw)
    array = _unwrap(decoded)
    if array is None:
        raise ParseFailed(f"no JSON array recoverable for {category.value}", raw)

    result = ParseResult()
    for position, element in enumerate(array):
        item = coerce_item(element, category) if isinstance(element, dict) else None
        if item is None:
            result.warnings.append(
                Diagnostic(
                    "ITEM_REJECTED",
                    f"element {position} has no usable 'name'",
                    category.value,
                    f"#{position}",
                    evidence=json.dumps(element, ensure_ascii=False)[:200],
                )
            )
            continue
        result.items.append(item)
    return result
