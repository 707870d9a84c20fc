"""Records flowing out of the extractor, before any validation."""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field
from typing import Mapping

from ..diagnostics import Diagnostic


class Category(str, enum.Enum):
    PLANS = "plans"
    FEATURES = "features"
    USAGE_LIMITS = "usageLimits"
    ADDONS = "addOns"


class PassId(str, enum.Enum):
    PLANS = "PLANS"
    FEATURES = "FEATURES"
    USAGE_LIMITS = "USAGE_LIMITS"
    ADDONS_IN_TABLE = "ADDONS_IN_TABLE"
    ADDONS_FROM_HTML = "ADDONS_FROM_HTML"

    @property
    def category(self) -> Category:
        if self in (PassId.ADDONS_IN_TABLE, PassId.ADDONS_FROM_HTML):
            return Category.ADDONS
        return Category[self.value]


PASS_ORDER = (
    PassId.PLANS,
    PassId.FEATURES,
    PassId.USAGE_LIMITS,
    PassId.ADDONS_IN_TABLE,
    PassId.ADDONS_FROM_HTML,
)


@dataclass(frozen=True)
class ExtractedItem:
    name: str
    values: Mapping[str, str] = field(default_factory=dict)  # plan name -> raw cell
    monthly_price: str | None = None
    annual_price: str | None = None
    price: str | None = None
    currency: str | None = None
    unit: str | None = None
    description: str | None = None
    available_for: tuple[str, ...] | None = None
    standalone: bool = False
    linked_features: tuple[str, ...] = ()
    extends: Mapping[str, str] = field(default_factory=dict)  # usage limit -> raw increment
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Provenance:
    template_id: str
    template_version: str
    provider: str
    model: str
    timestamp: dt.datetime
    request_key: str
    raw_response: str = ""


@dataclass(frozen=True)
class ExtractionRecord:
    category: Category
    items: tuple[ExtractedItem, ...]
    provenance: tuple[Provenance, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()

    def names(self) -> list[str]:
        return [i.name for i in self.items]
