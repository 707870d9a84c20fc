"""Diagnostic entries, the closed code registry, and the ordered ledger."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class Severity(str, enum.Enum):
    WARNING = "WARNING"
    ERROR = "ERROR"


# code -> (default severity, one-line meaning). Closed: Diagnostic rejects
# anything not listed here.
REGISTRY: dict[str, tuple[Severity, str]] = {
    # pricing model validation
    "EMPTY_NAME": (Severity.ERROR, "an element has an empty name"),
    "DUPLICATE_PLAN": (Severity.ERROR, "two plans share a normalized name"),
    "DUPLICATE_FEATURE": (Severity.ERROR, "two features share a normalized name"),
    "DUPLICATE_USAGE_LIMIT": (Severity.ERROR, "two usage limits share a normalized name"),
    "DUPLICATE_ADDON": (Severity.ERROR, "two add-ons share a normalized name"),
    "ADDON_PLAN_NAME_CLASH": (Severity.ERROR, "an add-on has the same name as a plan"),
    "DANGLING_REFERENCE": (Severity.ERROR, "a reference names an undeclared element"),
    "INVALID_VALUE_TYPE": (Severity.ERROR, "a feature value does not match the feature's value type"),
    "INVALID_PRICE": (Severity.ERROR, "a price is negative or not a money amount"),
    "INVALID_LIMIT": (Severity.ERROR, "a usage limit value is negative or lacks a unit"),
    "INVALID_CURRENCY": (Severity.ERROR, "currency is not a three-letter ISO-4217 code"),
    "NO_SUBSCRIBABLE_OFFER": (Severity.ERROR, "no plan and no standalone add-on"),
    # process engine
    "DUPLICATE_MERGED": (Severity.WARNING, "items with equal normalized names were merged"),
    "VALUE_CONFLICT": (Severity.WARNING, "merged duplicates disagreed on a value; first occurrence kept"),
    "ANNUAL_EXCEEDS_MONTHLY": (Severity.WARNING, "annual price is above twelve monthly payments"),
    "IMPLAUSIBLE_DISCOUNT": (Severity.WARNING, "annual price is below a quarter of twelve monthly payments"),
    "UNGROUNDED_ITEM": (Severity.WARNING, "item name has no textual support in the source page"),
    "PLAN_ADDON_COLLISION": (Severity.WARNING, "a name was extracted both as plan and as add-on"),
    "ORPHAN_VALUE": (Severity.WARNING, "a value is attached to a plan that was not extracted"),
    "SUSPECT_PLAN_COUNT": (Severity.WARNING, "more plans than the configured plausibility threshold"),
    "LOW_ROW_COVERAGE": (Severity.WARNING, "fewer features extracted than table rows in the source"),
    "ITEM_DROPPED": (Severity.WARNING, "an extracted item was left out of the pricing"),
    "VALUE_DROPPED": (Severity.WARNING, "an extracted value could not be typed and was left out"),
    "LIMIT_CANDIDATE": (Severity.WARNING, "a feature carries quantities and may be a usage limit"),
    # extractor
    "ITEM_REJECTED": (Severity.WARNING, "a response object lacked a required key and was skipped"),
    "MERGE_CONFLICT": (Severity.WARNING, "add-on passes disagreed; table pass kept"),
    "PASS_FAILED": (Severity.ERROR, "an extraction pass failed; later categories are missing"),
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    category: str = ""
    item: str = ""
    evidence: str | None = None
    severity: Severity | None = None

    def __post_init__(self) -> None:
        if self.code not in REGISTRY:
            raise ValueError(f"unregistered diagnostic code {self.code!r}")
        if self.severity is None:
            object.__setattr__(self, "severity", REGISTRY[self.code][0])

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def sort_key(self) -> tuple:
        return (self.severity.value, self.code, self.category, self.item, self.message, self.evidence or "")


@dataclass
class DiagnosticsLedger:
    """Diagnostics in generation order."""

    entries: list[Diagnostic] = field(default_factory=list)

    def add(self, code: str, message: str, category: str = "", item: str = "", evidence: str | None = None) -> Diagnostic:
        entry = Diagnostic(code, message, category, item, evidence)
        self.entries.append(entry)
        return entry

    def extend(self, entries: Iterable[Diagnostic]) -> None:
        self.entries.extend(entries)

    def __iter__(self) -> Iterator[Diagnostic]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def errors(self) -> list[Diagnostic]:
        return [e for e in self.entries if e.is_error]

    @property
    def has_errors(self) -> bool:
        return any(e.is_error for e in self.entries)

    def codes(self) -> list[str]:
        return [e.code for e in self.entries]
