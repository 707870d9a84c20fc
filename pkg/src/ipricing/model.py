"""Intelligent-pricing data model: plans, features, usage limits and add-ons.

Instances are frozen; mapping fields are plain dicts that callers must not
mutate after construction.  Structural problems are never raised by the
constructors, they are reported by :func:`validate_model` so that a model
produced by a noisy extraction can still be inspected.
"""

from __future__ import annotations

import datetime as dt
import enum
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Mapping, Union

from .diagnostics import DiagnosticsLedger

SYNTAX_VERSION = "1.0"


class Sentinel(str, enum.Enum):
    FREE = "free"
    CONTACT_SALES = "contact_sales"
    UNLIMITED = "unlimited"

    def __repr__(self) -> str:
        return f"Sentinel.{self.name}"


FREE = Sentinel.FREE
CONTACT_SALES = Sentinel.CONTACT_SALES
UNLIMITED = Sentinel.UNLIMITED


class ValueType(str, enum.Enum):
    BOOLEAN = "BOOLEAN"
    TEXT = "TEXT"
    NUMERIC = "NUMERIC"


@dataclass(frozen=True)
class Quantity:
    """A finite usage-limit value, e.g. ``Quantity(Decimal(5), "GB")``."""

    amount: Decimal
    unit: str

    def __str__(self) -> str:
        return f"{format_amount(self.amount)} {self.unit}"


Price = Union[Decimal, Sentinel]
LimitValue = Union[Quantity, Sentinel]
FeatureValue = Union[bool, str, Decimal]


def normalize_name(name: str) -> str:
    """Case-insensitive, whitespace-insensitive key used for every name comparison."""
    return " ".join(unicodedata.normalize("NFKC", name).casefold().split())


def format_amount(value: Decimal) -> str:
    """Shortest plain-notation rendering of a decimal (no exponent)."""
    text = format(value.normalize(), "f")
    return "0" if text in ("-0", "") else text


@dataclass(frozen=True)
class Feature:
    name: str
    value_type: ValueType = ValueType.BOOLEAN
    default_value: FeatureValue = False
    description: str | None = None
    unit: str | None = None


@dataclass(frozen=True)
class UsageLimit:
    name: str
    default_value: LimitValue
    linked_features: tuple[str, ...] = ()
    description: str | None = None


@dataclass(frozen=True)
class Plan:
    name: str
    monthly_price: Price
    annual_price: Price | None = None
    currency: str | None = None  # None: the pricing's currency
    description: str | None = None
    feature_values: Mapping[str, FeatureValue] = field(default_factory=dict)
    usage_limit_values: Mapping[str, LimitValue] = field(default_factory=dict)


@dataclass(frozen=True)
class AddOn:
    name: str
    price: Price
    unit: str | None = None
    available_for: tuple[str, ...] | None = None  # None: every plan
    standalone: bool = False
    description: str | None = None
    feature_values: Mapping[str, FeatureValue] = field(default_factory=dict)
    usage_limit_values: Mapping[str, LimitValue] = field(default_factory=dict)
    usage_limit_extensions: Mapping[str, LimitValue] = field(default_factory=dict)

    def is_available_for(self, plan_name: str) -> bool:
        if self.available_for is None:
            return True
        key = normalize_name(plan_name)
        return any(normalize_name(p) == key for p in self.available_for)


@dataclass(frozen=True)
class Pricing:
    saas_name: str
    source_url: str = ""
    extraction_date: dt.date | None = None
    currency: str = "USD"
    features: tuple[Feature, ...] = ()
    usage_limits: tuple[UsageLimit, ...] = ()
    plans: tuple[Plan, ...] = ()
    add_ons: tuple[AddOn, ...] = ()
    syntax_version: str = SYNTAX_VERSION

    def feature(self, name: str) -> Feature | None:
        return _lookup(self.features, name)

    def usage_limit(self, name: str) -> UsageLimit | None:
        return _lookup(self.usage_limits, name)

    def plan(self, name: str) -> Plan | None:
        return _lookup(self.plans, name)

    def add_on(self, name: str) -> AddOn | None:
        return _lookup(self.add_ons, name)


def _lookup(items, name):
    key = normalize_name(name)
    for item in items:
        if normalize_name(item.name) == key:
            return item
    return None


@dataclass(frozen=True)
class SummaryCounts:
    plans: int
    features: int
    usage_limits: int
    add_ons: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.plans, self.features, self.usage_limits, self.add_ons)


def summarize(p: Pricing) -> SummaryCounts:
    return SummaryCounts(len(p.plans), len(p.features), len(p.usage_limits), len(p.add_ons))


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

_CURRENCY = re.compile(r"^[A-Z]{3}$")


def is_money(value) -> bool:
    return isinstance(value, Decimal) and value.is_finite() and value >= 0


def is_price(value) -> bool:
    return value in (FREE, CONTACT_SALES) or is_money(value)


def is_limit_value(value) -> bool:
    if value is UNLIMITED:
        return True
    return (
        isinstance(value, Quantity)
        and isinstance(value.amount, Decimal)
        and value.amount.is_finite()
        and value.amount >= 0
        and isinstance(value.unit, str)
        and bool(value.unit.strip())
    )


def value_matches(value_type: ValueType, value) -> bool:
    if value_type is ValueType.BOOLEAN:
        return isinstance(value, bool)
    if value_type is ValueType.TEXT:
        return isinstance(value, str)
    return isinstance(value, Decimal) and value.is_finite()


def validate_model(p: Pricing) -> DiagnosticsLedger:
    """Check every model invariant; the model is valid iff no ERROR entry comes back."""
    ledger = DiagnosticsLedger()

    if not _CURRENCY.match(p.currency or ""):
        ledger.add("INVALID_CURRENCY", f"pricing currency {p.currency!r} is not an ISO-4217 code", "pricing", p.saas_name)

    features = _check_names(ledger, p.features, "features", "DUPLICATE_FEATURE")
    limits = _check_names(ledger, p.usage_limits, "usageLimits", "DUPLICATE_USAGE_LIMIT")
    plans = _check_names(ledger, p.plans, "plans", "DUPLICATE_PLAN")
    addons = _check_names(ledger, p.add_ons, "addOns", "DUPLICATE_ADDON")

    for key in sorted(set(plans) & set(addons)):
        ledger.add("ADDON_PLAN_NAME_CLASH", f"add-on {addons[key].name!r} has the same name as a plan", "addOns", addons[key].name)

    for f in p.features:
        if not value_matches(f.value_type, f.default_value):
            ledger.add("INVALID_VALUE_TYPE", f"default value {f.default_value!r} is not {f.value_type.value}", "features", f.name)

    for ul in p.usage_limits:
        if not is_limit_value(ul.default_value):
            ledger.add("INVALID_LIMIT", f"default value {ul.default_value!r} is not a valid limit", "usageLimits", ul.name)
        for ref in ul.linked_features:
            if normalize_name(ref) not in features:
                ledger.add("DANGLING_REFERENCE", f"linked feature {ref!r} is not declared", "usageLimits", ul.name)

    for plan in p.plans:
        if not is_price(plan.monthly_price):
            ledger.add("INVALID_PRICE", f"monthly price {plan.monthly_price!r} is invalid", "plans", plan.name)
        if plan.annual_price is not None and not is_price(plan.annual_price):
            ledger.add("INVALID_PRICE", f"annual price {plan.annual_price!r} is invalid", "plans", plan.name)
        if plan.currency is not None and not _CURRENCY.match(plan.currency):
            ledger.add("INVALID_CURRENCY", f"plan currency {plan.currency!r} is not an ISO-4217 code", "plans", plan.name)
        _check_values(ledger, "plans", plan.name, plan.feature_values, features, plan.usage_limit_values, limits)

    for addon in p.add_ons:
        if not is_price(addon.price):
            ledger.add("INVALID_PRICE", f"price {addon.price!r} is invalid", "addOns", addon.name)
        for ref in addon.available_for or ():
            if normalize_name(ref) not in plans:
                ledger.add("DANGLING_REFERENCE", f"available for undeclared plan {ref!r}", "addOns", addon.name)
        _check_values(ledger, "addOns", addon.name, addon.feature_values, features, addon.usage_limit_values, limits)
        _check_values(ledger, "addOns", addon.name, {}, features, addon.usage_limit_extensions, limits)

    if not p.plans and not any(a.standalone for a in p.add_ons):
        ledger.add("NO_SUBSCRIBABLE_OFFER", "pricing has no plan and no standalone add-on", "pricing", p.saas_name)
    return ledger


def _check_names(ledger: DiagnosticsLedger, items, category: str, dup_code: str) -> dict:
    groups: dict[str, list] = defaultdict(list)
    for item in items:
        if not isinstance(item.name, str) or not item.name.strip():
            ledger.add("EMPTY_NAME", "element has an empty name", category, "")
            continue
        groups[normalize_name(item.name)].append(item)
    for key in sorted(groups):
        if len(groups[key]) > 1:
            spellings = sorted({repr(i.name) for i in groups[key]})
            ledger.add(dup_code, f"{len(groups[key])} entries share the name {key!r}: {', '.join(spellings)}", category, key)
    return {key: group[0] for key, group in groups.items()}


def _check_values(ledger, category, owner, feature_values, features, limit_values, limits) -> None:
    for name, value in feature_values.items():
        feature = features.get(normalize_name(name))
        if feature is None:
            ledger.add("DANGLING_REFERENCE", f"value for undeclared feature {name!r}", category, owner)
        elif not value_matches(feature.value_type, value):
            ledger.add("INVALID_VALUE_TYPE", f"value {value!r} for feature {name!r} is not {feature.value_type.value}", category, owner)
    for name, value in limit_values.items():
        if normalize_name(name) not in limits:
            ledger.add("DANGLING_REFERENCE", f"value for undeclared usage limit {name!r}", category, owner)
        elif not is_limit_value(value):
            ledger.add("INVALID_LIMIT", f"value {value!r} for usage limit {name!r} is invalid", category, owner)
