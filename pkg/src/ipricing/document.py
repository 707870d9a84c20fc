"""Pricing document (``.pricing.yml``) serialization, parsing, and ledger logs.

The document is YAML with a fixed key order.  Prices carry at least two
fractional digits and are read back as exact decimals; the literals
``free``, ``contact_sales`` and ``unlimited`` stand for the sentinels.
See ``docs/pricing-document.md`` for the schema.
"""

from __future__ import annotations

import datetime as dt
import re
from decimal import Decimal, InvalidOperation
from typing import Any, Iterable

import yaml
from yaml.constructor import SafeConstructor

from .diagnostics import Diagnostic, DiagnosticsLedger
from .errors import DocumentSemanticError, DocumentSyntaxError
from .model import (
    CONTACT_SALES,
    FREE,
    SYNTAX_VERSION,
    UNLIMITED,
    AddOn,
    Feature,
    Plan,
    Pricing,
    Quantity,
    Sentinel,
    UsageLimit,
    ValueType,
    format_amount,
    normalize_name,
    validate_model,
)

PRICING_SUFFIX = ".pricing.yml"
LOG_SUFFIX = ".log"

_QUANTITY = re.compile(r"^\s*(\d+(?:\.\d+)?)\s+(\S.*?)\s*$")
_TWO_PLACES = Decimal("0.01")


# --------------------------------------------------------------------------
# serialize
# --------------------------------------------------------------------------


class _Dumper(yaml.SafeDumper):
    pass


def _represent_decimal(dumper: yaml.SafeDumper, value: Decimal):
    text = format(value, "f")
    tag = "tag:yaml.org,2002:float" if "." in text else "tag:yaml.org,2002:int"
    return dumper.represent_scalar(tag, text)


def _represent_str_enum(dumper: yaml.SafeDumper, value):
    return dumper.represent_str(value.value)


_Dumper.add_representer(Decimal, _represent_decimal)
_Dumper.add_representer(Sentinel, _represent_str_enum)
_Dumper.add_representer(ValueType, _represent_str_enum)


def format_price(value: Decimal) -> Decimal:
    value = value.normalize()
    if value.as_tuple().exponent > -2:
        value = value.quantize(_TWO_PLACES)
    return value


def _price_out(value):
    if value is None or isinstance(value, Sentinel):
        return value
    return format_price(value)


def _limit_out(value):
    if isinstance(value, Quantity):
        return str(value)
    return value


def _feature_value_out(value):
    if isinstance(value, Decimal):
        return Decimal(format_amount(value))
    return value


def _values_out(values) -> dict:
    return {name: _feature_value_out(v) for name, v in values.items()}


def _limits_out(values) -> dict:
    return {name: _limit_out(v) for name, v in values.items()}


def to_document(p: Pricing) -> dict[str, Any]:
    """Plain-data form of the model with the canonical key order."""
    features = []
    for f in p.features:
        entry: dict[str, Any] = {"name": f.name}
        if f.description is not None:
            entry["description"] = f.description
        entry["valueType"] = f.value_type
        entry["defaultValue"] = _feature_value_out(f.default_value)
        if f.unit is not None:
            entry["unit"] = f.unit
        features.append(entry)

    limits = []
    for ul in p.usage_limits:
        entry = {"name": ul.name}
        if ul.description is not None:
            entry["description"] = ul.description
        entry["defaultValue"] = _limit_out(ul.default_value)
        entry["linkedFeatures"] = list(ul.linked_features)
        limits.append(entry)

    plans = []
    for plan in p.plans:
        entry = {"name": plan.name}
        if plan.description is not None:
            entry["description"] = plan.description
        entry["monthlyPrice"] = _price_out(plan.monthly_price)
        if plan.annual_price is not None:
            entry["annualPrice"] = _price_out(plan.annual_price)
        if plan.currency is not None:
            entry["currency"] = plan.currency
        entry["features"] = _values_out(plan.feature_values)
        entry["usageLimits"] = _limits_out(plan.usage_limit_values)
        plans.append(entry)

    addons = []
    for a in p.add_ons:
        entry = {"name": a.name}
        if a.description is not None:
            entry["description"] = a.description
        entry["price"] = _price_out(a.price)
        if a.unit is not None:
            entry["unit"] = a.unit
        entry["availableFor"] = "all" if a.available_for is None else list(a.available_for)
        entry["standalone"] = a.standalone
        entry["features"] = _values_out(a.feature_values)
        entry["usageLimits"] = _limits_out(a.usage_limit_values)
        entry["usageLimitExtensions"] = _limits_out(a.usage_limit_extensions)
        addons.append(entry)

    return {
        "saasName": p.saas_name,
        "syntaxVersion": p.syntax_version,
        "sourceUrl": p.source_url,
        "extractionDate": p.extraction_date,
        "currency": p.currency,
        "features": features,
        "usageLimits": limits,
        "plans": plans,
        "addOns": addons,
    }


def serialize(p: Pricing, header: Iterable[str] = ()) -> str:
    """Render ``p`` as document text; equal models give byte-equal output.

    ``header`` lines become leading ``#`` comments (used for provenance).
    """
    body = yaml.dump(
        to_document(p),
        Dumper=_Dumper,
        sort_keys=False,
        default_flow_style=False,
        allow_unicode=True,
        width=1 << 16,
    )
    comments = "".join(f"# {' '.join(line.split())}\n" for line in header)
    return comments + body


# --------------------------------------------------------------------------
# parse
# --------------------------------------------------------------------------

_SCALARS = SafeConstructor()
_NULL = "tag:yaml.org,2002:null"
_BOOL = "tag:yaml.org,2002:bool"
_INT = "tag:yaml.org,2002:int"
_FLOAT = "tag:yaml.org,2002:float"
_STR = "tag:yaml.org,2002:str"
_DATE = "tag:yaml.org,2002:timestamp"


def _fail(node, message: str):
    mark = node.start_mark
    raise DocumentSyntaxError(message, mark.line + 1, mark.column + 1)


def _scalar(node, what: str) -> yaml.ScalarNode:
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, f"{what} must be a scalar")
    return node


def _string(node, what: str, optional: bool = False) -> str | None:
    node = _scalar(node, what)
    if node.tag == _NULL and optional:
        return None
    if node.tag == _NULL:
        _fail(node, f"{what} must not be empty")
    return node.value


def _number(node, what: str) -> Decimal:
    node = _scalar(node, what)
    if node.tag not in (_INT, _FLOAT):
        _fail(node, f"{what} must be a number, got {node.value!r}")
    try:
        if node.tag == _INT:
            return Decimal(_SCALARS.construct_yaml_int(node))
        value = Decimal(node.value.replace("_", ""))
    except (InvalidOperation, ValueError):
        _fail(node, f"{what} is not a finite number: {node.value!r}")
    if not value.is_finite():
        _fail(node, f"{what} is not a finite number: {node.value!r}")
    return value


def _bool(node, what: str) -> bool:
    node = _scalar(node, what)
    if node.tag != _BOOL:
        _fail(node, f"{what} must be true or false, got {node.value!r}")
    return _SCALARS.construct_yaml_bool(node)


def _mapping(node, what: str) -> list[tuple[str, Any]]:
    if isinstance(node, yaml.ScalarNode) and node.tag == _NULL:
        return []
    if not isinstance(node, yaml.MappingNode):
        _fail(node, f"{what} must be a mapping")
    seen: set[str] = set()
    pairs = []
    for key_node, value_node in node.value:
        key = _string(key_node, f"key in {what}")
        if key in seen:
            _fail(key_node, f"duplicate key {key!r} in {what}")
        seen.add(key)
        pairs.append((key, value_node))
    return pairs


def _sequence(node, what: str) -> list:
    if isinstance(node, yaml.ScalarNode) and node.tag == _NULL:
        return []
    if not isinstance(node, yaml.SequenceNode):
        _fail(node, f"{what} must be a list")
    return list(node.value)


class _Fields:
    """Mapping node accessor that rejects unknown keys and reports missing ones."""

    def __init__(self, node, what: str, allowed: Iterable[str]) -> None:
        self.node = node
        self.what = what
        self.items = dict(_mapping(node, what))
        unknown = [k for k in self.items if k not in set(allowed)]
        if unknown:
            key_node = next(k for k, _ in node.value if k.value == unknown[0])
            _fail(key_node, f"unknown key {unknown[0]!r} in {what}")

    def required(self, key: str):
        if key not in self.items:
            _fail(self.node, f"{self.what} is missing {key!r}")
        return self.items[key]

    def get(self, key: str):
        return self.items.get(key)


def _price(node, what: str):
    node = _scalar(node, what)
    if node.tag == _STR:
        literal = node.value.strip().casefold()
        if literal == FREE.value:
            return FREE
        if literal == CONTACT_SALES.value:
            return CONTACT_SALES
        _fail(node, f"{what} must be a number, 'free' or 'contact_sales'")
    return _number(node, what)


def parse_limit_value(text: str):
    """``'unlimited'`` or ``'<amount> <unit>'``; returns None if neither."""
    if text.strip().casefold() == UNLIMITED.value:
        return UNLIMITED
    match = _QUANTITY.match(text)
    if not match:
        return None
    return Quantity(Decimal(match.group(1)), match.group(2))


def _limit(node, what: str):
    node = _scalar(node, what)
    value = parse_limit_value(node.value) if node.tag == _STR else None
    if value is None:
        _fail(node, f"{what} must be 'unlimited' or '<amount> <unit>', got {node.value!r}")
    return value


def _feature_value(node, what: str, value_type: ValueType | None):
    if value_type is ValueType.BOOLEAN:
        return _bool(node, what)
    if value_type is ValueType.NUMERIC:
        return _number(node, what)
    if value_type is ValueType.TEXT:
        return _scalar(node, what).value
    # undeclared feature: best effort, validation reports the dangling name
    node = _scalar(node, what)
    if node.tag == _BOOL:
        return _bool(node, what)
    if node.tag in (_INT, _FLOAT):
        return _number(node, what)
    return node.value


def _feature_values(node, what: str, types: dict[str, ValueType]) -> dict:
    return {
        name: _feature_value(value, f"{what} feature {name!r}", types.get(normalize_name(name)))
        for name, value in _mapping(node, what)
    }


def _limit_values(node, what: str) -> dict:
    return {name: _limit(value, f"{what} usage limit {name!r}") for name, value in _mapping(node, what)}


def _parse_feature(node) -> Feature:
    f = _Fields(node, "feature", ("name", "description", "valueType", "defaultValue", "unit"))
    name = _string(f.required("name"), "feature name")
    type_node = f.required("valueType")
    try:
        value_type = ValueType(_string(type_node, "valueType").upper())
    except ValueError:
        _fail(type_node, f"valueType must be one of {[t.value for t in ValueType]}")
    return Feature(
        name=name,
        value_type=value_type,
        default_value=_feature_value(f.required("defaultValue"), f"feature {name!r} defaultValue", value_type),
        description=_string(f.get("description"), "description", True) if f.get("description") else None,
        unit=_string(f.get("unit"), "unit", True) if f.get("unit") else None,
    )


def _parse_limit(node) -> UsageLimit:
    f = _Fields(node, "usage limit", ("name", "description", "defaultValue", "linkedFeatures"))
    name = _string(f.required("name"), "usage limit name")
    linked = f.get("linkedFeatures")
    return UsageLimit(
        name=name,
        default_value=_limit(f.required("defaultValue"), f"usage limit {name!r} defaultValue"),
        linked_features=tuple(_string(n, "linked feature") for n in _sequence(linked, "linkedFeatures")) if linked else (),
        description=_string(f.get("description"), "description", True) if f.get("description") else None,
    )


def _parse_plan(node, types) -> Plan:
    f = _Fields(node, "plan", ("name", "description", "monthlyPrice", "annualPrice", "currency", "features", "usageLimits"))
    name = _string(f.required("name"), "plan name")
    annual = f.get("annualPrice")
    return Plan(
        name=name,
        monthly_price=_price(f.required("monthlyPrice"), f"plan {name!r} monthlyPrice"),
        annual_price=_price(annual, f"plan {name!r} annualPrice") if annual is not None else None,
        currency=_string(f.get("currency"), "currency", True) if f.get("currency") else None,
        description=_string(f.get("description"), "description", True) if f.get("description") else None,
        feature_values=_feature_values(f.get("features"), f"plan {name!r}", types) if f.get("features") else {},
        usage_limit_values=_limit_values(f.get("usageLimits"), f"plan {name!r}") if f.get("usageLimits") else {},
    )


def _parse_addon(node, types) -> AddOn:
    f = _Fields(
        node,
        "add-on",
        ("name", "description", "price", "unit", "availableFor", "standalone", "features", "usageLimits", "usageLimitExtensions"),
    )
    name = _string(f.required("name"), "add-on name")
    avail_node = f.get("availableFor")
    if avail_node is None or (isinstance(avail_node, yaml.ScalarNode) and avail_node.value.strip().casefold() == "all"):
        available = None
    else:
        available = tuple(_string(n, "availableFor entry") for n in _sequence(avail_node, "availableFor"))
    return AddOn(
        name=name,
        price=_price(f.required("price"), f"add-on {name!r} price"),
        unit=_string(f.get("unit"), "unit", True) if f.get("unit") else None,
        available_for=available,
        standalone=_bool(f.get("standalone"), "standalone") if f.get("standalone") else False,
        description=_string(f.get("description"), "description", True) if f.get("description") else None,
        feature_values=_feature_values(f.get("features"), f"add-on {name!r}", types) if f.get("features") else {},
        usage_limit_values=_limit_values(f.get("usageLimits"), f"add-on {name!r}") if f.get("usageLimits") else {},
        usage_limit_extensions=_limit_values(f.get("usageLimitExtensions"), f"add-on {name!r}")
        if f.get("usageLimitExtensions")
        else {},
    )


def parse(text: str, validate: bool = True) -> Pricing:
    """Parse document text into a Pricing.

    Raises DocumentSyntaxError (with 1-based line/column) for malformed text
    and DocumentSemanticError when the model fails validation.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (1, 1)
        raise DocumentSyntaxError(exc.problem or "malformed document", line, col) from None
    except yaml.YAMLError as exc:
        raise DocumentSyntaxError(str(exc), 1, 1) from None
    if root is None:
        raise DocumentSyntaxError("empty document", 1, 1)

    f = _Fields(
        root,
        "document",
        ("saasName", "syntaxVersion", "sourceUrl", "extractionDate", "currency", "features", "usageLimits", "plans", "addOns"),
    )
    date_node = f.get("extractionDate")
    extraction_date = None
    if date_node is not None and date_node.tag != _NULL:
        if date_node.tag != _DATE:
            _fail(date_node, "extractionDate must be a YYYY-MM-DD date")
        value = _SCALARS.construct_yaml_timestamp(date_node)
        extraction_date = value.date() if isinstance(value, dt.datetime) else value

    features = tuple(_parse_feature(n) for n in _sequence(f.get("features"), "features")) if f.get("features") else ()
    types = {normalize_name(feat.name): feat.value_type for feat in features}
    pricing = Pricing(
        saas_name=_string(f.required("saasName"), "saasName"),
        source_url=_string(f.get("sourceUrl"), "sourceUrl", True) or "" if f.get("sourceUrl") else "",
        extraction_date=extraction_date,
        currency=_string(f.get("currency"), "currency") if f.get("currency") else "USD",
        features=features,
        usage_limits=tuple(_parse_limit(n) for n in _sequence(f.get("usageLimits"), "usageLimits")) if f.get("usageLimits") else (),
        plans=tuple(_parse_plan(n, types) for n in _sequence(f.get("plans"), "plans")) if f.get("plans") else (),
        add_ons=tuple(_parse_addon(n, types) for n in _sequence(f.get("addOns"), "addOns")) if f.get("addOns") else (),
        syntax_version=_string(f.get("syntaxVersion"), "syntaxVersion") if f.get("syntaxVersion") else SYNTAX_VERSION,
    )
    if validate:
        ledger = validate_model(pricing)
        if ledger.has_errors:
            first = ledger.errors[0]
            raise DocumentSemanticError(f"{len(ledger.errors)} validation error(s), first: {first.code} {first.message}", ledger)
    return pricing


# --------------------------------------------------------------------------
# log
# --------------------------------------------------------------------------


def format_entry(entry: Diagnostic) -> str:
    line = f"{entry.severity.value} {entry.code} [{entry.category}/{entry.item}] {' '.join(entry.message.split())}"
    if entry.evidence:
        line += f" — {' '.join(entry.evidence.split())}"
    return line


def write_log(ledger: DiagnosticsLedger | Iterable[Diagnostic]) -> str:
    """One line per entry: ``SEVERITY CODE [category/item] message — evidence``."""
    return "".join(format_entry(e) + "\n" for e in ledger)
