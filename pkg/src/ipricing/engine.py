"""Validation and repair of extraction records into a candidate Pricing.

Every rule reports through diagnostics; warnings never block emission.  The
only hard failure is an assembly that leaves nothing subscribable.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import html
import re
import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

from .diagnostics import Diagnostic, DiagnosticsLedger
from .errors import AssemblyFailed
from .extractor.records import Category, ExtractedItem, ExtractionRecord
from .lexicon import classify_value, equivalent, parse_limit, parse_price
from .model import (
    CONTACT_SALES,
    AddOn,
    Feature,
    Plan,
    Pricing,
    Quantity,
    UsageLimit,
    ValueType,
    normalize_name,
    validate_model,
)

ENGINE_VERSION = "1"


@dataclass(frozen=True)
class EngineConfig:
    grounding_threshold: float = 0.85
    grounding_slack: int = 2
    suspect_plan_count: int = 8
    discount_floor: Decimal = Decimal("0.25")
    row_coverage_floor: float = 0.5


@dataclass(frozen=True)
class PricingMeta:
    saas_name: str
    source_url: str = ""
    extraction_date: dt.date | None = None
    currency: str = "USD"


def _by_category(records: Iterable[ExtractionRecord]) -> dict[Category, list[ExtractedItem]]:
    out: dict[Category, list[ExtractedItem]] = {c: [] for c in Category}
    for record in records:
        out[record.category].extend(record.items)
    return out


# --------------------------------------------------------------------------
# dedupe
# --------------------------------------------------------------------------

_SCALAR_FIELDS = ("monthly_price", "annual_price", "price", "currency", "unit", "description", "available_for")


def _absorb(first: ExtractedItem, other: ExtractedItem, category: str) -> tuple[ExtractedItem, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    updates: dict = {}
    for name in _SCALAR_FIELDS:
        mine, theirs = getattr(first, name), getattr(other, name)
        if theirs is None:
            continue
        if mine is None:
            updates[name] = theirs
        elif not equivalent(name, mine, theirs):
            diags.append(Diagnostic("VALUE_CONFLICT", f"{name}: kept {mine!r}, other duplicate had {theirs!r}", category, first.name))
    for name in ("values", "extends"):
        merged = dict(getattr(first, name))
        for key, value in getattr(other, name).items():
            existing = next((k for k in merged if normalize_name(k) == normalize_name(key)), None)
            if existing is None:
                merged[key] = value
            elif not equivalent(name, merged[existing], value):
                diags.append(
                    Diagnostic("VALUE_CONFLICT", f"{name}[{existing}]: kept {merged[existing]!r}, other duplicate had {value!r}", category, first.name)
                )
        updates[name] = merged
    updates["standalone"] = first.standalone or other.standalone
    updates["linked_features"] = tuple(dict.fromkeys(first.linked_features + other.linked_features))
    updates["notes"] = tuple(dict.fromkeys(first.notes + other.notes))
    return dataclasses.replace(first, **updates), diags


def dedupe(records: Sequence[ExtractionRecord]) -> tuple[list[ExtractionRecord], list[Diagnostic]]:
    """Merge items with equal normalized names per category; the first occurrence wins.

    Records of the same category are combined into one (provenance kept).
    """
    combined: dict[Category, ExtractionRecord] = {}
    for record in records:
        if record.category in combined:
            prev = combined[record.category]
            record = ExtractionRecord(
                record.category,
                prev.items + record.items,
                prev.provenance + record.provenance,
                prev.diagnostics + record.diagnostics,
            )
        combined[record.category] = record

    out_records: list[ExtractionRecord] = []
    diags: list[Diagnostic] = []
    for record in combined.values():
        category = record.category.value
        items: list[ExtractedItem] = []
        index: dict[str, int] = {}
        for item in record.items:
            key = normalize_name(item.name)
            if key not in index:
                index[key] = len(items)
                items.append(item)
                continue
            kept = items[index[key]]
            diags.append(Diagnostic("DUPLICATE_MERGED", f"{item.name!r} merged into {kept.name!r}", category, kept.name))
            merged, conflicts = _absorb(kept, item, category)
            diags.extend(conflicts)
            items[index[key]] = merged
        out_records.append(dataclasses.replace(record, items=tuple(items)))
    return out_records, diags


# --------------------------------------------------------------------------
# billing
# --------------------------------------------------------------------------


def check_billing_consistency(plans: Iterable[ExtractedItem], config: EngineConfig = EngineConfig()) -> list[Diagnostic]:
    """Compare annual prices with twelve monthly payments."""
    diags = []
    for plan in plans:
        monthly, annual = parse_price(plan.monthly_price), parse_price(plan.annual_price)
        if not isinstance(monthly, Decimal) or not isinstance(annual, Decimal):
            continue
        yearly = 12 * monthly
        if annual > yearly:
            diags.append(
                Diagnostic("ANNUAL_EXCEEDS_MONTHLY", f"annual {annual} > 12 x monthly {monthly} = {yearly}", Category.PLANS.value, plan.name)
            )
        elif annual < config.discount_floor * yearly:
            diags.append(
                Diagnostic(
                    "IMPLAUSIBLE_DISCOUNT",
                    f"annual {annual} < {config.discount_floor} x 12 x monthly {monthly} = {config.discount_floor * yearly}",
                    Category.PLANS.value,
                    plan.name,
                )
            )
    return diags


# --------------------------------------------------------------------------
# grounding
# --------------------------------------------------------------------------

_TAG = re.compile(r"<[^>]*>")
_ARIA = re.compile(r'aria-label="([^"]*)"|alt="([^"]*)"')
_PUNCT = str.maketrans({c: " " for c in string.punctuation + "’‘“”–—…•·"})


def normalize_text(text: str) -> str:
    """casefold, punctuation to spaces, whitespace collapsed."""
    text = unicodedata.normalize("NFKC", text).casefold().replace("&", " and ").translate(_PUNCT)
    return " ".join(text.split())


def _stem(token: str) -> str:
    # crude plural folding: libraries -> library, seats -> seat
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    return token[:-1] if len(token) > 3 and token.endswith("s") and not token.endswith("ss") else token


def _tokens(text: str) -> list[str]:
    return [_stem(t) for t in normalize_text(text).split()]


class GroundingIndex:
    """Normalized view of a cleaned page for name lookups."""

    def __init__(self, text: str) -> None:
        labels = " ".join(html.unescape(a or b) for a, b in _ARIA.findall(text))
        visible = html.unescape(_TAG.sub(" ", text))
        self.tokens = _tokens(visible + " " + labels)
        self.joined = " " + " ".join(self.tokens) + " "
        self._positions: dict[str, list[int]] = {}
        for i, token in enumerate(self.tokens):
            self._positions.setdefault(token, []).append(i)

    @classmethod
    def from_payload(cls, payload) -> "GroundingIndex":
        return cls(payload.text)

    def similarity(self, name: str, slack: int = 2) -> tuple[float, str]:
        """Best token overlap of ``name`` with any window of the page, and that window's text.

        The window is the name length plus ``slack`` tokens; an exact token
        sequence match scores 1.0.
        """
        needle = _tokens(name)
        if not needle:
            return (1.0 if normalize_text(name) == "" else 0.0), ""
        if f" {' '.join(needle)} " in self.joined:
            return 1.0, " ".join(needle)
        want = Counter(needle)
        width = len(needle) + slack
        best, evidence = 0.0, ""
        starts = sorted({s for t in want for p in self._positions.get(t, ()) for s in range(max(0, p - width + 1), p + 1)})
        for start in starts:
            window = self.tokens[start : start + width]
            score = sum((Counter(window) & want).values()) / len(needle)
            if score > best:
                best, evidence = score, " ".join(window)
        return best, evidence


def ground(records: Sequence[ExtractionRecord], index: GroundingIndex, config: EngineConfig = EngineConfig()) -> list[Diagnostic]:
    """Flag item names without support in the page; nothing is removed."""
    diags = []
    for record in records:
        for item in record.items:
            score, evidence = index.similarity(item.name, config.grounding_slack)
            if score < config.grounding_threshold:
                diags.append(
                    Diagnostic(
                        "UNGROUNDED_ITEM",
                        f"{item.name!r} not found in page (best overlap {score:.2f} < {config.grounding_threshold})",
                        record.category.value,
                        item.name,
                        evidence=f"nearest: {evidence!r}" if evidence else "nearest: none",
                    )
                )
    return diags


# --------------------------------------------------------------------------
# cross validation
# --------------------------------------------------------------------------


def cross_validate(records: Sequence[ExtractionRecord], config: EngineConfig = EngineConfig()) -> list[Diagnostic]:
    items = _by_category(records)
    diags = []
    plan_keys = {normalize_name(p.name) for p in items[Category.PLANS]}
    addon_keys = {normalize_name(a.name): a.name for a in items[Category.ADDONS]}
    for plan in items[Category.PLANS]:
        if normalize_name(plan.name) in addon_keys:
            diags.append(Diagnostic("PLAN_ADDON_COLLISION", f"{plan.name!r} was extracted as both plan and add-on", Category.PLANS.value, plan.name))
    for category in (Category.FEATURES, Category.USAGE_LIMITS):
        for item in items[category]:
            for plan_name in item.values:
                if normalize_name(plan_name) not in plan_keys:
                    diags.append(
                        Diagnostic("ORPHAN_VALUE", f"value {item.values[plan_name]!r} for unknown plan {plan_name!r}", category.value, item.name)
                    )
    count = len(items[Category.PLANS])
    if count > config.suspect_plan_count:
        diags.append(
            Diagnostic(
                "SUSPECT_PLAN_COUNT",
                f"{count} plans extracted (threshold {config.suspect_plan_count}); add-ons or other products may be mixed in",
                Category.PLANS.value,
                "*",
            )
        )
    return diags


_ROW = re.compile(r"<tr>\s*<t[dh][^>]*>(.*?)</t[dh]>", re.S)


def check_row_coverage(records: Sequence[ExtractionRecord], payload_text: str, config: EngineConfig = EngineConfig()) -> list[Diagnostic]:
    """Warn when far fewer features/limits came back than the page has table rows.

    Row skipping is only surfaced here, never corrected.
    """
    rows = [cell for cell in _ROW.findall(payload_text) if _TAG.sub("", cell).strip()]
    if len(rows) < 5:
        return []
    items = _by_category(records)
    extracted = len(items[Category.FEATURES]) + len(items[Category.USAGE_LIMITS])
    if extracted >= config.row_coverage_floor * len(rows):
        return []
    return [
        Diagnostic(
            "LOW_ROW_COVERAGE",
            f"{extracted} features/limits extracted from {len(rows)} labelled table rows",
            Category.FEATURES.value,
            "*",
        )
    ]


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def _match(name: str, canon: dict[str, str]) -> str | None:
    return canon.get(normalize_name(name))


def _unit_key(unit: str | None) -> str | None:
    return None if unit is None else " ".join(_stem(w) for w in normalize_text(unit).split())


def _type_feature(item: ExtractedItem, plan_canon: dict[str, str], diags: list[Diagnostic]) -> tuple[Feature, dict[str, object]]:
    raw: dict[str, str] = {}
    for plan_name, cell in item.values.items():
        plan = _match(plan_name, plan_canon)
        if plan is None:
            diags.append(Diagnostic("VALUE_DROPPED", f"value {cell!r} for unknown plan {plan_name!r} left out", Category.FEATURES.value, item.name))
        else:
            raw[plan] = cell

    if not raw:
        # listed without per-plan cells: offered, availability unknown
        return Feature(item.name, ValueType.BOOLEAN, True, item.description), {}

    typed = {plan: classify_value(cell) for plan, cell in raw.items()}
    kinds = {t.kind for t in typed.values()}
    units = {t.unit for t in typed.values()}
    if kinds == {ValueType.BOOLEAN}:
        return Feature(item.name, ValueType.BOOLEAN, False, item.description), {p: t.value for p, t in typed.items()}
    # "1 user" / "5 users" share a unit; the longer spelling is kept
    if kinds == {ValueType.NUMERIC} and len({_unit_key(u) for u in units}) == 1:
        unit = max(units, key=lambda u: (len(u or ""), u or ""))
        return Feature(item.name, ValueType.NUMERIC, Decimal(0), item.description, unit), {p: t.value for p, t in typed.items()}
    return Feature(item.name, ValueType.TEXT, "", item.description), {p: " ".join(c.split()) for p, c in raw.items()}


def assemble(records: Sequence[ExtractionRecord], meta: PricingMeta) -> tuple[Pricing, DiagnosticsLedger]:
    """Build the Pricing from deduplicated records and validate it."""
    items = _by_category(records)
    ledger = DiagnosticsLedger()
    diags: list[Diagnostic] = []

    addon_keys = {normalize_name(a.name) for a in items[Category.ADDONS]}
    plan_items = []
    for item in items[Category.PLANS]:
        if normalize_name(item.name) in addon_keys:
            diags.append(Diagnostic("ITEM_DROPPED", f"{item.name!r} kept as add-on, removed from plans", Category.PLANS.value, item.name))
        else:
            plan_items.append(item)
    plan_canon = {normalize_name(p.name): p.name for p in plan_items}

    # features
    features: list[Feature] = []
    feature_values: dict[str, dict[str, object]] = {p.name: {} for p in plan_items}
    for item in items[Category.FEATURES]:
        feature, values = _type_feature(item, plan_canon, diags)
        features.append(feature)
        for plan, value in values.items():
            feature_values[plan][feature.name] = value
    feature_canon = {normalize_name(f.name): f.name for f in features}

    # usage limits
    limits: list[UsageLimit] = []
    limit_values: dict[str, dict[str, object]] = {p.name: {} for p in plan_items}
    for item in items[Category.USAGE_LIMITS]:
        parsed: dict[str, object] = {}
        for plan_name, cell in item.values.items():
            plan = _match(plan_name, plan_canon)
            value = parse_limit(cell, item.unit)
            if plan is None:
                diags.append(Diagnostic("VALUE_DROPPED", f"value {cell!r} for unknown plan {plan_name!r} left out", Category.USAGE_LIMITS.value, item.name))
            elif value is None:
                diags.append(Diagnostic("VALUE_DROPPED", f"{plan}: {cell!r} is not a limit ('unlimited' or amount with unit)", Category.USAGE_LIMITS.value, item.name))
            else:
                parsed[plan] = value
        if not parsed:
            diags.append(Diagnostic("ITEM_DROPPED", "no readable limit value for any plan", Category.USAGE_LIMITS.value, item.name))
            continue
        linked = []
        for ref in item.linked_features:
            target = _match(ref, feature_canon)
            if target is None:
                diags.append(Diagnostic("VALUE_DROPPED", f"linked feature {ref!r} was not extracted", Category.USAGE_LIMITS.value, item.name))
            elif target not in linked:
                linked.append(target)
        ordered = [p.name for p in plan_items if p.name in parsed]
        limits.append(UsageLimit(item.name, parsed[ordered[0]], tuple(linked), item.description))
        for plan, value in parsed.items():
            limit_values[plan][item.name] = value
    limit_canon = {normalize_name(u.name): u.name for u in limits}
    limit_units = {
        u.name: next((v.unit for p in plan_items if isinstance(v := limit_values[p.name].get(u.name), Quantity)), None) for u in limits
    }

    linked_anywhere = {normalize_name(f) for u in limits for f in u.linked_features}
    for f in features:
        if f.value_type is ValueType.NUMERIC and f.unit and normalize_name(f.name) not in linked_anywhere:
            diags.append(Diagnostic("LIMIT_CANDIDATE", f"values are quantities in {f.unit!r}; consider modelling a usage limit", Category.FEATURES.value, f.name))

    # plans
    plans: list[Plan] = []
    for item in plan_items:
        monthly = parse_price(item.monthly_price)
        if monthly is None:
            monthly = CONTACT_SALES
            diags.append(
                Diagnostic("VALUE_DROPPED", f"monthly price {item.monthly_price!r} unreadable; recorded as contact_sales", Category.PLANS.value, item.name)
            )
        annual = parse_price(item.annual_price)
        if annual is None and item.annual_price is not None:
            diags.append(Diagnostic("VALUE_DROPPED", f"annual price {item.annual_price!r} unreadable", Category.PLANS.value, item.name))
        currency = item.currency.upper() if item.currency and re.fullmatch(r"[A-Za-z]{3}", item.currency) else None
        if currency == meta.currency:
            currency = None
        plans.append(
            Plan(
                name=item.name,
                monthly_price=monthly,
                annual_price=annual,
                currency=currency,
                description=item.description,
                feature_values=feature_values[item.name],
                usage_limit_values=limit_values[item.name],
            )
        )

    # add-ons
    addons: list[AddOn] = []
    for item in items[Category.ADDONS]:
        price = parse_price(item.price)
        if price is None:
            price = CONTACT_SALES
            diags.append(Diagnostic("VALUE_DROPPED", f"price {item.price!r} unreadable; recorded as contact_sales", Category.ADDONS.value, item.name))
        available = None
        if item.available_for is not None:
            resolved = []
            for ref in item.available_for:
                target = _match(ref, plan_canon)
                if target is None:
                    diags.append(Diagnostic("VALUE_DROPPED", f"availability for unknown plan {ref!r} left out", Category.ADDONS.value, item.name))
                elif target not in resolved:
                    resolved.append(target)
            available = tuple(resolved)
        extensions = {}
        for ref, cell in item.extends.items():
            target = _match(ref, limit_canon)
            value = parse_limit(cell, limit_units[target]) if target else None
            if value is None:
                diags.append(Diagnostic("VALUE_DROPPED", f"extension {ref!r}: {cell!r} left out", Category.ADDONS.value, item.name))
            else:
                extensions[target] = value
        addons.append(
            AddOn(
                name=item.name,
                price=price,
                unit=item.unit,
                available_for=available,
                standalone=item.standalone,
                description=item.description,
                usage_limit_extensions=extensions,
            )
        )

    ledger.extend(diags)
    if not plans and not any(a.standalone for a in addons):
        ledger.add("NO_SUBSCRIBABLE_OFFER", "no plan and no standalone add-on survived assembly", "pricing", meta.saas_name)
        raise AssemblyFailed("zero plans and zero standalone add-ons", ledger)

    pricing = Pricing(
        saas_name=meta.saas_name,
        source_url=meta.source_url,
        extraction_date=meta.extraction_date,
        currency=meta.currency,
        features=tuple(features),
        usage_limits=tuple(limits),
        plans=tuple(plans),
        add_ons=tuple(addons),
    )
    validation = validate_model(pricing)
    ledger.extend(validation)
    if validation.has_errors:
        raise AssemblyFailed(f"assembled pricing has {len(validation.errors)} validation error(s)", ledger)
    return pricing, ledger


def process(
    records: Sequence[ExtractionRecord],
    payload_text: str,
    meta: PricingMeta,
    config: EngineConfig = EngineConfig(),
) -> tuple[Pricing, DiagnosticsLedger]:
    """Run dedupe, billing, grounding, coverage and cross checks, then assemble.

    The returned ledger lists entries in that pipeline order.
    """
    ledger = DiagnosticsLedger()
    records, merged = dedupe(records)
    ledger.extend(merged)
    plans = [i for r in records if r.category is Category.PLANS for i in r.items]
    ledger.extend(check_billing_consistency(plans, config))
    ledger.extend(ground(records, GroundingIndex(payload_text), config))
    ledger.extend(check_row_coverage(records, payload_text, config))
    ledger.extend(cross_validate(records, config))
    try:
        pricing, assembled = assemble(records, meta)
    except AssemblyFailed as exc:
        ledger.extend(exc.ledger or ())
        exc.ledger = ledger
        raise
    ledger.extend(assembled)
    return pricing, ledger
