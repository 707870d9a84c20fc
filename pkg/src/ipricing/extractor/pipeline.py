"""Running the five extraction passes over one cleaned page."""

from __future__ import annotations

import dataclasses
import datetime as dt
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..diagnostics import Diagnostic
from ..errors import ParseFailed, PricingError, ProviderError
from ..ingestion.clean import CleanedPayload
from ..lexicon import equivalent
from ..model import normalize_name
from .parsing import parse_structured_response
from .providers import Provider, ProviderRequest, complete_with_retries, payload_hash
from .records import PASS_ORDER, Category, ExtractedItem, ExtractionRecord, PassId, Provenance
from .templates import PromptTemplate, load_templates

logger = logging.getLogger(__name__)


@dataclass
class ExtractorSettings:
    model: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 8192
    attempts: int = 3
    backoff: float = 1.0
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], dt.datetime] = lambda: dt.datetime.now(dt.timezone.utc)


def run_pass(
    template: PromptTemplate,
    payload: CleanedPayload,
    prior: Iterable[ExtractionRecord],
    provider: Provider,
    settings: ExtractorSettings | None = None,
) -> ExtractionRecord:
    """Render ``template``, ask the provider once (with retries), parse the reply."""
    settings = settings or ExtractorSettings()
    prior_plans = [name for rec in prior if rec.category is Category.PLANS for name in rec.names()]
    request = ProviderRequest(
        model=settings.model or provider.model,
        prompt=template.render(payload.text, prior_plans),
        template_id=template.id.value,
        payload_hash=payload_hash(payload.text),
        temperature=settings.temperature,
        max_output_tokens=settings.max_output_tokens,
    )
    response = complete_with_retries(provider, request, settings.attempts, settings.backoff, settings.sleep)
    parsed = parse_structured_response(response.text, template.id.category)
    provenance = Provenance(
        template_id=template.id.value,
        template_version=template.version,
        provider=provider.name,
        model=request.model,
        timestamp=settings.clock(),
        request_key=request.key,
        raw_response=response.text,
    )
    return ExtractionRecord(template.id.category, tuple(parsed.items), (provenance,), tuple(parsed.warnings))


_MERGED_FIELDS = ("monthly_price", "annual_price", "price", "currency", "unit", "description", "available_for", "standalone")


def _merge_item(primary: ExtractedItem, secondary: ExtractedItem) -> tuple[ExtractedItem, list[str]]:
    """Fill gaps of ``primary`` from ``secondary``; primary wins every disagreement."""
    updates: dict = {}
    conflicts: list[str] = []
    for name in _MERGED_FIELDS:
        mine, theirs = getattr(primary, name), getattr(secondary, name)
        if theirs in (None, False, "", ()):
            continue
        if mine in (None, False, "", ()):
            updates[name] = theirs
        elif not equivalent(name, mine, theirs):
            conflicts.append(f"{name}: kept {mine!r}, discarded {theirs!r}")
    for name in ("values", "extends"):
        merged = dict(getattr(primary, name))
        for key, value in getattr(secondary, name).items():
            if key not in merged:
                merged[key] = value
            elif not equivalent(name, merged[key], value):
                conflicts.append(f"{name}[{key}]: kept {merged[key]!r}, discarded {value!r}")
        updates[name] = merged
    linked = tuple(dict.fromkeys(primary.linked_features + secondary.linked_features))
    notes = list(primary.notes)
    for note in secondary.notes + tuple(f"MERGE_CONFLICT {c}" for c in conflicts):
        if note not in notes:
            notes.append(note)
    updates["linked_features"] = linked
    updates["notes"] = tuple(notes)
    return dataclasses.replace(primary, **updates), conflicts


def merge_addons(in_table: ExtractionRecord, from_html: ExtractionRecord) -> tuple[ExtractionRecord, list[Diagnostic]]:
    """Union of both add-on passes keyed by normalized name; the table pass has priority."""
    items: list[ExtractedItem] = []
    index: dict[str, int] = {}
    for item in in_table.items:
        key = normalize_name(item.name)
        if key in index:
            # duplicates inside one pass are left for the process engine
            items.append(item)
            continue
        index[key] = len(items)
        items.append(item)

    diagnostics: list[Diagnostic] = []
    for item in from_html.items:
        key = normalize_name(item.name)
        if key not in index:
            index[key] = len(items)
            items.append(item)
            continue
        merged, conflicts = _merge_item(items[index[key]], item)
        items[index[key]] = merged
        for conflict in conflicts:
            diagnostics.append(Diagnostic("MERGE_CONFLICT", conflict, Category.ADDONS.value, merged.name))

    record = ExtractionRecord(
        Category.ADDONS,
        tuple(items),
        in_table.provenance + from_html.provenance,
        in_table.diagnostics + from_html.diagnostics + tuple(diagnostics),
    )
    return record, diagnostics


@dataclass
class Extraction:
    records: list[ExtractionRecord] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    failure: PricingError | None = None

    def record(self, category: Category) -> ExtractionRecord | None:
        return next((r for r in self.records if r.category is category), None)


def extract_all(
    payload: CleanedPayload,
    provider: Provider,
    templates: dict[PassId, PromptTemplate] | None = None,
    settings: ExtractorSettings | None = None,
) -> Extraction:
    """Run PLANS, FEATURES, USAGE_LIMITS, ADDONS_IN_TABLE, ADDONS_FROM_HTML in order.

    A failing PLANS pass raises.  A later failure stops the run and returns the
    records gathered so far with a PASS_FAILED diagnostic.
    """
    templates = templates or load_templates()
    result = Extraction()
    by_pass: dict[PassId, ExtractionRecord] = {}
    for pass_id in PASS_ORDER:
        try:
            record = run_pass(templates[pass_id], payload, list(by_pass.values()), provider, settings)
        except (ProviderError, ParseFailed) as exc:
            if pass_id is PassId.PLANS:
                raise
            logger.error("pass %s failed: %s", pass_id.value, exc)
            result.failure = exc
            result.diagnostics.append(
                Diagnostic("PASS_FAILED", f"{pass_id.value} pass failed ({exc.code}): {exc.message}", pass_id.category.value, pass_id.value)
            )
            break
        by_pass[pass_id] = record

    for pass_id in (PassId.PLANS, PassId.FEATURES, PassId.USAGE_LIMITS):
        if pass_id in by_pass:
            result.records.append(by_pass[pass_id])
            result.diagnostics.extend(by_pass[pass_id].diagnostics)

    table = by_pass.get(PassId.ADDONS_IN_TABLE)
    html = by_pass.get(PassId.ADDONS_FROM_HTML)
    if table is not None and html is not None:
        merged, _ = merge_addons(table, html)
        result.records.append(merged)
        result.diagnostics.extend(merged.diagnostics)
    elif table is not None:
        result.records.append(table)
        result.diagnostics.extend(table.diagnostics)
    return result
