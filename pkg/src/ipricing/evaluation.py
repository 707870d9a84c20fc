"""Point-based scoring of extractions against gold annotations.

Each judged item contributes points to TP/FP/FN/TN; a partially correct item
puts half a point in TP and half in FP.  Metrics are percentages computed
with exact fractions and rounded half-up to one decimal only for display.
"""

from __future__ import annotations

import csv
import enum
import io
import re
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .extractor.records import Category
from .lexicon import classify_value, parse_limit, parse_price
from .model import Pricing, ValueType, normalize_name

CATEGORIES = (Category.PLANS, Category.FEATURES, Category.USAGE_LIMITS, Category.ADDONS)
CATEGORY_TITLES = {
    Category.PLANS: "Plans",
    Category.FEATURES: "Features",
    Category.USAGE_LIMITS: "Usage Limits",
    Category.ADDONS: "Add-Ons",
}
METRICS = ("accuracy", "precision", "recall")
UNDEFINED = "-"


class Verdict(str, enum.Enum):
    CORRECT = "CORRECT"
    PARTIAL = "PARTIAL"
    HALLUCINATED = "HALLUCINATED"
    MISSED = "MISSED"
    ABSENT_DYNAMIC = "ABSENT_DYNAMIC"


@dataclass(frozen=True)
class Judgment:
    item: str
    category: Category
    verdict: Verdict
    note: str | None = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "verdict", Verdict(self.verdict))
        except ValueError:
            raise ValueError(f"unknown verdict {self.verdict!r}") from None
        if self.verdict is Verdict.PARTIAL and not (self.note and self.note.strip()):
            raise ValueError(f"PARTIAL judgment for {self.item!r} needs a note describing the misrepresentation")


def _points(value) -> Fraction:
    points = Fraction(value) if not isinstance(value, float) else Fraction(value).limit_denominator(2)
    if points < 0 or (points * 2).denominator != 1:
        raise ValueError(f"count {value!r} is not a non-negative multiple of 0.5")
    return points


@dataclass(frozen=True)
class CategoryCounts:
    tp: Fraction = Fraction(0)
    fp: Fraction = Fraction(0)
    fn: Fraction = Fraction(0)
    tn: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            object.__setattr__(self, name, _points(getattr(self, name)))

    @property
    def total(self) -> Fraction:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "CategoryCounts") -> "CategoryCounts":
        return CategoryCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.tp, self.fp, self.fn, self.tn)


_HALF = Fraction(1, 2)
_POINTS = {
    Verdict.CORRECT: CategoryCounts(tp=1),
    Verdict.PARTIAL: CategoryCounts(tp=_HALF, fp=_HALF),
    Verdict.HALLUCINATED: CategoryCounts(fp=1),
    Verdict.MISSED: CategoryCounts(fn=1),
    Verdict.ABSENT_DYNAMIC: CategoryCounts(tn=1),
}


def score(judgments: Iterable[Judgment]) -> CategoryCounts:
    total = CategoryCounts()
    for judgment in judgments:
        total = total + _POINTS[Verdict(judgment.verdict)]
    return total


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


def round_half_up(value: Fraction | Decimal, places: int = 1) -> Decimal:
    if isinstance(value, Fraction):
        value = Decimal(value.numerator) / Decimal(value.denominator)
    return value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def format_percent(value: Decimal | None) -> str:
    """``72.7``, ``100`` (no trailing ``.0``) or ``-`` for undefined."""
    if value is None:
        return UNDEFINED
    text = format(value, "f")
    return text[:-2] if text.endswith(".0") else text


def format_points(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return format(Decimal(value.numerator) / Decimal(value.denominator), "f")


@dataclass(frozen=True)
class MetricsRow:
    accuracy: Fraction | None
    precision: Fraction | None
    recall: Fraction | None

    def displayed(self, metric: str) -> Decimal | None:
        value = getattr(self, metric)
        return None if value is None else round_half_up(value)

    def cells(self) -> tuple[str, str, str]:
        return tuple(format_percent(self.displayed(m)) for m in METRICS)


def metrics(c: CategoryCounts) -> MetricsRow:
    """Accuracy, precision and recall as exact percentages.

    An empty category (nothing expected, nothing extracted) scores 100 on all
    three; otherwise a zero denominator leaves that metric undefined.
    """
    if c.total == 0:
        return MetricsRow(Fraction(100), Fraction(100), Fraction(100))

    def pct(num: Fraction, den: Fraction) -> Fraction | None:
        return None if den == 0 else 100 * num / den

    return MetricsRow(pct(c.tp + c.tn, c.total), pct(c.tp, c.tp + c.fp), pct(c.tp, c.tp + c.fn))


@dataclass(frozen=True)
class Aggregate:
    mean: Decimal | None
    median: Decimal | None


def aggregate(rows: Sequence[MetricsRow]) -> dict[str, Aggregate]:
    """Mean and median per metric over the displayed (one-decimal) row values.

    Undefined cells are left out of that metric's statistics.
    """
    if not rows:
        raise ValueError("aggregate needs at least one row")
    out = {}
    for metric in METRICS:
        values = [v for v in (row.displayed(metric) for row in rows) if v is not None]
        if not values:
            out[metric] = Aggregate(None, None)
            continue
        mean = sum(values, Decimal(0)) / len(values)
        out[metric] = Aggregate(round_half_up(mean), round_half_up(Decimal(statistics.median(values))))
    return out


# --------------------------------------------------------------------------
# gold annotations and judging
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GoldItem:
    name: str
    values: Mapping[str, str] = field(default_factory=dict)
    price: str | None = None
    available_for: tuple[str, ...] | None = None
    dynamic: bool = False


@dataclass(frozen=True)
class GoldAnnotation:
    saas_name: str
    categories: Mapping[Category, tuple[GoldItem, ...]]


def _text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return " ".join(str(value).split())


def load_gold(path: str | Path) -> GoldAnnotation:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict) or "saasName" not in data:
        raise ValueError(f"{path}: gold annotation needs a saasName")
    categories = {}
    for category in CATEGORIES:
        if category.value not in data:
            continue
        entries = data[category.value] or []
        items = []
        for entry in entries:
            if isinstance(entry, str):
                entry = {"name": entry}
            available = entry.get("availableFor")
            items.append(
                GoldItem(
                    name=_text(entry["name"]),
                    values={_text(k): _text(v) for k, v in (entry.get("values") or {}).items()},
                    price=None if entry.get("price") is None else _text(entry["price"]),
                    available_for=None if available in (None, "all") else tuple(_text(a) for a in available),
                    dynamic=bool(entry.get("dynamic", False)),
                )
            )
        categories[category] = tuple(items)
    return GoldAnnotation(str(data["saasName"]), categories)


def _pred_items(pred: Pricing, category: Category) -> list:
    return {
        Category.PLANS: list(pred.plans),
        Category.FEATURES: list(pred.features),
        Category.USAGE_LIMITS: list(pred.usage_limits),
        Category.ADDONS: list(pred.add_ons),
    }[category]


def _same_feature_value(gold_cell: str, value, feature) -> bool:
    expected = classify_value(gold_cell)
    if feature.value_type is ValueType.BOOLEAN:
        return expected.kind is ValueType.BOOLEAN and expected.value == value
    if feature.value_type is ValueType.NUMERIC:
        return expected.kind is ValueType.NUMERIC and expected.value == value
    return normalize_name(gold_cell) == normalize_name(str(value))


def _mismatches(category: Category, gold: GoldItem, item, pred: Pricing) -> list[str]:
    problems = []
    if gold.price is not None:
        expected = parse_price(gold.price)
        actual = item.monthly_price if category is Category.PLANS else getattr(item, "price", None)
        if expected != actual:
            problems.append(f"price {actual} != {gold.price}")
    if category is Category.FEATURES:
        for plan_name, cell in gold.values.items():
            plan = pred.plan(plan_name)
            value = plan.feature_values.get(item.name, item.default_value) if plan else None
            if plan is None or not _same_feature_value(cell, value, item):
                problems.append(f"{plan_name}: {value!r} != {cell!r}")
    if category is Category.USAGE_LIMITS:
        for plan_name, cell in gold.values.items():
            plan = pred.plan(plan_name)
            value = plan.usage_limit_values.get(item.name, item.default_value) if plan else None
            if value != parse_limit(cell):
                problems.append(f"{plan_name}: {value} != {cell!r}")
    if category is Category.ADDONS and gold.available_for is not None:
        want = {normalize_name(p) for p in gold.available_for}
        have = None if item.available_for is None else {normalize_name(p) for p in item.available_for}
        if have != want:
            problems.append(f"availableFor {sorted(have) if have is not None else 'all'} != {sorted(want)}")
    return problems


def judge(pred: Pricing, gold: GoldAnnotation) -> list[Judgment]:
    """Draft judgments for a human to confirm: name matches, then value comparison."""
    judgments = []
    for category, gold_items in gold.categories.items():
        predicted = {normalize_name(i.name): i for i in _pred_items(pred, category)}
        matched = set()
        for g in gold_items:
            key = normalize_name(g.name)
            item = predicted.get(key)
            if item is None:
                judgments.append(Judgment(g.name, category, Verdict.ABSENT_DYNAMIC if g.dynamic else Verdict.MISSED))
                continue
            matched.add(key)
            problems = _mismatches(category, g, item, pred)
            if problems:
                judgments.append(Judgment(g.name, category, Verdict.PARTIAL, "; ".join(problems)))
            else:
                judgments.append(Judgment(g.name, category, Verdict.CORRECT))
        for item in _pred_items(pred, category):
            if normalize_name(item.name) not in matched:
                judgments.append(Judgment(item.name, category, Verdict.HALLUCINATED))
    return judgments


# --------------------------------------------------------------------------
# judgment sheets and reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SheetRow:
    saas_name: str
    counts: Mapping[Category, CategoryCounts]


def load_sheet(path: str | Path) -> SheetRow:
    """Per-category ``counts: {tp, fp, fn, tn}`` or ``judgments: [{item, verdict, note}]``."""
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    counts = {}
    for category in CATEGORIES:
        section = data.get(category.value)
        if section is None:
            continue
        if "counts" in section:
            c = section["counts"]
            counts[category] = CategoryCounts(*(Fraction(str(c.get(k, 0))) for k in ("tp", "fp", "fn", "tn")))
        else:
            counts[category] = score(
                Judgment(str(j["item"]), category, Verdict(j["verdict"]), j.get("note")) for j in section.get("judgments") or []
            )
    return SheetRow(str(data.get("saasName", Path(path).name)), counts)


def dump_sheet(saas_name: str, judgments: Sequence[Judgment]) -> str:
    """Editable judgment sheet text for ``judgments``."""
    data: dict = {"saasName": saas_name}
    for category in CATEGORIES:
        rows = [j for j in judgments if j.category is category]
        if rows:
            data[category.value] = {
                "judgments": [
                    {"item": j.item, "verdict": j.verdict.value, **({"note": j.note} if j.note else {})} for j in rows
                ]
            }
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", normalize_name(name)).strip("-")


@dataclass(frozen=True)
class Report:
    rows: tuple[SheetRow, ...]

    def category_rows(self, category: Category) -> list[MetricsRow]:
        return [metrics(r.counts[category]) for r in self.rows if category in r.counts]

    def aggregates(self) -> dict[Category, dict[str, Aggregate]]:
        return {c: aggregate(rows) for c in CATEGORIES if (rows := self.category_rows(c))}

    def text(self) -> str:
        header = ["SaaS"]
        for c in CATEGORIES:
            t = CATEGORY_TITLES[c]
            header += [f"{t} TP", "FP", "FN", "TN", "T", "A(%)", "P(%)", "R(%)"]
        table = [header]
        for row in self.rows:
            line = [row.saas_name]
            for c in CATEGORIES:
                counts = row.counts.get(c)
                if counts is None:
                    line += [""] * 8
                    continue
                line += [format_points(v) for v in counts.as_tuple()] + [format_points(counts.total)]
                line += list(metrics(counts).cells())
            table.append(line)
        aggs = self.aggregates()
        for stat in ("mean", "median"):
            line = [stat.capitalize()]
            for c in CATEGORIES:
                line += [""] * 5
                for m in METRICS:
                    line.append(format_percent(getattr(aggs[c][m], stat)) if c in aggs else "")
            table.append(line)
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = []
        for r in table:
            cells = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["saas", "category", "tp", "fp", "fn", "tn", "total", "accuracy", "precision", "recall"])
        for row in self.rows:
            for c in CATEGORIES:
                counts = row.counts.get(c)
                if counts is None:
                    continue
                writer.writerow(
                    [row.saas_name, c.value, *(format_points(v) for v in counts.as_tuple()), format_points(counts.total), *metrics(counts).cells()]
                )
        for c, aggs in self.aggregates().items():
            for stat in ("mean", "median"):
                writer.writerow([stat.capitalize(), c.value, "", "", "", "", "", *(format_percent(getattr(aggs[m], stat)) for m in METRICS)])
        return out.getvalue()
