"""Command-line entry point: transform, validate, analyze, score, record-fixtures.

Exit codes are part of the interface:

    0   success (warnings allowed)
    1   score: unmatched or missing inputs
    2   ERROR-level diagnostics, or a document that fails to parse/validate
    3   pipeline failure (fetch, provider, parse, assembly)
    64  usage error
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from urllib.parse import urlparse

import yaml

from . import __version__
from .configspace import SubscriptionConstraints, configuration_space
from .diagnostics import DiagnosticsLedger
from .document import LOG_SUFFIX, PRICING_SUFFIX, parse, serialize, write_log
from .engine import ENGINE_VERSION, PricingMeta, process
from .errors import DocumentSemanticError, PricingError
from .evaluation import Report, SheetRow, judge, load_gold, load_sheet, score, slug
from .extractor import (
    ExtractorSettings,
    HttpProvider,
    NullProvider,
    Provider,
    RecordingProvider,
    ReplayProvider,
    extract_all,
    load_templates,
)
from .extractor.templates import TemplateError
from .ingestion import CLEANER_VERSION, Origin, WebDriverClient, clean, fetch
from .model import summarize, validate_model

logger = logging.getLogger("ipricing")

EXIT_OK = 0
EXIT_UNMATCHED = 1
EXIT_DIAGNOSTICS = 2
EXIT_FAILURE = 3
EXIT_USAGE = 64

DEFAULT_BUDGET = 100_000
MANIFEST_MODES = {"file": Origin.LOCAL_FILE, "url": Origin.HTTP_URL, "rendered": Origin.WEBDRIVER_URL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------------
# transform
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Job:
    locator: str
    mode: Origin
    out: Path


@dataclass(frozen=True)
class Outcome:
    job: Job
    code: int
    message: str = ""


def _source(args) -> tuple[str, Origin]:
    given = [(v, m) for v, m in ((args.url, Origin.HTTP_URL), (args.rendered_url, Origin.WEBDRIVER_URL), (args.file, Origin.LOCAL_FILE)) if v]
    if args.batch:
        if given:
            raise UsageError("--batch cannot be combined with --url/--rendered-url/--file")
        return "", Origin.LOCAL_FILE
    if len(given) != 1:
        raise UsageError("give exactly one of --url, --rendered-url, --file (or --batch)")
    return given[0]


def _default_name(locator: str, mode: Origin) -> str:
    if mode is Origin.LOCAL_FILE:
        return Path(locator).name.split(".")[0]
    host = urlparse(locator).hostname or locator
    parts = [p for p in host.split(".") if p not in ("www", "com", "io", "net", "org", "app", "co")]
    return parts[0] if parts else host


def _source_url(locator: str, mode: Origin) -> str:
    return Path(locator).name if mode is Origin.LOCAL_FILE else locator


def _make_provider(args, locator: str | None = None) -> Provider:
    if args.provider == "null":
        return NullProvider()
    if args.provider == "replay":
        if args.replay_dir:
            directory = Path(args.replay_dir)
        elif locator and not urlparse(locator).scheme:
            directory = Path(locator).parent / "replay"
        else:
            raise UsageError("--provider replay needs --replay-dir for URL sources")
        return ReplayProvider(directory, model=args.model or "replay")
    if not args.base_url or not args.model:
        raise UsageError("--provider http needs --base-url and --model")
    return HttpProvider(args.base_url, args.model, requests_per_minute=args.rate)


def _header(args, provider: Provider, templates, job: Job, extraction) -> list[str]:
    version = next(iter(templates.values())).version
    lines = [
        f"generated by ipricing {__version__}",
        f"source: {_source_url(job.locator, job.mode)} ({job.mode.value})",
        f"provider: {provider.name}; model: {provider.model}",
        f"prompts: {version}; cleaner: {CLEANER_VERSION}; engine: {ENGINE_VERSION}",
    ]
    for record in extraction.records:
        for prov in record.provenance:
            lines.append(f"pass {prov.template_id}: request {prov.request_key}")
    return lines


def run_transform(args, job: Job, provider: Provider, templates, webdriver=None) -> Outcome:
    """One document through fetch, clean, extract, process and write."""
    pricing_path = job.out.with_name(job.out.name + PRICING_SUFFIX)
    log_path = job.out.with_name(job.out.name + LOG_SUFFIX)
    ledger = DiagnosticsLedger()
    try:
        doc = fetch(job.locator, job.mode, args.wait, webdriver=webdriver)
        payload = clean(doc, args.budget, provider.count_tokens)
        settings = ExtractorSettings(model=args.model or provider.model)
        extraction = extract_all(payload, provider, templates, settings)
        meta = PricingMeta(
            saas_name=args.saas_name or _default_name(job.locator, job.mode),
            source_url=_source_url(job.locator, job.mode),
            extraction_date=args.date or dt.date.today(),
            currency=args.currency,
        )
        pricing, processed = process(extraction.records, payload.text, meta)
        ledger.extend(extraction.diagnostics)
        ledger.extend(processed)
    except PricingError as exc:
        ledger.extend(getattr(exc, "ledger", None) or ())
        ledger.add("PASS_FAILED", f"{exc.code}: {exc.message}", item=job.locator)
        job.out.parent.mkdir(parents=True, exist_ok=True)
        log_path.write_text(write_log(ledger), encoding="utf-8")
        return Outcome(job, EXIT_FAILURE, f"{exc.code}: {exc.message}")

    job.out.parent.mkdir(parents=True, exist_ok=True)
    pricing_path.write_text(serialize(pricing, _header(args, provider, templates, job, extraction)), encoding="utf-8")
    log_path.write_text(write_log(ledger), encoding="utf-8")
    if ledger.has_errors:
        return Outcome(job, EXIT_DIAGNOSTICS, f"{len(ledger.errors)} error diagnostic(s)")
    counts = summarize(pricing)
    return Outcome(
        job,
        EXIT_OK,
        f"{counts.plans} plans, {counts.features} features, {counts.usage_limits} usage limits, {counts.add_ons} add-ons",
    )


def read_manifest(path: Path, out_dir: Path) -> list[Job]:
    """One locator per line, optionally prefixed ``file:``, ``url:`` or ``rendered:``."""
    jobs = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        prefix, _, rest = line.partition(":")
        if prefix in MANIFEST_MODES and not rest.startswith("//"):
            mode, locator = MANIFEST_MODES[prefix], rest.strip()
        elif urlparse(line).scheme in ("http", "https"):
            mode, locator = Origin.HTTP_URL, line
        else:
            mode, locator = Origin.LOCAL_FILE, line
        if mode is Origin.LOCAL_FILE and not Path(locator).is_absolute():
            locator = str(path.parent / locator)
        jobs.append(Job(locator, mode, out_dir / _default_name(locator, mode)))
    return jobs


def cmd_transform(args) -> int:
    locator, mode = _source(args)
    templates = load_templates(args.prompts)
    webdriver = WebDriverClient(args.webdriver_url) if args.webdriver_url else None

    if not args.batch:
        if mode is Origin.WEBDRIVER_URL and webdriver is None:
            raise UsageError("--rendered-url needs --webdriver-url")
        provider = _make_provider(args, locator)
        outcome = run_transform(args, Job(locator, mode, Path(args.out)), provider, templates, webdriver)
        _report(outcome)
        return outcome.code

    jobs = read_manifest(Path(args.batch), Path(args.out))
    if not jobs:
        raise UsageError(f"manifest {args.batch} lists no documents")
    # one provider for the batch so the rate cap is shared across workers
    shared = None if args.provider == "replay" and not args.replay_dir else _make_provider(args)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [
            pool.submit(run_transform, args, job, shared or _make_provider(args, job.locator), templates, webdriver)
            for job in jobs
        ]
        outcomes = [f.result() for f in futures]
    for outcome in outcomes:
        _report(outcome)
    return max(o.code for o in outcomes)


def _report(outcome: Outcome) -> None:
    stream = sys.stdout if outcome.code == EXIT_OK else sys.stderr
    print(f"{outcome.job.locator}: {outcome.message or 'ok'}", file=stream)


# --------------------------------------------------------------------------
# record-fixtures
# --------------------------------------------------------------------------


def cmd_record(args) -> int:
    """Run the extraction passes against a live provider and store the replies."""
    locator, mode = _source(args)
    if args.batch:
        raise UsageError("record-fixtures takes a single document")
    if args.provider != "http":
        raise UsageError("record-fixtures needs --provider http")
    inner = _make_provider(args)
    directory = Path(args.replay_dir) if args.replay_dir else Path(locator).parent / "replay"
    recorder = RecordingProvider(inner, directory)
    webdriver = WebDriverClient(args.webdriver_url) if args.webdriver_url else None
    try:
        doc = fetch(locator, mode, args.wait, webdriver=webdriver)
        payload = clean(doc, args.budget, inner.count_tokens)
        extraction = extract_all(payload, recorder, load_templates(args.prompts), ExtractorSettings(model=args.model))
    except PricingError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_FAILURE
    passes = sum(len(r.provenance) for r in extraction.records)
    print(f"recorded {passes} response(s) into {directory}")
    return EXIT_FAILURE if extraction.failure else EXIT_OK


# --------------------------------------------------------------------------
# validate / analyze
# --------------------------------------------------------------------------


def _load_document(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


def cmd_validate(args) -> int:
    try:
        pricing = _load_document(args.file)
    except DocumentSemanticError as exc:
        sys.stdout.write(write_log(exc.ledger or ()))
        print(f"{args.file}: {exc.message}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except PricingError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    sys.stdout.write(write_log(validate_model(pricing)))
    print(f"{args.file}: valid")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        pricing = _load_document(args.file)
    except PricingError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    constraints = SubscriptionConstraints.from_pricing(pricing)
    if args.constraints:
        data = yaml.safe_load(Path(args.constraints).read_text(encoding="utf-8")) or {}
        given = SubscriptionConstraints.from_dict(data)
        if "standaloneAllowed" not in data:
            given = SubscriptionConstraints(given.depends_on, given.excludes, constraints.standalone_allowed)
        constraints = given
    try:
        size = configuration_space(pricing, constraints)
    except PricingError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    counts = summarize(pricing)
    print(f"plans: {counts.plans}")
    print(f"features: {counts.features}")
    print(f"usageLimits: {counts.usage_limits}")
    print(f"addOns: {counts.add_ons}")
    print(f"configurationSpace: {size}")
    return EXIT_OK


# --------------------------------------------------------------------------
# score
# --------------------------------------------------------------------------

GOLD_SUFFIX = ".gold.yml"
SHEET_SUFFIX = ".judgments.yml"


def _by_slug(directory: Path, suffix: str) -> dict[str, Path]:
    return {slug(p.name[: -len(suffix)]): p for p in sorted(directory.glob(f"*{suffix}"))}


def cmd_score(args) -> int:
    gold_dir, pred_dir = Path(args.gold), Path(args.pred)
    for d in (gold_dir, pred_dir):
        if not d.is_dir():
            print(f"not a directory: {d}", file=sys.stderr)
            return EXIT_UNMATCHED
    gold = _by_slug(gold_dir, GOLD_SUFFIX)
    sheets = _by_slug(pred_dir, SHEET_SUFFIX)
    preds = _by_slug(pred_dir, PRICING_SUFFIX)
    predicted = set(sheets) | set(preds)
    if not gold and not predicted:
        print("no gold or predicted files found", file=sys.stderr)
        return EXIT_UNMATCHED

    rows: list[SheetRow] = []
    for key in sorted(gold, key=lambda k: gold[k].name):
        annotation = load_gold(gold[key])
        if key in sheets:
            sheet = load_sheet(sheets[key])
            rows.append(SheetRow(annotation.saas_name, {c: n for c, n in sheet.counts.items() if c in annotation.categories}))
        elif key in preds:
            judgments = judge(parse(preds[key].read_text(encoding="utf-8"), validate=False), annotation)
            counts = {c: score(j for j in judgments if j.category is c) for c in annotation.categories}
            rows.append(SheetRow(annotation.saas_name, counts))
    unmatched = sorted({gold[k].name for k in set(gold) - predicted} | {(sheets.get(k) or preds[k]).name for k in predicted - set(gold)})
    if rows:
        report = Report(tuple(rows))
        out = Path(args.report)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.text(), encoding="utf-8")
        if args.rows:
            Path(args.rows).write_text(report.csv(), encoding="utf-8")
        print(f"scored {len(rows)} SaaS into {out}")
    for name in unmatched:
        print(f"unmatched: {name}", file=sys.stderr)
    return EXIT_UNMATCHED if unmatched or not rows else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--url", help="fetch a static page over HTTP")
    p.add_argument("--rendered-url", help="render a page through a WebDriver endpoint")
    p.add_argument("--file", help="read a saved HTML file")
    p.add_argument("--batch", help="manifest with one locator per line")
    p.add_argument("--provider", choices=("http", "replay", "null"), default="replay")
    p.add_argument("--replay-dir", help="replay responses directory (default: 'replay' next to the input file)")
    p.add_argument("--model", default="", help="model id sent to the provider")
    p.add_argument("--base-url", help="provider base URL for --provider http")
    p.add_argument("--rate", type=float, default=None, help="provider requests per minute")
    p.add_argument("--prompts", help="prompt template directory (default: bundled v1)")
    p.add_argument("--webdriver-url", help="WebDriver endpoint, e.g. http://localhost:4444")
    p.add_argument("--wait", type=float, default=30.0, help="seconds allowed for a rendered page to settle")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="token budget for the cleaned page")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ipricing", description="Turn SaaS pricing pages into validated pricing documents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("transform", help="extract a pricing document from a page")
    _add_source_args(p)
    p.add_argument("--out", required=True, help="output stem (directory in --batch mode)")
    p.add_argument("--saas-name", help="SaaS name (default: derived from the source)")
    p.add_argument("--date", type=_date, help="extraction date (default: today)")
    p.add_argument("--currency", default="USD")
    p.add_argument("--jobs", type=int, default=1, help="concurrent documents in --batch mode")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("record-fixtures", help="capture live provider replies for replay")
    _add_source_args(p)
    p.set_defaults(func=cmd_record, provider="http")

    p = sub.add_parser("validate", help="parse and validate a pricing document")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="summary counts and configuration space size")
    p.add_argument("file")
    p.add_argument("--constraints", help="YAML with dependsOn / excludes / standaloneAllowed")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", help="score predictions against gold annotations")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True, help="aligned text report path")
    p.add_argument("--rows", help="also write CSV rows here")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, TemplateError) as exc:
        print(f"ipricing: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
