from .parsing import ParseResult, parse_structured_response
from .pipeline import Extraction, ExtractorSettings, extract_all, merge_addons, run_pass
from .providers import (
    HttpProvider,
    NullProvider,
    Provider,
    ProviderRequest,
    ProviderResponse,
    RecordingProvider,
    ReplayProvider,
    complete_with_retries,
    payload_hash,
    request_key,
)
from .records import PASS_ORDER, Category, ExtractedItem, ExtractionRecord, PassId, Provenance
from .templates import PromptTemplate, TemplateError, load_templates

__all__ = [
    "Category",
    "Extraction",
    "ExtractedItem",
    "ExtractionRecord",
    "ExtractorSettings",
    "HttpProvider",
    "NullProvider",
    "PASS_ORDER",
    "ParseResult",
    "PassId",
    "PromptTemplate",
    "Provenance",
    "Provider",
    "ProviderRequest",
    "ProviderResponse",
    "RecordingProvider",
    "ReplayProvider",
    "TemplateError",
    "complete_with_retries",
    "extract_all",
    "load_templates",
    "merge_addons",
    "parse_structured_response",
    "payload_hash",
    "request_key",
    "run_pass",
]
