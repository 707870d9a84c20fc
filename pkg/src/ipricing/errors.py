"""Exception hierarchy.

Every failure the toolchain can raise carries a stable ``code`` so callers
(the CLI in particular) can map it to an exit status without string matching.
"""

from __future__ import annotations


class PricingError(Exception):
    code = "PRICING_ERROR"

    def __init__(self, message: str = "") -> None:
        super().__init__(message or self.code)
        self.message = message or self.code


# ingestion
class FetchError(PricingError):
    code = "FETCH_FAILED"


class FileNotFound(FetchError):
    code = "FILE_NOT_FOUND"


class RenderTimeout(FetchError):
    code = "RENDER_TIMEOUT"


class EmptyAfterClean(PricingError):
    code = "EMPTY_AFTER_CLEAN"


# extractor
class ProviderError(PricingError):
    code = "PROVIDER_ERROR"

    def __init__(self, message: str = "", *, transient: bool = False) -> None:
        super().__init__(message)
        self.transient = transient


class ParseFailed(PricingError):
    code = "PARSE_FAILED"

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


# pricing model / process engine
class EnumerationCapExceeded(PricingError):
    code = "ENUMERATION_CAP_EXCEEDED"


class ConstraintError(PricingError):
    code = "INVALID_CONSTRAINTS"


class AssemblyFailed(PricingError):
    code = "ASSEMBLY_FAILED"

    def __init__(self, message: str, ledger=None) -> None:
        super().__init__(message)
        self.ledger = ledger


# results modeler
class DocumentSyntaxError(PricingError):
    code = "SYNTAX_ERROR"

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DocumentSemanticError(PricingError):
    code = "SEMANTIC_ERROR"

    def __init__(self, message: str, ledger) -> None:
        super().__init__(message)
        self.ledger = ledger


class InvalidModel(PricingError):
    code = "INVALID_MODEL"
