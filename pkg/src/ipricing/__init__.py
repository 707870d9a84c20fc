"""Turn SaaS pricing pages into validated, machine-readable pricing documents."""

__version__ = "0.1.0"

from .configspace import SubscriptionConstraints, configuration_space
from .diagnostics import Diagnostic, DiagnosticsLedger, Severity
from .document import parse, serialize, write_log
from .engine import EngineConfig, PricingMeta, process
from .errors import PricingError
from .model import (
    AddOn,
    Feature,
    Plan,
    Pricing,
    Quantity,
    Sentinel,
    SummaryCounts,
    UsageLimit,
    ValueType,
    summarize,
    validate_model,
)

__all__ = [
    "AddOn",
    "Diagnostic",
    "DiagnosticsLedger",
    "EngineConfig",
    "Feature",
    "Plan",
    "Pricing",
    "PricingError",
    "PricingMeta",
    "Quantity",
    "Sentinel",
    "Severity",
    "SubscriptionConstraints",
    "SummaryCounts",
    "UsageLimit",
    "ValueType",
    "configuration_space",
    "parse",
    "process",
    "serialize",
    "summarize",
    "validate_model",
    "write_log",
]
