"""Counting valid subscriptions (the configuration space) by exhaustive enumeration.

A subscription is either one plan plus any subset of the add-ons available
for it, or no plan plus a non-empty subset of the standalone-allowed add-ons.
Dependency and exclusion constraints between add-ons are explicit input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConstraintError, EnumerationCapExceeded, InvalidModel
from .model import Pricing, normalize_name, validate_model

DEFAULT_CAP = 2**26
_CHUNK = 1 << 20


@dataclass(frozen=True)
class SubscriptionConstraints:
    depends_on: Mapping[str, frozenset[str]] = field(default_factory=dict)
    excludes: Mapping[str, frozenset[str]] = field(default_factory=dict)
    standalone_allowed: frozenset[str] = frozenset()

    @classmethod
    def from_pricing(cls, p: Pricing) -> "SubscriptionConstraints":
        """No dependencies or exclusions; standalone set taken from the add-on flags."""
        return cls(standalone_allowed=frozenset(a.name for a in p.add_ons if a.standalone))

    @classmethod
    def from_dict(cls, data: Mapping) -> "SubscriptionConstraints":
        def as_map(raw) -> dict[str, frozenset[str]]:
            raw = raw or {}
            if not isinstance(raw, Mapping):
                raise ConstraintError("dependsOn/excludes must map add-on names to lists")
            return {str(k): frozenset(str(v) for v in (vals or ())) for k, vals in raw.items()}

        return cls(
            depends_on=as_map(data.get("dependsOn")),
            excludes=as_map(data.get("excludes")),
            standalone_allowed=frozenset(str(v) for v in data.get("standaloneAllowed") or ()),
        )


def _resolve(p: Pricing, c: SubscriptionConstraints) -> tuple[list[int], list[int], int]:
    """Translate constraints into per-add-on bitmasks (deps, excl) and the standalone mask."""
    index = {normalize_name(a.name): i for i, a in enumerate(p.add_ons)}

    def bit(name: str) -> int:
        try:
            return index[normalize_name(name)]
        except KeyError:
            raise ConstraintError(f"constraint names unknown add-on {name!r}") from None

    k = len(p.add_ons)
    deps = [0] * k
    excl = [0] * k
    for owner, targets in c.depends_on.items():
        i = bit(owner)
        for t in targets:
            j = bit(t)
            if i == j:
                raise ConstraintError(f"add-on {owner!r} depends on itself")
            deps[i] |= 1 << j
    for owner, targets in c.excludes.items():
        i = bit(owner)
        for t in targets:
            j = bit(t)
            if i == j:
                raise ConstraintError(f"add-on {owner!r} excludes itself")
            # symmetric closure
            excl[i] |= 1 << j
            excl[j] |= 1 << i
    standalone = 0
    for name in c.standalone_allowed:
        standalone |= 1 << bit(name)
    return deps, excl, standalone


def candidate_count(p: Pricing, c: SubscriptionConstraints) -> int:
    """Size of the brute-force search space: one slot per plan, plus the no-plan slot when standalone is allowed."""
    slots = len(p.plans) + (1 if c.standalone_allowed else 0)
    return slots * 2 ** len(p.add_ons)


def configuration_space(p: Pricing, c: SubscriptionConstraints | None = None, cap: int = DEFAULT_CAP) -> int:
    """Exact number of distinct valid subscriptions of ``p`` under ``c``.

    Raises EnumerationCapExceeded when the candidate space is larger than ``cap``.
    """
    ledger = validate_model(p)
    if ledger.has_errors:
        raise InvalidModel(f"pricing has {len(ledger.errors)} validation error(s)")
    if c is None:
        c = SubscriptionConstraints.from_pricing(p)
    deps, excl, standalone = _resolve(p, c)

    candidates = candidate_count(p, c)
    if candidates > cap:
        raise EnumerationCapExceeded(f"{candidates} candidate subscriptions exceed the cap of {cap}")

    k = len(p.add_ons)
    full = (1 << k) - 1
    plan_masks = []
    for plan in p.plans:
        mask = 0
        for i, addon in enumerate(p.add_ons):
            if addon.is_available_for(plan.name):
                mask |= 1 << i
        plan_masks.append(mask)

    total = 0
    for start in range(0, full + 1, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, full + 1), dtype=np.uint64)
        valid = np.ones(masks.shape, dtype=bool)
        for i in range(k):
            chosen = (masks >> np.uint64(i)) & np.uint64(1) == 1
            d, x = np.uint64(deps[i]), np.uint64(excl[i])
            ok = ((masks & d) == d) & ((masks & x) == 0)
            valid &= ~chosen | ok
        for allowed in plan_masks:
            outside = np.uint64(full & ~allowed)
            total += int(np.count_nonzero(valid & ((masks & outside) == 0)))
        if standalone:
            outside = np.uint64(full & ~standalone)
            total += int(np.count_nonzero(valid & ((masks & outside) == 0) & (masks != 0)))
    return total
