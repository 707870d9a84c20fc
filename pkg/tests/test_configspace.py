from __future__ import annotations

import dataclasses
import itertools
import json
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipricing.configspace import SubscriptionConstraints, candidate_count, configuration_space
from ipricing.errors import ConstraintError, EnumerationCapExceeded, InvalidModel
from ipricing.model import AddOn, Plan, Pricing, normalize_name


def model(n_plans: int, addons: list[AddOn]) -> Pricing:
    return Pricing("S", plans=tuple(Plan(f"P{i}", Decimal(i)) for i in range(n_plans)), add_ons=tuple(addons))


def addons(k: int, **kw) -> list[AddOn]:
    return [AddOn(f"a{j}", Decimal(1), **kw) for j in range(k)]


def brute_force(p: Pricing, c: SubscriptionConstraints) -> int:
    """Direct reading of the definition, used as a reference in property tests."""
    deps = {normalize_name(k): {normalize_name(v) for v in vs} for k, vs in c.depends_on.items()}
    excl: dict[str, set[str]] = {}
    for k, vs in c.excludes.items():
        for v in vs:
            excl.setdefault(normalize_name(k), set()).add(normalize_name(v))
            excl.setdefault(normalize_name(v), set()).add(normalize_name(k))
    standalone = {normalize_name(s) for s in c.standalone_allowed}

    def ok(s):
        return all(deps.get(a, set()) <= s and not (excl.get(a, set()) & s) for a in s)

    def subsets(pool):
        return (set(x) for r in range(len(pool) + 1) for x in itertools.combinations(pool, r))

    total = 0
    for plan in p.plans:
        pool = [normalize_name(a.name) for a in p.add_ons if a.is_available_for(plan.name)]
        total += sum(ok(s) for s in subsets(pool))
    pool = [normalize_name(a.name) for a in p.add_ons if normalize_name(a.name) in standalone]
    total += sum(bool(s) and ok(s) for s in subsets(pool))
    return total


def test_one_plan_no_addons():
    assert configuration_space(model(1, [])) == 1


def test_two_plans_three_addons():
    assert configuration_space(model(2, addons(3))) == 16


def test_dependency_example():
    c = SubscriptionConstraints.from_dict({"dependsOn": {"a1": ["a0"]}})
    assert configuration_space(model(2, addons(3)), c) == 12


def test_excludes_are_symmetric():
    one_way = SubscriptionConstraints.from_dict({"excludes": {"a0": ["a1"]}})
    other_way = SubscriptionConstraints.from_dict({"excludes": {"a1": ["a0"]}})
    p = model(1, addons(2))
    assert configuration_space(p, one_way) == configuration_space(p, other_way) == 3


def test_standalone_adds_nonempty_subsets():
    p = Pricing("S", plans=(Plan("P", Decimal(1)),), add_ons=(AddOn("w", Decimal(1), standalone=True), AddOn("x", Decimal(1))))
    # plan: 4 subsets; no plan: {w}
    assert configuration_space(p) == 5


def test_standalone_only_model():
    p = Pricing("S", add_ons=(AddOn("w", Decimal(1), standalone=True), AddOn("v", Decimal(1), standalone=True)))
    assert configuration_space(p) == 3


def test_restricted_availability():
    p = Pricing("S", plans=(Plan("A", Decimal(1)), Plan("B", Decimal(2))), add_ons=(AddOn("x", Decimal(1), available_for=("B",)),))
    assert configuration_space(p) == 3


@pytest.mark.parametrize("bad", [{"dependsOn": {"ghost": ["a0"]}}, {"excludes": {"a0": ["nope"]}}, {"dependsOn": {"a0": ["A0"]}}])
def test_bad_constraints(bad):
    with pytest.raises(ConstraintError) as info:
        configuration_space(model(1, addons(2)), SubscriptionConstraints.from_dict(bad))
    assert info.value.code == "INVALID_CONSTRAINTS"


def test_invalid_model_refused():
    p = Pricing("S", plans=(Plan("P", Decimal(1)), Plan("p", Decimal(2))))
    with pytest.raises(InvalidModel):
        configuration_space(p)


def test_cap_boundary():
    p = model(1, addons(26))
    assert candidate_count(p, SubscriptionConstraints()) == 2**26
    with pytest.raises(EnumerationCapExceeded):
        configuration_space(model(2, addons(26)))
    with pytest.raises(EnumerationCapExceeded):
        configuration_space(model(1, addons(4)), cap=15)
    assert configuration_space(model(1, addons(4)), cap=16) == 16


@given(st.integers(1, 5), st.integers(0, 12))
def test_unconstrained_closed_form(n, k):
    assert configuration_space(model(n, addons(k))) == n * 2**k


@st.composite
def constrained(draw):
    n = draw(st.integers(1, 3))
    k = draw(st.integers(0, 6))
    plan_names = [f"P{i}" for i in range(n)]
    adds = []
    for j in range(k):
        avail = draw(st.none() | st.lists(st.sampled_from(plan_names), unique=True, min_size=1).map(tuple))
        adds.append(AddOn(f"a{j}", Decimal(1), available_for=avail))
    names = [a.name for a in adds]
    deps, excl = {}, {}
    for a in names:
        others = [o for o in names if o != a]
        if others:
            deps[a] = draw(st.lists(st.sampled_from(others), unique=True, max_size=2))
            excl[a] = draw(st.lists(st.sampled_from(others), unique=True, max_size=1))
    standalone = draw(st.lists(st.sampled_from(names), unique=True)) if names else []
    c = SubscriptionConstraints.from_dict({"dependsOn": deps, "excludes": excl, "standaloneAllowed": standalone})
    return model(n, adds), c


@given(constrained())
def test_matches_brute_force(case):
    p, c = case
    assert configuration_space(p, c) == brute_force(p, c)


@given(constrained(), st.data())
def test_monotone_in_availability(case, data):
    p, c = case
    restricted = [i for i, a in enumerate(p.add_ons) if a.available_for is not None]
    if not restricted:
        return
    i = data.draw(st.sampled_from(restricted))
    grown = list(p.add_ons)
    extra = [pl.name for pl in p.plans if pl.name not in grown[i].available_for]
    grown[i] = dataclasses.replace(grown[i], available_for=grown[i].available_for + tuple(extra[:1]) if extra else None)
    bigger = dataclasses.replace(p, add_ons=tuple(grown))
    assert configuration_space(bigger, c) >= configuration_space(p, c)


def test_frozen_oracle_cases(fixtures):
    cases = json.loads((fixtures / "configspace" / "constrained.json").read_text(encoding="utf-8"))
    assert len(cases) == 20
    for case in cases:
        p = Pricing(
            "S",
            plans=tuple(Plan(n, Decimal(1)) for n in case["plans"]),
            add_ons=tuple(
                AddOn(a["name"], Decimal(1), available_for=None if a["availableFor"] == "all" else tuple(a["availableFor"])) for a in case["addOns"]
            ),
        )
        assert configuration_space(p, SubscriptionConstraints.from_dict(case["constraints"])) == case["expected"], case["id"]
