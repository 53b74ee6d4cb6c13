import itertools
import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hookcost import kernels
from hookcost.hooks import CacheConfig
from hookcost.stacking import (
    AccessRequest,
    ModuleRules,
    StackError,
    all_orders,
    cached_reevaluate,
    evaluate_stack,
    load_requests,
    load_rules,
    requests_for,
)

THREE = {
    "A": ModuleRules("A", allow={"1", "2", "3"}),
    "B": ModuleRules("B", allow={"2", "3", "4"}),
    "C": ModuleRules("C", allow={"2"}),
}
REQS = requests_for("1234")


def test_three_module_order_abc(backend):
    r = evaluate_stack(REQS, "ABC", THREE)
    assert r.checks_per_module == {"A": 4, "B": 3, "C": 2}
    assert r.total_cost_units == 9
    assert r.granted == {"2"}
    assert r.decisions["1"].denied_by == "B"
    assert r.decisions["4"].denied_by == "A"
    assert r.decisions["3"].denied_by == "C"


def test_three_module_order_cab(backend):
    r = evaluate_stack(REQS, "CAB", THREE)
    assert r.checks_per_module == {"C": 4, "A": 1, "B": 1}
    assert r.total_cost_units == 6
    assert r.granted == {"2"}


def test_empty_stack(backend):
    r = evaluate_stack(REQS, [], THREE)
    assert r.granted == {"1", "2", "3", "4"}
    assert r.total_cost_units == 0


def test_one_module_checks_every_request(backend):
    assert evaluate_stack(REQS, ["B"], THREE).checks_per_module == {"B": 4}


def test_missing_rules():
    with pytest.raises(StackError):
        evaluate_stack(REQS, ["A", "Z"], THREE)


def test_repeated_request_cached(backend):
    reqs = requests_for(["7"] * 300)
    rules = {"A": ModuleRules("A", default="allow")}
    r = cached_reevaluate(reqs, 1, ["A"], rules, {"A": CacheConfig(512)})
    assert r.non_cached_checks == {"A": 1}
    assert r.cache_hits_per_module == {"A": 299}


def test_lru_thrash(backend):
    reqs = requests_for(range(600))
    rules = {"A": ModuleRules("A", default="allow")}
    r = cached_reevaluate(reqs, 2, ["A"], rules, {"A": CacheConfig(512)})
    assert [p.cache_hits_per_module["A"] for p in r.passes] == [0, 0]


def test_cache_disabled(backend):
    r = cached_reevaluate(REQS, 5, "ABC", THREE)
    assert sum(r.cache_hits_per_module.values()) == 0


def test_cache_capacity_covers_keys(backend):
    caches = {m: CacheConfig(512) for m in "ABC"}
    first = evaluate_stack(REQS, "ABC", THREE, caches)
    for k in (1, 3, 10):
        r = cached_reevaluate(REQS, k, "ABC", THREE, caches)
        assert r.non_cached_checks == first.non_cached_checks


def test_denials_not_cached_when_disabled(backend):
    caches = {"C": CacheConfig(512, cache_denials=False)}
    r = cached_reevaluate(REQS, 2, ["C"], THREE, caches)
    assert r.passes[1].cache_hits_per_module == {"C": 1}


def test_costs_weight_uncached_checks(backend):
    r = evaluate_stack(REQS, "ABC", THREE, costs={"A": 10})
    assert r.total_cost_units == 4 * 10 + 3 + 2


def test_all_orders_cheapest_starts_with_c():
    ranked = all_orders(REQS, "ABC", THREE)
    assert len(ranked) == 6
    assert ranked[0].stack[0] == "C"
    assert {frozenset(r.granted) for r in ranked} == {frozenset({"2"})}


def test_rule_and_request_files():
    rules = load_rules(json.dumps([{"module": "A", "allow": [1, 2]}, {"module": "B", "default": "allow"}]))
    assert rules["A"].decide("2") and not rules["A"].decide("3")
    assert rules["B"].decide("x")
    with pytest.raises(StackError):
        load_rules(json.dumps([{"module": "A"}, {"module": "A"}]))
    reqs = load_requests('[1, {"object_id": "x", "subject_label": 0, "operation": "read"}]')
    assert reqs == [AccessRequest(2, "1"), AccessRequest(0, "x", "read")]
    with pytest.raises(StackError):
        AccessRequest(0, "x", "chown")


# -- properties -------------------------------------------------------------

objects = st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=25)


@st.composite
def rule_sets(draw, max_modules=4):
    n = draw(st.integers(1, max_modules))
    names = [f"M{i}" for i in range(n)]
    return {m: ModuleRules(m, allow=draw(st.sets(st.sampled_from("abcdefgh")))) for m in names}


@given(rule_sets(), objects)
def test_outcome_independent_of_order(rules, objs):
    reqs = requests_for(objs)
    expected = {o for o in objs if all(r.decide(o) for r in rules.values())}
    for order in itertools.permutations(rules):
        r = evaluate_stack(reqs, order, rules)
        assert r.granted == expected
        checks = [r.checks_per_module[m] for m in order]
        assert checks[0] == len(reqs)
        assert checks == sorted(checks, reverse=True)
        for i in range(1, len(order)):
            passed = sum(all(rules[m].decide(q.object_id) for m in order[:i]) for q in reqs)
            assert checks[i] == passed
        assert r.total_cost_units <= len(reqs) * len(order)
        # a deny by the last module still costs its check
        full = all(rules[m].decide(q.object_id) for m in order[:-1] for q in reqs)
        assert (r.total_cost_units == len(reqs) * len(order)) == full


@settings(max_examples=200)
@given(rule_sets(), objects)
def test_most_restrictive_first_is_optimal(rules, objs):
    reqs = requests_for(objs)
    ranked = all_orders(reqs, list(rules), rules)
    allowed = {m: sum(rules[m].decide(q.object_id) for q in reqs) for m in rules}
    fewest = min(allowed.values())
    best_restrictive = min(r.total_cost_units for r in ranked if allowed[r.stack[0]] == fewest)
    assert best_restrictive == ranked[0].total_cost_units


@settings(max_examples=200)
@given(
    st.integers(1, 4),
    st.integers(1, 30),
    st.lists(st.integers(0, 29), max_size=200),
    st.data(),
)
def test_kernels_agree(n_mod, n_keys, raw_keys, data):
    keys = [k % n_keys for k in raw_keys]
    allow = [bytes(data.draw(st.lists(st.booleans(), min_size=n_keys, max_size=n_keys)))
             for _ in range(n_mod)]
    caps = data.draw(st.lists(st.integers(0, 8), min_size=n_mod, max_size=n_mod))
    costs = data.draw(st.lists(st.integers(0, 5), min_size=n_mod, max_size=n_mod))
    deny = data.draw(st.lists(st.booleans(), min_size=n_mod, max_size=n_mod))
    passes = data.draw(st.integers(1, 3))
    outs = [k(allow, keys, caps, costs, passes, deny) for k in kernels.BACKENDS.values()]
    assert all(o == outs[0] for o in outs)


@given(st.integers(1, 6), st.lists(st.integers(0, 15), max_size=120))
def test_lru_never_exceeds_capacity(cap, keys):
    # a replay of the distinct keys can only hit what is still cached
    allow = [bytes([1] * 16)]
    distinct = sorted(set(keys))
    for kernel in kernels.BACKENDS.values():
        _, hits, _, _ = kernel(allow, keys + distinct, [cap], [1], 1, [True])
        _, replay, _, _ = kernel(allow, distinct, [cap], [1], 2, [True])
        assert replay[1][0] <= cap
        assert replay[1][0] == (len(distinct) if len(distinct) <= cap else 0)
        assert hits[0][0] <= len(keys) + len(distinct) - min(len(distinct), 1)


def test_backend_selected():
    assert kernels.BACKEND in kernels.BACKENDS


def test_env_forces_fallback():
    env = dict(os.environ, HOOKCOST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from hookcost import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
