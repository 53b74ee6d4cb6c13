"""Whitelist module stacking with short-circuit on deny.

Every request visits the modules in stack order and stops at the first
module that denies it, so the granted set is the intersection of the
modules' allow sets while the number of checks depends on the order.
Modules may carry an LRU decision cache; a hit still counts as a check but
costs nothing.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from hookcost import kernels
from hookcost.hooks import CacheConfig

OPERATIONS = ("read", "write", "exec", "open", "setattr", "getattr")


class StackError(ValueError):
    pass


@dataclass(frozen=True)
class AccessRequest:
    subject_label: int
    object_id: str
    operation: str = "open"

    def __post_init__(self):
        if self.operation not in OPERATIONS:
            raise StackError(f"unknown operation {self.operation!r}")

    @property
    def key(self) -> tuple[int, str, str]:
        return (self.subject_label, self.object_id, self.operation)


@dataclass(frozen=True)
class ModuleRules:
    module: str
    default: str = "deny"
    allow: frozenset[str] = frozenset()
    deny: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "allow", frozenset(map(str, self.allow)))
        object.__setattr__(self, "deny", frozenset(map(str, self.deny)))
        if self.default not in ("allow", "deny"):
            raise StackError(f"{self.module}: default must be 'allow' or 'deny'")
        both = self.allow & self.deny
        if both:
            raise StackError(f"{self.module}: objects both allowed and denied: {sorted(both)}")

    def decide(self, object_id: str) -> bool:
        if object_id in self.allow:
            return True
        if object_id in self.deny:
            return False
        return self.default == "allow"


# module name -> rules
DecisionRuleSet = Mapping[str, ModuleRules]


@dataclass(frozen=True)
class Decision:
    granted: bool
    denied_by: str | None = None


@dataclass
class StackEvalReport:
    stack: tuple[str, ...]
    decisions: dict[str, Decision]
    checks_per_module: dict[str, int]
    cache_hits_per_module: dict[str, int]
    total_cost_units: int
    passes: list[StackEvalReport] = field(default_factory=list)

    @property
    def granted(self) -> set[str]:
        return {obj for obj, d in self.decisions.items() if d.granted}

    @property
    def non_cached_checks(self) -> dict[str, int]:
        return {
            m: self.checks_per_module[m] - self.cache_hits_per_module[m]
            for m in self.stack
        }

    def rows(self) -> list[tuple[str, int, int]]:
        return [
            (m, self.checks_per_module[m], self.cache_hits_per_module[m])
            for m in self.stack
        ]


def rules_from_dict(doc: Mapping[str, Any]) -> ModuleRules:
    try:
        module = doc["module"]
    except (KeyError, TypeError) as exc:
        raise StackError("rule entry needs a 'module' field") from exc
    return ModuleRules(
        module=module,
        default=doc.get("default", "deny"),
        allow=frozenset(map(str, doc.get("allow", ()))),
        deny=frozenset(map(str, doc.get("deny", ()))),
    )


def load_rules(text: str) -> dict[str, ModuleRules]:
    """Parse a rule file holding one rule object or a list of them."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StackError(f"malformed rule file: {exc}") from exc
    docs = doc if isinstance(doc, list) else [doc]
    out: dict[str, ModuleRules] = {}
    for d in docs:
        rules = rules_from_dict(d)
        if rules.module in out:
            raise StackError(f"duplicate rules for module {rules.module!r}")
        out[rules.module] = rules
    return out


def _encode(requests: Sequence[AccessRequest]):
    index: dict[tuple, int] = {}
    objects: list[str] = []
    keys = []
    for r in requests:
        k = index.get(r.key)
        if k is None:
            k = index[r.key] = len(objects)
            objects.append(r.object_id)
        keys.append(k)
    return keys, objects


def _run(requests, stack, rules, caches, costs, passes):
    requests = list(requests)
    stack = tuple(stack)
    missing = [m for m in stack if m not in rules]
    if missing:
        raise StackError(f"no rules for stacked module(s): {', '.join(missing)}")
    if len(set(stack)) != len(stack):
        raise StackError("a module appears twice in the stack")
    caches = caches or {}
    costs = costs or {}
    unknown = set(caches) - set(stack)
    if unknown:
        raise StackError(f"cache configured for modules not in the stack: {sorted(unknown)}")

    keys, objects = _encode(requests)
    allow = [bytes(rules[m].decide(obj) for obj in objects) for m in stack]
    capacities = [caches[m].max_entries if caches.get(m) else 0 for m in stack]
    unit_costs = [int(costs.get(m, 1)) for m in stack]
    cache_denials = [bool(caches[m].cache_denials) if caches.get(m) else True for m in stack]
    checks, hits, cost, denied_by = kernels.evaluate_encoded(
        allow, keys, capacities, unit_costs, passes, cache_denials
    )

    decisions = {}
    for r, d in zip(requests, denied_by):
        decisions[r.object_id] = Decision(True) if d < 0 else Decision(False, stack[d])

    def report(chk, hit, total, sub=()):
        return StackEvalReport(
            stack=stack,
            decisions=dict(decisions),
            checks_per_module=dict(zip(stack, map(int, chk))),
            cache_hits_per_module=dict(zip(stack, map(int, hit))),
            total_cost_units=int(total),
            passes=list(sub),
        )

    per_pass = [report(c, h, t) for c, h, t in zip(checks, hits, cost)]
    agg_checks = [sum(c[i] for c in checks) for i in range(len(stack))]
    agg_hits = [sum(h[i] for h in hits) for i in range(len(stack))]
    return report(agg_checks, agg_hits, sum(cost), per_pass)


def evaluate_stack(
    requests: Iterable[AccessRequest],
    stack: Sequence[str],
    rules: DecisionRuleSet,
    caches: Mapping[str, CacheConfig] | None = None,
    costs: Mapping[str, int] | None = None,
) -> StackEvalReport:
    """One pass over ``requests``; caches, if any, start empty."""
    return _run(requests, stack, rules, caches, costs, 1)


def cached_reevaluate(
    requests: Iterable[AccessRequest],
    k: int,
    stack: Sequence[str],
    rules: DecisionRuleSet,
    caches: Mapping[str, CacheConfig] | None = None,
    costs: Mapping[str, int] | None = None,
) -> StackEvalReport:
    """Replay the request list ``k`` times against caches that persist across passes.

    The returned report aggregates all passes; ``report.passes`` holds the
    per-pass reports.
    """
    if k < 1:
        raise StackError("k must be at least 1")
    return _run(requests, stack, rules, caches, costs, k)


def all_orders(
    requests: Sequence[AccessRequest],
    modules: Sequence[str],
    rules: DecisionRuleSet,
    caches: Mapping[str, CacheConfig] | None = None,
    costs: Mapping[str, int] | None = None,
) -> list[StackEvalReport]:
    """Evaluate every permutation of ``modules``, cheapest first (ties keep permutation order)."""
    reports = [
        evaluate_stack(requests, order, rules, caches, costs)
        for order in itertools.permutations(modules)
    ]
    return sorted(reports, key=lambda r: r.total_cost_units)


def requests_for(object_ids: Iterable[str], subject_label: int = 2,
                 operation: str = "open") -> list[AccessRequest]:
    return [AccessRequest(subject_label, str(o), operation) for o in object_ids]


def load_requests(text: str) -> list[AccessRequest]:
    """Requests from JSON: a list of object ids or of request objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StackError(f"malformed request file: {exc}") from exc
    if not isinstance(doc, list):
        raise StackError("request file must hold a JSON list")
    out = []
    for item in doc:
        if isinstance(item, Mapping):
            out.append(AccessRequest(
                int(item.get("subject_label", 2)),
                str(item["object_id"]),
                item.get("operation", "open"),
            ))
        else:
            out.append(AccessRequest(2, str(item)))
    return out
