"""Static worst-case hook counting over call graphs with sequence edges.

Graph text format, one statement per line (``#`` starts a comment)::

    node <name> [hook=<id> per_depth=<a> const=<b>]
    call <caller> -> <callee1>, <callee2>, ...

Callee order is source order.  Brackets around the annotation are optional.
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from hookcost.hooks import SYSCALLS, PlacementFormula, SecurityModuleSpec, eval_placement
from hookcost.syscalls import HookInvocationTrace

# Fewest hook checks each syscall needs under POSIX permission semantics,
# as (per_depth, constant).  Declarative: not derived from any graph.
MIN_HOOKS = {
    "open": PlacementFormula(1, 0), "openat": PlacementFormula(0, 1),
    "close": PlacementFormula(0, 0), "creat": PlacementFormula(1, 0),
    "rename": PlacementFormula(0, 4), "sendfile": PlacementFormula(0, 2),
    "read": PlacementFormula(0, 1), "write": PlacementFormula(0, 1),
    "mkdir": PlacementFormula(1, 0), "rmdir": PlacementFormula(1, 0),
    "symlink": PlacementFormula(1, 0), "unlink": PlacementFormula(1, 0),
    "chmod": PlacementFormula(0, 1), "fchmod": PlacementFormula(0, 1),
    "stat": PlacementFormula(1, 0), "fstatat": PlacementFormula(1, 0),
}

_NAME = r"[A-Za-z_][\w.@:$-]*"
_NODE_RE = re.compile(rf"^node\s+({_NAME})(?:\s+\[?\s*(.*?)\s*\]?)?$")
_CALL_RE = re.compile(rf"^call\s+({_NAME})\s*->\s*(.*)$")
_ANNOT_KEYS = ("hook", "per_depth", "const")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Annotation:
    hook: str
    formula: PlacementFormula


@dataclass(frozen=True)
class CallGraph:
    nodes: tuple[str, ...]
    call_edges: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    seq_edges: frozenset[tuple[str, str]] = frozenset()
    hook_annotations: Mapping[str, Annotation] = field(default_factory=dict)

    def edges(self) -> set[tuple[str, str]]:
        """Call edges plus sequence edges."""
        out = {(a, b) for a, callees in self.call_edges.items() for b in callees}
        return out | set(self.seq_edges)

    def successors(self, node: str) -> set[str]:
        succ = set(self.call_edges.get(node, ()))
        succ.update(b for a, b in self.seq_edges if a == node)
        return succ

    def reachable(self, entry: str) -> set[str]:
        if entry not in self.nodes:
            raise GraphError(f"unknown entry node {entry!r}")
        adj: dict[str, set[str]] = {}
        for a, b in self.edges():
            adj.setdefault(a, set()).add(b)
        seen = {entry}
        stack = [entry]
        while stack:
            for nxt in adj.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen


def _parse_annotation(text: str, lineno: int) -> Annotation | None:
    if not text:
        return None
    fields = {}
    for tok in text.split():
        key, sep, val = tok.partition("=")
        if not sep or key not in _ANNOT_KEYS or key in fields:
            raise GraphError(f"line {lineno}: bad annotation {tok!r}")
        fields[key] = val
    if "hook" not in fields:
        raise GraphError(f"line {lineno}: annotation without hook=")
    try:
        formula = PlacementFormula(int(fields.get("per_depth", 0)), int(fields.get("const", 0)))
    except ValueError as exc:
        raise GraphError(f"line {lineno}: {exc}") from exc
    return Annotation(fields["hook"], formula)


def parse_callgraph(text: str) -> CallGraph:
    nodes: list[str] = []
    annotations: dict[str, Annotation] = {}
    calls: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _NODE_RE.match(line):
            name = m.group(1)
            if name in annotations or name in nodes:
                raise GraphError(f"line {lineno}: node {name!r} declared twice")
            nodes.append(name)
            ann = _parse_annotation(m.group(2) or "", lineno)
            if ann:
                annotations[name] = ann
        elif m := _CALL_RE.match(line):
            callees = [c.strip() for c in m.group(2).split(",")]
            if not all(re.fullmatch(_NAME, c) for c in callees):
                raise GraphError(f"line {lineno}: bad callee list {m.group(2)!r}")
            calls.setdefault(m.group(1), []).extend(callees)
        else:
            raise GraphError(f"line {lineno}: syntax error: {raw.strip()!r}")
    declared = set(nodes)
    for caller, callees in calls.items():
        for n in [caller, *callees]:
            if n not in declared:
                raise GraphError(f"edge references undeclared node {n!r}")
    return CallGraph(tuple(nodes), {k: tuple(v) for k, v in calls.items()},
                     frozenset(), annotations)


def format_callgraph(g: CallGraph, header: str = "") -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    for n in g.nodes:
        ann = g.hook_annotations.get(n)
        if ann:
            f = ann.formula
            lines.append(f"node {n} [hook={ann.hook} per_depth={f.per_depth} const={f.constant}]")
        else:
            lines.append(f"node {n}")
    for caller in g.nodes:
        if g.call_edges.get(caller):
            lines.append(f"call {caller} -> {', '.join(g.call_edges[caller])}")
    return "\n".join(lines) + "\n"


def augment_sequence_edges(g: CallGraph) -> CallGraph:
    """Link the callees of adjacent call-sites within each caller.

    Only adjacent pairs get an edge; later sites are reached transitively.
    """
    seq = set(g.seq_edges)
    for callees in g.call_edges.values():
        for a, b in zip(callees, callees[1:]):
            if a != b:
                seq.add((a, b))
    return CallGraph(g.nodes, g.call_edges, frozenset(seq), g.hook_annotations)


@dataclass(frozen=True)
class HookCountReport:
    entry: str
    depth: int
    counts: Mapping[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def count_hooks_worst_case(g: CallGraph, entry: str, depth: int) -> HookCountReport:
    """Every reachable annotated node is assumed to execute once; loops are not unrolled."""
    reach = g.reachable(entry)
    counts: Counter[str] = Counter()
    for node in sorted(reach):
        ann = g.hook_annotations.get(node)
        if ann:
            n = eval_placement(ann.formula, depth)
            if n:
                counts[ann.hook] += n
    return HookCountReport(entry, depth, dict(sorted(counts.items())))


@dataclass(frozen=True)
class ConsistencyVerdict:
    consistent: bool
    offending: Mapping[str, tuple[int, int]] = field(default_factory=dict)  # hook -> (dynamic, static)

    @property
    def status(self) -> str:
        return "consistent" if self.consistent else "dynamic_exceeds_static"


def compare_static_dynamic(
    report: HookCountReport, trace: HookInvocationTrace, module: str | None = None
) -> ConsistencyVerdict:
    """Check that no hook fires more often in ``trace`` than the static bound.

    ``module`` restricts the trace to one module's firings.
    """
    dynamic = Counter(e.hook for e in trace.entries if module is None or e.module == module)
    bad = {
        hook: (n, report.counts.get(hook, 0))
        for hook, n in sorted(dynamic.items())
        if n > report.counts.get(hook, 0)
    }
    return ConsistencyVerdict(not bad, bad)


def entry_node(syscall: str) -> str:
    return f"sys_{syscall}"


def module_callgraph(spec: SecurityModuleSpec, syscalls: Sequence[str] = SYSCALLS) -> CallGraph:
    """Call graph whose hook sites mirror a module's placement table.

    Each syscall entry calls a path-lookup routine then a body routine.
    Per-depth placements hang off the lookup and constant ones off the body,
    so worst-case counts reproduce the placement formulas.
    """
    nodes: list[str] = []
    calls: dict[str, tuple[str, ...]] = {}
    annotations: dict[str, Annotation] = {}
    for s in syscalls:
        entry, lookup, body = entry_node(s), f"{s}_lookup", f"{s}_body"
        nodes += [entry, lookup, body]
        calls[entry] = (lookup, body)
        lookup_sites, body_sites = [], []
        for hook, formula in spec.placements_for(s):
            site = f"{s}@{hook}"
            nodes.append(site)
            annotations[site] = Annotation(hook, formula)
            (lookup_sites if formula.per_depth else body_sites).append(site)
        if lookup_sites:
            calls[lookup] = tuple(lookup_sites)
        if body_sites:
            calls[body] = tuple(body_sites)
    return CallGraph(tuple(nodes), calls, frozenset(), annotations)


def bundled_callgraph_names() -> list[str]:
    root = resources.files("hookcost.data") / "callgraphs"
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".cg"))


def bundled_callgraph(name: str) -> CallGraph:
    path = resources.files("hookcost.data") / "callgraphs" / f"{name}.cg"
    if not path.is_file():
        raise GraphError(f"no bundled call graph {name!r}")
    return parse_callgraph(path.read_text())


def load_callgraph(name_or_path: str) -> CallGraph:
    """A bundled graph by name, else a graph file on disk."""
    if name_or_path in bundled_callgraph_names():
        return bundled_callgraph(name_or_path)
    with open(name_or_path, encoding="utf-8") as fh:
        return parse_callgraph(fh.read())


def report_csv(reports: Iterable[HookCountReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["entry", "depth", "hook", "count"])
    for r in reports:
        for hook, n in r.counts.items():
            w.writerow([r.entry, r.depth, hook, n])
    return buf.getvalue()


def read_report_csv(text: str) -> list[HookCountReport]:
    rows = list(csv.DictReader(io.StringIO(text)))
    grouped: dict[tuple[str, int], dict[str, int]] = {}
    try:
        for row in rows:
            grouped.setdefault((row["entry"], int(row["depth"])), {})[row["hook"]] = int(row["count"])
    except (KeyError, ValueError) as exc:
        raise GraphError(f"malformed report CSV: {exc}") from exc
    return [HookCountReport(e, d, c) for (e, d), c in grouped.items()]
