"""Benchmark scenarios and the hook traces they produce.

A scenario is an ordered list of syscalls run against one synthetic path.
Executing it against a module stack yields a :class:`HookInvocationTrace`:
every hook firing in path-walk order, with per-component hooks firing once
per path component before the per-syscall constant hooks.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from hookcost.hooks import SYSCALLS, SecurityModuleSpec

PATH_KINDS = ("plain", "hard_link", "soft_link", "nonexistent")
CLASSES = ("File Ops", "Dir Ops", "Link Ops", "Attr Ops", "Read Write")
BUFFER_SIZES = (0, 1024, 2048, 4096)

# Syscalls that resolve a pathname argument.
PATH_SYSCALLS = frozenset(
    {"open", "openat", "creat", "rename", "mkdir", "rmdir", "symlink",
     "unlink", "chmod", "stat", "fstatat"}
)
TRANSFER_SYSCALLS = frozenset({"read", "write"})
DIR_SYSCALLS = frozenset({"mkdir", "rmdir"})

BENCHMARKS: dict[str, tuple[tuple[str, ...], str]] = {
    "open": (("open", "close"), "File Ops"),
    "openat": (("openat", "close"), "File Ops"),
    "rename": (("rename",), "File Ops"),
    "creat": (("rename", "creat", "close"), "File Ops"),
    "mkdir": (("mkdir",), "Dir Ops"),
    "rmdir": (("rmdir",), "Dir Ops"),
    "unlink": (("open", "unlink", "close"), "Link Ops"),
    "symlink": (("symlink", "unlink"), "Link Ops"),
    "chmod": (("chmod",), "Attr Ops"),
    "stat": (("stat",), "Attr Ops"),
    "fstatat": (("fstatat",), "Attr Ops"),
    "read": (("open", "read", "close"), "Read Write"),
    "write": (("open", "write", "close"), "Read Write"),
    "copy": (("open", "open", "read", "write", "close", "close"), "Read Write"),
}

# Benchmarks reported as operations per second rather than latency.
THROUGHPUT_BENCHMARKS = frozenset({"mkdir", "rmdir", "read", "write", "copy"})


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class PathSpec:
    components: tuple[str, ...] = ()
    kind: str = "plain"
    missing_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.kind not in PATH_KINDS:
            raise ScenarioError(f"unknown path kind {self.kind!r}")
        if self.kind == "nonexistent":
            idx = len(self.components) - 1 if self.missing_index is None else self.missing_index
            if not 0 <= idx < max(len(self.components), 1):
                raise ScenarioError(f"missing_index {idx} outside the path")
            object.__setattr__(self, "missing_index", idx)
        elif self.missing_index is not None:
            raise ScenarioError("missing_index only applies to nonexistent paths")

    def depth(self) -> int:
        return len(self.components)

    def resolved_depth(self) -> int:
        """Components resolved before lookup stops."""
        if self.kind == "nonexistent":
            return self.missing_index
        return self.depth()

    @classmethod
    def parse(cls, text: str, kind: str = "plain") -> PathSpec:
        return cls(tuple(c for c in text.strip("/").split("/") if c), kind)

    def __str__(self):
        return "/".join(self.components)


def depth_path(depth: int, kind: str = "plain") -> PathSpec:
    """Synthetic path AA/BB/CC/... with ``depth`` components."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    names = []
    for i in range(depth):
        letter = chr(ord("A") + i % 26)
        names.append(letter * (2 + i // 26))
    return PathSpec(tuple(names), kind)


@dataclass(frozen=True)
class SyscallScenario:
    name: str
    syscall_sequence: tuple[str, ...]
    cls: str
    path: PathSpec = field(default_factory=PathSpec)
    buffer_size_bytes: int = 0
    repeat: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "syscall_sequence", tuple(self.syscall_sequence))
        object.__setattr__(self, "repeat", dict(self.repeat))
        for s in self.syscall_sequence:
            if s not in SYSCALLS:
                raise ScenarioError(f"{self.name}: unknown syscall {s!r}")
        if self.cls not in CLASSES:
            raise ScenarioError(f"{self.name}: unknown class {self.cls!r}")
        bench = BENCHMARKS.get(self.base_name)
        if bench is not None:
            if self.syscall_sequence != bench[0]:
                raise ScenarioError(
                    f"{self.name}: sequence {list(self.syscall_sequence)} does not "
                    f"match benchmark {self.base_name} {list(bench[0])}"
                )
            if self.cls != bench[1]:
                raise ScenarioError(f"{self.name}: class must be {bench[1]!r}")
        if self.cls == "Read Write" and self.buffer_size_bytes not in BUFFER_SIZES:
            raise ScenarioError(f"{self.name}: buffer size must be one of {BUFFER_SIZES}")
        if self.buffer_size_bytes < 0:
            raise ScenarioError(f"{self.name}: negative buffer size")
        if self.takes_path and self.path.depth() == 0:
            raise ScenarioError(f"{self.name}: path-taking scenario needs a nonempty path")
        for syscall, count in self.repeat.items():
            if syscall not in self.syscall_sequence or count < 1:
                raise ScenarioError(f"{self.name}: bad repeat entry {syscall}={count}")

    @property
    def base_name(self) -> str:
        return self.name.split(":", 1)[0]

    @property
    def takes_path(self) -> bool:
        return any(s in PATH_SYSCALLS for s in self.syscall_sequence)

    @property
    def is_throughput(self) -> bool:
        return self.base_name in THROUGHPUT_BENCHMARKS

    def expanded_sequence(self) -> list[str]:
        out = []
        for s in self.syscall_sequence:
            out.extend([s] * self.repeat.get(s, 1))
        return out

    def with_path(self, path: PathSpec, name: str | None = None) -> SyscallScenario:
        return replace(self, path=path, name=name or self.name)

    def with_depth(self, depth: int) -> SyscallScenario:
        return self.with_path(depth_path(depth), f"{self.base_name}:d{depth}")

    def to_dict(self) -> dict[str, Any]:
        path: dict[str, Any] = {"components": list(self.path.components), "kind": self.path.kind}
        if self.path.kind == "nonexistent":
            path["missing_index"] = self.path.missing_index
        doc = {
            "name": self.name,
            "class": self.cls,
            "syscalls": list(self.syscall_sequence),
            "path": path,
            "buffer_size": self.buffer_size_bytes,
        }
        if self.repeat:
            doc["repeat"] = dict(self.repeat)
        return doc


def scenario_from_dict(doc: Mapping[str, Any]) -> SyscallScenario:
    try:
        name = doc["name"]
        syscalls = doc["syscalls"]
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"scenario missing field: {exc}") from exc
    cls = doc.get("class")
    if cls is None:
        bench = BENCHMARKS.get(name.split(":", 1)[0])
        if bench is None:
            raise ScenarioError(f"{name}: class required for custom scenarios")
        cls = bench[1]
    raw_path = doc.get("path", {})
    if isinstance(raw_path, str):
        path = PathSpec.parse(raw_path)
    else:
        path = PathSpec(
            tuple(raw_path.get("components", ())),
            raw_path.get("kind", "plain"),
            raw_path.get("missing_index"),
        )
    return SyscallScenario(
        name=name,
        syscall_sequence=tuple(syscalls),
        cls=cls,
        path=path,
        buffer_size_bytes=int(doc.get("buffer_size", 0)),
        repeat=doc.get("repeat", {}),
    )


def load_scenarios(text: str) -> list[SyscallScenario]:
    """Parse a scenario file holding one scenario object or a list of them."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc
    docs = doc if isinstance(doc, list) else [doc]
    return [scenario_from_dict(d) for d in docs]


@lru_cache(maxsize=1)
def _catalog() -> dict[str, SyscallScenario]:
    text = resources.files("hookcost.data").joinpath("scenarios.json").read_text()
    return {s.name: s for s in load_scenarios(text)}


def catalog() -> dict[str, SyscallScenario]:
    """All bundled scenarios keyed by name."""
    return dict(_catalog())


def get_scenario(name_or_path: str) -> SyscallScenario:
    cat = _catalog()
    if name_or_path in cat:
        return cat[name_or_path]
    path = Path(name_or_path)
    if path.is_file():
        found = load_scenarios(path.read_text())
        if len(found) != 1:
            raise ScenarioError(f"{name_or_path}: expected exactly one scenario")
        return found[0]
    raise ScenarioError(f"unknown scenario {name_or_path!r}")


class TraceEntry(NamedTuple):
    syscall: str
    hook: str
    module: str
    cost_ns: float = 0.0
    is_authorization: bool = False


@dataclass(frozen=True)
class HookInvocationTrace:
    entries: tuple[TraceEntry, ...] = ()
    transfer_bytes: int = 0

    @property
    def authorization_count(self) -> int:
        return sum(1 for e in self.entries if e.is_authorization)

    @property
    def hooking_cost_ns(self) -> float:
        return sum(e.cost_ns for e in self.entries)

    def __len__(self):
        return len(self.entries)


def _module_firings(
    module: SecurityModuleSpec, syscall: str, path: PathSpec, *, lookup_failed: bool
) -> list[TraceEntry]:
    placed = module.placements_for(syscall)
    if not placed:
        return []
    walked = path.resolved_depth() if syscall in PATH_SYSCALLS else path.depth()
    out = []

    def fire(hook_id, times):
        hook = module.hooks[hook_id]
        entry = TraceEntry(syscall, hook_id, module.name,
                           module.hook_cost(hook_id), hook.is_authorization)
        out.extend([entry] * times)

    per_depth = [(h, f) for h, f in placed if f.per_depth]
    for _ in range(walked):
        for hook_id, formula in per_depth:
            fire(hook_id, formula.per_depth)
    if lookup_failed:
        return out
    if path.kind == "soft_link" and syscall in PATH_SYSCALLS:
        if any(h == "security_inode_permission" for h, _ in per_depth):
            fire("security_inode_permission", 1)
    for hook_id, formula in placed:
        if formula.constant:
            fire(hook_id, formula.constant)
    return out


def syscall_firings(
    syscall: str,
    path: PathSpec,
    stack: Sequence[SecurityModuleSpec],
    *,
    empty_dir_hooks: bool = False,
) -> list[TraceEntry]:
    """Hook firings of one syscall over ``path`` for every module in order."""
    if syscall not in SYSCALLS:
        raise ScenarioError(f"unknown syscall {syscall!r}")
    if empty_dir_hooks and syscall in DIR_SYSCALLS:
        return []
    failed = path.kind == "nonexistent" and syscall in PATH_SYSCALLS
    out = []
    for module in stack:
        out.extend(_module_firings(module, syscall, path, lookup_failed=failed))
    return out


def build_trace(
    scenario: SyscallScenario,
    stack: Sequence[SecurityModuleSpec],
    *,
    empty_dir_hooks: bool = False,
) -> HookInvocationTrace:
    entries: list[TraceEntry] = []
    transfers = 0
    for syscall in scenario.expanded_sequence():
        entries.extend(
            syscall_firings(syscall, scenario.path, stack, empty_dir_hooks=empty_dir_hooks)
        )
        if scenario.path.kind == "nonexistent" and syscall in PATH_SYSCALLS:
            # lookup failed; the rest of the benchmark never runs
            break
        if syscall in TRANSFER_SYSCALLS:
            transfers += scenario.buffer_size_bytes
    return HookInvocationTrace(tuple(entries), transfers)


def invocation_histogram(trace: HookInvocationTrace) -> dict[str, int]:
    return dict(Counter(e.hook for e in trace.entries))


def dominant_hook_share(histogram: Mapping[str, int]) -> tuple[str, float]:
    total = sum(histogram.values())
    if not histogram or total == 0:
        raise ValueError("histogram is empty")
    hook = min(histogram, key=lambda h: (-histogram[h], h))
    return hook, histogram[hook] / total


def category_share(
    trace: HookInvocationTrace,
    stack: Iterable[SecurityModuleSpec],
    categories: str | Iterable[str],
) -> float:
    """Fraction of firings whose hook belongs to one of ``categories``."""
    if isinstance(categories, str):
        categories = {categories}
    wanted = set(categories)
    by_name = {m.name: m for m in stack}
    if not trace.entries:
        raise ValueError("trace is empty")
    hits = sum(
        1 for e in trace.entries
        if by_name[e.module].hooks[e.hook].sso_category in wanted
    )
    return hits / len(trace.entries)
