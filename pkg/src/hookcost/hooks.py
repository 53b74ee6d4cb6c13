"""Security module descriptors: hook points, placements and per-hook costs.

A descriptor is a JSON document describing which hooks a module implements,
how many times each hook fires for a given syscall (as an affine function of
path depth), and what each firing costs.  Descriptors are immutable once
loaded and can be shared between concurrent scenario runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

SSO_CATEGORIES = (
    "inode",
    "dentry",
    "file",
    "superblock",
    "mmap",
    "path",
    "bprm",
    "task",
    "proc",
    "ptrace",
    "cap",
    "seclabel",
    "cred",
    "audit",
    "other",
)

# Categories counted as file accessing when validating declared totals.
FILE_ACCESS_CATEGORIES = frozenset(
    {"inode", "dentry", "file", "superblock", "path", "bprm"}
)

AUTHORIZATION_HOOKS = frozenset(
    {"security_inode_permission", "security_file_permission"}
)

SYSCALLS = (
    "open",
    "openat",
    "close",
    "creat",
    "rename",
    "sendfile",
    "read",
    "write",
    "mkdir",
    "rmdir",
    "symlink",
    "unlink",
    "chmod",
    "fchmod",
    "stat",
    "fstatat",
)

BUNDLED_MODULES = (
    "capability",
    "selinux",
    "apparmor",
    "smack",
    "tomoyo",
    "yama",
    "evm",
    "ima",
    "tunable",
)

# Names that expand to more than one bundled descriptor.
MODULE_ALIASES = {"integrity": ("evm", "ima")}


class DescriptorError(ValueError):
    """Raised for malformed or inconsistent module descriptors."""


@dataclass(frozen=True)
class HookPoint:
    id: str
    sso_category: str
    is_authorization: bool = False

    def __post_init__(self):
        if self.sso_category not in SSO_CATEGORIES:
            raise DescriptorError(
                f"hook {self.id!r}: unknown category {self.sso_category!r}"
            )
        if self.is_authorization != (self.id in AUTHORIZATION_HOOKS):
            raise DescriptorError(
                f"hook {self.id!r}: is_authorization must be "
                f"{self.id in AUTHORIZATION_HOOKS}"
            )


@dataclass(frozen=True)
class PlacementFormula:
    """Firings of one hook in one syscall: ``per_depth * depth + constant``."""

    per_depth: int = 0
    constant: int = 0

    def __post_init__(self):
        for name in ("per_depth", "constant"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise DescriptorError(
                    f"placement {name} must be a nonnegative integer, got {value!r}"
                )

    def __call__(self, depth: int) -> int:
        return eval_placement(self, depth)


def eval_placement(formula: PlacementFormula, depth: int) -> int:
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    return formula.per_depth * depth + formula.constant


@dataclass(frozen=True)
class CacheConfig:
    """Bounded LRU decision cache keyed by (subject label, object id, operation)."""

    max_entries: int = 512
    eviction: str = "LRU"
    cache_denials: bool = True

    def __post_init__(self):
        if isinstance(self.max_entries, bool) or not isinstance(self.max_entries, int):
            raise DescriptorError("cache max_entries must be an integer")
        if self.max_entries < 1:
            raise DescriptorError("cache max_entries must be positive")
        if self.eviction != "LRU":
            raise DescriptorError(f"unsupported eviction policy {self.eviction!r}")


@dataclass(frozen=True)
class SecurityModuleSpec:
    name: str
    hooks: Mapping[str, HookPoint] = field(default_factory=dict)
    placements: Mapping[tuple[str, str], PlacementFormula] = field(default_factory=dict)
    per_hook_cost: Mapping[str, float] = field(default_factory=dict)
    cache: CacheConfig | None = None
    hook_counts_by_category: Mapping[str, int] = field(default_factory=dict)
    total_file_accessing: int | None = None
    total_hooks: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hooks", MappingProxyType(dict(self.hooks)))
        object.__setattr__(self, "placements", MappingProxyType(dict(self.placements)))
        object.__setattr__(self, "per_hook_cost", MappingProxyType(dict(self.per_hook_cost)))
        object.__setattr__(
            self, "hook_counts_by_category",
            MappingProxyType(dict(self.hook_counts_by_category)),
        )
        self._validate()

    def _validate(self):
        for key, hook in self.hooks.items():
            if key != hook.id:
                raise DescriptorError(f"hook keyed {key!r} has id {hook.id!r}")
        for syscall, hook_id in self.placements:
            if syscall not in SYSCALLS:
                raise DescriptorError(f"{self.name}: unknown syscall {syscall!r}")
            if hook_id not in self.hooks:
                raise DescriptorError(
                    f"{self.name}: placement ({syscall}, {hook_id}) references "
                    "an undeclared hook"
                )
        for hook_id, cost in self.per_hook_cost.items():
            if hook_id not in self.hooks:
                raise DescriptorError(f"{self.name}: cost given for undeclared hook {hook_id!r}")
            if cost < 0:
                raise DescriptorError(f"{self.name}: negative cost for {hook_id!r}")
        for category, declared in self.hook_counts_by_category.items():
            actual = hook_count_by_category(self, category)
            if actual != declared:
                raise DescriptorError(
                    f"{self.name}: declares {declared} {category} hooks, has {actual}"
                )
        if self.total_file_accessing is not None:
            declared = sum(
                n for c, n in self.hook_counts_by_category.items()
                if c in FILE_ACCESS_CATEGORIES
            )
            actual = sum(
                1 for h in self.hooks.values() if h.sso_category in FILE_ACCESS_CATEGORIES
            )
            if declared != self.total_file_accessing or actual != self.total_file_accessing:
                raise DescriptorError(
                    f"{self.name}: file-accessing total {self.total_file_accessing} "
                    f"inconsistent with category counts ({declared} declared, {actual} actual)"
                )
        if self.total_hooks is not None and self.total_hooks != len(self.hooks):
            raise DescriptorError(
                f"{self.name}: declares {self.total_hooks} hooks, has {len(self.hooks)}"
            )

    def placement(self, syscall: str, hook_id: str) -> PlacementFormula | None:
        return self.placements.get((syscall, hook_id))

    def placements_for(self, syscall: str) -> list[tuple[str, PlacementFormula]]:
        """(hook id, formula) pairs for ``syscall`` in hook declaration order."""
        return [
            (hook_id, self.placements[(syscall, hook_id)])
            for hook_id in self.hooks
            if (syscall, hook_id) in self.placements
        ]

    def hook_cost(self, hook_id: str) -> float:
        return self.per_hook_cost.get(hook_id, 0.0)


def hook_count_by_category(spec: SecurityModuleSpec, category: str) -> int:
    if category not in SSO_CATEGORIES:
        raise ValueError(f"unknown SSO category {category!r}")
    return sum(1 for h in spec.hooks.values() if h.sso_category == category)


def _require(doc: Mapping[str, Any], key: str, kind, where: str):
    if key not in doc:
        raise DescriptorError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise DescriptorError(f"{where}: field {key!r} has wrong type")
    return value


def module_spec_from_dict(doc: Mapping[str, Any]) -> SecurityModuleSpec:
    if not isinstance(doc, Mapping):
        raise DescriptorError("descriptor must be a JSON object")
    name = _require(doc, "name", str, "descriptor")
    hooks: dict[str, HookPoint] = {}
    for i, raw in enumerate(doc.get("hooks", [])):
        where = f"{name}: hooks[{i}]"
        if not isinstance(raw, Mapping):
            raise DescriptorError(f"{where}: expected an object")
        hook_id = _require(raw, "id", str, where)
        if hook_id in hooks:
            raise DescriptorError(f"{name}: duplicate hook id {hook_id!r}")
        hooks[hook_id] = HookPoint(
            id=hook_id,
            sso_category=_require(raw, "sso_category", str, where),
            is_authorization=raw.get("is_authorization", hook_id in AUTHORIZATION_HOOKS),
        )

    placements: dict[tuple[str, str], PlacementFormula] = {}
    for i, raw in enumerate(doc.get("placements", [])):
        where = f"{name}: placements[{i}]"
        if not isinstance(raw, Mapping):
            raise DescriptorError(f"{where}: expected an object")
        key = (_require(raw, "syscall", str, where), _require(raw, "hook", str, where))
        if key in placements:
            raise DescriptorError(f"{name}: duplicate placement {key}")
        placements[key] = PlacementFormula(raw.get("per_depth", 0), raw.get("constant", 0))

    default_cost = float(doc.get("default_hook_cost_ns", 0.0))
    explicit = doc.get("per_hook_cost_ns", {})
    if not isinstance(explicit, Mapping):
        raise DescriptorError(f"{name}: per_hook_cost_ns must be an object")
    costs = {hook_id: default_cost for hook_id in hooks}
    costs.update({k: float(v) for k, v in explicit.items()})

    cache = None
    if doc.get("cache") is not None:
        raw = doc["cache"]
        if not isinstance(raw, Mapping):
            raise DescriptorError(f"{name}: cache must be an object")
        cache = CacheConfig(
            max_entries=raw.get("max_entries", 512),
            eviction=raw.get("eviction", "LRU"),
            cache_denials=raw.get("cache_denials", True),
        )

    counts = doc.get("hook_counts_by_category", {})
    for category in counts:
        if category not in SSO_CATEGORIES:
            raise DescriptorError(f"{name}: unknown category {category!r} in counts")

    return SecurityModuleSpec(
        name=name,
        hooks=hooks,
        placements=placements,
        per_hook_cost=costs,
        cache=cache,
        hook_counts_by_category=counts,
        total_file_accessing=doc.get("total_file_accessing"),
        total_hooks=doc.get("total_hooks"),
    )


def load_module_spec(descriptor_document: str | bytes) -> SecurityModuleSpec:
    """Parse and validate a descriptor given as JSON text."""
    try:
        doc = json.loads(descriptor_document)
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"malformed descriptor: {exc}") from exc
    return module_spec_from_dict(doc)


def load_module_file(path: str | Path) -> SecurityModuleSpec:
    return load_module_spec(Path(path).read_text())


def bundled_module(name: str) -> SecurityModuleSpec:
    if name not in BUNDLED_MODULES:
        raise KeyError(f"no bundled module named {name!r}")
    text = resources.files("hookcost.data.modules").joinpath(f"{name}.json").read_text()
    return load_module_spec(text)


def resolve_modules(names: str | list[str]) -> list[SecurityModuleSpec]:
    """Resolve bundled names, aliases or descriptor paths into a module stack."""
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    stack = []
    for raw in names:
        item = raw.strip()
        if item in MODULE_ALIASES:
            stack.extend(bundled_module(n) for n in MODULE_ALIASES[item])
        elif item in BUNDLED_MODULES:
            stack.append(bundled_module(item))
        else:
            path = Path(item)
            if not path.is_file():
                raise FileNotFoundError(f"module descriptor not found: {item}")
            stack.append(load_module_file(path))
    return stack
