import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hookcost.hooks import (
    AUTHORIZATION_HOOKS,
    BUNDLED_MODULES,
    FILE_ACCESS_CATEGORIES,
    CacheConfig,
    DescriptorError,
    HookPoint,
    PlacementFormula,
    bundled_module,
    eval_placement,
    hook_count_by_category,
    load_module_spec,
    resolve_modules,
)

# Per-category hook counts, transcribed cell by cell from the published per-module counts.
CATEGORIES = ("inode", "dentry", "file", "superblock", "mmap", "path", "bprm",
              "task", "proc", "ptrace", "cap", "seclabel", "cred", "audit")
COLUMNS = {
    "capability": (3, 0, 0, 0, 2, 0, 1, 5, 0, 2, 3, 0, 0, 0),
    "selinux": (31, 2, 10, 13, 2, 0, 3, 15, 2, 2, 3, 3, 3, 4),
    "apparmor": (1, 0, 7, 3, 1, 10, 3, 5, 0, 0, 2, 0, 4, 4),
    "smack": (22, 1, 8, 6, 2, 0, 1, 12, 2, 2, 0, 3, 5, 3),
    "tomoyo": (1, 0, 3, 3, 0, 11, 2, 2, 0, 0, 0, 0, 1, 0),
    "yama": (0, 0, 0, 0, 0, 0, 0, 2, 0, 2, 0, 0, 0, 0),
    "evm": (5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
    "ima": (2, 0, 3, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0),
}
EXPECTED_COUNTS = {m: dict(zip(CATEGORIES, col)) for m, col in COLUMNS.items()}
FILE_TOTALS = {"capability": 4, "selinux": 59, "apparmor": 24, "smack": 38,
               "tomoyo": 20, "yama": 0, "evm": 5, "ima": 6}
TOTALS = {"capability": 18, "selinux": 204, "apparmor": 68, "smack": 108,
          "tomoyo": 28, "yama": 4, "evm": 5, "ima": 7}


def doc(**over):
    d = {
        "name": "m",
        "hooks": [{"id": "security_inode_permission", "sso_category": "inode",
                   "is_authorization": True}],
        "placements": [{"syscall": "open", "hook": "security_inode_permission",
                        "per_depth": 1, "constant": 0}],
    }
    d.update(over)
    return json.dumps(d)


@pytest.mark.parametrize("name", sorted(EXPECTED_COUNTS))
def test_selected_category_cells(name):
    spec = bundled_module(name)
    for cat, n in EXPECTED_COUNTS[name].items():
        assert hook_count_by_category(spec, cat) == n, cat


@pytest.mark.parametrize("name", sorted(TOTALS))
def test_bundled_totals(name):
    assert len(bundled_module(name).hooks) == TOTALS[name]


@pytest.mark.parametrize("name", sorted(FILE_TOTALS))
def test_file_accessing_totals(name):
    spec = bundled_module(name)
    assert sum(hook_count_by_category(spec, c) for c in FILE_ACCESS_CATEGORIES) == FILE_TOTALS[name]


def test_tomoyo_path_hooks():
    assert hook_count_by_category(bundled_module("tomoyo"), "path") == 11


def test_unknown_category():
    with pytest.raises(ValueError):
        hook_count_by_category(bundled_module("selinux"), "sockets")


def test_empty_descriptor():
    spec = load_module_spec(json.dumps({"name": "empty"}))
    assert spec.placements == {}
    assert hook_count_by_category(spec, "inode") == 0


def test_placement_on_undeclared_hook():
    with pytest.raises(DescriptorError):
        load_module_spec(doc(hooks=[]))


def test_malformed_json():
    with pytest.raises(DescriptorError):
        load_module_spec("{nope")


def test_declared_counts_checked():
    with pytest.raises(DescriptorError):
        load_module_spec(doc(hook_counts_by_category={"inode": 2}))


def test_authorization_flag_must_match_interface():
    with pytest.raises(ValueError):
        HookPoint("security_inode_getattr", "inode", True)
    with pytest.raises(ValueError):
        HookPoint("security_file_permission", "file", False)


def test_eval_placement_examples():
    assert eval_placement(PlacementFormula(6, 0), 2) == 12
    assert eval_placement(PlacementFormula(0, 6), 5) == 6
    assert eval_placement(PlacementFormula(6, 0), 0) == 0
    with pytest.raises(ValueError):
        eval_placement(PlacementFormula(1, 0), -1)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 100), st.integers(0, 100))
def test_eval_placement_monotone(a, b, d1, d2):
    f = PlacementFormula(a, b)
    lo, hi = sorted((d1, d2))
    assert 0 <= f(lo) <= f(hi)
    assert f(lo) == a * lo + b


@pytest.mark.parametrize("name", BUNDLED_MODULES)
def test_bundled_descriptors_consistent(name):
    spec = bundled_module(name)
    for (_syscall, hook) in spec.placements:
        assert hook in spec.hooks
    for h in spec.hooks.values():
        assert h.is_authorization == (h.id in AUTHORIZATION_HOOKS)
    if spec.total_file_accessing is not None:
        file_total = sum(n for c, n in spec.hook_counts_by_category.items()
                         if c in FILE_ACCESS_CATEGORIES)
        assert file_total == spec.total_file_accessing


def test_selinux_cache_and_costs():
    spec = bundled_module("selinux")
    assert spec.cache == CacheConfig(max_entries=512)
    assert spec.placement("open", "security_inode_permission") == PlacementFormula(6, 0)
    assert spec.placement("openat", "security_file_open") == PlacementFormula(0, 6)


def test_cache_config_validation():
    with pytest.raises(ValueError):
        CacheConfig(max_entries=0)
    with pytest.raises(ValueError):
        CacheConfig(eviction="FIFO")


def test_resolve_aliases_and_paths(tmp_path):
    assert [m.name for m in resolve_modules("integrity")] == ["evm", "ima"]
    p = tmp_path / "m.json"
    p.write_text(doc())
    assert [m.name for m in resolve_modules(["selinux", str(p)])] == ["selinux", "m"]
    with pytest.raises(FileNotFoundError):
        resolve_modules("missing.json")
