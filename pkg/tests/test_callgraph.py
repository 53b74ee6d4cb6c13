import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hookcost import callgraph as cg
from hookcost.hooks import BUNDLED_MODULES, SYSCALLS, PlacementFormula, bundled_module
from hookcost.syscalls import HookInvocationTrace, TraceEntry, depth_path, syscall_firings

TOY = """
node main
node foo1
node foo2
node fun
call main -> foo1, foo2
call foo1 -> fun
"""


def call_set(g):
    return {(a, b) for a, cs in g.call_edges.items() for b in cs}


def test_parse_toy():
    g = cg.parse_callgraph(TOY)
    assert call_set(g) == {("main", "foo1"), ("main", "foo2"), ("foo1", "fun")}
    assert g.call_edges["main"] == ("foo1", "foo2")


def test_toy_augmentation():
    g = cg.augment_sequence_edges(cg.parse_callgraph(TOY))
    assert g.seq_edges == {("foo1", "foo2")}
    assert g.edges() == {("main", "foo1"), ("main", "foo2"), ("foo1", "fun"), ("foo1", "foo2")}
    assert cg.augment_sequence_edges(cg.bundled_callgraph("toy")).edges() == g.edges()


def test_single_node_and_errors():
    g = cg.parse_callgraph("node solo  # alone\n")
    assert g.nodes == ("solo",) and g.edges() == set()
    with pytest.raises(cg.GraphError):
        cg.parse_callgraph("node a\ncall a -> b\n")
    with pytest.raises(cg.GraphError):
        cg.parse_callgraph("node a\nfrobnicate a\n")
    with pytest.raises(cg.GraphError):
        cg.parse_callgraph("node a [per_depth=1]\n")
    with pytest.raises(cg.GraphError):
        cg.parse_callgraph("node a\nnode a\n")


def test_annotation_forms():
    g = cg.parse_callgraph("node a hook=h per_depth=2 const=1\nnode b [hook=k]\n")
    assert g.hook_annotations["a"] == cg.Annotation("h", PlacementFormula(2, 1))
    assert g.hook_annotations["b"] == cg.Annotation("k", PlacementFormula(0, 0))


def test_adjacent_only():
    g = cg.augment_sequence_edges(cg.parse_callgraph(
        "node main\nnode a\nnode b\nnode c\ncall main -> a, b, c\n"))
    assert g.seq_edges == {("a", "b"), ("b", "c")}
    assert "c" in g.reachable("a")
    one = cg.augment_sequence_edges(cg.parse_callgraph("node m\nnode a\ncall m -> a\n"))
    assert one.seq_edges == frozenset()


def test_selinux_open_depth2():
    g = cg.augment_sequence_edges(cg.bundled_callgraph("selinux"))
    r = cg.count_hooks_worst_case(g, "sys_open", 2)
    assert r.counts["security_inode_permission"] == 12
    assert r.total == sum(r.counts.values())


def test_no_annotations_and_unknown_entry():
    g = cg.parse_callgraph(TOY)
    r = cg.count_hooks_worst_case(g, "main", 3)
    assert r.counts == {} and r.total == 0
    with pytest.raises(cg.GraphError):
        cg.count_hooks_worst_case(g, "nope", 1)


def test_cycle_counted_once():
    g = cg.parse_callgraph("node a\nnode b hook=h const=1\ncall a -> b\ncall b -> a\n")
    assert cg.count_hooks_worst_case(cg.augment_sequence_edges(g), "a", 5).counts == {"h": 1}


def test_compare_examples():
    report = cg.HookCountReport("sys_x", 1, {"h": 4})
    entry = TraceEntry("x", "h", "m")
    bad = cg.compare_static_dynamic(report, HookInvocationTrace((entry,) * 5))
    assert not bad.consistent and bad.status == "dynamic_exceeds_static"
    assert bad.offending == {"h": (5, 4)}
    assert cg.compare_static_dynamic(report, HookInvocationTrace()).consistent


def test_tunable_open_consistent():
    g = cg.augment_sequence_edges(cg.bundled_callgraph("tunable"))
    trace = HookInvocationTrace(tuple(syscall_firings("open", depth_path(1), [bundled_module("tunable")])))
    assert cg.compare_static_dynamic(cg.count_hooks_worst_case(g, "sys_open", 1), trace).consistent


@pytest.mark.parametrize("module", BUNDLED_MODULES)
def test_static_bounds_dynamic(module):
    spec = bundled_module(module)
    g = cg.augment_sequence_edges(cg.bundled_callgraph(module))
    for s in SYSCALLS:
        for d in range(9):
            report = cg.count_hooks_worst_case(g, cg.entry_node(s), d)
            for kind in ("plain", "hard_link", "nonexistent"):
                if kind == "nonexistent" and d == 0:
                    continue
                trace = HookInvocationTrace(tuple(syscall_firings(s, depth_path(d, kind), [spec])))
                assert cg.compare_static_dynamic(report, trace).consistent, (s, d, kind)
            # the link target is one more component to walk
            if d:
                link = HookInvocationTrace(tuple(syscall_firings(s, depth_path(d, "soft_link"), [spec])))
                deeper = cg.count_hooks_worst_case(g, cg.entry_node(s), d + 1)
                assert cg.compare_static_dynamic(deeper, link).consistent, (s, d, "soft_link")


@pytest.mark.parametrize("module", BUNDLED_MODULES)
def test_bundled_graphs_match_descriptors(module):
    generated = cg.module_callgraph(bundled_module(module))
    bundled = cg.bundled_callgraph(module)
    assert bundled.nodes == generated.nodes
    assert dict(bundled.call_edges) == dict(generated.call_edges)
    assert dict(bundled.hook_annotations) == dict(generated.hook_annotations)


# worst-case counts at depth 1 and 2, as (module, syscall, hook) -> formula
PUBLISHED = {
    ("selinux", "open", "security_inode_permission"): PlacementFormula(6, 0),
    ("selinux", "openat", "security_inode_permission"): PlacementFormula(0, 6),
    ("smack", "open", "security_file_open"): PlacementFormula(6, 0),
    ("apparmor", "open", "security_file_open"): PlacementFormula(6, 0),
    ("selinux", "sendfile", "security_inode_permission"): PlacementFormula(0, 5),
    ("selinux", "rename", "security_inode_rename"): PlacementFormula(0, 2),
    ("tomoyo", "mkdir", "security_path_mkdir"): PlacementFormula(1, 0),
    ("smack", "chmod", "security_inode_setattr"): PlacementFormula(0, 1),
}


@pytest.mark.parametrize("key", sorted(PUBLISHED))
def test_published_placement_cells(key):
    module, syscall, hook = key
    g = cg.augment_sequence_edges(cg.bundled_callgraph(module))
    for d in (1, 2, 5):
        r = cg.count_hooks_worst_case(g, cg.entry_node(syscall), d)
        assert r.counts.get(hook, 0) == PUBLISHED[key](d)


def test_close_has_no_hooks():
    for m in ("selinux", "apparmor", "smack", "tomoyo"):
        g = cg.bundled_callgraph(m)
        assert cg.count_hooks_worst_case(g, "sys_close", 4).total == 0


def test_min_hooks_below_max():
    g = cg.augment_sequence_edges(cg.bundled_callgraph("selinux"))
    for s in ("open", "creat", "stat"):
        for d in range(1, 9):
            assert cg.MIN_HOOKS[s](d) <= cg.count_hooks_worst_case(g, cg.entry_node(s), d).total


def test_report_csv_round_trip():
    g = cg.augment_sequence_edges(cg.bundled_callgraph("selinux"))
    reports = [cg.count_hooks_worst_case(g, "sys_open", d) for d in (1, 2)]
    assert cg.read_report_csv(cg.report_csv(reports)) == reports


def test_format_parse_round_trip():
    g = cg.bundled_callgraph("smack")
    again = cg.parse_callgraph(cg.format_callgraph(g))
    assert again == g


@st.composite
def dags(draw):
    n = draw(st.integers(1, 12))
    names = [f"f{i}" for i in range(n)]
    calls = {}
    for i in range(n):
        later = names[i + 1:]
        if later:
            callees = draw(st.lists(st.sampled_from(later), max_size=5))
            if callees:
                calls[names[i]] = tuple(callees)
    text = "\n".join(f"node {x}" for x in names)
    text += "\n" + "\n".join(f"call {a} -> {', '.join(cs)}" for a, cs in calls.items())
    return cg.parse_callgraph(text)


@settings(max_examples=100)
@given(dags())
def test_augmentation_idempotent_and_monotone(g):
    once = cg.augment_sequence_edges(g)
    assert cg.augment_sequence_edges(once) == once
    assert g.edges() <= once.edges()
    for n in g.nodes:
        assert g.reachable(n) <= once.reachable(n)
    for a, b in once.seq_edges:
        assert any(
            (a, b) in zip(cs, cs[1:]) for cs in g.call_edges.values()
        )
