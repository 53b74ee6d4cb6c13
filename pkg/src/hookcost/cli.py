"""hookcost command line: sweeps, stacking, call-graph analysis, reports.

Exit codes: 0 success, 1 bad configuration or input, 2 internal error,
3 static/dynamic inconsistency found by ``cga --trace``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

from hookcost import __version__
from hookcost import callgraph as cg
from hookcost.hooks import (
    BUNDLED_MODULES,
    SSO_CATEGORIES,
    CacheConfig,
    DescriptorError,
    bundled_module,
    hook_count_by_category,
    resolve_modules,
)
from hookcost.latency import (
    NOISE_MODE_STDDEV_NS,
    LatencyModel,
    SweepConfig,
    SweepError,
    read_sweep_csv,
    run_sweep,
    sweep_csv,
)
from hookcost.regression import RegressionError, regression_rate, slope_report
from hookcost.stacking import (
    StackError,
    all_orders,
    cached_reevaluate,
    load_requests,
    load_rules,
    requests_for,
)
from hookcost.syscalls import (
    BENCHMARKS,
    PATH_SYSCALLS,
    THROUGHPUT_BENCHMARKS,
    HookInvocationTrace,
    ScenarioError,
    build_trace,
    catalog,
    get_scenario,
)

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL, EXIT_INCONSISTENT = 0, 1, 2, 3
CONFIG_ERRORS = (ValueError, KeyError, OSError, DescriptorError, ScenarioError,
                 StackError, cg.GraphError, RegressionError, SweepError)


class ConfigError(ValueError):
    pass


class Outputs:
    """Files produced by one command, held in memory until the run succeeds."""

    def __init__(self, command: str, args: dict, seed: int | None):
        self.command = command
        self.args = args
        self.seed = seed
        self.inputs: list[str] = []
        self.files: dict[str, str] = {}

    def add(self, relpath: str, text: str):
        if relpath in self.files or relpath == "manifest.json":
            raise RuntimeError(f"output {relpath} produced twice")
        self.files[relpath] = text

    def input(self, ref: str):
        if ref not in self.inputs:
            self.inputs.append(ref)

    def manifest(self) -> str:
        doc = {
            "command": self.command,
            "arguments": self.args,
            "inputs": self.inputs,
            "rng_seed": self.seed,
            "output_dir": ".",
            "tool_version": __version__,
            "files": sorted(self.files),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def commit(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        for rel, text in [*sorted(self.files.items()), ("manifest.json", self.manifest())]:
            _atomic_write(out_dir / rel, text)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x: float) -> str:
    return repr(float(x))


def safe_name(scenario: str) -> str:
    return scenario.replace(":", "_").replace("/", "_")


# -- argument syntax --------------------------------------------------------

def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included when on the grid) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"bad grid {text!r}: need step > 0 and stop >= start")
            n = int((stop - start) / step + 1e-9)
            return tuple(start + i * step for i in range(n + 1))
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}") from exc


def parse_depths(text: str) -> list[int]:
    """``4``, ``1,2,4,8`` or an inclusive range ``1..8``."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
            out = list(range(lo, hi + 1))
        else:
            out = [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad depth spec {text!r}") from exc
    if not out or min(out) < 0:
        raise ConfigError(f"bad depth spec {text!r}")
    return out


def parse_assignments(items, what: str) -> dict[str, int]:
    out = {}
    for item in items or ():
        name, sep, val = item.partition("=")
        try:
            out[name] = int(val)
        except ValueError:
            sep = ""
        if not sep:
            raise ConfigError(f"bad {what} {item!r}; expected MODULE=N")
    return out


def _split(text: str | None) -> list[str]:
    return [p.strip() for p in (text or "").split(",") if p.strip()]


def _modules(args, outputs: Outputs, default: str = "tunable"):
    names = _split(args.modules) or [default]
    for n in names:
        outputs.input(f"bundled:{n}" if n in BUNDLED_MODULES or n == "integrity" else n)
    return resolve_modules(names)


def _scenario_ref(name: str) -> str:
    return f"bundled:{name}" if name in catalog() or name in BENCHMARKS else name


# -- sweep ------------------------------------------------------------------

def _sweep_config(args) -> SweepConfig:
    noise = NOISE_MODE_STDDEV_NS if args.noise_mode else args.noise
    return SweepConfig(delays_us=parse_grid(args.grid), repetitions=args.reps,
                       warmup_repetitions=args.warmup, noise_stddev_ns=noise,
                       rng_seed=args.seed, keep_samples=args.raw)


def _model(args) -> LatencyModel:
    return LatencyModel(args.constant_ns, args.hook_unit_ns, args.per_byte_ns)


def sweep_outputs(out: Outputs, results, prefix: str = "", raw: bool = False, quiet=True):
    out.add(f"{prefix}sweep.csv", sweep_csv(results))
    if raw:
        out.add(f"{prefix}sweep_raw.csv", sweep_csv(results, raw=True))
    fittable = [r for r in results if len(r.points) >= 3]
    fits = {}
    try:
        fits = slope_report(fittable)
    except RegressionError:
        # a degenerate sweep (e.g. flat latency); fit the rest individually
        for r in fittable:
            try:
                fits.update(slope_report([r]))
            except RegressionError as exc:
                print(f"hookcost: warning: no fit for {r.scenario}: {exc}", file=sys.stderr)
    out.add(f"{prefix}fits.csv", _csv(
        ("scenario", "slope", "intercept", "r_squared"),
        [(f.scenario, _num(f.slope), _num(f.intercept), _num(f.r_squared)) for f in fits.values()],
    ))
    thr = [r for r in results if r.is_throughput]
    if thr:
        out.add(f"{prefix}throughput.csv", _csv(
            ("scenario", "delay_us", "ops_per_sec"),
            [(r.scenario, _num(p.delay_us), _num(p.ops_per_sec)) for r in thr for p in r.points],
        ))
    for r in results:
        lines = "".join(f"{_num(p.delay_us)} {_num(p.mean_ns)}\n" for p in r.points)
        out.add(f"{prefix}plot/{safe_name(r.scenario)}.dat", lines)
    if not quiet:
        for f in fits.values():
            print(f"{f.scenario:<16} slope {f.slope:10.4f}  R^2 {f.r_squared:.6f}")
    return fits


def cmd_sweep(args, out: Outputs) -> int:
    stack = _modules(args, out)
    names = [n for s in args.scenario for n in _split(s)]
    if not names:
        raise ConfigError("no scenario given")
    depths = parse_depths(args.depth) if args.depth else None
    scenarios = []
    for name in names:
        sc = get_scenario(name)
        out.input(_scenario_ref(name))
        if depths is None:
            scenarios.append(sc)
        elif not sc.takes_path:
            raise ConfigError(f"scenario {sc.name} takes no path; --depth does not apply")
        else:
            scenarios.extend(sc.with_depth(d) for d in depths)
    config = _sweep_config(args)
    model = _model(args)
    results = [run_sweep(sc, stack, model, config) for sc in scenarios]
    sweep_outputs(out, results, raw=args.raw, quiet=args.quiet)
    return EXIT_OK


# -- stack ------------------------------------------------------------------

def _load_rules(args, out: Outputs):
    if args.rules:
        out.input(args.rules)
        return load_rules(Path(args.rules).read_text())
    out.input("bundled:three_module")
    return load_rules(resources.files("hookcost.data").joinpath("rules/three_module.json").read_text())


def cmd_stack(args, out: Outputs) -> int:
    rules = _load_rules(args, out)
    if args.requests:
        out.input(args.requests)
        requests = load_requests(Path(args.requests).read_text())
    else:
        requests = requests_for(_split(args.objects) or ["1", "2", "3", "4"])
    caches = {m: CacheConfig(max_entries=n) for m, n in parse_assignments(args.cache, "cache").items()}
    costs = parse_assignments(args.cost, "cost")
    module_set = _split(args.modules) or list(rules)

    orders = [tuple(_split(o)) for o in args.order or ()]
    if not orders and not args.all_orders:
        orders = [tuple(module_set)]
    reports = [cached_reevaluate(requests, args.passes, o, rules, caches, costs) for o in orders]
    if args.all_orders:
        ranked = all_orders(requests, module_set, rules, caches, costs)
        out.add("orders.csv", _csv(
            ("order", "total_cost", *(f"checks_{m}" for m in module_set)),
            [(">".join(r.stack), r.total_cost_units, *(r.checks_per_module[m] for m in module_set))
             for r in ranked],
        ))
        if not args.quiet:
            best = ranked[0]
            print(f"cheapest order {','.join(best.stack)}: total {best.total_cost_units}")
        reports = reports or ranked

    rows, decisions = [], []
    for r in reports:
        order = ">".join(r.stack)
        for pass_no, p in enumerate(r.passes, 1):
            for m, checks, hits in p.rows():
                rows.append((order, pass_no, m, checks, hits, p.total_cost_units))
        for obj, d in r.decisions.items():
            decisions.append((order, obj, int(d.granted), d.denied_by or ""))
        if not args.quiet and not args.all_orders:
            counts = " ".join(f"{m}={c}" for m, c, _ in r.rows())
            print(f"{','.join(r.stack)}: checks {counts}  total {r.total_cost_units}"
                  f"  granted {sorted(r.granted)}")
    out.add("stack.csv", _csv(("order", "pass", "module", "checks", "cache_hits", "pass_cost"), rows))
    out.add("decisions.csv", _csv(("order", "object", "granted", "denied_by"), decisions))
    return EXIT_OK


# -- cga --------------------------------------------------------------------

def _graph(args, out: Outputs):
    if args.graph:
        out.input(f"bundled:{args.graph}" if args.graph in cg.bundled_callgraph_names() else args.graph)
        return cg.load_callgraph(args.graph)
    specs = _modules(args, out)
    if len(specs) != 1:
        raise ConfigError("without --graph, give exactly one module to derive the graph from")
    return cg.module_callgraph(specs[0])


def _entries(args, g) -> list[str]:
    if args.entry:
        return _split(args.entry)
    if args.syscall:
        return [cg.entry_node(s) for s in _split(args.syscall)]
    entries = [n for n in g.nodes if n.startswith("sys_")]
    return entries or [g.nodes[0]]


def cmd_cga(args, out: Outputs) -> int:
    g = cg.augment_sequence_edges(_graph(args, out))
    if not g.nodes:
        raise ConfigError("graph has no nodes")
    depths = parse_depths(args.depth) if args.depth else [1]
    entries = _entries(args, g)
    reports = [cg.count_hooks_worst_case(g, e, d) for e in entries for d in depths]
    out.add("counts.csv", cg.report_csv(reports))

    if args.show_edges:
        calls = {(a, b) for a, cs in g.call_edges.items() for b in cs}
        edges = sorted(g.edges())
        out.add("edges.csv", _csv(("src", "dst", "kind"),
                                  [(a, b, "call" if (a, b) in calls else "seq") for a, b in edges]))
        if not args.quiet:
            for a, b in edges:
                print(f"{a} -> {b}")

    status = EXIT_OK
    if args.trace:
        stack = _modules(args, out)
        scenario = get_scenario(args.trace)
        out.input(_scenario_ref(args.trace))
        rows = []
        for r in reports:
            sc = scenario.with_depth(r.depth) if scenario.takes_path else scenario
            trace = build_trace(sc, stack)
            if r.entry.startswith("sys_"):
                syscall = r.entry[4:]
                trace = HookInvocationTrace(tuple(e for e in trace.entries if e.syscall == syscall))
            verdict = cg.compare_static_dynamic(r, trace)
            detail = ";".join(f"{h}:{d}>{s}" for h, (d, s) in verdict.offending.items())
            rows.append((r.entry, r.depth, sc.name, verdict.status, detail))
            if not verdict.consistent:
                status = EXIT_INCONSISTENT
                print(f"hookcost: {r.entry} depth {r.depth}: dynamic exceeds static: {detail}",
                      file=sys.stderr)
        out.add("verdict.csv", _csv(("entry", "depth", "scenario", "verdict", "details"), rows))
    if not args.quiet:
        for r in reports:
            print(f"{r.entry} depth {r.depth}: total {r.total}  {dict(r.counts)}")
    return status


# -- report -----------------------------------------------------------------

def _base(scenario: str) -> str:
    return scenario.split(":", 1)[0]


def regression_table(baseline, target, metric: str = "auto"):
    base = {r.scenario: r for r in baseline}
    tgt = {r.scenario: r for r in target}
    missing = sorted(set(tgt) - set(base))
    extra = sorted(set(base) - set(tgt))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing from baseline: {', '.join(missing)}")
        if extra:
            parts.append(f"missing from target: {', '.join(extra)}")
        raise ConfigError("scenario sets differ; " + "; ".join(parts))
    rows = []
    for name in sorted(tgt):
        kind = metric
        if kind == "auto":
            kind = "throughput" if _base(name) in THROUGHPUT_BENCHMARKS else "latency"
        bpts = {p.delay_us: p for p in base[name].points}
        for tp in tgt[name].points:
            bp = bpts.get(tp.delay_us)
            if bp is None:
                if len(bpts) != 1:
                    raise ConfigError(f"{name}: baseline has no point at delay {tp.delay_us}")
                bp = next(iter(bpts.values()))
            if kind == "throughput":
                rr = regression_rate(tp.ops_per_sec, bp.ops_per_sec, kind)
            else:
                rr = regression_rate(tp.mean_ns, bp.mean_ns, kind)
            rows.append((name, _num(tp.delay_us), kind, _num(rr.baseline), _num(rr.target), _num(rr.rate)))
    return rows


def cmd_report(args, out: Outputs) -> int:
    out.input(args.baseline)
    out.input(args.target)
    baseline = read_sweep_csv(Path(args.baseline).read_text())
    target = read_sweep_csv(Path(args.target).read_text())
    rows = regression_table(baseline, target, args.metric)
    out.add("regression.csv", _csv(("scenario", "delay_us", "metric", "baseline", "target", "rate"), rows))
    if not args.quiet:
        for name, delay, kind, _, _, rate in rows:
            print(f"{name:<16} {kind:<10} delay {float(delay):6.1f} us  rate {float(rate):+.4f}")
    return EXIT_OK


# -- reproduce --------------------------------------------------------------

SLOPE_DEPTHS = (1, 2, 4, 8)
PLACEMENT_MODULES = ("selinux", "apparmor", "smack", "tomoyo")
CATEGORY_MODULES = ("capability", "selinux", "apparmor", "smack", "tomoyo", "yama", "evm", "ima")


def recipe_depth_slopes(out: Outputs, seed: int):
    stack = resolve_modules(["tunable"])
    scenarios = [get_scenario(b).with_depth(d) for d in SLOPE_DEPTHS for b in ("open", "stat")]
    exact = sweep_outputs(out, [run_sweep(sc, stack) for sc in scenarios], "depth_slopes/exact/")
    noisy_cfg = SweepConfig(noise_stddev_ns=NOISE_MODE_STDDEV_NS, rng_seed=seed)
    noisy = sweep_outputs(out, [run_sweep(sc, stack, sweep=noisy_cfg) for sc in scenarios],
                          "depth_slopes/noise/")
    rows = []
    for d in SLOPE_DEPTHS:
        row = [d]
        for b in ("open", "stat"):
            name = f"{b}:d{d}"
            row += [_num(exact[name].slope), _num(noisy[name].slope), _num(noisy[name].r_squared)]
        rows.append(row)
    out.add("depth_slopes/depth_slopes.csv", _csv(
        ("depth", "open_slope", "open_slope_noise", "open_r2_noise",
         "stat_slope", "stat_slope_noise", "stat_r2_noise"), rows))


def recipe_benchmark_slopes(out: Outputs, seed: int):
    stack = resolve_modules(["tunable"])
    config = SweepConfig(noise_stddev_ns=NOISE_MODE_STDDEV_NS, rng_seed=seed)
    results = [run_sweep(get_scenario(b), stack, sweep=config) for b in BENCHMARKS]
    sweep_outputs(out, results, "benchmark_slopes/")


def recipe_stacking(out: Outputs):
    rules = load_rules(resources.files("hookcost.data").joinpath("rules/three_module.json").read_text())
    requests = requests_for(["1", "2", "3", "4"])
    ranked = all_orders(requests, list(rules), rules)
    out.add("stacking/orders.csv", _csv(
        ("order", "total_cost", "checks_A", "checks_B", "checks_C", "granted"),
        [(">".join(r.stack), r.total_cost_units, *(r.checks_per_module[m] for m in "ABC"),
          " ".join(sorted(r.granted))) for r in ranked]))


def recipe_toy_graph(out: Outputs):
    g = cg.augment_sequence_edges(cg.bundled_callgraph("toy"))
    calls = {(a, b) for a, cs in g.call_edges.items() for b in cs}
    out.add("toy_graph/edges.csv", _csv(("src", "dst", "kind"),
                                  [(a, b, "call" if (a, b) in calls else "seq") for a, b in sorted(g.edges())]))


def recipe_category_counts(out: Outputs):
    rows = []
    for name in CATEGORY_MODULES:
        spec = bundled_module(name)
        rows.append([name, *(hook_count_by_category(spec, c) for c in SSO_CATEGORIES),
                     spec.total_file_accessing, spec.total_hooks])
    out.add("category_counts/counts.csv", _csv(("module", *SSO_CATEGORIES, "file_accessing", "total"), rows))


def recipe_placement_counts(out: Outputs):
    rows = []
    for name in PLACEMENT_MODULES:
        g = cg.augment_sequence_edges(cg.bundled_callgraph(name))
        for s in PATH_SYSCALLS | {"sendfile", "read", "write", "fchmod", "close"}:
            for d in SLOPE_DEPTHS:
                r = cg.count_hooks_worst_case(g, cg.entry_node(s), d)
                rows.append((name, s, d, r.total, cg.eval_placement(cg.MIN_HOOKS[s], d)))
    rows.sort()
    out.add("placement_counts/static_counts.csv", _csv(("module", "syscall", "depth", "max_hooks", "min_hooks"), rows))


def cmd_reproduce(args, out: Outputs) -> int:
    for ref in ("bundled:tunable", "bundled:three_module", "bundled:toy", *(f"bundled:{m}" for m in CATEGORY_MODULES)):
        out.input(ref)
    recipe_depth_slopes(out, args.seed)
    recipe_benchmark_slopes(out, args.seed)
    recipe_stacking(out)
    recipe_toy_graph(out)
    recipe_category_counts(out)
    recipe_placement_counts(out)
    if not args.quiet:
        print(f"wrote {len(out.files)} files")
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--modules", help="comma-separated module names or descriptor files")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")

    p = argparse.ArgumentParser(prog="hookcost", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hookcost {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", parents=[common], help="delay sweep and slope fits")
    s.add_argument("--scenario", action="append", default=[], help="scenario name or JSON file; repeatable")
    s.add_argument("--depth", help="path depths: 4, 1,2,4 or 1..8")
    s.add_argument("--grid", default="0:110:10", help="delay grid in us, start:stop:step (default 0:110:10)")
    s.add_argument("--reps", type=int, default=300)
    s.add_argument("--warmup", type=int, help="discarded iterations (default 1000 for throughput tests, else 0)")
    s.add_argument("--noise", type=float, default=0.0, help="noise stddev in ns (default 0)")
    s.add_argument("--noise-mode", action="store_true", help=f"use {NOISE_MODE_STDDEV_NS:g} ns noise")
    s.add_argument("--constant-ns", type=float, default=LatencyModel.constant_cost_ns)
    s.add_argument("--hook-unit-ns", type=float, default=LatencyModel.hooking_unit_cost_ns,
                   help="ns per unit of descriptor hook cost (0 disables hooking cost)")
    s.add_argument("--per-byte-ns", type=float, default=LatencyModel.per_byte_transfer_ns)
    s.add_argument("--raw", action="store_true", help="also write every repetition")
    s.set_defaults(func=cmd_sweep)

    st = sub.add_parser("stack", parents=[common], help="evaluate module stacking orders")
    st.add_argument("--rules", help="rule JSON file (default: bundled three-module whitelist)")
    st.add_argument("--requests", help="request JSON file")
    st.add_argument("--objects", help="comma-separated object ids (default 1,2,3,4)")
    st.add_argument("--order", action="append", help="comma-separated stack order; repeatable")
    st.add_argument("--all-orders", action="store_true", help="brute-force every permutation")
    st.add_argument("--cache", action="append", help="MODULE=N: LRU cache of N entries")
    st.add_argument("--cost", action="append", help="MODULE=N: cost units per uncached check")
    st.add_argument("--passes", type=int, default=1, help="replay the requests this many times")
    st.set_defaults(func=cmd_stack)

    c = sub.add_parser("cga", parents=[common], help="static worst-case hook counts")
    c.add_argument("--graph", help="bundled graph name or graph file (default: from --modules)")
    c.add_argument("--entry", help="comma-separated entry nodes")
    c.add_argument("--syscall", help="comma-separated syscalls; entry nodes sys_<name>")
    c.add_argument("--depth", help="path depths: 4, 1,2,4 or 1..8 (default 1)")
    c.add_argument("--show-edges", action="store_true")
    c.add_argument("--trace", metavar="SCENARIO", help="check static counts against this scenario's trace")
    c.set_defaults(func=cmd_cga)

    r = sub.add_parser("report", parents=[common], help="regression rates between two sweeps")
    r.add_argument("--baseline", required=True, help="baseline sweep CSV")
    r.add_argument("--target", required=True, help="target sweep CSV")
    r.add_argument("--metric", choices=("auto", "latency", "throughput"), default="auto")
    r.set_defaults(func=cmd_report)

    rp = sub.add_parser("reproduce", parents=[common], help="run every bundled recipe")
    rp.set_defaults(func=cmd_reproduce)
    return p


def _manifest_args(args) -> dict:
    skip = {"func", "out", "command", "seed", "quiet"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    outputs = Outputs(args.command, _manifest_args(args), args.seed)
    try:
        status = args.func(args, outputs)
        outputs.commit(Path(args.out))
    except CONFIG_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"hookcost: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"hookcost: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return status


if __name__ == "__main__":
    sys.exit(main())
