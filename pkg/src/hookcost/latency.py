"""End-to-end latency synthesis from hook traces, and the delay-sweep protocol.

latency = constant + hooking cost + authorizations * delay + bytes * per-byte + noise

The Tunable module's busy-wait is an exact additive delay charged at every
authorization firing in a trace.
"""

from __future__ import annotations

import csv
import fnmatch
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from hookcost.hooks import SecurityModuleSpec
from hookcost.syscalls import HookInvocationTrace, SyscallScenario, build_trace

DEFAULT_GRID_US = tuple(float(d) for d in range(0, 111, 10))
DEFAULT_LABELS = {"trusted": 0, "untrusted": 1, "ignored": 2}
THROUGHPUT_WARMUP = 1000

# Per-repetition noise giving R^2 near 0.999 on the default grid even for
# single-authorization scenarios.
NOISE_MODE_STDDEV_NS = 20000.0

RAW_COLUMNS = ("scenario", "delay_us", "repetition", "latency_ns")
SUMMARY_COLUMNS = ("scenario", "delay_us", "mean_ns", "variance")


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class LatencyModel:
    """Cost parameters; descriptor per-hook costs are scaled by ``hooking_unit_cost_ns``."""

    constant_cost_ns: float = 1000.0
    hooking_unit_cost_ns: float = 1.0
    per_byte_transfer_ns: float = 0.25

    def __post_init__(self):
        for name in ("constant_cost_ns", "hooking_unit_cost_ns", "per_byte_transfer_ns"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class TunableModuleSpec:
    delay_us: float = 0.0
    label_map: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_LABELS))
    default_label: str = "ignored"

    def __post_init__(self):
        if not self.delay_us >= 0:
            raise ValueError("delay_us must be nonnegative")
        if sorted(self.label_map.values()) != [0, 1, 2]:
            raise ValueError("label codes must be exactly {0, 1, 2}")
        if self.default_label not in self.label_map:
            raise ValueError(f"default label {self.default_label!r} not in label map")


@dataclass(frozen=True)
class SweepConfig:
    delays_us: tuple[float, ...] = DEFAULT_GRID_US
    repetitions: int = 300
    warmup_repetitions: int | None = None  # None: 1000 for throughput scenarios, else 0
    noise_stddev_ns: float = 0.0
    rng_seed: int = 0
    keep_samples: bool = False

    def __post_init__(self):
        delays = tuple(float(d) for d in self.delays_us)
        object.__setattr__(self, "delays_us", delays)
        if not delays:
            raise SweepError("delay grid is empty")
        if any(d < 0 for d in delays):
            raise SweepError("delays must be nonnegative")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise SweepError("delay grid must be strictly increasing")
        if self.repetitions < 1:
            raise SweepError("repetitions must be at least 1")
        if self.warmup_repetitions is not None and self.warmup_repetitions < 0:
            raise SweepError("warmup repetitions must be nonnegative")
        if not self.noise_stddev_ns >= 0:
            raise SweepError("noise stddev must be nonnegative")

    def warmup_for(self, scenario: SyscallScenario) -> int:
        if self.warmup_repetitions is not None:
            return self.warmup_repetitions
        return THROUGHPUT_WARMUP if scenario.is_throughput else 0


@dataclass(frozen=True)
class LatencySample:
    delay_us: float
    mean_ns: float
    variance: float
    repetitions: int
    samples: tuple[float, ...] | None = None

    @property
    def ops_per_sec(self) -> float:
        return 1e9 / self.mean_ns if self.mean_ns > 0 else float("inf")


@dataclass(frozen=True)
class SweepResult:
    scenario: str
    points: tuple[LatencySample, ...]
    authorization_count: int | None = None
    is_throughput: bool = False

    @property
    def delays_us(self) -> list[float]:
        return [p.delay_us for p in self.points]

    @property
    def means_ns(self) -> list[float]:
        return [p.mean_ns for p in self.points]


def simulate_latency(
    trace: HookInvocationTrace,
    model: LatencyModel,
    tunable: TunableModuleSpec,
    noise_draw: float = 0.0,
) -> float:
    return (
        model.constant_cost_ns
        + model.hooking_unit_cost_ns * trace.hooking_cost_ns
        + trace.authorization_count * tunable.delay_us * 1000.0
        + trace.transfer_bytes * model.per_byte_transfer_ns
        + noise_draw
    )


def hooking_overhead_fraction(
    trace: HookInvocationTrace, model: LatencyModel, tunable: TunableModuleSpec
) -> float:
    """Share of the noiseless latency spent in hooks and authorization."""
    total = simulate_latency(trace, model, tunable)
    if total == 0:
        return 0.0
    hooked = (model.hooking_unit_cost_ns * trace.hooking_cost_ns
              + trace.authorization_count * tunable.delay_us * 1000.0)
    return hooked / total


def _rng(seed: int, delay_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, delay_index]))


def sweep_trace(
    name: str,
    trace: HookInvocationTrace,
    model: LatencyModel,
    sweep: SweepConfig,
    *,
    warmup: int = 0,
    is_throughput: bool = False,
    tunable: TunableModuleSpec | None = None,
) -> SweepResult:
    """Run the delay grid over a prebuilt trace.

    Each grid point draws from its own stream seeded by (rng_seed, index);
    warmup draws are taken from the same stream and discarded.
    """
    tunable = tunable or TunableModuleSpec()
    reps = sweep.repetitions
    points = []
    for i, delay in enumerate(sweep.delays_us):
        base = simulate_latency(trace, model, TunableModuleSpec(delay, tunable.label_map,
                                                                tunable.default_label))
        if sweep.noise_stddev_ns > 0:
            draws = _rng(sweep.rng_seed, i).normal(0.0, sweep.noise_stddev_ns, warmup + reps)
            samples = base + draws[warmup:]
            mean = float(samples.mean())
            var = float(samples.var())
        else:
            samples = np.full(reps, base)
            mean, var = base, 0.0
        kept = tuple(samples.tolist()) if sweep.keep_samples else None
        points.append(LatencySample(delay, mean, var, reps, kept))
    return SweepResult(name, tuple(points), trace.authorization_count, is_throughput)


def run_sweep(
    scenario: SyscallScenario,
    stack: Sequence[SecurityModuleSpec],
    model: LatencyModel | None = None,
    sweep: SweepConfig | None = None,
) -> SweepResult:
    model = model or LatencyModel()
    sweep = sweep or SweepConfig()
    trace = build_trace(scenario, stack)
    return sweep_trace(scenario.name, trace, model, sweep,
                       warmup=sweep.warmup_for(scenario),
                       is_throughput=scenario.is_throughput)


def assign_label(
    object_id: str,
    label_rules: Mapping[str, str] | Iterable[tuple[str, str]] = (),
    tunable: TunableModuleSpec | None = None,
) -> int:
    """Label code for ``object_id``; the first matching glob rule wins.

    Every rule's label is validated, matched or not.
    """
    tunable = tunable or TunableModuleSpec()
    rules = list(label_rules.items() if isinstance(label_rules, Mapping) else label_rules)
    for pattern, label in rules:
        if label not in tunable.label_map:
            raise ValueError(f"unknown label {label!r} for pattern {pattern!r}")
    for pattern, label in rules:
        if fnmatch.fnmatchcase(object_id, pattern):
            return tunable.label_map[label]
    return tunable.label_map[tunable.default_label]


def _fmt(x: float) -> str:
    return repr(float(x))


def sweep_csv(results: Iterable[SweepResult], raw: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_COLUMNS if raw else SUMMARY_COLUMNS)
    for res in results:
        for pt in res.points:
            if raw:
                if pt.samples is None:
                    raise SweepError("raw output needs a sweep run with keep_samples")
                for rep, v in enumerate(pt.samples):
                    w.writerow([res.scenario, _fmt(pt.delay_us), rep, _fmt(v)])
            else:
                w.writerow([res.scenario, _fmt(pt.delay_us), _fmt(pt.mean_ns), _fmt(pt.variance)])
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[SweepResult]:
    """Load a summary or raw sweep CSV; raw rows are re-aggregated."""
    reader = csv.DictReader(io.StringIO(text))
    cols = tuple(reader.fieldnames or ())
    if cols == SUMMARY_COLUMNS:
        raw = False
    elif cols == RAW_COLUMNS:
        raw = True
    else:
        raise SweepError(f"unrecognized sweep CSV header {cols}")
    grouped: dict[str, dict[float, list]] = {}
    try:
        for row in reader:
            by_delay = grouped.setdefault(row["scenario"], {})
            d = float(row["delay_us"])
            if raw:
                by_delay.setdefault(d, []).append(float(row["latency_ns"]))
            else:
                if d in by_delay:
                    raise SweepError(f"{row['scenario']}: duplicate delay {d}")
                by_delay[d] = (float(row["mean_ns"]), float(row["variance"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SweepError):
            raise
        raise SweepError(f"malformed sweep CSV: {exc}") from exc

    out = []
    for name, by_delay in grouped.items():
        pts = []
        for d in sorted(by_delay):
            if raw:
                arr = np.asarray(by_delay[d])
                pts.append(LatencySample(d, float(arr.mean()), float(arr.var()), arr.size,
                                         tuple(by_delay[d])))
            else:
                mean, var = by_delay[d]
                pts.append(LatencySample(d, mean, var, 0))
        out.append(SweepResult(name, tuple(pts)))
    return out
