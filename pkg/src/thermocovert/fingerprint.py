"""Workload identification from a neighbour core's temperature.

A victim runs one of a few workloads on its core; an observer on the next
core records its own sensor and compares the trace with reference traces
recorded earlier on a similar machine.  Workloads differ mainly in how hot
they run, so the comparison is a plain Pearson correlation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .partitioning import baseline_state, idle_powers
from .sensor import DtsConfig, SensorTrace, observe
from .thermal_model import ChipTopology, PowerModel, PowerSchedule, power_of, simulate

DEFAULT_THRESHOLD = 0.85


class UndefinedCorrelation(ValueError):
    """Pearson r is undefined for a constant trace."""


class GridMismatch(ValueError):
    """Traces are not sampled on the same time grid."""


@dataclass(frozen=True)
class WorkloadProfile:
    """Synthetic stand-in for a benchmark: a duty-cycled activity level.

    The core runs at ``activity`` for ``duty`` of every ``period`` seconds
    and idles for the rest, so the long-run activity is ``activity * duty``.
    """

    name: str
    activity: float
    duty: float = 1.0
    period: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.activity <= 1.0:
            raise ValueError("activity must be in (0, 1]")
        if not 0.0 < self.duty <= 1.0:
            raise ValueError("duty must be in (0, 1]")
        if not self.period > 0:
            raise ValueError("period must be > 0")

    @property
    def mean_activity(self) -> float:
        return self.activity * self.duty

    def intervals(self, start: float, length: float) -> list[tuple[float, float]]:
        """Busy intervals inside [start, start + length)."""
        if self.duty >= 1.0:
            return [(start, start + length)]
        out = []
        t = start
        while t < start + length - 1e-12:
            out.append((t, min(t + self.duty * self.period, start + length)))
            t += self.period
        return out


# Ordered as in the profiling study; the levels only need to be distinct.
DEFAULT_PROFILES: tuple[WorkloadProfile, ...] = (
    WorkloadProfile("rsa", 1.0),
    WorkloadProfile("basicmath", 0.92),
    WorkloadProfile("qsort", 0.85, duty=0.8, period=2.0),
    WorkloadProfile("bitcount", 0.62),
    WorkloadProfile("adpcm", 0.9, duty=0.5, period=4.0),
)


def check_profiles(profiles) -> None:
    levels = sorted(p.mean_activity for p in profiles)
    if len({p.name for p in profiles}) != len(profiles):
        raise ValueError("profile names must be unique")
    if any(b - a < 0.05 - 1e-12 for a, b in zip(levels, levels[1:])):
        raise ValueError("profiles need mean activity levels at least 0.05 apart")


@dataclass(frozen=True)
class RecordingPlan:
    """Where and how long a workload is recorded.

    The victim core idles for ``lead`` seconds, runs the workload for
    ``run_seconds`` and idles again for ``tail`` seconds; the observer keeps
    one sensor reading out of every ``sample_every`` refresh ticks.
    """

    victim_core: int = 3
    observer_core: int = 2
    frequency: float = 2.9
    run_seconds: float = 200.0
    lead: float = 25.0
    tail: float = 25.0
    sample_every: int = 50

    @property
    def duration(self) -> float:
        return self.lead + self.run_seconds + self.tail


def workload_power(profile: WorkloadProfile, plan: RecordingPlan, topology: ChipTopology,
                   model: PowerModel) -> PowerSchedule:
    idle = idle_powers(topology, model, plan.observer_core)
    busy = idle.copy()
    busy[plan.victim_core] = power_of(profile.activity, plan.frequency, model)
    breaks, rows = [0.0], [idle]
    for a, b in profile.intervals(plan.lead, plan.run_seconds):
        breaks += [a, b]
        rows += [busy, idle]
    return PowerSchedule(breaks, rows, plan.frequency)


def record(profile: WorkloadProfile, plan: RecordingPlan, topology: ChipTopology,
           dts: DtsConfig, model: PowerModel, seed: int) -> SensorTrace:
    """One observer-core trace of ``profile`` running on the victim core."""
    truth = simulate(topology, workload_power(profile, plan, topology, model), plan.duration,
                     initial=baseline_state(topology, model, plan.observer_core))
    full = observe(truth, plan.observer_core, dts, seed=seed)
    k = max(1, int(plan.sample_every))
    return SensorTrace(full.times[::k], full.readings[::k], full.core_id)


@dataclass
class ReferenceLibrary:
    traces: dict[str, list[SensorTrace]]
    seeds: dict[str, list[int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grids = [tr.times for group in self.traces.values() for tr in group]
        if grids and any(len(g) != len(grids[0]) or not np.allclose(g, grids[0]) for g in grids):
            raise GridMismatch("library traces must share one sampling grid")

    @property
    def labels(self) -> list[str]:
        return list(self.traces)

    @property
    def grid(self) -> np.ndarray:
        return next(iter(self.traces.values()))[0].times

    def __len__(self):
        return sum(len(v) for v in self.traces.values())

    def save(self, directory) -> Path:
        """Write one CSV per trace and a JSON manifest."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        manifest = {"meta": self.meta, "order": self.labels, "workloads": {}}
        for label, group in self.traces.items():
            files = []
            for i, tr in enumerate(group):
                name = f"{label}_{i}.csv"
                tr.to_csv(d / name)
                files.append(name)
            manifest["workloads"][label] = {"files": files, "seeds": self.seeds.get(label, [])}
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return d

    @classmethod
    def load(cls, directory) -> "ReferenceLibrary":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        traces, seeds = {}, {}
        for label in manifest.get("order", sorted(manifest["workloads"])):
            entry = manifest["workloads"][label]
            traces[label] = [SensorTrace.from_csv(d / f) for f in entry["files"]]
            seeds[label] = list(entry.get("seeds", []))
        return cls(traces, seeds, manifest.get("meta", {}))


def build_library(profiles=DEFAULT_PROFILES, repeats: int = 5, topology: ChipTopology | None = None,
                  dts: DtsConfig | None = None, model: PowerModel | None = None,
                  plan: RecordingPlan = RecordingPlan(), seed: int = 0) -> ReferenceLibrary:
    """Record ``repeats`` noisy runs of every profile.

    The thermal response of a profile is deterministic, so it is simulated
    once and observed with a different noise seed per repeat.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    profiles = tuple(profiles)
    check_profiles(profiles)
    topology = topology or ChipTopology()
    dts = dts or DtsConfig()
    model = model or PowerModel()
    traces, seeds = {}, {}
    k = max(1, int(plan.sample_every))
    for j, prof in enumerate(profiles):
        truth = simulate(topology, workload_power(prof, plan, topology, model), plan.duration,
                         initial=baseline_state(topology, model, plan.observer_core))
        seeds[prof.name] = [seed + 1000 * j + r for r in range(repeats)]
        traces[prof.name] = []
        for s in seeds[prof.name]:
            full = observe(truth, plan.observer_core, dts, seed=s)
            traces[prof.name].append(SensorTrace(full.times[::k], full.readings[::k], full.core_id))
    meta = {"run_seconds": plan.run_seconds, "lead": plan.lead, "tail": plan.tail,
            "victim_core": plan.victim_core, "observer_core": plan.observer_core,
            "frequency": plan.frequency, "sample_every": k,
            "profiles": {p.name: [p.activity, p.duty, p.period] for p in profiles}}
    return ReferenceLibrary(traces, seeds, meta)


def _values(x) -> np.ndarray:
    return np.asarray(x.readings if isinstance(x, SensorTrace) else x, dtype=float)


def correlate(a, b) -> float:
    """Pearson r of two equally sampled traces (SensorTrace or arrays)."""
    x, y = _values(a), _values(b)
    if x.shape != y.shape:
        raise GridMismatch(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least two samples")
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = np.sqrt(x @ x), np.sqrt(y @ y)
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("correlation undefined for a constant trace")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))


def _safe_r(a, b) -> float:
    try:
        return correlate(a, b)
    except UndefinedCorrelation:
        return 0.0


@dataclass
class Classification:
    label: str | None
    scores: dict[str, list[float]]
    threshold: float

    @property
    def mean_scores(self) -> dict[str, float]:
        return {k: float(np.mean(v)) for k, v in self.scores.items()}

    def to_json(self) -> str:
        return json.dumps({"label": self.label, "threshold": self.threshold,
                           "mean_scores": self.mean_scores, "scores": self.scores},
                          indent=2, sort_keys=True)


def classify(observed: SensorTrace, library: ReferenceLibrary,
             threshold: float = DEFAULT_THRESHOLD) -> Classification:
    """Label whose mean correlation with ``observed`` is largest and above threshold.

    A constant observed trace correlates with nothing and yields no label.
    """
    grid = library.grid
    if len(observed) != len(grid) or not np.allclose(observed.times, grid):
        raise GridMismatch("observed trace does not match the library grid")
    scores = {lab: [_safe_r(observed, tr) for tr in group] for lab, group in library.traces.items()}
    means = {lab: float(np.mean(v)) for lab, v in scores.items()}
    best = max(means, key=lambda lab: means[lab]) if means else None
    label = best if best is not None and means[best] > threshold else None
    return Classification(label, scores, threshold)


@dataclass
class PairStats:
    """Pairwise correlations split into same- and cross-workload pairs."""

    same: dict[str, list[float]]
    cross: dict[tuple[str, str], list[float]]

    def same_fraction(self, label: str, level: float) -> tuple[int, int]:
        r = np.asarray(self.same[label])
        return int((r >= level).sum()), len(r)

    def false_positive_rate(self, threshold: float = DEFAULT_THRESHOLD) -> float:
        r = np.concatenate([np.asarray(v) for v in self.cross.values()])
        return float((r >= threshold).mean())

    @property
    def mean_same(self) -> float:
        return float(np.mean(np.concatenate([np.asarray(v) for v in self.same.values()])))

    @property
    def mean_cross(self) -> float:
        return float(np.mean(np.concatenate([np.asarray(v) for v in self.cross.values()])))


def pair_stats(library: ReferenceLibrary) -> PairStats:
    labels = library.labels
    same, cross = {}, {}
    for i, a in enumerate(labels):
        group = library.traces[a]
        same[a] = [correlate(group[p], group[q])
                   for p in range(len(group)) for q in range(p + 1, len(group))]
        for b in labels[i + 1:]:
            cross[(a, b)] = [correlate(x, y) for x in group for y in library.traces[b]]
    return PairStats(same, cross)
