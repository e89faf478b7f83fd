"""Spatial and temporal isolation regimes, producing what the sink can read.

Spatial: source and sink pinned to different cores, running concurrently;
the sink reads only its own core.  Temporal: both share one core in a
strict source/sink round robin of slices t_s, and the sink can only read
the sensor during its own slices.  Slices start on sensor ticks and
context switches are free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chanstack import ActivitySchedule
from .sensor import DtsConfig, SensorTrace, observe
from .thermal_model import (ChipTopology, ConfigurationError, PowerModel, PowerSchedule,
                            ThermalTrace, check_frequency, power_of, simulate, steady_state)


@dataclass(frozen=True)
class SpatialPlan:
    source_core: int = 3
    sink_core: int = 2
    frequency: float = 2.9
    duration: float | None = None

    def validate(self, topology: ChipTopology):
        n = topology.n_cores
        if not (0 <= self.source_core < n and 0 <= self.sink_core < n):
            raise ConfigurationError(f"core indices must lie in [0, {n})")
        if self.source_core == self.sink_core:
            raise ConfigurationError("spatial plan needs distinct source and sink cores")
        check_frequency(self.frequency)


@dataclass(frozen=True)
class TemporalPlan:
    shared_core: int = 3
    slice_length: float = 0.010
    frequency: float = 2.9
    duration: float | None = None

    def validate(self, topology: ChipTopology, dts: DtsConfig):
        if not 0 <= self.shared_core < topology.n_cores:
            raise ConfigurationError(f"core index must lie in [0, {topology.n_cores})")
        ratio = self.slice_length / dts.refresh_period
        if ratio < 1 - 1e-9:
            raise ConfigurationError(
                f"slice length {self.slice_length} s is shorter than one sensor refresh")
        if abs(2 * ratio - round(2 * ratio)) > 1e-6:
            raise ConfigurationError(
                "a source+sink slice pair must span a whole number of refresh periods")
        check_frequency(self.frequency)


def idle_powers(topology: ChipTopology, model: PowerModel, sink_core: int | None) -> np.ndarray:
    p = np.full(topology.n_cores, model.p_idle)
    if sink_core is not None:
        p[sink_core] += model.sink_load
    return p


def baseline_state(topology: ChipTopology, model: PowerModel, sink_core: int | None = None):
    """Equilibrium with every core idle and the sink's measurement loop running."""
    return steady_state(topology, idle_powers(topology, model, sink_core))


def spatial_power(plan: SpatialPlan, schedule: ActivitySchedule, topology: ChipTopology,
                  model: PowerModel) -> PowerSchedule:
    idle = idle_powers(topology, model, plan.sink_core)
    on = power_of(1.0, plan.frequency, model)
    breaks, rows = [0.0], [idle]
    for begin, end, active in schedule.intervals():
        if not active:
            continue
        row = idle.copy()
        row[plan.source_core] = on
        if abs(begin - breaks[-1]) < 1e-12:
            rows[-1] = row
        else:
            breaks.append(begin)
            rows.append(row)
        breaks.append(end)
        rows.append(idle)
    # merge back-to-back ON intervals
    keep = [0] + [j for j in range(1, len(breaks))
                  if not np.array_equal(rows[j], rows[j - 1])]
    return PowerSchedule([breaks[j] for j in keep], [rows[j] for j in keep], plan.frequency)


def run_spatial(plan: SpatialPlan, schedule: ActivitySchedule, topology: ChipTopology,
                dts: DtsConfig, model: PowerModel = PowerModel(), seed: int | None = None,
                return_truth: bool = False):
    """Sink-core sensor trace while the source keys ``schedule`` on its core."""
    plan.validate(topology)
    duration = schedule.duration if plan.duration is None else plan.duration
    if schedule.duration > duration + 1e-9:
        raise ConfigurationError("activity schedule is longer than the plan duration")
    power = spatial_power(plan, schedule, topology, model)
    truth = simulate(topology, power, duration,
                     initial=baseline_state(topology, model, plan.sink_core))
    sensed = observe(truth, plan.sink_core, dts, seed=seed)
    return (sensed, truth) if return_truth else sensed


def sink_windows(plan: TemporalPlan, duration: float) -> np.ndarray:
    """[start, end) of every sink slice inside the run."""
    ts = plan.slice_length
    n = int(np.floor(duration / (2 * ts) + 1e-9))
    starts = (2 * np.arange(n) + 1) * ts
    return np.column_stack([starts, starts + ts])


def temporal_power(plan: TemporalPlan, schedule: ActivitySchedule, topology: ChipTopology,
                   model: PowerModel, duration: float) -> PowerSchedule:
    ts = plan.slice_length
    if abs(schedule.params.T_b - ts) > 1e-12 or schedule.params.mode != "temporal":
        raise ConfigurationError("temporal schedule must use T_b equal to the slice length")
    first = schedule.start / (2 * ts)
    if abs(first - round(first)) > 1e-9:
        raise ConfigurationError("schedule must start on a source slice")
    first = int(round(first))
    n_pairs = int(np.floor(duration / (2 * ts) + 1e-9))
    idle = idle_powers(topology, model, None)
    sink_row = idle_powers(topology, model, plan.shared_core)
    on_row = idle.copy()
    on_row[plan.shared_core] = power_of(1.0, plan.frequency, model)
    bits = np.zeros(n_pairs, dtype=bool)
    nb = min(len(schedule.bits), n_pairs - first)
    bits[first:first + nb] = np.asarray(schedule.bits[:nb], dtype=bool)
    rows = np.empty((2 * n_pairs, topology.n_cores))
    rows[0::2] = np.where(bits[:, None], on_row, idle)
    rows[1::2] = sink_row
    breaks = np.arange(2 * n_pairs) * ts
    return PowerSchedule(breaks, rows, plan.frequency)


def run_temporal(plan: TemporalPlan, schedule: ActivitySchedule, topology: ChipTopology,
                 dts: DtsConfig, model: PowerModel = PowerModel(), seed: int | None = None,
                 return_truth: bool = False):
    """Shared-core sensor trace restricted to the sink's slices."""
    plan.validate(topology, dts)
    duration = schedule.duration if plan.duration is None else plan.duration
    if schedule.duration > duration + 1e-9:
        raise ConfigurationError("activity schedule is longer than the plan duration")
    power = temporal_power(plan, schedule, topology, model, duration)
    truth: ThermalTrace = simulate(topology, power, duration,
                                   initial=baseline_state(topology, model, plan.shared_core))
    sensed: SensorTrace = observe(truth, plan.shared_core, dts,
                                  gating_windows=sink_windows(plan, duration), seed=seed)
    return (sensed, truth) if return_truth else sensed
