"""Digital thermal sensor (DTS) as user space sees it through coretemp/sysfs.

Readings are absolute °C, refreshed on a fixed tick, perturbed by zero-mean
Gaussian noise and rounded half-up onto the resolution grid.  The noise
stream is low-pass filtered so that its marginal law is N(0, sigma) while
successive ticks stay correlated over ``noise_corr_time``; set that to 0
for independent draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .thermal_model import ThermalTrace


class ThermalTrip(RuntimeError):
    """True die temperature reached Tj,max; the run is aborted."""

    def __init__(self, temp: float, tj_max: float, time: float | None = None):
        where = "" if time is None else f" at t = {time:.3f} s"
        super().__init__(f"thermal trip{where}: {temp:.2f} °C >= Tj,max {tj_max:.1f} °C")
        self.temp = temp
        self.tj_max = tj_max
        self.time = time


@dataclass(frozen=True)
class DtsConfig:
    tj_max: float = 100.0
    resolution: float = 1.0
    refresh_period: float = 0.002
    noise_sigma: float = 0.42
    noise_corr_time: float = 0.12
    seed: int = 0

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if not self.refresh_period > 0:
            raise ValueError("refresh_period must be > 0")
        if self.noise_sigma < 0 or self.noise_corr_time < 0:
            raise ValueError("noise_sigma and noise_corr_time must be >= 0")


@dataclass
class SensorTrace:
    """Quantized readings of one core; times may have gaps (gated sensing)."""

    times: np.ndarray
    readings: np.ndarray
    core_id: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.readings = np.asarray(self.readings, dtype=float)
        if self.times.shape != self.readings.shape:
            raise ValueError("times and readings must have equal length")

    def __len__(self):
        return len(self.times)

    def to_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s", "core_id", "reading_c"])
            for t, r in zip(self.times, self.readings):
                w.writerow([f"{t:.6f}", self.core_id, f"{r:.6f}"])

    @classmethod
    def from_csv(cls, path, core_id: int | None = None) -> "SensorTrace":
        """Read ``time_s,core_id,reading_c`` (or ground-truth ``temp_c``) rows.

        With several cores in the file, ``core_id`` selects one; by default the
        first core seen is used.
        """
        times, vals = [], []
        with open(Path(path), newline="") as fh:
            rows = csv.DictReader(fh)
            value_key = "reading_c" if "reading_c" in rows.fieldnames else "temp_c"
            for row in rows:
                cid = int(row["core_id"])
                if core_id is None:
                    core_id = cid
                if cid == core_id:
                    times.append(float(row["time_s"]))
                    vals.append(float(row[value_key]))
        return cls(np.array(times), np.array(vals), 0 if core_id is None else core_id)


def quantize(values, resolution: float = 1.0):
    """Round half-up onto the resolution grid."""
    return np.floor(np.asarray(values) / resolution + 0.5) * resolution


def sample(true_temp: float, config: DtsConfig, noise_draw: float = 0.0) -> float:
    """One reading: quantize(true_temp + noise_sigma * noise_draw).

    ``noise_draw`` is a standard-normal variate supplied by the caller.
    """
    if true_temp >= config.tj_max:
        raise ThermalTrip(true_temp, config.tj_max)
    return float(quantize(true_temp + config.noise_sigma * noise_draw, config.resolution))


def noise_stream(n: int, config: DtsConfig, rng: np.random.Generator) -> np.ndarray:
    """n unit-variance noise draws on the refresh grid.

    Two cascaded first-order low-pass stages; impulse response (k+1) a^k, so
    the stationary variance of the raw output is (1+a^2)/(1-a^2)^3.
    """
    if config.noise_corr_time == 0:
        return rng.standard_normal(n)
    a = float(np.exp(-config.refresh_period / config.noise_corr_time))
    burn = int(np.ceil(12 * config.noise_corr_time / config.refresh_period))
    w = rng.standard_normal(n + burn)
    y = signal.lfilter([1.0], [1.0, -2 * a, a * a], w)[burn:]
    return y / np.sqrt((1 + a * a) / (1 - a * a) ** 3)


def tick_times(t_start: float, t_end: float, refresh: float) -> np.ndarray:
    k0 = int(np.ceil(t_start / refresh - 1e-9))
    k1 = int(np.floor(t_end / refresh + 1e-9))
    return np.arange(k0, k1 + 1) * refresh


def in_windows(times, windows) -> np.ndarray:
    """Boolean mask of times falling in any half-open [start, end) window."""
    times = np.asarray(times)
    if windows is None:
        return np.ones(len(times), dtype=bool)
    w = np.asarray(windows, dtype=float).reshape(-1, 2)
    if len(w) == 0:
        return np.zeros(len(times), dtype=bool)
    if np.any(w[:, 1] < w[:, 0]) or np.any(w[1:, 0] < w[:-1, 1] - 1e-12):
        raise ValueError("gating windows must be sorted and non-overlapping")
    eps = 1e-9
    idx = np.searchsorted(w[:, 0] - eps, times, side="right") - 1
    ok = idx >= 0
    ok[ok] = times[ok] < w[idx[ok], 1] - eps
    return ok


def observe(trace: ThermalTrace, core_id: int, config: DtsConfig,
            gating_windows=None, seed: int | None = None) -> SensorTrace:
    """Sensor readings of ``core_id`` at every refresh tick covered by ``trace``.

    Noise is drawn for every tick whether gated or not, so gating only
    removes samples and never changes the ones kept.  A gating window that
    opens between two ticks starts with the held value of the previous tick,
    as a read of sysfs would return.
    """
    if len(trace) == 0:
        return SensorTrace(np.empty(0), np.empty(0), core_id)
    ticks = tick_times(trace.times[0], trace.times[-1], config.refresh_period)
    idx = np.clip(np.round((ticks - trace.times[0]) / trace.dt).astype(np.int64), 0, len(trace) - 1)
    truth = trace.core(core_id)[idx]
    hot = np.flatnonzero(truth >= config.tj_max)
    if len(hot):
        i = hot[0]
        raise ThermalTrip(float(truth[i]), config.tj_max, float(ticks[i]))
    rng = np.random.default_rng(config.seed if seed is None else seed)
    noisy = quantize(truth + config.noise_sigma * noise_stream(len(ticks), config, rng),
                     config.resolution)
    keep = in_windows(ticks, gating_windows)
    times, values = ticks[keep], noisy[keep]
    if gating_windows is not None:
        # a window opening between ticks still sees the last refreshed value
        starts = np.asarray(gating_windows, dtype=float).reshape(-1, 2)[:, 0]
        k = np.floor(starts / config.refresh_period + 1e-9).astype(np.int64) \
            - int(round(ticks[0] / config.refresh_period))
        off_tick = np.abs(starts / config.refresh_period
                          - np.round(starts / config.refresh_period)) > 1e-6
        held = off_tick & (k >= 0) & (k < len(ticks))
        if held.any():
            times = np.concatenate([times, starts[held]])
            values = np.concatenate([values, noisy[k[held]]])
            order = np.argsort(times, kind="stable")
            times, values = times[order], values[order]
    return SensorTrace(times, values, core_id)
