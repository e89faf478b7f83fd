"""Lumped RC thermal network for an N-core die on a shared heat spreader.

Each core is one die node.  Die nodes form a linear chain (core i touches
i-1 and i+1), every die node is tied to a single spreader node, and the
spreader sinks heat to ambient.  Integration is fixed-step forward Euler.

``step`` is the literal Euler update.  ``simulate`` produces the same
iterates, but advances each constant-power segment in closed form through
the eigendecomposition of the Euler transition matrix, so a 200 s run at
dt = 1 ms costs a few matrix products instead of 200k Python iterations.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# P-states of the reference Xeon, 100 MHz apart
SUPPORTED_FREQUENCIES: tuple[float, ...] = tuple(round(1.2 + 0.1 * i, 1) for i in range(18))
REFERENCE_FREQUENCY = 2.9
DEFAULT_DT = 1e-3


class ConfigurationError(ValueError):
    """Invalid topology, power model or plan parameter."""


class StabilityError(ValueError):
    """Requested Euler step exceeds the stability bound of the network."""


@dataclass(frozen=True)
class ChipTopology:
    """Geometry and RC constants of the die.

    Capacitances in J/°C, resistances in °C/W.  ``hotspot_offset`` shifts
    where a core's power is deposited along the chain (fraction of a core
    pitch, split linearly between the two nearest die nodes); 0 keeps the
    network mirror-symmetric.
    """

    n_cores: int = 8
    core_capacitance: float = 0.00390746
    spreader_capacitance: float = 47.7220
    r_lateral: float = 1.25612
    r_die_to_spreader: float = 1.18633
    r_spreader_to_ambient: float = 0.244686
    ambient_temp: float = 22.0
    hotspot_offset: float = 0.0

    def __post_init__(self):
        if self.n_cores < 1:
            raise ConfigurationError("n_cores must be >= 1")
        for name in ("core_capacitance", "spreader_capacitance", "r_lateral",
                     "r_die_to_spreader", "r_spreader_to_ambient"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        if abs(self.hotspot_offset) >= 1.0:
            raise ConfigurationError("hotspot_offset must lie in (-1, 1)")

    @property
    def n_nodes(self) -> int:
        return self.n_cores + 1

    def capacitances(self) -> np.ndarray:
        c = np.full(self.n_nodes, self.core_capacitance)
        c[-1] = self.spreader_capacitance
        return c

    def conductance(self) -> np.ndarray:
        """Symmetric conductance matrix G (W/°C) including the ambient leg."""
        n = self.n_cores
        g = np.zeros((n + 1, n + 1))
        g_lat = 1.0 / self.r_lateral
        g_ds = 1.0 / self.r_die_to_spreader
        for i in range(n - 1):
            g[i, i] += g_lat
            g[i + 1, i + 1] += g_lat
            g[i, i + 1] -= g_lat
            g[i + 1, i] -= g_lat
        for i in range(n):
            g[i, i] += g_ds
            g[n, n] += g_ds
            g[i, n] -= g_ds
            g[n, i] -= g_ds
        g[n, n] += 1.0 / self.r_spreader_to_ambient
        return g

    def injection(self) -> np.ndarray:
        """(n_nodes, n_cores) map from per-core power to nodal heat input."""
        n = self.n_cores
        b = np.zeros((n + 1, n))
        for i in range(n):
            pos = min(max(i + self.hotspot_offset, 0.0), n - 1.0)
            lo = int(np.floor(pos))
            frac = pos - lo
            b[lo, i] += 1.0 - frac
            if frac > 0.0:
                b[lo + 1, i] += frac
        return b

    def forcing(self, powers) -> np.ndarray:
        """Right-hand-side vector u so that C dT/dt = u - G T."""
        powers = np.asarray(powers, dtype=float)
        if powers.shape[-1] != self.n_cores:
            raise ConfigurationError(
                f"expected {self.n_cores} core powers, got {powers.shape[-1]}")
        u = powers @ self.injection().T
        u[..., -1] += self.ambient_temp / self.r_spreader_to_ambient
        return u


@dataclass(frozen=True)
class PowerModel:
    """P = p_idle + activity * k * f**freq_exponent, k set by p_active at 2.9 GHz."""

    p_idle: float = 4.10330
    p_active: float = 10.4646
    freq_exponent: float = 2.0
    sink_load: float = 0.05

    def __post_init__(self):
        if self.p_idle < 0 or self.p_active <= 0 or self.freq_exponent <= 0:
            raise ConfigurationError("power constants must be positive")
        if self.sink_load < 0:
            raise ConfigurationError("sink_load must be >= 0")

    @property
    def k(self) -> float:
        return self.p_active / REFERENCE_FREQUENCY ** self.freq_exponent


def check_frequency(frequency: float) -> float:
    for f in SUPPORTED_FREQUENCIES:
        if abs(frequency - f) < 1e-9:
            return f
    raise ConfigurationError(
        f"unsupported frequency {frequency} GHz; choose from {SUPPORTED_FREQUENCIES}")


def power_of(activity: float, frequency: float, model: PowerModel = PowerModel()) -> float:
    """Core power in watts for a CPU-bound activity fraction at a P-state."""
    f = check_frequency(frequency)
    if not 0.0 <= activity <= 1.0:
        raise ConfigurationError(f"activity must be in [0, 1], got {activity}")
    return model.p_idle + activity * model.k * f ** model.freq_exponent


@dataclass(frozen=True)
class ThermalState:
    die_temps: np.ndarray
    spreader_temp: float
    time: float = 0.0

    def __post_init__(self):
        temps = np.asarray(self.die_temps, dtype=float)
        object.__setattr__(self, "die_temps", temps)
        if not (np.all(np.isfinite(temps)) and np.isfinite(self.spreader_temp)):
            raise ValueError("thermal state contains non-finite values")

    @classmethod
    def uniform(cls, topology: ChipTopology, temp: float | None = None, time: float = 0.0):
        t = topology.ambient_temp if temp is None else temp
        return cls(np.full(topology.n_cores, t), float(t), time)

    @classmethod
    def from_vector(cls, vec, time: float = 0.0):
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:-1].copy(), float(vec[-1]), time)

    def vector(self) -> np.ndarray:
        return np.append(self.die_temps, self.spreader_temp)


@dataclass
class PowerSchedule:
    """Piecewise-constant per-core power.

    ``breakpoints[j]`` is the start time of segment j (the first is 0) and
    ``powers[j]`` the core power vector that holds until the next breakpoint.
    """

    breakpoints: np.ndarray
    powers: np.ndarray
    frequency: float = REFERENCE_FREQUENCY

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.powers = np.atleast_2d(np.asarray(self.powers, dtype=float))
        if self.breakpoints.ndim != 1 or len(self.breakpoints) != len(self.powers):
            raise ConfigurationError("one power vector per breakpoint required")
        if len(self.breakpoints) == 0 or self.breakpoints[0] != 0.0:
            raise ConfigurationError("first breakpoint must be at t = 0")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise ConfigurationError("breakpoints must be strictly increasing")
        if np.any(self.powers < 0):
            raise ConfigurationError("power must be >= 0")
        check_frequency(self.frequency)

    @classmethod
    def constant(cls, powers, frequency: float = REFERENCE_FREQUENCY):
        return cls(np.array([0.0]), np.atleast_2d(powers), frequency)

    @property
    def n_cores(self) -> int:
        return self.powers.shape[1]

    def power_at(self, t: float) -> np.ndarray:
        j = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.powers[max(j, 0)]


@dataclass
class ThermalTrace:
    """Ground-truth temperatures on a uniform time grid."""

    times: np.ndarray
    die: np.ndarray          # (n_samples, n_cores)
    spreader: np.ndarray     # (n_samples,)
    dt: float = DEFAULT_DT
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def core(self, core_id: int) -> np.ndarray:
        return self.die[:, core_id]

    def state(self, i: int) -> ThermalState:
        return ThermalState(self.die[i].copy(), float(self.spreader[i]), float(self.times[i]))

    def final_state(self) -> ThermalState:
        return self.state(len(self.times) - 1)

    def to_csv(self, path, cores=None, every: int = 1):
        """Write ``time_s,core_id,temp_c`` rows with 6 decimals."""
        cores = range(self.die.shape[1]) if cores is None else cores
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s", "core_id", "temp_c"])
            for i in range(0, len(self.times), every):
                for c in cores:
                    w.writerow([f"{self.times[i]:.6f}", c, f"{self.die[i, c]:.6f}"])


@functools.lru_cache(maxsize=64)
def _euler_modes(topology: ChipTopology, dt: float):
    """Eigen-decomposition of the Euler map M = I - dt C^-1 G.

    C^-1 G is similar to the symmetric S = C^-1/2 G C^-1/2, so
    M = C^-1/2 Q diag(1 - dt mu) Q^T C^1/2 with real mu.
    """
    c = topology.capacitances()
    g = topology.conductance()
    s = g / np.sqrt(np.outer(c, c))
    mu, q = np.linalg.eigh(s)
    to_modes = q.T * np.sqrt(c)[None, :]
    from_modes = q / np.sqrt(c)[:, None]
    return 1.0 - dt * mu, to_modes, from_modes


def stability_bound(topology: ChipTopology) -> float:
    """Largest dt for which forward Euler stays non-divergent: 2 / max eig(C^-1 G)."""
    c = topology.capacitances()
    s = topology.conductance() / np.sqrt(np.outer(c, c))
    return 2.0 / float(np.linalg.eigvalsh(s)[-1])


def _check_dt(topology: ChipTopology, dt: float):
    if not dt > 0:
        raise StabilityError(f"dt must be > 0, got {dt}")
    bound = stability_bound(topology)
    if dt > bound:
        raise StabilityError(
            f"dt = {dt:g} s exceeds the forward-Euler stability bound dt_max = {bound:.6g} s")


def step(state: ThermalState, topology: ChipTopology, powers, dt: float) -> ThermalState:
    """One forward-Euler step of C dT/dt = u - G T."""
    _check_dt(topology, dt)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (topology.n_cores,):
        raise ConfigurationError(f"expected {topology.n_cores} core powers")
    t = state.vector()
    dtemp = (topology.forcing(powers) - topology.conductance() @ t) / topology.capacitances()
    return ThermalState.from_vector(t + dt * dtemp, state.time + dt)


def steady_state(topology: ChipTopology, powers) -> ThermalState:
    """Equilibrium of the network under constant powers (direct linear solve)."""
    u = topology.forcing(np.asarray(powers, dtype=float))
    try:
        vec = np.linalg.solve(topology.conductance(), u)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - G is SPD for valid topologies
        raise RuntimeError("singular conductance matrix") from exc
    return ThermalState.from_vector(vec)


def simulate(topology: ChipTopology, schedule: PowerSchedule, duration: float,
             dt: float = DEFAULT_DT, initial: ThermalState | None = None) -> ThermalTrace:
    """Integrate the network over ``duration`` seconds, sampling every dt.

    Breakpoints are snapped to the dt grid.  The initial state defaults to
    every node at ambient.
    """
    if not duration > 0:
        raise ConfigurationError("duration must be > 0")
    _check_dt(topology, dt)
    if schedule.n_cores != topology.n_cores:
        raise ConfigurationError("schedule and topology disagree on core count")
    n_steps = int(round(duration / dt))
    lam, to_modes, from_modes = _euler_modes(topology, dt)
    g = topology.conductance()

    temps = np.empty((n_steps + 1, topology.n_nodes))
    state = (ThermalState.uniform(topology) if initial is None else initial).vector()
    temps[0] = state
    starts = np.round(schedule.breakpoints / dt).astype(np.int64)
    for j, k0 in enumerate(starts):
        if k0 >= n_steps:
            break
        k1 = n_steps if j + 1 >= len(starts) else min(int(starts[j + 1]), n_steps)
        if k1 <= k0:
            continue
        fixed = np.linalg.solve(g, topology.forcing(schedule.powers[j]))
        y0 = to_modes @ (temps[k0] - fixed)
        k = np.arange(1, k1 - k0 + 1)
        decay = np.power(lam[None, :], k[:, None])
        temps[k0 + 1:k1 + 1] = fixed + (decay * y0) @ from_modes.T
    t0 = 0.0 if initial is None else initial.time
    times = t0 + dt * np.arange(n_steps + 1)
    return ThermalTrace(times, temps[:, :-1], temps[:, -1], dt)


def states_at(topology: ChipTopology, initial: ThermalState, powers, steps,
              dt: float = DEFAULT_DT) -> np.ndarray:
    """Node temperatures after each count in ``steps`` of Euler steps under constant power.

    Same iterates as ``simulate`` but evaluated only where asked; returns an
    array of shape (len(steps), n_nodes).
    """
    _check_dt(topology, dt)
    lam, to_modes, from_modes = _euler_modes(topology, dt)
    fixed = np.linalg.solve(topology.conductance(), topology.forcing(np.asarray(powers, float)))
    y0 = to_modes @ (initial.vector() - fixed)
    k = np.asarray(steps, dtype=float)
    return fixed + (np.power(lam[None, :], k[:, None]) * y0) @ from_modes.T
