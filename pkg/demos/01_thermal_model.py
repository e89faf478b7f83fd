# %% [markdown]
# # The thermal model
#
# An 8-core die is a chain of small thermal masses sitting on one large
# heat spreader.  Here we look at the calibrated network: how a fully
# loaded core heats up and cools down, how far the heat reaches, and where
# the shipped constants come from.

# %%
import numpy as np

from thermocovert.calibration import SHIPPED_TARGETS, fit_model, step_metrics
from thermocovert.partitioning import baseline_state, idle_powers
from thermocovert.thermal_model import (ChipTopology, PowerModel, PowerSchedule, power_of,
                                        simulate, stability_bound, steady_state)

topo, model = ChipTopology(), PowerModel()
print(topo)
print(model)
print(f"Euler stability bound: {stability_bound(topo) * 1e3:.2f} ms (we step at 1 ms)")

# %% [markdown]
# ## Step response of core 3
#
# 100 s at full load, then 40 s idle, starting from the idle equilibrium.

# %%
idle = idle_powers(topo, model, None)
busy = idle.copy()
busy[3] = power_of(1.0, 2.9, model)
trace = simulate(topo, PowerSchedule([0.0, 100.0], [busy, idle]), 140.0,
                 initial=baseline_state(topo, model))
core3 = trace.core(3)
for t in (0.0, 0.025, 0.1, 1.0, 10.0, 50.0, 100.0, 101.0, 111.0, 140.0):
    print(f"t = {t:6.3f} s   core 3 = {core3[int(round(t / trace.dt))]:6.2f} C")

# %% [markdown]
# Two time scales show up: the die node jumps within tens of
# milliseconds, then the spreader slowly lifts the whole chip.  The same
# numbers, computed in closed form:

# %%
m = step_metrics(topo, model)
print(f"baseline {m.baseline:.2f} C, +{m.fast_rise:.2f} C in 25 ms, "
      f"saturation {m.saturation:.2f} C, back within 1 C after {m.decay_time:.2f} s")

# %% [markdown]
# ## Heat across cores
#
# Steady rise and rise after a 1.5 s pulse, h cores away from core 3.

# %%
for h in range(4):
    print(f"hop {h}: steady +{m.steady_hops[h]:.2f} C, 1.5 s pulse +{m.pulse_hops[h]:.2f} C")

# %% [markdown]
# Lower P-states dissipate less power and so heat less:

# %%
for f in (1.9, 2.4, 2.9):
    p = idle.copy()
    p[3] = power_of(1.0, f, model)
    print(f"{f} GHz: {p[3]:5.2f} W, saturation {steady_state(topo, p).die_temps[3]:.2f} C")

# %% [markdown]
# ## Where the constants come from
#
# ``fit_model`` starts from a neutral guess and adjusts the five RC
# constants and two power levels until the step-response features match
# the targets.  The result is what ``ChipTopology()`` and ``PowerModel()``
# return by default.

# %%
res = fit_model(SHIPPED_TARGETS)
print(f"{res.evaluations} evaluations")
for k, v in res.residuals.items():
    print(f"  {k:15s} residual {v:+.3%}")
print("matches defaults:",
      np.isclose(res.topology.core_capacitance, topo.core_capacitance, rtol=1e-4))
