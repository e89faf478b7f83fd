# %% [markdown]
# # What a core can see
#
# The on-die sensor reports whole degrees every 2 ms, with some noise on
# top.  A spatial sink reads its own core while the source runs next door.
# A temporal sink shares the source's core and only gets to read during its
# own scheduler slices.

# %%
import numpy as np

from thermocovert.chanstack import ChannelParams, Frame, modulate
from thermocovert.partitioning import SpatialPlan, TemporalPlan, run_spatial, run_temporal
from thermocovert.sensor import DtsConfig, noise_stream, sample
from thermocovert.thermal_model import ChipTopology

topo, dts = ChipTopology(), DtsConfig()
print(dts)
print("40.4 C reads as", sample(40.4, DtsConfig(noise_sigma=0.0)))
print("40.5 C reads as", sample(40.5, DtsConfig(noise_sigma=0.0)))

# %% [markdown]
# The noise is Gaussian with standard deviation ``noise_sigma`` but varies
# smoothly from tick to tick; ``noise_corr_time`` controls how smoothly.

# %%
x = noise_stream(200_000, dts, np.random.default_rng(0))
for lag in (1, 10, 50, 200):
    print(f"lag {lag * 2:4d} ms: autocorrelation {np.corrcoef(x[:-lag], x[lag:])[0, 1]:.3f}")

# %% [markdown]
# ## Spatial: sink one core away
#
# Send ``1100`` after the preamble at 1 s per bit and print the sink's
# readings at the end of each bit period.

# %%
p = ChannelParams(1.0)
sched = modulate(Frame("1100"), p, start=2.0)
plan = SpatialPlan(source_core=3, sink_core=2, duration=sched.duration + 2.0)
sink = run_spatial(plan, sched, topo, dts, seed=1)
for i, b in enumerate(sched.bits):
    end = sched.start + (i + 1) * p.T_b
    j = np.searchsorted(sink.times, end) - 1
    print(f"bit {i:2d} sent {b}: sink reads {sink.readings[j]:.0f} C")

# %% [markdown]
# ## Temporal: source and sink share core 3 in 10 ms slices

# %%
p = ChannelParams(0.010, mode="temporal")
sched = modulate(Frame("0110"), p)
trace = run_temporal(TemporalPlan(shared_core=3, slice_length=0.010), sched, topo, dts, seed=2)
for i, b in enumerate(sched.bits):
    start = (2 * i + 1) * p.T_b
    j = np.searchsorted(trace.times, start - 1e-9)
    print(f"bit {i:2d} sent {b}: first sink reading {trace.readings[j]:.0f} C "
          f"at {trace.times[j] * 1e3:.0f} ms")
