# %% [markdown]
# # Bit-period calibration
#
# For each bit period we send the alternating 100-bit pattern many times,
# each with fresh sensor noise, and average the BER over the runs that
# found the preamble.  A cell where no run synchronises is shown as "--".

# %%
from thermocovert.calibration import ChannelSetup, calibrate_tb, select_min_tb

TB = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5]

# %% [markdown]
# ## 1 hop at three frequencies

# %%
tables = [calibrate_tb(ChannelSetup(frequency=f), TB, trials=20) for f in (2.9, 2.4, 1.9)]
merged = tables[0]
for t in tables[1:]:
    merged.rows += t.rows
print(merged.to_csv())
print("shortest T_b at <= 15% BER:", select_min_tb(merged, 15.0, frequency=2.9), "ms")

# %% [markdown]
# ## Farther sinks
#
# Two and three cores away the heat arrives too weak to cross the 2 C
# threshold at these bit periods.

# %%
for hop in (2, 3):
    print(calibrate_tb(ChannelSetup(hop=hop), [0.75, 1.5], trials=10).to_csv())

# %% [markdown]
# ## Time-shared core
#
# Slices of 10 to 30 ms.  The sink's first reading after each source slice
# still carries the source's heat.

# %%
for f in (2.9, 2.4, 1.9):
    t = calibrate_tb(ChannelSetup(mode="temporal", frequency=f), [0.010, 0.020, 0.025, 0.030],
                     trials=10)
    print(t.to_csv())
