# %% [markdown]
# # Telling workloads apart
#
# A victim runs one of five synthetic workloads on core 3; the observer
# logs its own core 2 for 200 s of work plus idle padding.  Traces of the
# same workload correlate strongly; different constant-load workloads
# differ mostly in level, which Pearson correlation ignores, so some cross
# pairs correlate strongly too.

# %%
import numpy as np

from thermocovert.fingerprint import DEFAULT_PROFILES, build_library, classify, pair_stats

for p in DEFAULT_PROFILES:
    print(f"{p.name:10s} activity {p.activity:.2f}, duty {p.duty:.1f} every {p.period:.0f} s")

lib = build_library(repeats=5, seed=0)
stats = pair_stats(lib)

# %%
for name, r in stats.same.items():
    print(f"{name:10s} same-workload r: min {min(r):.3f}, mean {np.mean(r):.3f}")
for (a, b), r in stats.cross.items():
    print(f"{a:>10s} vs {b:10s} mean r {np.mean(r):.3f}")
print(f"false positives at r >= 0.85: {stats.false_positive_rate(0.85):.1%}")

# %% [markdown]
# ## Classifying a fresh recording

# %%
fresh = build_library(repeats=2, seed=99)
for name in lib.labels:
    result = classify(fresh.traces[name][0], lib)
    print(f"{name:10s} -> {result.label}")
