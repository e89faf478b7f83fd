# %% [markdown]
# # Experiment plans and reports
#
# Every study in the package is also an ``ExperimentPlan``.  Running a plan
# returns a report with per-trial rows, aggregates and provenance.  Reports
# written twice from the same plan and config are byte-identical.  The same
# plans are reachable from the ``thermocovert`` command.

# %%
import filecmp
import tempfile
from pathlib import Path

from thermocovert.harness import ExperimentPlan, emit, run

plan = ExperimentPlan("ber-run", {"mode": "spatial", "T_b": 0.75}, seed=0)
report = run(plan)
agg = report.aggregates
print("sync", agg["sync_success"], "mean BER", round(agg["ber_mean"], 4),
      "P(<=1 err / 4 bits)", round(agg["p_le1_error_per_4"], 3))

# %%
out = Path(tempfile.mkdtemp())
a = emit(run(plan), out / "a", ["json", "csv", "gnuplot"])
b = emit(run(plan), out / "b", ["json", "csv", "gnuplot"])
print([filecmp.cmp(x, y, shallow=False) for x, y in zip(a, b)])

# %% [markdown]
# The command-line equivalent:
#
#     thermocovert ber --mode spatial --tb 0.75 --seed 0 --out out --format json,csv
#     thermocovert calibrate --frequencies 2.9,2.4,1.9 --trials 10 --out out --format csv
#     thermocovert simulate --experiment hop-sweep --out out

# %%
rep = run(ExperimentPlan("throughput", {"mode": "temporal", "T_b": 0.010}))
print(rep.aggregates["throughput_bps"])
