"""Experiment plans, their execution, and byte-deterministic report files.

A plan names one experiment kind and its parameters.  ``run`` validates the
plan up front, executes it and returns an ``ExperimentReport`` whose
``trials`` are flat rows (one per trial, block or sample) and whose
``aggregates`` are recomputable from those rows.  ``emit`` writes the report
as JSON, CSV and/or whitespace-separated data for plotting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (CalibrationRow, CalibrationTable, ChannelSetup, FitTargets, fit_model,
                          neutral_start, select_min_tb, step_metrics)
from .chanstack import (PAPER_OVERHEAD_FACTOR, CODE_RATE, BlockResult, ChannelParams, Frame,
                        TruncatedTrace, bits_to_str, demodulate, error_groups, find_preamble,
                        throughput)
from .config import Config
from .fingerprint import (DEFAULT_PROFILES, RecordingPlan, ReferenceLibrary, build_library,
                          classify, correlate, pair_stats)
from .partitioning import baseline_state, idle_powers
from .sensor import SensorTrace
from .thermal_model import SUPPORTED_FREQUENCIES, PowerSchedule, power_of, simulate

KINDS = ("fig2-trace", "hop-sweep", "freq-sweep", "calibrate-tb", "ber-run", "throughput",
         "fingerprint", "fit", "replay")
PAYLOAD_GENERATOR = "numpy.random.Generator(PCG64)"

# fixed column order per kind, so an empty trial list still has a header
COLUMNS = {
    "fig2-trace": ["time_s", "core_id", "temp_c"],
    "hop-sweep": ["hop", "core_id", "steady_delta_c", "pulse_delta_c", "detectable"],
    "freq-sweep": ["frequency_ghz", "T_b_ms", "trial", "seed", "synced", "aligned", "offset_s",
                   "ber"],
    "calibrate-tb": ["frequency_ghz", "T_b_ms", "trial", "seed", "synced", "aligned", "offset_s",
                     "ber"],
    "ber-run": ["block", "seed", "synced", "aligned", "offset_s", "errors", "ber", "sent",
                "received"],
    "throughput": ["mode", "T_b_s", "accounting", "bps"],
    "fingerprint": ["workload_a", "run_a", "workload_b", "run_b", "r"],
    "fit": ["parameter", "value"],
    "replay": ["bit_index", "bit"],
}


class PlanError(ValueError):
    """The plan is invalid; raised before anything is simulated."""


@dataclass
class ExperimentPlan:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def get(self, key, default):
        return self.params.get(key, default)

    def validate(self, config: Config) -> None:
        problems = []
        if self.kind not in KINDS:
            raise PlanError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        n = config.topology.n_cores
        for key in ("frequency",):
            if key in self.params and not _is_freq(self.params[key]):
                problems.append(f"unsupported frequency {self.params[key]}")
        for f in self.params.get("frequencies", []):
            if not _is_freq(f):
                problems.append(f"unsupported frequency {f}")
        for key in ("core", "source_core"):
            if key in self.params and not 0 <= int(self.params[key]) < n:
                problems.append(f"{key} {self.params[key]} outside 0..{n - 1}")
        if "hop" in self.params and not 1 <= int(self.params["hop"]) <= 3:
            problems.append("hop must be 1, 2 or 3")
        if self.params.get("mode", "spatial") not in ("spatial", "temporal"):
            problems.append(f"unknown mode {self.params['mode']!r}")
        for key in ("T_b", "run_seconds"):
            if key in self.params and not float(self.params[key]) > 0:
                problems.append(f"{key} must be > 0")
        tb = self.params.get("tb_list")
        if tb is not None and (not tb or any(float(x) <= 0 for x in tb)):
            problems.append("tb_list must be a non-empty list of positive periods")
        if self.kind == "ber-run":
            bits, block = int(self.get("n_bits", 1000)), int(self.get("block", 100))
            if bits <= 0 or not 0 < block <= 100:
                problems.append("ber-run needs n_bits > 0 and 0 < block <= 100")
        if self.kind == "fit" and self.params.get("start", "guess") not in ("guess", "config"):
            problems.append("fit start must be 'guess' or 'config'")
        if self.kind == "replay" and "trace" not in self.params:
            problems.append("replay needs a trace path")
        if problems:
            raise PlanError("; ".join(problems))


def _is_freq(f) -> bool:
    try:
        return any(abs(float(f) - s) < 1e-9 for s in SUPPORTED_FREQUENCIES)
    except (TypeError, ValueError):
        return False


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    trials: list[dict]
    aggregates: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {"plan": asdict(self.plan), "trials": self.trials,
                "aggregates": self.aggregates, "provenance": self.provenance}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _clean(x):
    """Make a structure JSON-safe and stable: numpy scalars to Python, nan/inf to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def mean_sd(values) -> tuple[float | None, float | None]:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return None, None
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def _setup(plan: ExperimentPlan, config: Config, frequency=None) -> ChannelSetup:
    return ChannelSetup(mode=plan.get("mode", "spatial"),
                        frequency=float(plan.get("frequency", 2.9) if frequency is None else frequency),
                        hop=int(plan.get("hop", 1)), core=int(plan.get("core", 3)),
                        topology=config.topology, dts=config.sensor, model=config.power)


# ------------------------------------------------------------------ runners

def _step_trace(plan, config):
    topo, model = config.topology, config.power
    src = int(plan.get("source_core", 3))
    on_s, off_s = float(plan.get("on_seconds", 100.0)), float(plan.get("off_seconds", 40.0))
    every = int(plan.get("every", 10))
    f = float(plan.get("frequency", 2.9))
    idle = idle_powers(topo, model, None)
    on = idle.copy()
    on[src] = power_of(1.0, f, model)
    tr = simulate(topo, PowerSchedule([0.0, on_s], [on, idle], f), on_s + off_s,
                  initial=baseline_state(topo, model, None))
    rows = [{"time_s": round(float(t), 6), "core_id": src, "temp_c": round(float(v), 6)}
            for t, v in zip(tr.times[::every], tr.core(src)[::every])]
    m = step_metrics(topo, model, FitTargets(frequency=f), source=src, on_seconds=on_s,
                     off_seconds=off_s)
    agg = {"baseline_c": m.baseline, "fast_rise_c": m.fast_rise, "saturation_c": m.saturation,
           "decay_time_s": m.decay_time}
    return rows, agg


def _hops(plan, config):
    f = float(plan.get("frequency", 2.9))
    pulse = float(plan.get("pulse_seconds", 1.5))
    thr = float(plan.get("threshold", 2.0))
    m = step_metrics(config.topology, config.power, FitTargets(frequency=f), hop_pulse=pulse)
    rows = [{"hop": h, "core_id": 3 - h, "steady_delta_c": m.steady_hops[h],
             "pulse_delta_c": m.pulse_hops[h], "detectable": m.pulse_hops[h] >= thr}
            for h in range(1, len(m.steady_hops))]
    steady = [r["steady_delta_c"] for r in rows]
    agg = {"steady_strictly_decreasing": all(a > b for a, b in zip(steady, steady[1:])),
           "pulse_seconds": pulse, "threshold_c": thr}
    return rows, agg


def _sweep(plan, config, frequencies):
    tbs = [float(x) for x in plan.get("tb_list", [0.25, 0.5, 0.75, 1.0, 1.25, 1.5])]
    trials = int(plan.get("trials", 10))
    rows, table = [], CalibrationTable()
    for f in frequencies:
        setup = _setup(plan, config, f)
        frame = Frame(tuple(int(b) for b in plan.get("pattern", "10" * 50)))
        for tb in tbs:
            seeds = list(range(plan.seed, plan.seed + trials))
            for i, (s, r) in enumerate(zip(seeds, setup.repeat(frame, tb, seeds))):
                rows.append({"frequency_ghz": f, "T_b_ms": round(tb * 1000, 6), "trial": i,
                             "seed": s, "synced": r.synced, "aligned": r.aligned,
                             "offset_s": r.offset,
                             "ber": r.ber if r.synced else None})
        table.rows += calibrate_from_rows(rows, setup.label, f, trials).rows
    ceiling = float(plan.get("ber_ceiling", 15.0))
    agg = {"table": json.loads(table.to_json())["rows"], "table_csv": table.to_csv(),
           "ber_ceiling_pct": ceiling,
           "min_T_b_ms": {f"{f:.1f}": select_min_tb(table, ceiling, frequency=f)
                          for f in frequencies}}
    return rows, agg


def calibrate_from_rows(rows, label, frequency, trials) -> CalibrationTable:
    """Rebuild table rows from per-trial rows (the aggregate is recomputable)."""
    table = CalibrationTable()
    for tb in sorted({r["T_b_ms"] for r in rows if r["frequency_ghz"] == frequency}):
        cell = [r for r in rows if r["frequency_ghz"] == frequency and r["T_b_ms"] == tb]
        ok = [r["ber"] * 100 for r in cell if r["synced"]]
        mean, sd = mean_sd(ok)
        table.rows.append(CalibrationRow(tb, label, frequency, mean, len(ok), len(cell), sd))
    return table


def payload_bits(seed: int, n_bits: int) -> list[int]:
    rng = np.random.Generator(np.random.PCG64(seed))
    return [int(b) for b in rng.integers(0, 2, n_bits)]


def _ber_run(plan, config):
    setup = _setup(plan, config)
    tb = float(plan.get("T_b", 0.75 if setup.mode == "spatial" else 0.010))
    n_bits, block = int(plan.get("n_bits", 1000)), int(plan.get("block", 100))
    bits = payload_bits(plan.seed, n_bits)
    rows, results = [], []
    for b, i in enumerate(range(0, n_bits, block)):
        s = plan.seed + 1 + b
        r = setup.transmit(Frame(bits[i:i + block]), tb, seed=s)
        results.append(r)
        err = None if not r.synced else int(round(r.ber * len(r.sent)))
        rows.append({"block": b, "seed": s, "synced": r.synced, "aligned": r.aligned,
                     "offset_s": r.offset,
                     "errors": err, "ber": r.ber if r.synced else None,
                     "sent": bits_to_str(r.sent), "received": bits_to_str(r.received)})
    return rows, ber_aggregates(rows, setup.mode, tb)


def ber_aggregates(rows, mode, tb) -> dict:
    synced = [r for r in rows if r["synced"]]
    mean, sd = mean_sd(r["ber"] for r in synced)
    groups = np.concatenate([error_groups(r["sent"], _pad(r["sent"], r["received"]))
                             for r in synced]) if synced else np.array([])
    return {"blocks": len(rows), "synced_blocks": len(synced),
            "false_locks": sum(1 for r in rows if r["synced"] and not r["aligned"]),
            "sync_success": f"{len(synced)}/{len(rows)}",
            "ber_mean": mean, "ber_sd": sd,
            "p_le1_error_per_4": float(np.mean(groups <= 1)) if groups.size else None,
            "throughput_bps": _throughputs(mode, tb), "payload_generator": PAYLOAD_GENERATOR}


def _pad(sent: str, received: str) -> str:
    """Received bits with undecoded positions counted as errors."""
    res = BlockResult(tuple(int(c) for c in sent), tuple(int(c) for c in received))
    return bits_to_str(res.padded)


def _throughputs(mode, tb) -> dict:
    return {acc: throughput(tb, mode, acc) for acc in ("raw", "code-rate", "paper-overhead")}


def _throughput(plan, config):
    mode = plan.get("mode", "spatial")
    tb = float(plan.get("T_b", 0.75 if mode == "spatial" else 0.010))
    t = _throughputs(mode, tb)
    rows = [{"mode": mode, "T_b_s": tb, "accounting": k, "bps": v} for k, v in t.items()]
    note = (f"paper-overhead scales by {PAPER_OVERHEAD_FACTOR}, Hamming(7,4) code rate is "
            f"{CODE_RATE:.4f}; the two accountings disagree by design")
    return rows, {"throughput_bps": t, "note": note}


def _fingerprint(plan, config):
    rec = RecordingPlan(run_seconds=float(plan.get("run_seconds", 200.0)),
                        frequency=float(plan.get("frequency", 2.9)))
    lib = build_library(DEFAULT_PROFILES, repeats=int(plan.get("repeats", 5)),
                        topology=config.topology, dts=config.sensor, model=config.power,
                        plan=rec, seed=plan.seed)
    thr = float(plan.get("threshold", 0.85))
    st = pair_stats(lib)
    rows = []
    labels = lib.labels
    for ia, a in enumerate(labels):
        for ib, b in enumerate(labels[ia:], start=ia):
            for i, x in enumerate(lib.traces[a]):
                for j, y in enumerate(lib.traces[b]):
                    if a == b and j <= i:
                        continue
                    rows.append({"workload_a": a, "run_a": i, "workload_b": b, "run_b": j,
                                 "r": correlate(x, y)})
    same_hits = {k: st.same_fraction(k, 0.8) for k in labels}
    # classification of each trace against the library built from the other runs
    confusion = {}
    for a in labels:
        for i, tr in enumerate(lib.traces[a]):
            held = ReferenceLibrary({k: [t for j, t in enumerate(v) if not (k == a and j == i)]
                              for k, v in lib.traces.items()})
            confusion[f"{a}#{i}"] = classify(tr, held, thr).label
    agg = {"threshold": thr, "same_pairs_ge_0.8": {k: f"{h}/{n}" for k, (h, n) in same_hits.items()},
           "false_positive_rate": st.false_positive_rate(thr),
           "mean_same_r": st.mean_same, "mean_cross_r": st.mean_cross,
           "leave_one_out_labels": confusion}
    return rows, agg


def _fit(plan, config):
    targets = FitTargets(**plan.get("targets", {}))
    start = plan.get("start", "guess")
    initial = ((config.topology, config.power) if start == "config"
               else neutral_start(config.topology, config.power))
    res = fit_model(targets, initial=initial,
                    max_evals=int(plan.get("max_evals", 4000)))
    fitted = Config(res.topology, res.model, config.sensor)
    rows = [{"parameter": k, "value": v} for k, v in
            list(asdict(res.topology).items()) + list(asdict(res.model).items())]
    return rows, {"residuals": res.residuals, "evaluations": res.evaluations,
                  "metrics": asdict(res.metrics), "fitted_config": fitted.to_dict(),
                  "fitted_toml": fitted.to_toml()}


def _replay(plan, config):
    trace = SensorTrace.from_csv(plan.params["trace"], plan.params.get("core_id"))
    mode = plan.get("mode", "spatial")
    p = ChannelParams(float(plan.get("T_b", 0.75 if mode == "spatial" else 0.010)),
                      threshold=float(plan.get("threshold", 2.0)), mode=mode)
    n_bits = int(plan.get("n_bits", 100))
    off = find_preamble(trace, p)
    rows, truncated = [], False
    if off is not None:
        try:
            bits = demodulate(trace, off, 10 + n_bits, p)
        except TruncatedTrace as exc:
            bits, truncated = exc.recovered, True
        rows = [{"bit_index": i, "bit": b} for i, b in enumerate(bits[10:])]
    return rows, {"synced": off is not None, "offset_s": off, "truncated": truncated,
                  "payload": "".join(str(r["bit"]) for r in rows), "samples": len(trace)}


_RUNNERS = {
    "fig2-trace": _step_trace, "hop-sweep": _hops,
    "freq-sweep": lambda p, c: _sweep(p, c, [float(f) for f in p.get("frequencies", [2.9, 2.4, 1.9])]),
    "calibrate-tb": lambda p, c: _sweep(p, c, [float(p.get("frequency", 2.9))]),
    "ber-run": _ber_run, "throughput": _throughput, "fingerprint": _fingerprint,
    "fit": _fit, "replay": _replay,
}


def run(plan: ExperimentPlan, config: Config | None = None) -> ExperimentReport:
    config = config or Config()
    plan.validate(config)
    rows, agg = _RUNNERS[plan.kind](plan, config)
    prov = {"config_sha256": config.digest, "seed": plan.seed, "version": __version__,
            "payload_generator": PAYLOAD_GENERATOR}
    return ExperimentReport(plan, _clean(rows), _clean(agg), prov)


# ------------------------------------------------------------------ output

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trials_csv(report: ExperimentReport) -> str:
    cols = COLUMNS[report.plan.kind]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in report.trials:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def trials_gnuplot(report: ExperimentReport) -> str:
    cols = COLUMNS[report.plan.kind]
    lines = ["# " + " ".join(cols)]
    for row in report.trials:
        lines.append(" ".join(_cell(row.get(c)) or "NaN" for c in cols))
    return "\n".join(lines) + "\n"


def emit(report: ExperimentReport, out_dir, formats=("json",)) -> list[Path]:
    """Write the report; file contents depend only on the report."""
    d = Path(out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {d}: {exc}") from exc
    stem = report.plan.kind
    written = []
    for fmt in formats:
        if fmt == "json":
            p, text = d / f"{stem}.json", report.to_json()
        elif fmt == "csv":
            p, text = d / f"{stem}.csv", trials_csv(report)
        elif fmt == "gnuplot":
            p, text = d / f"{stem}.dat", trials_gnuplot(report)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        with open(p, "w", newline="") as fh:
            fh.write(text)
        written.append(p)
    if report.plan.kind in ("calibrate-tb", "freq-sweep") and "csv" in formats:
        p = d / f"{stem}_table.csv"
        with open(p, "w", newline="") as fh:
            fh.write(report.aggregates["table_csv"])
        written.append(p)
    return written
