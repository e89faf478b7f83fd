import csv
import io
import json

import numpy as np
import pytest

from thermocovert.harness import (COLUMNS, ExperimentPlan, PlanError, emit, payload_bits, run,
                                  trials_csv)
from thermocovert.sensor import SensorTrace


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("kind,params", [
    ("calibrate-tb", {"tb_list": [0.5, 1.0], "trials": 2}),
    ("ber-run", {"n_bits": 200, "T_b": 0.5}),
    ("hop-sweep", {}),
])
def test_reports_are_byte_identical(tmp_path, kind, params):
    outs = []
    for name in ("a", "b"):
        paths = emit(run(ExperimentPlan(kind, dict(params), seed=4)), tmp_path / name,
                     ["json", "csv", "gnuplot"])
        outs.append([p.read_bytes() for p in paths])
    assert outs[0] == outs[1]


def test_payload_generator_is_pcg64():
    ref = np.random.Generator(np.random.PCG64(9)).integers(0, 2, 50)
    assert payload_bits(9, 50) == ref.tolist()


def test_step_trace_shape():
    rep = run(ExperimentPlan("fig2-trace", {"every": 100}))
    rows = rep.trials
    temps = np.array([r["temp_c"] for r in rows])
    times = np.array([r["time_s"] for r in rows])
    assert temps[0] == pytest.approx(35.0, abs=0.2)
    assert temps[times <= 100.0].max() == pytest.approx(43.0, abs=1.0)
    assert temps[-1] - temps[0] < 1.0
    assert rep.aggregates["fast_rise_c"] == pytest.approx(5.0, abs=1.0)


def test_calibrate_table_csv_layout(tmp_path):
    rep = run(ExperimentPlan("calibrate-tb", {"tb_list": [0.25, 0.5], "trials": 2}))
    paths = emit(rep, tmp_path, ["csv"])
    table = (tmp_path / "calibrate-tb_table.csv").read_text().splitlines()
    assert table[0] == "T_b_ms,1-hop @ 2.9 GHz"
    assert [line.split(",")[0] for line in table[1:]] == ["250", "500"]
    assert len(read_csv(paths[0].read_text())) == 4


def test_sweep_aggregates_recomputable_from_trials():
    rep = run(ExperimentPlan("calibrate-tb", {"tb_list": [0.5], "trials": 4}, seed=2))
    ok = [r["ber"] for r in rep.trials if r["synced"]]
    assert rep.aggregates["table"][0]["ber_pct"] == pytest.approx(100 * np.mean(ok))
    assert rep.aggregates["table"][0]["synced"] == len(ok)


def test_freq_sweep_marks_low_frequency_undecodable():
    rep = run(ExperimentPlan("freq-sweep", {"tb_list": [1.5], "trials": 2,
                                            "frequencies": [2.9, 1.9]}))
    lines = rep.aggregates["table_csv"].splitlines()
    assert lines[0] == "T_b_ms,1-hop @ 2.9 GHz,1-hop @ 1.9 GHz"
    assert lines[1].endswith(",--")
    assert rep.aggregates["min_T_b_ms"]["1.9"] is None


def test_throughput_plan():
    rep = run(ExperimentPlan("throughput", {"mode": "temporal", "T_b": 0.010}))
    t = rep.aggregates["throughput_bps"]
    assert t["paper-overhead"] == 12.5
    assert t["code-rate"] == pytest.approx(28.571428, rel=1e-6)


def test_temporal_ber_run():
    rep = run(ExperimentPlan("ber-run", {"mode": "temporal", "T_b": 0.010}))
    assert rep.aggregates["sync_success"] == "10/10"
    assert rep.aggregates["ber_mean"] <= 0.12
    assert len(rep.trials) == 10
    assert all(len(r["sent"]) == 100 for r in rep.trials)


def test_spatial_ber_run_band():
    rep = run(ExperimentPlan("ber-run", {"mode": "spatial", "T_b": 0.75}))
    assert rep.aggregates["synced_blocks"] > 0
    assert abs(100 * rep.aggregates["ber_mean"] - 11.3) <= 6.0


def test_hop_sweep_rows():
    rep = run(ExperimentPlan("hop-sweep", {}))
    assert [r["hop"] for r in rep.trials] == [1, 2, 3]
    assert rep.aggregates["steady_strictly_decreasing"]
    assert rep.trials[0]["detectable"] and not rep.trials[2]["detectable"]


def test_replay_of_flat_trace_gives_headers_only(tmp_path):
    t = np.arange(0, 10.0, 0.002)
    SensorTrace(t, np.full(len(t), 35.0), core_id=2).to_csv(tmp_path / "flat.csv")
    rep = run(ExperimentPlan("replay", {"trace": str(tmp_path / "flat.csv"), "T_b": 0.5}))
    assert rep.trials == [] and rep.aggregates["synced"] is False
    assert trials_csv(rep) == ",".join(COLUMNS["replay"]) + "\n"


def test_replay_decodes_exported_trace(tmp_path):
    from thermocovert.calibration import ChannelSetup
    from thermocovert.chanstack import Frame
    from thermocovert.sensor import DtsConfig
    setup = ChannelSetup(dts=DtsConfig(noise_sigma=0.0))
    (trace, _), _ = setup._run(Frame("110100"), 0.75, seed=0)
    trace.to_csv(tmp_path / "t.csv")
    rep = run(ExperimentPlan("replay", {"trace": str(tmp_path / "t.csv"), "T_b": 0.75,
                                        "n_bits": 6}))
    assert rep.aggregates["payload"] == "110100"


def test_report_provenance():
    rep = run(ExperimentPlan("throughput", {}, seed=5))
    doc = json.loads(rep.to_json())
    assert set(doc) == {"plan", "trials", "aggregates", "provenance"}
    assert doc["provenance"]["seed"] == 5
    assert len(doc["provenance"]["config_sha256"]) == 64


@pytest.mark.parametrize("plan", [
    ExperimentPlan("nope"),
    ExperimentPlan("ber-run", {"frequency": 3.3}),
    ExperimentPlan("ber-run", {"hop": 5}),
    ExperimentPlan("ber-run", {"block": 500}),
    ExperimentPlan("calibrate-tb", {"tb_list": []}),
    ExperimentPlan("replay", {}),
])
def test_invalid_plans_fail_early(plan):
    with pytest.raises(PlanError):
        run(plan)


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit(run(ExperimentPlan("throughput", {})), tmp_path, ["xml"])
