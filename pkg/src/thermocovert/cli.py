"""Command-line front end: one verb per experiment family.

Every verb builds an ``ExperimentPlan``, runs it and writes the report into
``--out``.  Failures print a JSON object ``{"error": ..., "type": ...}`` on
stderr and exit with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import Config
from .harness import ExperimentPlan, emit, run


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML file with [topology], [power], [sensor] sections")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", default="json", help="comma list of json, csv, gnuplot")
    return p


def _channel(p: argparse.ArgumentParser, default_tb: float | None = None):
    p.add_argument("--mode", choices=("spatial", "temporal"), default="spatial")
    p.add_argument("--hop", type=int, default=1, help="spatial: sink distance from core 3")
    p.add_argument("--core", type=int, default=3, help="temporal: shared core")
    p.add_argument("--frequency", type=float, default=2.9, help="GHz")
    if default_tb is not None:
        p.add_argument("--tb", type=float, default=None,
                       help="bit period / time slice in seconds")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="thermocovert", parents=[common],
                                     description="Thermal covert-channel simulator")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit thermal constants to step targets")
    p.add_argument("--fast-rise", type=float, default=5.7)
    p.add_argument("--saturation", type=float, default=43.0)
    p.add_argument("--decay-time", type=float, default=11.0)
    p.add_argument("--baseline", type=float, default=35.0)
    p.add_argument("--one-hop-pulse", type=float, default=2.15)
    p.add_argument("--max-evals", type=int, default=4000)
    p.add_argument("--start", choices=("guess", "config"), default="guess",
                   help="start from the neutral guess or from the loaded config")

    p = sub.add_parser("simulate", parents=[common], help="step response or hop sweep")
    p.add_argument("--experiment", choices=("fig2-trace", "hop-sweep"), default="fig2-trace")
    p.add_argument("--on-seconds", type=float, default=100.0)
    p.add_argument("--off-seconds", type=float, default=40.0)
    p.add_argument("--frequency", type=float, default=2.9)
    p.add_argument("--every", type=int, default=10, help="keep every n-th 1 ms sample")

    p = sub.add_parser("calibrate", parents=[common], help="BER of the alternating pattern per T_b")
    _channel(p)
    p.add_argument("--tb-list", type=_floats, default=None, help="comma list, seconds")
    p.add_argument("--frequencies", type=_floats, default=None,
                   help="comma list; runs a frequency sweep instead of one column")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--ber-ceiling", type=float, default=15.0, help="percent")

    p = sub.add_parser("ber", parents=[common], help="pseudorandom payload in 100-bit blocks")
    _channel(p, default_tb=0.75)
    p.add_argument("--bits", type=int, default=1000)

    p = sub.add_parser("throughput", parents=[common], help="rate under both accountings")
    p.add_argument("--mode", choices=("spatial", "temporal"), default="spatial")
    p.add_argument("--tb", type=float, default=None)

    p = sub.add_parser("fingerprint", parents=[common], help="workload correlation study")
    p.add_argument("--run-seconds", type=float, default=200.0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.85)

    p = sub.add_parser("replay", parents=[common], help="decode a sensor trace CSV")
    p.add_argument("trace", help="CSV with time_s,core_id,reading_c (or temp_c)")
    p.add_argument("--mode", choices=("spatial", "temporal"), default="spatial")
    p.add_argument("--tb", type=float, default=None)
    p.add_argument("--bits", type=int, default=100)
    p.add_argument("--core-id", type=int, default=None)
    p.add_argument("--threshold", type=float, default=2.0)
    return parser


def plan_from_args(a: argparse.Namespace) -> ExperimentPlan:
    v = a.verb
    if v == "fit":
        return ExperimentPlan("fit", {"targets": {
            "fast_rise": a.fast_rise, "saturation": a.saturation, "decay_time": a.decay_time,
            "idle_baseline": a.baseline, "one_hop_pulse": a.one_hop_pulse},
            "max_evals": a.max_evals, "start": a.start}, a.seed)
    if v == "simulate":
        return ExperimentPlan(a.experiment, {"on_seconds": a.on_seconds,
                                             "off_seconds": a.off_seconds,
                                             "frequency": a.frequency, "every": a.every}, a.seed)
    chan = {}
    if hasattr(a, "hop"):
        chan = {"mode": a.mode, "hop": a.hop, "core": a.core, "frequency": a.frequency}
    if v == "calibrate":
        params = dict(chan, trials=a.trials, ber_ceiling=a.ber_ceiling)
        if a.tb_list:
            params["tb_list"] = a.tb_list
        elif a.mode == "temporal":
            params["tb_list"] = [0.010, 0.020, 0.025, 0.030]
        if a.frequencies:
            params["frequencies"] = a.frequencies
            return ExperimentPlan("freq-sweep", params, a.seed)
        return ExperimentPlan("calibrate-tb", params, a.seed)
    if v == "ber":
        params = dict(chan, n_bits=a.bits)
        if a.tb is not None:
            params["T_b"] = a.tb
        return ExperimentPlan("ber-run", params, a.seed)
    if v == "throughput":
        params = {"mode": a.mode}
        if a.tb is not None:
            params["T_b"] = a.tb
        return ExperimentPlan("throughput", params, a.seed)
    if v == "fingerprint":
        return ExperimentPlan("fingerprint", {"run_seconds": a.run_seconds,
                                              "repeats": a.repeats,
                                              "threshold": a.threshold}, a.seed)
    params = {"trace": a.trace, "mode": a.mode, "n_bits": a.bits, "threshold": a.threshold}
    if a.tb is not None:
        params["T_b"] = a.tb
    if a.core_id is not None:
        params["core_id"] = a.core_id
    return ExperimentPlan("replay", params, a.seed)


def _fail(exc: BaseException, code: int = 1) -> int:
    print(json.dumps({"error": str(exc), "type": type(exc).__name__}, sort_keys=True),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail(ValueError("invalid command line"), 2)
    try:
        formats = [f.strip() for f in args.format.split(",") if f.strip()]
        bad = set(formats) - {"json", "csv", "gnuplot"}
        if bad:
            raise ValueError(f"unknown format(s) {sorted(bad)}")
        config = Config.load(args.config) if args.config else Config()
        report = run(plan_from_args(args), config)
        paths = emit(report, args.out, formats)
        if args.verb == "fit":
            paths.append(Config.from_dict(report.aggregates["fitted_config"]).save(
                f"{args.out}/fitted.toml"))
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error object
        return _fail(exc)
    print(json.dumps({"written": [str(p) for p in paths]}, sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
