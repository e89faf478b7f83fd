"""Simulated thermal covert channels between processor cores.

A lumped RC model of an 8-core die feeds a quantized, noisy model of the
on-die sensors.  On top of that sit the two isolation regimes (cores side
by side, or one core time-shared), an ON-OFF keyed channel with preamble
sync and Hamming(7,4) coding, model and bit-period calibration, and a
correlation-based workload fingerprinting study.
"""

__version__ = "0.1.0"

from .chanstack import (ActivitySchedule, BlockResult, ChannelParams, Frame, TruncatedTrace, ber,
                        demodulate, find_preamble, modulate, receive, throughput)
from .hamming import decode_bits, encode_bits, hamming_decode, hamming_encode
from .partitioning import SpatialPlan, TemporalPlan, run_spatial, run_temporal
from .sensor import DtsConfig, SensorTrace, ThermalTrip, observe, sample
from .thermal_model import (ChipTopology, ConfigurationError, PowerModel, PowerSchedule,
                            StabilityError, ThermalState, ThermalTrace, simulate, steady_state,
                            step)

__all__ = [
    "ActivitySchedule", "BlockResult", "ChannelParams", "ChipTopology", "ConfigurationError",
    "DtsConfig", "Frame", "PowerModel", "PowerSchedule", "SensorTrace", "SpatialPlan",
    "StabilityError", "TemporalPlan", "ThermalState", "ThermalTrace", "ThermalTrip",
    "TruncatedTrace", "ber", "decode_bits", "demodulate", "encode_bits", "find_preamble",
    "hamming_decode", "hamming_encode", "modulate", "observe", "receive", "run_spatial",
    "run_temporal", "sample", "simulate", "steady_state", "step", "throughput",
]
