"""ON-OFF keying over temperature: framing, modulation, sync and edge decoding.

Spatial mode: one bit per period T_b; the source core runs flat out for a
1 and idles for a 0, the sink watches its own core.

Temporal mode: source and sink alternate slices of length t_s on one core
(stored in ``ChannelParams.T_b``).  A bit occupies one source slice and is
read in the sink slice right after it, so bits are spaced 2 t_s apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.ndimage import minimum_filter1d

from .hamming import decode_bits, encode_bits, hamming_decode, hamming_encode  # noqa: F401
from .sensor import SensorTrace

PREAMBLE: tuple[int, ...] = (1, 0) * 5
MAX_PAYLOAD = 100
CODE_RATE = 4 / 7
PAPER_OVERHEAD_FACTOR = 0.25

Mode = Literal["spatial", "temporal"]


class TruncatedTrace(ValueError):
    """The trace ends before all requested bit periods were observed."""

    def __init__(self, recovered: list[int], wanted: int):
        super().__init__(f"trace covers only {len(recovered)} of {wanted} bits")
        self.recovered = recovered
        self.wanted = wanted


def _as_bits(bits) -> tuple[int, ...]:
    if isinstance(bits, str):
        bits = [c for c in bits if not c.isspace()]
    out = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in out):
        raise ValueError("bits must be 0 or 1")
    return out


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True)
class Frame:
    payload: tuple[int, ...] = ()
    preamble: tuple[int, ...] = PREAMBLE

    def __post_init__(self):
        object.__setattr__(self, "payload", _as_bits(self.payload))
        object.__setattr__(self, "preamble", _as_bits(self.preamble))
        if self.preamble != PREAMBLE:
            raise ValueError("preamble must be 1010101010")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(f"payload limited to {MAX_PAYLOAD} bits per block")

    @property
    def bits(self) -> tuple[int, ...]:
        return self.preamble + self.payload

    def to_json(self, params: "ChannelParams") -> str:
        return json.dumps({"preamble": bits_to_str(self.preamble),
                           "payload": bits_to_str(self.payload),
                           "T_b": params.T_b, "mode": params.mode}, sort_keys=True)


def blocks(payload, block_size: int = MAX_PAYLOAD) -> list[Frame]:
    """Split a long payload into preamble-framed blocks."""
    payload = _as_bits(payload)
    return [Frame(payload[i:i + block_size]) for i in range(0, len(payload), block_size)]


@dataclass(frozen=True)
class ChannelParams:
    T_b: float
    threshold: float = 2.0
    mode: Mode = "spatial"
    resolution: float = 1.0

    def __post_init__(self):
        if not self.T_b > 0:
            raise ValueError("T_b must be > 0")
        if self.mode not in ("spatial", "temporal"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.threshold < self.resolution:
            raise ValueError("threshold must be >= sensor resolution")

    @property
    def spacing(self) -> float:
        """Time between consecutive bits."""
        return self.T_b if self.mode == "spatial" else 2 * self.T_b

    @property
    def read_lag(self) -> float:
        """Where, after a bit's nominal start, the demodulator reads it."""
        # middle of the last quarter (spatial) or the first sink sample (temporal)
        return 0.875 * self.T_b if self.mode == "spatial" else self.T_b

    def lands_on_bit(self, offset: float, frame_start: float) -> bool:
        """True when a lock at ``offset`` reads every bit inside its own period."""
        d = offset + self.read_lag - frame_start
        return -1e-9 <= d < self.spacing - 1e-9


@dataclass
class ActivitySchedule:
    """Source ON/OFF decisions; bit i starts at ``start + i * spacing``."""

    bits: tuple[int, ...]
    params: ChannelParams
    start: float = 0.0

    @property
    def duration(self) -> float:
        return self.start + len(self.bits) * self.params.spacing

    def intervals(self) -> list[tuple[float, float, bool]]:
        """(begin, end, on) for every source interval, one per bit."""
        sp, tb = self.params.spacing, self.params.T_b
        return [(self.start + i * sp, self.start + i * sp + tb, bool(b))
                for i, b in enumerate(self.bits)]


def modulate(frame: Frame, params: ChannelParams, start: float = 0.0) -> ActivitySchedule:
    return ActivitySchedule(frame.bits, params, start)


@dataclass
class _Windows:
    lo: np.ndarray
    hi: np.ndarray
    covered: np.ndarray


def _bit_windows(trace: SensorTrace, offset: float, n_bits: int, params: ChannelParams):
    """Index ranges of the samples that represent each bit."""
    i = np.arange(n_bits)
    if params.mode == "spatial":
        begin = offset + i * params.T_b
    else:
        begin = offset + (2 * i + 1) * params.T_b
    end = begin + params.T_b
    eps = 1e-9
    lo = np.searchsorted(trace.times, begin - eps, side="left")
    hi = np.searchsorted(trace.times, end - eps, side="left")
    last = trace.times[-1] if len(trace) else -np.inf
    covered = (hi > lo) & (end - eps <= last + (trace.times[1] - trace.times[0] if len(trace) > 1 else 0))
    return _Windows(lo, hi, covered)


def _representative(readings: np.ndarray, mode: Mode) -> float:
    # spatial: median of the last quarter; temporal: first sink-slice sample,
    # i.e. the temperature the source left behind
    if mode == "temporal":
        return float(readings[0])
    n = len(readings)
    return float(np.median(readings[n - max(1, -(-n // 4)):]))


def _baseline(trace: SensorTrace, offset: float) -> float | None:
    j = int(np.searchsorted(trace.times, offset - 1e-9, side="left"))
    return None if j == 0 else float(trace.readings[j - 1])


def demodulate(trace: SensorTrace, offset: float, n_bits: int, params: ChannelParams) -> list[int]:
    """Edge-detection decoding of ``n_bits`` starting at ``offset``.

    Rise >= threshold gives 1, fall >= threshold gives 0, anything smaller
    repeats the previous bit.  The first bit is compared with the last
    reading before ``offset``.
    """
    win = _bit_windows(trace, offset, n_bits, params)
    prev = _baseline(trace, offset)
    if prev is None:
        prev = float(trace.readings[win.lo[0]]) if len(trace) and win.covered[0] else 0.0
    bit = 0
    out: list[int] = []
    for k in range(n_bits):
        if not win.covered[k]:
            raise TruncatedTrace(out, n_bits)
        rep = _representative(trace.readings[win.lo[k]:win.hi[k]], params.mode)
        if rep - prev >= params.threshold:
            bit = 1
        elif prev - rep >= params.threshold:
            bit = 0
        out.append(bit)
        prev = rep
    return out


def _decodes_preamble(trace, offset, params) -> bool:
    try:
        return tuple(demodulate(trace, offset, len(PREAMBLE), params)) == PREAMBLE
    except TruncatedTrace:
        return False


def _candidate_offsets(trace: SensorTrace, params: ChannelParams) -> np.ndarray:
    t, r = trace.times, trace.readings
    if params.mode == "temporal":
        sp = params.spacing
        k = np.arange(1, int(np.floor((t[-1] - t[0]) / sp)) + 1)
        return np.floor(t[0] / sp + 1e-9) * sp + k * sp
    # spatial: every first crossing of the threshold above the minimum of the
    # preceding bit period, backed off by 0..3/8 T_b to reach the bit start
    step = float(np.median(np.diff(t))) if len(t) > 1 else params.T_b
    n = max(1, int(round(params.T_b / step)))
    n += 1 - n % 2
    h = (n - 1) // 2
    prev_min = np.empty_like(r)
    prev_min[1:] = minimum_filter1d(r, size=n, mode="nearest", origin=h)[:-1]
    prev_min[0] = r[0]
    above = (r - prev_min) >= params.threshold
    rising = np.flatnonzero(above & ~np.concatenate(([True], above[:-1])))
    backoff = np.arange(4) * params.T_b / 8
    cand = (t[rising][:, None] - backoff[None, :]).ravel()
    return np.unique(cand[cand > t[0]])


def find_preamble(trace: SensorTrace, params: ChannelParams) -> float | None:
    """Earliest offset from which the next ten bit periods decode as the preamble."""
    if len(trace) < 2:
        return None
    for off in _candidate_offsets(trace, params):
        if _decodes_preamble(trace, off, params):
            return float(off)
    return None


def receive(trace: SensorTrace, n_payload: int, params: ChannelParams):
    """Sync then decode one block.  Returns (offset, payload bits) or (None, [])."""
    off = find_preamble(trace, params)
    if off is None:
        return None, []
    try:
        bits = demodulate(trace, off, len(PREAMBLE) + n_payload, params)
    except TruncatedTrace as exc:
        bits = exc.recovered
    return off, bits[len(PREAMBLE):]


def ber(sent, received) -> float:
    sent, received = _as_bits(sent), _as_bits(received)
    if len(sent) != len(received):
        raise ValueError(f"length mismatch: {len(sent)} sent vs {len(received)} received")
    if not sent:
        raise ValueError("empty bit sequences")
    return sum(a != b for a, b in zip(sent, received)) / len(sent)


def throughput(T_b: float, mode: Mode = "spatial", accounting: str = "code-rate") -> float:
    """Effective rate in bit/s.

    Raw rate is 1/T_b (spatial) or 1/(2 t_s) (temporal).  ``code-rate``
    scales by the Hamming(7,4) rate 4/7; ``paper-overhead`` scales by 1/4.
    """
    if not T_b > 0:
        raise ValueError("T_b must be > 0")
    raw = 1.0 / T_b if mode == "spatial" else 1.0 / (2.0 * T_b)
    if accounting == "code-rate":
        return raw * CODE_RATE
    if accounting == "paper-overhead":
        return raw * PAPER_OVERHEAD_FACTOR
    if accounting == "raw":
        return raw
    raise ValueError(f"unknown accounting {accounting!r}")


def error_groups(sent, received, group: int = 4) -> np.ndarray:
    """Error count per consecutive ``group``-bit chunk (partial tail dropped)."""
    err = np.array(_as_bits(sent)) != np.array(_as_bits(received))
    n = len(err) // group * group
    return err[:n].reshape(-1, group).sum(axis=1)


@dataclass
class BlockResult:
    """Outcome of one block.

    ``offset`` is where the receiver locked on (None if no preamble was
    found, which is the only kind of sync failure).  When the true frame
    start ``expected`` and the channel ``params`` are known, ``aligned``
    tells whether that lock reads each bit inside its own period; a
    misaligned lock still counts as synced and its wrong bits count as bit
    errors.
    """

    sent: tuple[int, ...]
    received: tuple[int, ...] = ()
    offset: float | None = None
    expected: float | None = None
    params: ChannelParams | None = None
    extra: dict = field(default_factory=dict)

    @property
    def synced(self) -> bool:
        return self.offset is not None

    @property
    def aligned(self) -> bool:
        if self.offset is None:
            return False
        if self.expected is None or self.params is None:
            return True
        return self.params.lands_on_bit(self.offset, self.expected)

    @property
    def padded(self) -> tuple[int, ...]:
        """Received bits, with undecoded positions filled by the complement of sent."""
        got = list(self.received[:len(self.sent)])
        got += [1 - b for b in self.sent[len(got):]]
        return tuple(got)

    @property
    def ber(self) -> float:
        return ber(self.sent, self.padded)
