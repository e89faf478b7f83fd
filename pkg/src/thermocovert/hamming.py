"""Hamming(7,4) with parity at positions 1, 2, 4 and data at 3, 5, 6, 7 (1-indexed)."""

from __future__ import annotations

DATA_POSITIONS = (3, 5, 6, 7)
PARITY_POSITIONS = (1, 2, 4)


def _bits(seq, n):
    bits = tuple(int(b) for b in seq)
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ValueError(f"expected {n} bits, got {seq!r}")
    return bits


def hamming_encode(data) -> tuple[int, ...]:
    d1, d2, d3, d4 = _bits(data, 4)
    p1 = d1 ^ d2 ^ d4
    p2 = d1 ^ d3 ^ d4
    p4 = d2 ^ d3 ^ d4
    return (p1, p2, d1, p4, d2, d3, d4)


def syndrome(word) -> int:
    """1-based position of the flipped bit, 0 for a valid codeword."""
    w = _bits(word, 7)
    s = 0
    for pos, bit in enumerate(w, start=1):
        if bit:
            s ^= pos
    return s


def hamming_decode(received) -> tuple[tuple[int, ...], bool]:
    """Return (data nibble, corrected flag).

    Any single flipped bit is repaired.  Double errors yield a wrong nibble
    without warning, as the code cannot see them.
    """
    w = list(_bits(received, 7))
    s = syndrome(w)
    if s:
        w[s - 1] ^= 1
    return tuple(w[p - 1] for p in DATA_POSITIONS), bool(s)


def encode_bits(bits) -> list[int]:
    """Encode a bit string nibble by nibble, zero-padding the last nibble."""
    bits = [int(b) for b in bits]
    bits += [0] * (-len(bits) % 4)
    out: list[int] = []
    for i in range(0, len(bits), 4):
        out.extend(hamming_encode(bits[i:i + 4]))
    return out


def decode_bits(bits, n_data: int | None = None) -> list[int]:
    bits = [int(b) for b in bits]
    if len(bits) % 7:
        raise ValueError("coded length must be a multiple of 7")
    out: list[int] = []
    for i in range(0, len(bits), 7):
        out.extend(hamming_decode(bits[i:i + 7])[0])
    return out if n_data is None else out[:n_data]
