# %% [markdown]
# # The protocol stack
#
# Frames are a fixed 1010101010 preamble plus up to 100 payload bits.  A
# 1 heats the source for one bit period, a 0 leaves it idle.  The receiver
# looks for the preamble, then reads edges: a rise of at least 2 C is a 1, a
# fall of at least 2 C is a 0, and anything smaller repeats the last bit.

# %%
import numpy as np

from thermocovert.calibration import ChannelSetup
from thermocovert.chanstack import ChannelParams, Frame, bits_to_str, error_groups, throughput
from thermocovert.hamming import decode_bits, encode_bits, hamming_decode, hamming_encode
from thermocovert.sensor import DtsConfig

print("1011 ->", bits_to_str(hamming_encode((1, 0, 1, 1))))
word = list(hamming_encode((1, 0, 1, 1)))
word[4] ^= 1
print("one flip ->", hamming_decode(word))

# %% [markdown]
# ## A noiseless link
#
# Without sensor noise the 1-hop link at 750 ms per bit is exact.

# %%
quiet = ChannelSetup(dts=DtsConfig(noise_sigma=0.0))
res = quiet.transmit(Frame("101100"), 0.75, seed=0)
print("synced at", res.offset, "s; received", bits_to_str(res.received))

# %% [markdown]
# ## With sensor noise
#
# The receiver cannot tell a lock in the wrong place from a good one, so a
# misaligned lock shows up as a block full of bit errors.  The simulator
# knows the real frame start and flags such blocks as not aligned.
#
# Errors appear, mostly one at a time, which is what a single-error
# correcting code can handle.

# %%
rng = np.random.default_rng(7)
payload = tuple(int(b) for b in rng.integers(0, 2, 100))
noisy = ChannelSetup()
for seed in range(5):
    r = noisy.transmit(Frame(payload), 0.75, seed=seed)
    if not r.synced:
        print(f"seed {seed}: no sync")
        continue
    if not r.aligned:
        print(f"seed {seed}: preamble matched {r.offset - r.expected:+.2f} s off")
    g = error_groups(r.sent, r.padded)
    print(f"seed {seed}: BER {r.ber:.2f}, 4-bit groups with <=1 error {np.mean(g <= 1):.2f}")

# %% [markdown]
# ## Coding the payload
#
# 56 data bits become 98 coded bits, which fits in one block.

# %%
data = [int(b) for b in rng.integers(0, 2, 56)]
coded = tuple(encode_bits(data))
for seed in range(5):
    r = noisy.transmit(Frame(coded), 0.75, seed=seed)
    if r.synced:
        out = decode_bits(r.padded, len(data))
        print(f"seed {seed}: raw BER {r.ber:.2f}, "
              f"after decoding {np.mean(np.array(out) != data):.2f}")

# %% [markdown]
# ## Rates

# %%
for mode, tb in (("spatial", 0.75), ("temporal", 0.010)):
    print(mode, {acc: round(throughput(tb, mode, acc), 3)
                 for acc in ("raw", "code-rate", "paper-overhead")})
