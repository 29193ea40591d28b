"""Counter-based random number streams.

A stream is a pure function of (seed, stream id, counter): the k-th output
word is mix64(base + (k+1)*GAMMA) where mix64 is the splitmix64 finalizer and
base hashes (seed, stream id). Identical (seed, stream) always reproduces the
identical sequence bit for bit; distinct stream ids give statistically
independent sequences. Because outputs are addressed by absolute counter,
batched kernels can jump to any offset without replaying the stream.

Uniform doubles are ((word >> 11) + 0.5) * 2**-53, strictly inside (0, 1).
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB
BASE_G0 = 0xA0761D6478BD642F
BASE_G1 = 0xE7037ED1A0B428DB
TWO_NEG53 = 2.0**-53

_U = np.uint64


def mix64_int(z: int) -> int:
    """splitmix64 finalizer on a python int (mod 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * MIX_B) & MASK64
    return z ^ (z >> 31)


def derive_base(seed: int, stream: int) -> int:
    return mix64_int(((seed & MASK64) * BASE_G0 + (stream & MASK64) * BASE_G1) & MASK64)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(MIX_A)
    z = (z ^ (z >> _U(27))) * _U(MIX_B)
    return z ^ (z >> _U(31))


def raw_at(base: int, start: int, count: int) -> np.ndarray:
    """Output words for absolute counters start..start+count-1."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return mix64_array(_U(base) + idx * _U(GAMMA))


def uniforms_at(base: int, start: int, count: int) -> np.ndarray:
    w = raw_at(base, start, count)
    return ((w >> _U(11)).astype(np.float64) + 0.5) * TWO_NEG53


class RngStream:
    """Sequential view over the counter-based stream."""

    __slots__ = ("seed", "stream", "base", "counter")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & MASK64
        self.stream = int(stream) & MASK64
        self.base = derive_base(self.seed, self.stream)
        self.counter = 0

    def raw(self, count: int) -> np.ndarray:
        out = raw_at(self.base, self.counter, count)
        self.counter += count
        return out

    def uniforms(self, count: int) -> np.ndarray:
        out = uniforms_at(self.base, self.counter, count)
        self.counter += count
        return out

    def split(self, stream: int) -> "RngStream":
        """Fresh independent stream under the same seed."""
        return RngStream(self.seed, stream)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream}, counter={self.counter})"
