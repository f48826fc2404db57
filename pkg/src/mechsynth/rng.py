"""SplitMix64: a fixed 64-bit counter-based PRNG.

Used wherever reproducibility must hold byte-for-byte across platforms and
library versions (dataset generation, randomized test corpora). The update
and output functions follow the published SplitMix64 reference constants.
"""

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive, via rejection sampling."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        nbits = max(1, span.bit_length())
        mask = (1 << nbits) - 1
        while True:
            v = self.next_u64() & mask
            if v < span:
                return lo + v

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]
