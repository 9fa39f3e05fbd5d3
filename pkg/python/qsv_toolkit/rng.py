"""Counter-based random streams keyed by (seed, index).

Philox produces its output in blocks of four 64-bit words, one block per
counter value. Round k reads the block with counter k + 1 (numpy advances
the counter before the first block), so the numbers drawn for round k never
depend on which other rounds were simulated, in which order or on which
thread.
"""

import numpy as np

# Philox keys are 128-bit; larger seeds are rejected rather than truncated.
MAX_SEED = 2**128 - 1
# Uniforms available per round (one Philox block).
UNIFORMS_PER_ROUND = 4


def check_seed(seed: int) -> int:
    """Validate an explicit seed.

    Raises:
        ValueError: If seed is not an integer in [0, 2^128)
    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValueError(f"Seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"Seed must lie in [0, 2^128), got {seed}")
    return seed


class RoundRandom:
    """Deterministic per-index randomness derived from one master seed.

    Distinct streams (e.g. protocol rounds vs. product-state sampling) use
    different high counter words and never overlap.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = check_seed(seed)
        self.stream = int(stream)

    def round_uniforms(self, start: int, stop: int) -> np.ndarray:
        """Uniforms in [0, 1) for rounds start..stop-1, one row per round."""
        if not 0 <= start <= stop:
            raise ValueError(f"Invalid round range [{start}, {stop})")
        bit_generator = np.random.Philox(key=self.seed, counter=[start, 0, self.stream, 0])
        values = np.random.Generator(bit_generator).random(UNIFORMS_PER_ROUND * (stop - start))
        return values.reshape(stop - start, UNIFORMS_PER_ROUND)

    def generator(self, index: int) -> np.random.Generator:
        """Independent generator for sample index."""
        if index < 0:
            raise ValueError(f"Index must be non-negative, got {index}")
        bit_generator = np.random.Philox(
            key=self.seed, counter=[0, index, self.stream, 1]
        )
        return np.random.Generator(bit_generator)

    def __repr__(self) -> str:
        return f"RoundRandom(seed={self.seed}, stream={self.stream})"
