"""Counter-based uniform random streams.

All Monte Carlo draws in this package come from Philox, a counter-based
generator: the i-th value of stream `stream_id` under seed `seed` is a pure
function of (seed, stream_id, i).  Streams sit in disjoint counter blocks
2**128 apart, so sample ranges can be partitioned across workers and the
results do not depend on how the work was split.
"""

import numpy as np

_KEY_MOD = 1 << 128
_BLOCK_SHIFT = 128  # counter stride between streams; Philox counters are 256-bit


def uniforms(seed: int, stream_id: int, n: int) -> np.ndarray:
    """Return n uniforms in [0, 1) determined only by (seed, stream_id, position)."""
    bitgen = np.random.Philox(
        key=seed % _KEY_MOD,
        counter=(stream_id % _KEY_MOD) << _BLOCK_SHIFT,
    )
    return np.random.Generator(bitgen).random(n)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for sub-experiment `index`; injective for seed, index < 2**64."""
    return ((seed % (1 << 64)) << 64) | (index % (1 << 64))
