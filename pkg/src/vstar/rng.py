"""Counter-based normal variates.

Every draw is addressed by ``(seed, period, stream, participant_index)``.
The Philox-4x64 counter is set to ``[index // 4, period, stream, 0]`` under
key ``seed``, so any slice of participants can be generated independently
and the result never depends on how the population is chunked.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

STREAM_HIGH = 0
STREAM_LOW = 1

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


def uniforms(seed: int, period: int, stream: int, start: int, stop: int) -> np.ndarray:
    """Open-interval uniforms on ``(0, 1)`` for participants ``start <= i < stop``."""
    if stop <= start:
        return np.empty(0, dtype=np.float64)
    block = start // 4
    offset = start - 4 * block
    count = stop - start
    nblocks = -(-(offset + count) // 4)
    bitgen = np.random.Philox(key=seed & _MASK64, counter=[block, period, stream, 0])
    raw = bitgen.random_raw(4 * nblocks)[offset : offset + count]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def normals(seed: int, period: int, stream: int, start: int, stop: int) -> np.ndarray:
    """Standard normals by inverse-CDF transform; exactly one uniform per variate."""
    return ndtri(uniforms(seed, period, stream, start, stop))
