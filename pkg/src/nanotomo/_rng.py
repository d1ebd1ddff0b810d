"""Counter-based random streams keyed on ``(seed, index)``.

Each index gets a Philox generator whose counter starts in the top 64-bit
word, so streams for different indices never overlap and the draw for a given
``(seed, index)`` does not depend on evaluation order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    bitgen = np.random.Philox(key=seed & ((1 << 128) - 1), counter=[0, 0, 0, index & _MASK64])
    return np.random.Generator(bitgen)
