"""Reproducible random streams.

All randomness in the package flows through the Philox4x32-10 counter-based
generator (numpy's ``np.random.Philox``).  Substreams are derived by XOR-ing
a 64-bit stream index into the seed, so a ``(seed, index)`` pair names the
same stream in every run.  Shuffling and subset selection use an explicit
Fisher-Yates walk so the consumed random variates are pinned down exactly.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for substream ``index`` of the family ``seed``."""
    key = (int(seed) ^ int(index)) & _MASK64
    return np.random.Generator(np.random.Philox(key=key))


def derived_seed(seed: int, index: int) -> int:
    """64-bit seed naming substream ``index`` of the family ``seed``."""
    return (int(seed) ^ int(index)) & _MASK64


def fisher_yates(rng: np.random.Generator, m: int) -> np.ndarray:
    """Full Fisher-Yates shuffle of ``arange(m)`` driven by ``rng``."""
    arr = np.arange(m)
    for i in range(m - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        arr[i], arr[j] = arr[j], arr[i]
    return arr


def sample_without_replacement(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    """First ``k`` entries of a partial Fisher-Yates shuffle of ``[0, m)``.

    Equivalent in distribution to drawing a uniform k-subset in order of
    selection.  ``k`` may equal ``m``.
    """
    if not 0 <= k <= m:
        raise ValueError(f"cannot sample {k} items from a population of {m}")
    arr = np.arange(m)
    for i in range(k):
        j = int(rng.integers(i, m))
        arr[i], arr[j] = arr[j], arr[i]
    return arr[:k].copy()
