"""
Counter-based random streams.

Every random draw in lslasso comes from a Philox generator keyed by
``(seed, trial, stream)``. The key does not depend on scheduling, so a trial
produces the same numbers whether it runs first, last, or on another thread.
"""

from typing import Union

import numpy as np

from .enums import Stream

__all__ = ["stream", "stream_key"]


def stream_key(seed: int, trial: int, stream_id: Union[int, Stream], *extra: int) -> np.ndarray:
    """Return the 128-bit Philox key derived from (seed, trial, stream_id, *extra)."""
    words = [int(seed), int(trial), int(stream_id), *(int(x) for x in extra)]
    if any(w < 0 for w in words):
        raise ValueError("seed, trial, stream id and extra words must be non-negative")
    words[0] &= 0xFFFFFFFFFFFFFFFF
    return np.random.SeedSequence(words).generate_state(2, dtype=np.uint64)


def stream(seed: int, trial: int, stream_id: Union[int, Stream], *extra: int) -> np.random.Generator:
    """
    Return an independent generator for one (seed, trial, purpose) triple.

    Parameters:

        seed (int): 64-bit run seed.
        trial (int): trial index, or 0 for per-run draws such as the design.
        stream_id (Stream): purpose of the draws (design, noise, search, ...).
        extra (int): further key words, e.g. the columns of an RE support.

    Returns:

        numpy.random.Generator: Philox-backed generator with counter at zero.
    """
    return np.random.Generator(np.random.Philox(key=stream_key(seed, trial, stream_id, *extra)))
