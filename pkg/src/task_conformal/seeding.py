"""Named random streams derived from one master seed.

Every consumer asks for ``derived_rng(seed, stream, index)``; streams never
overlap and do not depend on execution order, so results are the same for
any worker count.
"""

from __future__ import annotations

import enum

import numpy as np


class Stream(enum.IntEnum):
    PROBLEM = 0
    SAMPLES = 1
    TRIALS = 2
    MULTIROUND = 3
    ACCEPTANCE = 4


def derived_rng(seed: int, stream: Stream, *index: int) -> np.random.Generator:
    """Generator for ``(stream, *index)`` under master ``seed``."""

    sequence = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(int(stream), *(int(i) for i in index))
    )
    return np.random.default_rng(sequence)


__all__ = ["Stream", "derived_rng"]
