"""Seeded random streams.

Every sampling routine takes an explicit ``numpy.random.Generator``. Streams
built here use the counter-based Philox bit generator keyed by a root seed
and an integer path, so sub-stream ``i`` can be rebuilt from its index alone.
That is what keeps parallel sweeps reproducible regardless of worker count.
"""

from __future__ import annotations

import numpy as np

Stream = np.random.Generator


def stream(seed: int, *path: int) -> Stream:
    """Return the stream for ``seed`` at the given spawn path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def substream(parent: Stream, index: int) -> Stream:
    """Child stream ``index`` of ``parent``.

    Depends only on the parent's seed material, not on how much of the
    parent has been consumed.
    """
    ss = parent.bit_generator.seed_seq
    child = np.random.SeedSequence(entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(index),))
    return np.random.Generator(np.random.Philox(child))


def as_stream(source: int | Stream | None) -> Stream:
    if isinstance(source, np.random.Generator):
        return source
    if source is None:
        raise ValueError("an explicit seed or stream is required")
    return stream(int(source))
