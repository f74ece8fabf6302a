"""Counter-based random streams derived from one master seed.

A stream is identified by ``(seed, tag)``; tags name the consumer (walks,
base points, the independent measure of a verification run). Walks are drawn
in fixed-size blocks and block ``b`` of a stream is a Philox generator keyed
by ``(seed, tag)`` with its counter starting at ``b << 64``. Results are
therefore identical no matter how blocks are spread over threads.
"""

from __future__ import annotations

import numpy as np

BLOCK = 4096

TAG_WALK = 0x01
TAG_BASE_POINT = 0x02
TAG_GREEN_BASE = 0x03
TAG_INDEPENDENT_WALK = 0x04
TAG_JULIA = 0x05
TAG_SUBSAMPLE = 0x06

SUBCOMMAND_TAGS = {
    "julia": 0x100,
    "measure": 0x200,
    "green": 0x300,
    "verify": 0x400,
    "capacity": 0x500,
    "mingen": 0x600,
}


def _key(seed: int, tag: int) -> np.ndarray:
    return np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(tag) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)


def block_generator(seed: int, tag: int, block: int) -> np.random.Generator:
    counter = np.zeros(4, dtype=np.uint64)
    counter[1] = np.uint64(block)
    return np.random.Generator(np.random.Philox(key=_key(seed, tag), counter=counter))


def stream(seed: int, tag: int) -> np.random.Generator:
    return block_generator(seed, tag, 0)


def uniform_block(seed: int, tag: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms for walks ``start..stop-1``, ``width`` per walk, shape (walks, width).

    Walk ``w`` always receives the same row regardless of how the range is
    sliced, because rows are generated block by block. Within a block the
    draws are column-major, so column k of a walk does not depend on
    ``width``: streams of different widths share their leading columns.
    """
    rows = []
    b0, b1 = start // BLOCK, (stop - 1) // BLOCK
    for b in range(b0, b1 + 1):
        u = block_generator(seed, tag, b).random((width, BLOCK)).T
        lo = max(start, b * BLOCK) - b * BLOCK
        hi = min(stop, (b + 1) * BLOCK) - b * BLOCK
        rows.append(u[lo:hi])
    return np.concatenate(rows, axis=0) if rows else np.zeros((0, width))
