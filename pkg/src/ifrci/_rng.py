"""Deterministic random streams keyed by (seed, index).

Every stream is an independent Philox generator derived from a
``SeedSequence`` whose spawn key is the index, so results never depend on
the order in which blocks or replicates are evaluated, or by which worker.
"""

import numpy as np

#: Monte Carlo draws are generated in blocks of this size; a block is the
#: smallest unit of work handed to a worker.
BLOCK_SIZE = 1 << 16


def stream(seed, *key):
    """Return the generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocks(replications):
    """Yield ``(block_index, size)`` pairs covering ``replications`` draws."""
    full, rest = divmod(int(replications), BLOCK_SIZE)
    for b in range(full):
        yield b, BLOCK_SIZE
    if rest:
        yield full, rest
