"""Deterministic random streams.

Every stochastic routine draws from a stream keyed by (root seed, *labels).
Streams are Philox generators seeded through ``SeedSequence`` spawn keys, so a
given key always yields the same numbers regardless of which other streams
were created or in what order.
"""

import zlib

import numpy as np


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be nonnegative")
        return int(label)
    return zlib.crc32(str(label).encode())


def stream(seed: int, *labels) -> np.random.Generator:
    """Independent generator for the task identified by ``labels``."""
    key = tuple(_label_to_int(x) for x in labels)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(n: int, partitions: int) -> list[int]:
    """Split ``n`` samples into ``partitions`` near-equal blocks."""
    partitions = max(1, min(int(partitions), max(n, 1)))
    base, extra = divmod(n, partitions)
    return [base + (1 if b < extra else 0) for b in range(partitions)]


def pool(means, variances, counts):
    """Merge per-block sample means and (population) variances.

    Returns the pooled mean and the pooled population variance.
    """
    means = np.asarray(means, float)
    variances = np.asarray(variances, float)
    counts = np.asarray(counts, float)
    n = counts.sum()
    mean = float(np.sum(counts * means) / n)
    var = float(np.sum(counts * (variances + (means - mean) ** 2)) / n)
    return mean, var
