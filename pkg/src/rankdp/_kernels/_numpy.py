"""Pure-numpy kernel implementations.

Bit-for-bit identical to the compiled versions in ``_fast.pyx``: all three
functions are deterministic transforms, so backend choice never changes
results, only speed.
"""

import numpy as np

# Rows processed per block to bound temporary memory.
_BLOCK = 1 << 16


def decode_insertion_codes(order: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Turn per-stage insertion positions into rank vectors.

    ``order[t-1]`` is the item placed at stage t (the item with input rank
    t); ``codes[:, t-2]`` is the number of previously placed items that end
    up below it.  Returns an (n, m) array of ranks 1..m.
    """
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    n = codes.shape[0]
    m = order.shape[0]
    ranks = np.zeros((n, m), dtype=np.int64)
    ranks[:, order[0]] = 1
    for t in range(2, m + 1):
        k = codes[:, t - 2]
        placed = order[: t - 1]
        current = ranks[:, placed]
        ranks[:, placed] = current + (current > k[:, None])
        ranks[:, order[t - 1]] = k + 1
    return ranks


def concordance_counts(ref: np.ndarray, batch: np.ndarray) -> np.ndarray:
    """Unordered concordant-pair count of every batch row against ref."""
    ref = np.asarray(ref, dtype=np.int64)
    batch = np.asarray(batch, dtype=np.int64)
    m = ref.shape[0]
    ii, jj = np.triu_indices(m, k=1)
    ref_diff = ref[ii] - ref[jj]
    out = np.empty(batch.shape[0], dtype=np.int64)
    for start in range(0, batch.shape[0], _BLOCK):
        block = batch[start : start + _BLOCK]
        agree = (block[:, ii] - block[:, jj]) * ref_diff > 0
        out[start : start + _BLOCK] = agree.sum(axis=1)
    return out


def pair_greater_counts(batch: np.ndarray) -> np.ndarray:
    """counts[i, j] = number of rows with ranks[i] > ranks[j]."""
    batch = np.asarray(batch, dtype=np.int64)
    m = batch.shape[1]
    counts = np.zeros((m, m), dtype=np.int64)
    for start in range(0, batch.shape[0], _BLOCK):
        block = batch[start : start + _BLOCK]
        counts += (block[:, :, None] > block[:, None, :]).sum(axis=0)
    return counts
