"""Child reordering by subtree weight (heavy subtrees first).

One reverse-order sweep computes every subtree size with zero extra arrays:
each node's weight is parked in a synthetic chain entry that its parent
consumes. Reordering applies only to nodes at order >= fnn; frozen nodes
keep their child order. Huge out-neighborhoods are sorted in consecutive
position chunks (default 10^4), not globally, bounding per-node sort work.

No I/O, no allocation beyond two scratch arrays reused across the sweep.
"""

from __future__ import annotations

import numpy as np

from ._kernels import rearrange_kernel
from .tree_store import TreeStore

DEFAULT_CHUNK = 10_000


def rearrange(store: TreeStore, fnn: int, chunk: int = DEFAULT_CHUNK) -> None:
    """Reorder every unfrozen node's children by (weight desc, old position
    asc) inside position chunks. Chains must hold tree edges only, i.e. call
    this right after a merge."""
    _sweep(store, fnn, chunk, collect=False)


def compute_weights(store: TreeStore, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Subtree size of every node, computed by the same sweep with the
    reordering switched off (exposed for the tests)."""
    return _sweep(store, store.n, chunk, collect=True)


def _sweep(store: TreeStore, fnn: int, chunk: int, collect: bool) -> np.ndarray:
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    if store.free_count < 1:
        raise RuntimeError("rearrange needs at least one free slot")
    n = store.n
    inv = store.inv_order()
    slots_buf = np.empty(n + 1, dtype=np.int64)
    keys_buf = np.empty(n + 1, dtype=np.int64)
    w_out = np.empty(n if collect else 0, dtype=np.int64)
    fh, fc, mfc = rearrange_kernel(store.a1, store.a2, inv, fnn, chunk,
                                   store.none_slot, store.free_head,
                                   store.free_count, store.min_free_count,
                                   slots_buf, keys_buf, w_out, collect)
    store.free_head, store.free_count = int(fh), int(fc)
    store.min_free_count = int(mfc)
    return w_out
