"""Edge-batch assembly.

obtain_edges builds the practical batch from the index: walk nodes in
ascending depth-first order starting at the frozen boundary, commit each
live tail's whole block, and stop just before the tail that would push the
tally past the budget. The committed offsets load in one ascending sweep.

scan_batch_B is the naive batch: every graph edge with an endpoint order in
the window [fnn, K], K maximized under the budget. It rescans the raw graph
twice per call and can overflow on a single hot node; both costs are the
point of keeping it around as the comparison case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edge_index import EdgeIndex, load_sequentially
from .graph_io import GraphSource
from .iostats import IoCounters
from .tree_store import NO_OFFSET, TreeStore

NAIVE_NODE_LIMIT = 100_000


class IrreducibleBatch(RuntimeError):
    """A single tail's block alone exceeds the batch budget."""


class BatchOverflow(RuntimeError):
    """Naive batch cannot fit the budget even at its smallest window."""


class ParamGateError(ValueError):
    pass


@dataclass
class EdgeBatch:
    tails: np.ndarray
    heads: np.ndarray

    @property
    def size(self) -> int:
        return int(self.tails.size)

    def rows(self) -> np.ndarray:
        return np.column_stack([self.tails, self.heads])

    @classmethod
    def empty(cls) -> "EdgeBatch":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))


def _concat(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.empty(0, dtype=np.int64)
    return parts[0] if len(parts) == 1 else np.concatenate(parts)


def obtain_edges(store: TreeStore, fnn: int, index: EdgeIndex,
                 budget_edges: int | None = None,
                 counters: IoCounters | None = None) -> tuple[EdgeBatch, int]:
    """Collect whole index blocks for tails at orders fnn..max_order.

    Walks ascending orders; zero-degree tails cost nothing and never bound
    max_order. When committing a tail would exceed the budget, the pending
    offsets are flushed (loaded), the test re-fires on the unchanged tally,
    and the walk stops with max_order just below the offending tail; a walk
    that survives to the last order returns max_order = n - 1.
    """
    n = store.n
    budget = budget_edges if budget_edges is not None else n
    inv = store.inv_order()
    ods = store.idx_deg[inv]
    offs = store.idx_off[inv]
    live = np.flatnonzero((ods[fnn:] > 0) & (offs[fnn:] != NO_OFFSET)) + fnn

    pending: list[int] = []
    kappa = 0
    parts_t: list[np.ndarray] = []
    parts_h: list[np.ndarray] = []
    max_order = n - 1

    def flush() -> None:
        if pending:
            t, h = load_sequentially(index, np.array(pending, dtype=np.int64),
                                     counters)
            parts_t.append(t)
            parts_h.append(h)
            pending.clear()

    for eta in live.tolist():
        od = int(ods[eta])
        if kappa + od > budget:
            flush()
            if kappa + od > budget:  # committed edges still count; always stops
                if eta == fnn:
                    raise IrreducibleBatch(
                        f"block of {od} edges at order {eta} exceeds "
                        f"budget {budget}")
                max_order = eta - 1
                break
            pending.append(int(offs[eta]))
            kappa += od
        else:
            pending.append(int(offs[eta]))
            kappa += od
    flush()

    batch = EdgeBatch(_concat(parts_t), _concat(parts_h))
    assert batch.size == kappa and batch.size <= budget
    return batch, max_order


def scan_batch_B(source: GraphSource, store: TreeStore, fnn: int,
                 budget_edges: int | None = None,
                 counters: IoCounters | None = None) -> tuple[EdgeBatch, int]:
    """Naive batch: edges whose smaller endpoint order is <= K and larger
    endpoint order is >= fnn, with K the largest cutoff keeping the batch
    within budget. Scan 1 counts per cutoff, scan 2 collects in file order."""
    n = source.n
    if n > NAIVE_NODE_LIMIT:
        raise ParamGateError(f"naive batching gated to n <= {NAIVE_NODE_LIMIT}")
    budget = budget_edges if budget_edges is not None else n
    dfo = store.dfo

    counts = np.zeros(n, dtype=np.int64)
    for chunk in source.scan(counters):
        arr = np.asarray(chunk, dtype=np.int64).reshape(-1, 2)
        du = dfo[arr[:, 0]]
        dv = dfo[arr[:, 1]]
        lo = np.minimum(du, dv)
        sel = np.maximum(du, dv) >= fnn
        if sel.any():
            counts += np.bincount(lo[sel], minlength=n)

    cum = np.cumsum(counts)
    k = int(np.searchsorted(cum, budget, side="right")) - 1
    if k < fnn:
        raise BatchOverflow(f"batch overflow at FNN={fnn}: "
                            f"{int(cum[fnn]) if fnn < n else 0} edges exceed "
                            f"budget {budget}")

    parts: list[np.ndarray] = []
    for chunk in source.scan(counters):
        arr = np.asarray(chunk, dtype=np.int64).reshape(-1, 2)
        du = dfo[arr[:, 0]]
        dv = dfo[arr[:, 1]]
        sel = (np.minimum(du, dv) <= k) & (np.maximum(du, dv) >= fnn)
        if sel.any():
            parts.append(arr[sel])

    if parts:
        rows = np.concatenate(parts)
        batch = EdgeBatch(rows[:, 0].copy(), rows[:, 1].copy())
    else:
        batch = EdgeBatch.empty()
    assert batch.size == int(cum[k]) and batch.size <= budget
    return batch, k
