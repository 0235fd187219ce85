"""The semi-external DFS drivers.

ep_dfs is the full pipeline: a two-scan warm-up that already fixes a prefix
of the final order, one more scan to build the on-disk index of edges that
can still go forward-cross, then a main loop that never touches the raw
graph again: batch from the index, merge, push the frozen boundary (fnn)
forward, and rearrange sibling order so later batches resolve more. When
per-iteration progress stalls, a full index sweep (round_i) runs, optionally
fused with an index rewrite that drops dead edges (round_i_and_reduction).

naive_ep_dfs is the rescan-per-iteration variant kept for comparison, and
eb_dfs is the round-based baseline that repeats whole-graph passes until an
order digest stops changing.

Invariants asserted at runtime, not just in tests: fnn strictly increases
across main-loop iterations; after the index is built the raw graph file is
never read again; batch loading never moves an index file position backward.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .batching import NAIVE_NODE_LIMIT, EdgeBatch, obtain_edges, scan_batch_B
from .edge_index import EdgeIndex, IndexWriter, build_index, scan_index
from .graph_io import DEFAULT_BLOCK, HEADER, GraphSource, rebatch
from .iostats import IoCounters
from .rearrange import DEFAULT_CHUNK, rearrange
from .tree_store import TreeStore, compute_C, compute_C_plus, snapshot_orders

MODES = ("ep", "naive", "eb", "inmem")

TRACE_COLUMNS = ("iteration", "fnn", "max_order", "batch_edges",
                 "index_edges", "bytes_read", "bytes_written", "millis")


class TimeLimitExceeded(RuntimeError):
    pass


class NaiveStall(RuntimeError):
    """Naive mode stopped raising fnn; the rescan loop would not terminate."""


@dataclass
class RunConfig:
    gamma: float = 0.10
    budget_edges: int | None = None  # None = node count at run time
    block_bytes: int = DEFAULT_BLOCK
    seed: int = 0
    mode: str = "ep"
    rearrange_chunk: int = DEFAULT_CHUNK
    time_limit: float | None = None  # seconds, cooperative
    tmp_dir: str | None = None

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class ProgressState:
    """fnn is the frozen-boundary order; f1 tracks the last index rewrite,
    f2 the value before the current update, so f1 <= f2 <= fnn."""

    fnn: int
    f1: int
    f2: int
    iteration: int = 0


def _check(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise TimeLimitExceeded("wall-clock limit reached")


def _hook(hook, stage: str, store: TreeStore, **info) -> None:
    if hook is not None:
        hook(stage, store, info)


def _trace(trace, counters: IoCounters, **row) -> None:
    if trace is None:
        return
    tot = counters.totals()
    row["bytes_read"] = tot.bytes_read
    row["bytes_written"] = tot.bytes_written
    row["millis"] = round(row["millis"], 3)
    trace.append(row)


def order_digest(store: TreeStore) -> str:
    return hashlib.sha256(store.inv_order().astype("<u4").tobytes()).hexdigest()


def _scan_cost(source: GraphSource) -> int:
    # one sequential pass of the raw file: header + fixed-width body
    return HEADER.size + 8 * source.header.m


# ------------------------------------------------------------------ #
# warm-up
# ------------------------------------------------------------------ #

def initial_round(source: GraphSource, store: TreeStore, *,
                  budget_edges: int | None = None,
                  counters: IoCounters | None = None,
                  rearrange_chunk: int = DEFAULT_CHUNK,
                  tmp_dir: str | None = None,
                  deadline: float | None = None) -> int:
    """Two sequential scans. Scan 1 merges each chunk and rearranges with
    nothing frozen; scan 2 merges only. The returned fnn is the length of
    the order prefix scan 2 left untouched; those orders are final."""
    budget = budget_edges if budget_edges is not None else store.n
    for chunk in rebatch(source.scan(counters), budget):
        _check(deadline)
        store.load_batch(chunk)
        store.merge_batch()
        rearrange(store, 0, rearrange_chunk)
    snap = snapshot_orders(store, 0, store.n - 1, stable_below=0,
                           counters=counters, tmp_dir=tmp_dir)
    try:
        for chunk in rebatch(source.scan(counters), budget):
            _check(deadline)
            store.load_batch(chunk)
            store.merge_batch()
        return compute_C(store, snap, counters)
    finally:
        snap.release(store)


# ------------------------------------------------------------------ #
# stall recovery
# ------------------------------------------------------------------ #

def _index_round(index: EdgeIndex, store: TreeStore, fnn: int,
                 writer: IndexWriter | None, budget: int,
                 counters: IoCounters | None, rearrange_chunk: int,
                 tmp_dir: str | None, deadline: float | None) -> int:
    """Sweep the whole index: drop edges dead under the current orders,
    merge the survivors in budget-sized batches (rearranging after every
    fifth merge), optionally streaming the survivors into a new index file.
    Returns the stable-prefix length relative to the tree at entry."""
    n = store.n
    snap = snapshot_orders(store, 0, n - 1, stable_below=fnn,
                           counters=counters, tmp_dir=tmp_dir)
    merges = 0
    parts_t: list[np.ndarray] = []
    parts_h: list[np.ndarray] = []
    held = 0

    def flush() -> None:
        nonlocal merges, held
        if not held:
            return
        rows = np.column_stack([np.concatenate(parts_t), np.concatenate(parts_h)])
        parts_t.clear()
        parts_h.clear()
        held = 0
        store.load_batch(rows)
        store.merge_batch()
        merges += 1
        if merges % 5 == 0:
            rearrange(store, fnn, rearrange_chunk)

    try:
        for t, h in scan_index(index, counters):
            _check(deadline)
            live = (store.dfo[t] >= fnn) & (store.dfo[h] > fnn)
            t, h = t[live], h[live]
            if writer is not None and t.size:
                writer.write_sorted_chunk(t, h)
            pos = 0
            while pos < t.size:
                take = min(budget - held, t.size - pos)
                parts_t.append(t[pos:pos + take])
                parts_h.append(h[pos:pos + take])
                held += take
                pos += take
                if held == budget:
                    flush()
        flush()
        return compute_C(store, snap, counters)
    finally:
        snap.release(store)


def round_i(index: EdgeIndex, store: TreeStore, fnn: int, *,
            budget_edges: int | None = None,
            counters: IoCounters | None = None,
            rearrange_chunk: int = DEFAULT_CHUNK,
            tmp_dir: str | None = None,
            deadline: float | None = None) -> int:
    budget = budget_edges if budget_edges is not None else store.n
    return _index_round(index, store, fnn, None, budget, counters,
                        rearrange_chunk, tmp_dir, deadline)


def round_i_and_reduction(index: EdgeIndex, store: TreeStore, fnn: int, *,
                          budget_edges: int | None = None,
                          counters: IoCounters | None = None,
                          rearrange_chunk: int = DEFAULT_CHUNK,
                          tmp_dir: str | None = None,
                          deadline: float | None = None) -> tuple[int, EdgeIndex]:
    """round_i fused with an index rewrite: the same sweep that feeds the
    merges re-encodes the surviving edges (still globally sorted, so they
    encode directly) into a replacement file installed atomically."""
    budget = budget_edges if budget_edges is not None else store.n
    tmp = index.path + ".new"
    writer = IndexWriter(tmp, store.n, counters)
    try:
        fnn_new = _index_round(index, store, fnn, writer, budget, counters,
                               rearrange_chunk, tmp_dir, deadline)
        new = writer.finish()
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    os.replace(tmp, index.path)
    new.path = index.path
    new.install_directory(store)
    return fnn_new, new


# ------------------------------------------------------------------ #
# main pipeline
# ------------------------------------------------------------------ #

def ep_dfs(source: GraphSource, config: RunConfig | None = None, *,
           counters: IoCounters | None = None,
           trace: list | None = None,
           invariant_hook=None,
           index_path: str | None = None,
           deadline: float | None = None) -> TreeStore:
    """Compute a DFS-tree of the graph reading the raw file exactly three
    times (twice if the warm-up already resolves everything)."""
    config = config if config is not None else RunConfig()
    counters = counters if counters is not None else IoCounters()
    n, root = source.n, source.root
    budget = config.budget_edges if config.budget_edges is not None else n
    scan_cost = _scan_cost(source)
    raw = counters.for_path(source.path)
    raw_start = raw.bytes_read

    t0 = time.monotonic()
    store = TreeStore.star(n, root)
    fnn = initial_round(source, store, budget_edges=budget, counters=counters,
                        rearrange_chunk=config.rearrange_chunk,
                        tmp_dir=config.tmp_dir, deadline=deadline)
    assert raw.bytes_read - raw_start == 2 * scan_cost, "warm-up must scan twice"
    _hook(invariant_hook, "initial", store, fnn=fnn)
    _trace(trace, counters, iteration=0, fnn=fnn, max_order=-1, batch_edges=0,
           index_edges=0, millis=(time.monotonic() - t0) * 1000.0)
    if fnn >= n:
        # fully resolved in two scans; an index would never be read
        _hook(invariant_hook, "final", store, fnn=fnn)
        return store

    own_index = index_path is None
    if own_index:
        fd, index_path = tempfile.mkstemp(
            prefix="sedfs-index-", suffix=".nidx",
            dir=config.tmp_dir or os.environ.get("SEDFS_TMPDIR") or None)
        os.close(fd)
    try:
        index = build_index(store, fnn, source.scan(counters), index_path,
                            counters=counters, tmp_dir=config.tmp_dir)
        assert raw.bytes_read - raw_start == 3 * scan_cost, "indexing is the third scan"
        raw_after_index = raw.bytes_read

        state = ProgressState(fnn=fnn, f1=fnn, f2=fnn)
        stall_eps = min(100.0, n / 1000.0)
        while state.fnn < n:
            _check(deadline)
            it0 = time.monotonic()
            state.iteration += 1

            ipc = counters.for_path(index.path)
            bseek0 = ipc.backward_seeks
            batch, max_order = obtain_edges(store, state.fnn, index,
                                            budget_edges=budget,
                                            counters=counters)
            assert ipc.backward_seeks == bseek0, "batch load seeked backward"

            _hook(invariant_hook, "pre_merge", store, fnn=state.fnn,
                  max_order=max_order, batch=batch)
            snap = snapshot_orders(store, max_order + 1, n - 1,
                                   stable_below=state.fnn, counters=counters,
                                   tmp_dir=config.tmp_dir)
            try:
                if batch.size:
                    store.load_batch(batch.rows())
                    store.merge_batch()
                state.f2 = state.fnn
                cplus = compute_C_plus(store, snap, counters)
            finally:
                snap.release(store)
            state.fnn = min(cplus, max_order + 1)
            if state.fnn <= state.f2:
                raise AssertionError(
                    f"fnn failed to advance: {state.f2} -> {state.fnn}")
            _hook(invariant_hook, "iteration", store, fnn=state.fnn,
                  f2=state.f2, cplus=cplus, max_order=max_order)

            stalled = (state.fnn - state.f2) < stall_eps
            if stalled and (state.fnn - state.f1) > config.gamma * n:
                state.fnn, index = round_i_and_reduction(
                    index, store, state.fnn, budget_edges=budget,
                    counters=counters, rearrange_chunk=config.rearrange_chunk,
                    tmp_dir=config.tmp_dir, deadline=deadline)
                state.f1 = state.fnn
                _hook(invariant_hook, "reduction", store, fnn=state.fnn)
            elif stalled:
                state.fnn = round_i(
                    index, store, state.fnn, budget_edges=budget,
                    counters=counters, rearrange_chunk=config.rearrange_chunk,
                    tmp_dir=config.tmp_dir, deadline=deadline)
                _hook(invariant_hook, "round_i", store, fnn=state.fnn)

            rearrange(store, state.fnn, config.rearrange_chunk)
            assert raw.bytes_read == raw_after_index, "raw graph read after indexing"
            _trace(trace, counters, iteration=state.iteration, fnn=state.fnn,
                   max_order=max_order, batch_edges=batch.size,
                   index_edges=index.edge_count,
                   millis=(time.monotonic() - it0) * 1000.0)
        _hook(invariant_hook, "final", store, fnn=state.fnn)
    finally:
        if own_index:
            try:
                os.unlink(index_path)
            except OSError:
                pass
    return store


# ------------------------------------------------------------------ #
# comparison drivers
# ------------------------------------------------------------------ #

def naive_ep_dfs(source: GraphSource, config: RunConfig | None = None, *,
                 counters: IoCounters | None = None,
                 trace: list | None = None,
                 deadline: float | None = None) -> TreeStore:
    """Rescan-per-iteration driver: batch straight off the raw graph (two
    scans each time), merge, advance fnn by min(stable prefix, window + 1).
    Starts at fnn = 1; desk-scale only."""
    config = config if config is not None else RunConfig()
    counters = counters if counters is not None else IoCounters()
    n, root = source.n, source.root
    if n > NAIVE_NODE_LIMIT:
        raise ValueError(f"naive mode gated to n <= {NAIVE_NODE_LIMIT}")
    budget = config.budget_edges if config.budget_edges is not None else n

    store = TreeStore.star(n, root)
    fnn = 1
    iteration = 0
    stall = 0
    while fnn < n:
        _check(deadline)
        it0 = time.monotonic()
        iteration += 1
        batch, max_order = scan_batch_B(source, store, fnn,
                                        budget_edges=budget, counters=counters)
        snap = snapshot_orders(store, 0, n - 1, stable_below=fnn,
                               counters=counters, tmp_dir=config.tmp_dir)
        try:
            if batch.size:
                store.load_batch(batch.rows())
                store.merge_batch()
            c = compute_C(store, snap, counters)
        finally:
            snap.release(store)
        new_fnn = min(c, max_order + 1)
        # the naive update has no progress guarantee; bail out instead of
        # spinning on the same window forever
        stall = stall + 1 if new_fnn == fnn else 0
        if stall >= 8:
            raise NaiveStall(f"fnn stuck at {fnn} for {stall} iterations")
        fnn = new_fnn
        _trace(trace, counters, iteration=iteration, fnn=fnn,
               max_order=max_order, batch_edges=batch.size, index_edges=0,
               millis=(time.monotonic() - it0) * 1000.0)
    return store


def eb_dfs(source: GraphSource, config: RunConfig | None = None, *,
           counters: IoCounters | None = None,
           trace: list | None = None,
           deadline: float | None = None) -> tuple[TreeStore, int]:
    """Round-based baseline: scan the whole graph, merge chunk by chunk,
    rearrange, repeat until a round leaves the order digest unchanged. The
    confirming round is a full (wasted) scan by construction."""
    config = config if config is not None else RunConfig()
    counters = counters if counters is not None else IoCounters()
    n, root = source.n, source.root
    budget = config.budget_edges if config.budget_edges is not None else n

    store = TreeStore.star(n, root)
    digest_prev: str | None = None
    rounds = 0
    while True:
        _check(deadline)
        r0 = time.monotonic()
        rounds += 1
        loaded = 0
        for chunk in rebatch(source.scan(counters), budget):
            _check(deadline)
            store.load_batch(chunk)
            store.merge_batch()
            loaded += chunk.shape[0]
        rearrange(store, 0, config.rearrange_chunk)
        digest = order_digest(store)
        _trace(trace, counters, iteration=rounds, fnn=-1, max_order=-1,
               batch_edges=loaded, index_edges=0,
               millis=(time.monotonic() - r0) * 1000.0)
        if digest == digest_prev:
            return store, rounds
        digest_prev = digest
