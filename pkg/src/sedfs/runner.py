"""Run orchestration: dispatch one algorithm over one graph file, collect
exact I/O numbers, write the order/parent artifacts, optionally certify the
result. The CLI and the benchmark matrix are thin layers over this."""

from __future__ import annotations

import hashlib
import os
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import driver, verify
from .batching import BatchOverflow, IrreducibleBatch
from .driver import (NAIVE_NODE_LIMIT, TRACE_COLUMNS, NaiveStall, RunConfig,
                     TimeLimitExceeded)
from .graph_io import (DEFAULT_BLOCK, FormatError, GraphSource, open_edge_stream,
                       read_header)
from .iostats import IoCounters
from .rearrange import DEFAULT_CHUNK

NO_PARENT = 0xFFFFFFFF


@dataclass
class RunStats:
    algorithm: str
    graph: str
    n: int                      # nodes processed, virtual root included
    m: int                      # edges per scan, virtual star included
    root: int
    virtual_root: bool
    wall_time_s: float = 0.0
    order_digest: str | None = None
    iterations: int = 0         # main-loop iterations, or rounds for eb
    fnn_final: int | None = None
    peak_slots: int | None = None
    slot_budget: int | None = None
    verified: bool | None = None
    offender: tuple[int, int] | None = None
    bytes_read: int = 0
    bytes_written: int = 0
    per_file: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    aborted: bool = False
    error: str | None = None

    def row(self) -> dict:
        d = asdict(self)
        d.pop("trace")
        d.pop("per_file")
        return d


def run_algorithm(graph: str | os.PathLike, mode: str = "ep", *,
                  root: int | None = None,
                  gamma: float = 0.10,
                  budget_edges: int | None = None,
                  block_bytes: int = DEFAULT_BLOCK,
                  rearrange_chunk: int = DEFAULT_CHUNK,
                  time_limit: float | None = 600.0,
                  tmp_dir: str | None = None,
                  verify_output: bool = False,
                  order_out: str | None = None,
                  parent_out: str | None = None,
                  trace_out: str | None = None,
                  invariant_hook=None) -> RunStats:
    source = GraphSource.open(graph, root=root, block_bytes=block_bytes)
    config = RunConfig(gamma=gamma, budget_edges=budget_edges,
                       block_bytes=block_bytes, mode=mode,
                       rearrange_chunk=rearrange_chunk, time_limit=time_limit,
                       tmp_dir=tmp_dir)
    counters = IoCounters()
    trace: list[dict] = []
    deadline = None if time_limit is None else time.monotonic() + time_limit
    stats = RunStats(algorithm=mode, graph=os.fspath(graph), n=source.n,
                     m=source.m, root=source.root,
                     virtual_root=source.virtual_root,
                     slot_budget=2 * source.n, trace=trace)

    order = parent = None
    store = None
    rounds = None
    t0 = time.monotonic()
    work = tempfile.mkdtemp(
        prefix="sedfs-work-",
        dir=tmp_dir or os.environ.get("SEDFS_TMPDIR") or None)
    try:
        try:
            if mode == "ep":
                store = driver.ep_dfs(source, config, counters=counters,
                                      trace=trace,
                                      invariant_hook=invariant_hook,
                                      index_path=os.path.join(work, "graph.nidx"),
                                      deadline=deadline)
            elif mode == "naive":
                store = driver.naive_ep_dfs(source, config, counters=counters,
                                            trace=trace, deadline=deadline)
            elif mode == "eb":
                store, rounds = driver.eb_dfs(source, config, counters=counters,
                                              trace=trace, deadline=deadline)
            elif mode == "inmem":
                order, parent = _inmem_run(source, counters)
            else:
                raise ValueError(f"unknown mode {mode!r}")
        except TimeLimitExceeded as exc:
            stats.aborted = True
            stats.error = str(exc)
        except (BatchOverflow, IrreducibleBatch, NaiveStall) as exc:
            stats.error = f"{type(exc).__name__}: {exc}"
    finally:
        shutil.rmtree(work, ignore_errors=True)
    stats.wall_time_s = round(time.monotonic() - t0, 6)

    if store is not None:
        order = store.inv_order()
        parent = np.asarray(store.parent)
        stats.peak_slots = store.peak_slots
        stats.fnn_final = _last_fnn(trace)
    if rounds is not None:
        stats.iterations = rounds
        stats.fnn_final = None
    elif trace:
        stats.iterations = max(r["iteration"] for r in trace)

    if order is not None:
        order_bytes = np.asarray(order).astype("<u4").tobytes()
        stats.order_digest = hashlib.sha256(order_bytes).hexdigest()
        if order_out:
            write_artifacts(order, parent, order_out,
                            parent_out or order_out + ".parent")
    if verify_output and order is not None:
        # separate counters: certification reads must not pollute run stats
        vc = IoCounters()
        ok, off = verify.is_dfs_tree(
            (c for c in source.scan(vc)), parent, order)
        stats.verified, stats.offender = ok, off

    tot = counters.totals()
    stats.bytes_read, stats.bytes_written = tot.bytes_read, tot.bytes_written
    stats.per_file = {p: asdict(c) for p, c in counters.per_path.items()}
    if trace_out:
        write_trace_csv(trace_out, trace)
    return stats


def _last_fnn(trace: list[dict]) -> int | None:
    vals = [r["fnn"] for r in trace if r.get("fnn", -1) >= 0]
    return vals[-1] if vals else None


def _inmem_run(source: GraphSource, counters: IoCounters):
    """Reference mode: the whole graph as one batch through the in-memory
    visiting-rule oracle, starting from the same star tree."""
    n, root = source.n, source.root
    if n > NAIVE_NODE_LIMIT:
        raise ValueError(f"inmem mode gated to n <= {NAIVE_NODE_LIMIT}")
    children: list[list[int]] = [[] for _ in range(n)]
    children[root] = [v for v in range(n) if v != root]
    batch: list[list[int]] = [[] for _ in range(n)]
    for chunk in source.scan(counters):
        for u, v in np.asarray(chunk, dtype=np.int64).tolist():
            batch[u].append(v)
    parent, order = verify.oracle_dfs(n, root, children, batch)
    return np.asarray(order, dtype=np.int64), np.asarray(parent, dtype=np.int64)


# ------------------------------------------------------------------ #
# artifacts
# ------------------------------------------------------------------ #

def write_artifacts(order, parent, order_path: str, parent_path: str) -> None:
    """order file: node ids by visit position, u32. parent file: parent by
    node id, u32, 0xFFFFFFFF for the root."""
    order = np.asarray(order, dtype=np.int64)
    parent = np.asarray(parent, dtype=np.int64)
    with open(order_path, "wb") as f:
        f.write(order.astype("<u4").tobytes())
    with open(parent_path, "wb") as f:
        f.write(np.where(parent < 0, NO_PARENT, parent).astype("<u4").tobytes())


def read_artifacts(order_path: str, parent_path: str) -> tuple[np.ndarray, np.ndarray]:
    order = np.fromfile(order_path, dtype="<u4").astype(np.int64)
    parent = np.fromfile(parent_path, dtype="<u4").astype(np.int64)
    parent[parent == NO_PARENT] = -1
    return order, parent


def write_trace_csv(path: str, trace: list[dict]) -> None:
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            f.write(",".join(str(row.get(c, "")) for c in TRACE_COLUMNS) + "\n")


# ------------------------------------------------------------------ #
# certification of stored artifacts
# ------------------------------------------------------------------ #

def verify_artifacts(graph: str | os.PathLike, order_path: str,
                     parent_path: str) -> tuple[bool, str]:
    """Reconstruct the tree from the artifact pair and certify it against
    the graph. Returns (ok, human-readable report line)."""
    header = read_header(graph)
    order, parent = read_artifacts(order_path, parent_path)
    n_art = order.size
    if n_art not in (header.n, header.n + 1):
        raise FormatError(
            f"artifact has {n_art} nodes, graph has {header.n}")
    if parent.size != n_art:
        raise FormatError("order and parent files disagree on node count")
    if not np.array_equal(np.sort(order), np.arange(n_art)):
        raise FormatError("order file is not a permutation")
    dfo = np.empty(n_art, dtype=np.int64)
    dfo[order] = np.arange(n_art)
    roots = np.flatnonzero(parent < 0)
    if roots.size != 1 or roots[0] != order[0]:
        raise FormatError("parent file must mark exactly the first-visited "
                          "node as root")
    nonroot = parent >= 0
    if parent[nonroot].max(initial=-1) >= n_art:
        raise FormatError("parent id out of range")
    if not (dfo[parent[nonroot]] < dfo[np.flatnonzero(nonroot)]).all():
        raise FormatError("a parent is visited after its child")

    _, stream = open_edge_stream(graph)
    ok, off = verify.is_dfs_tree(stream, parent, order)
    if ok:
        return True, f"valid DFS-tree of {n_art} nodes"
    u, v = off
    return False, (f"forward cross edge ({u}, {v}): tail order {dfo[u]}, "
                   f"head order {dfo[v]}")


# ------------------------------------------------------------------ #
# benchmark matrix
# ------------------------------------------------------------------ #

BENCH_COLUMNS = ("kind", "n", "m", "order", "algorithm", "seed", "status",
                 "wall_s", "bytes_read", "bytes_written", "peak_slots",
                 "iterations", "fnn_final", "digest")


def _listify(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def expand_matrix(spec: dict) -> list[dict]:
    """Either an explicit "cells" list or a cross product of kind, n, ratio
    (edges per node, er only), algorithms, seeds and order."""
    if "cells" in spec:
        return [dict(c) for c in spec["cells"]]
    cells = []
    for kind in _listify(spec.get("kind", "er")):
        for n in _listify(spec["n"]):
            for ratio in _listify(spec.get("ratio", [10])):
                for order in _listify(spec.get("order", "random")):
                    for alg in _listify(spec.get("algorithms", "ep")):
                        for seed in _listify(spec.get("seeds", 0)):
                            cells.append({"kind": kind, "n": int(n),
                                          "ratio": ratio, "order": order,
                                          "algorithm": alg, "seed": int(seed)})
    return cells


def run_matrix(spec: dict, out_csv: str, echo=None) -> list[dict]:
    """One run per cell; failed or timed-out cells keep their row with "-"
    in every measured column, never an interpolated number."""
    from .generators import generate_er, generate_sf
    from .graph_io import convert_to_adjacency_order

    cells = expand_matrix(spec)
    time_limit = float(spec.get("time_limit", 600.0))
    rows: list[dict] = []
    work = tempfile.mkdtemp(prefix="sedfs-bench-",
                            dir=os.environ.get("SEDFS_TMPDIR") or None)
    cache: dict[tuple, tuple[str, int]] = {}
    try:
        for cell in cells:
            kind = cell.get("kind", "er")
            n, seed = int(cell["n"]), int(cell.get("seed", 0))
            order = cell.get("order", "random")
            if kind == "er":
                m = int(cell["m"]) if "m" in cell else int(n * cell["ratio"])
            else:
                m = None
            key = (kind, n, m, seed, order)
            if key not in cache:
                path = os.path.join(work, f"{kind}-{n}-{m}-{seed}-{order}.graph")
                if kind == "er":
                    real_m = generate_er(path, n, m, seed).m
                else:
                    real_m = generate_sf(path, n, seed).m
                if order == "adjacency":
                    convert_to_adjacency_order(path, path + ".adj")
                    os.replace(path + ".adj", path)
                cache[key] = (path, real_m)
            path, real_m = cache[key]

            alg = cell.get("algorithm", "ep")
            stats = run_algorithm(
                path, alg,
                gamma=float(cell.get("gamma", spec.get("gamma", 0.10))),
                budget_edges=cell.get("budget_edges", spec.get("budget_edges")),
                time_limit=float(cell.get("time_limit", time_limit)))
            row = {"kind": kind, "n": n, "m": real_m, "order": order,
                   "algorithm": alg, "seed": seed}
            if stats.aborted:
                row["status"] = "timeout"
            elif stats.error:
                row["status"] = "error"
            else:
                row["status"] = "ok"
            ok = row["status"] == "ok"
            row["wall_s"] = stats.wall_time_s if ok else "-"
            row["bytes_read"] = stats.bytes_read if ok else "-"
            row["bytes_written"] = stats.bytes_written if ok else "-"
            row["peak_slots"] = (stats.peak_slots if ok and
                                 stats.peak_slots is not None else "-")
            row["iterations"] = stats.iterations if ok else "-"
            row["fnn_final"] = (stats.fnn_final if ok and
                                stats.fnn_final is not None else "-")
            row["digest"] = stats.order_digest if ok else "-"
            rows.append(row)
            if echo:
                echo(f"[{row['status']}] {alg} {kind} n={n} m={real_m} "
                     f"seed={seed} order={order} wall={row['wall_s']}")
    finally:
        shutil.rmtree(work, ignore_errors=True)
    with open(out_csv, "w") as f:
        f.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(str(row.get(c, "")) for c in BENCH_COLUMNS) + "\n")
    return rows
