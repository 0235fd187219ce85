"""On-disk edge-list format and streaming access.

A graph file is a 32-byte header followed by m fixed-width edge records
(tail u32, head u32, little endian). The body is scanned strictly
sequentially in whole blocks; per-file counters record every block read so
the driver's scan-count guarantees can be checked instead of trusted.

Header layout (32 bytes)::

    magic   4s   b"SEDF"
    version u16  1
    flags   u16  bit0 = body is adjacency-clustered (sorted by tail, head)
    n       u64
    m       u64
    root    u32  0xFFFFFFFF when the graph has no designated root
    pad     4x
"""

from __future__ import annotations

import os
import struct
from collections import deque
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from . import extsort
from .iostats import CountingFile, IoCounters

MAGIC = b"SEDF"
VERSION = 1
NO_ROOT = 0xFFFFFFFF
FLAG_ADJACENCY = 1
HEADER = struct.Struct("<4sHHQQI4x")
EDGE_BYTES = 8
DEFAULT_BLOCK = 64 * 1024


class FormatError(ValueError):
    pass


@dataclass
class GraphHeader:
    n: int
    m: int
    root: int | None = None
    adjacency: bool = False

    def pack(self) -> bytes:
        flags = FLAG_ADJACENCY if self.adjacency else 0
        root = NO_ROOT if self.root is None else self.root
        return HEADER.pack(MAGIC, VERSION, flags, self.n, self.m, root)

    @classmethod
    def unpack(cls, raw: bytes) -> "GraphHeader":
        if len(raw) != HEADER.size:
            raise FormatError("truncated header")
        magic, version, flags, n, m, root = HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        return cls(n=n, m=m, root=None if root == NO_ROOT else root,
                   adjacency=bool(flags & FLAG_ADJACENCY))


# ------------------------------------------------------------------ #
# writing
# ------------------------------------------------------------------ #

class EdgeListWriter:
    """Streams edge chunks to disk; patches the final m into the header."""

    def __init__(self, path: str | os.PathLike, n: int, root: int | None = None,
                 adjacency: bool = False, counters: IoCounters | None = None):
        self.header = GraphHeader(n=n, m=0, root=root, adjacency=adjacency)
        self._f = CountingFile(path, "wb", counters)
        self._f.write(self.header.pack())

    def write_chunk(self, edges: np.ndarray) -> None:
        if edges.size == 0:
            return
        arr = np.ascontiguousarray(edges, dtype=np.uint32).reshape(-1, 2)
        self._f.write(arr.tobytes())
        self.header.m += arr.shape[0]

    def close(self) -> GraphHeader:
        self._f.seek(0)
        self._f.write(self.header.pack())
        self._f.close()
        return self.header

    def __enter__(self) -> "EdgeListWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_edge_list(path: str | os.PathLike, n: int,
                    edges: np.ndarray | Iterable[np.ndarray],
                    root: int | None = None, adjacency: bool = False,
                    counters: IoCounters | None = None) -> GraphHeader:
    w = EdgeListWriter(path, n, root=root, adjacency=adjacency, counters=counters)
    if isinstance(edges, np.ndarray):
        w.write_chunk(edges)
    else:
        for chunk in edges:
            w.write_chunk(chunk)
    return w.close()


# ------------------------------------------------------------------ #
# reading
# ------------------------------------------------------------------ #

def read_header(path: str | os.PathLike, counters: IoCounters | None = None) -> GraphHeader:
    with CountingFile(path, "rb", counters) as f:
        return GraphHeader.unpack(f.read(HEADER.size))


def open_edge_stream(path: str | os.PathLike, counters: IoCounters | None = None,
                     block_bytes: int = DEFAULT_BLOCK) -> tuple[GraphHeader, Iterator[np.ndarray]]:
    """One sequential pass over the body.

    Yields (k, 2) uint32 arrays, one per block; ceil(8m / block_bytes) block
    reads total, zero seeks on a fresh open. The header read is not a block
    read.
    """
    block = max(EDGE_BYTES, block_bytes - block_bytes % EDGE_BYTES)
    f = CountingFile(path, "rb", counters)
    header = GraphHeader.unpack(f.read(HEADER.size))

    def gen() -> Iterator[np.ndarray]:
        try:
            remaining = header.m * EDGE_BYTES
            while remaining > 0:
                data = f.read_block(min(block, remaining))
                if not data or len(data) % EDGE_BYTES:
                    raise FormatError("body shorter than header m")
                remaining -= len(data)
                yield np.frombuffer(data, dtype="<u4").reshape(-1, 2)
        finally:
            f.close()

    return header, gen()


def scan_blocks_per_pass(m: int, block_bytes: int = DEFAULT_BLOCK) -> int:
    block = max(EDGE_BYTES, block_bytes - block_bytes % EDGE_BYTES)
    return -(-m * EDGE_BYTES // block)


# ------------------------------------------------------------------ #
# root handling and re-batching
# ------------------------------------------------------------------ #

@dataclass
class GraphSource:
    """A graph file plus, when no root connects to everything, a virtual
    root appended as id n.

    The virtual root's star edges are materialized as an in-memory prefix of
    every scan instead of being written into the file; they cost no disk
    reads and every algorithm sees the same augmented edge stream. scan()
    returns a fresh single-pass iterator of (k, 2)-shaped arrays each time.
    """

    path: str
    header: GraphHeader
    root: int
    virtual_root: bool
    block_bytes: int = DEFAULT_BLOCK

    @classmethod
    def open(cls, path: str | os.PathLike, root: int | None = None,
             block_bytes: int = DEFAULT_BLOCK) -> "GraphSource":
        # header read is uncounted metadata; scan passes bill 32 + 8m each
        header = read_header(path, None)
        if root is None:
            root = header.root
        if root is None:
            return cls(path=os.fspath(path), header=header, root=header.n,
                       virtual_root=True, block_bytes=block_bytes)
        if not 0 <= root < header.n:
            raise FormatError(f"root {root} outside 0..{header.n - 1}")
        return cls(path=os.fspath(path), header=header, root=root,
                   virtual_root=False, block_bytes=block_bytes)

    @property
    def n(self) -> int:
        return self.header.n + 1 if self.virtual_root else self.header.n

    @property
    def m(self) -> int:
        return self.header.m + self.header.n if self.virtual_root else self.header.m

    def scan(self, counters: IoCounters | None = None) -> Iterator[np.ndarray]:
        def gen() -> Iterator[np.ndarray]:
            if self.virtual_root:
                yield from self._prefix_chunks()
            header, stream = open_edge_stream(self.path, counters, self.block_bytes)
            yield from stream

        return gen()

    def _prefix_chunks(self, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
        nr = self.header.n
        for lo in range(0, nr, chunk):
            heads = np.arange(lo, min(lo + chunk, nr), dtype=np.uint32)
            out = np.empty((heads.size, 2), dtype=np.uint32)
            out[:, 0] = nr
            out[:, 1] = heads
            yield out


def rebatch(chunks: Iterable[np.ndarray], batch_edges: int) -> Iterator[np.ndarray]:
    """Regroup (k, 2) edge chunks into batches of at most batch_edges rows,
    preserving edge order."""
    parts: list[np.ndarray] = []
    held = 0
    for chunk in chunks:
        arr = np.asarray(chunk).reshape(-1, 2)
        while arr.shape[0]:
            take = min(batch_edges - held, arr.shape[0])
            parts.append(arr[:take])
            held += take
            arr = arr[take:]
            if held == batch_edges:
                yield parts[0] if len(parts) == 1 else np.concatenate(parts)
                parts, held = [], 0
    if held:
        yield parts[0] if len(parts) == 1 else np.concatenate(parts)


# ------------------------------------------------------------------ #
# text ingestion
# ------------------------------------------------------------------ #

@dataclass
class IngestStats:
    n: int
    m: int
    self_loops_dropped: int = 0
    window_duplicates_dropped: int = 0


def ingest_text(src: str | os.PathLike, dst: str | os.PathLike,
                counters: IoCounters | None = None,
                chunk_edges: int = 1 << 16) -> IngestStats:
    """Whitespace-separated "tail head" lines -> edge-list file.

    Node ids are densified in first-appearance order. Self loops are dropped.
    Duplicate suppression uses a sliding FIFO window of the 2*n most recent
    distinct edges (n = nodes seen so far), so global dedup is not promised
    for adversarial orderings; generators that need exact simplicity dedup
    themselves.
    """
    idmap: dict[int, int] = {}
    window: set[tuple[int, int]] = set()
    fifo: deque[tuple[int, int]] = deque()
    stats = IngestStats(n=0, m=0)
    buf: list[tuple[int, int]] = []

    def intern(x: int) -> int:
        v = idmap.get(x)
        if v is None:
            v = len(idmap)
            idmap[x] = v
        return v

    w = EdgeListWriter(dst, n=0, counters=counters)
    with open(src, "r") as f:
        for line in f:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            u, v = intern(int(parts[0])), intern(int(parts[1]))
            if u == v:
                stats.self_loops_dropped += 1
                continue
            e = (u, v)
            if e in window:
                stats.window_duplicates_dropped += 1
                continue
            window.add(e)
            fifo.append(e)
            cap = 2 * len(idmap)
            while len(fifo) > cap:
                window.discard(fifo.popleft())
            buf.append(e)
            if len(buf) >= chunk_edges:
                w.write_chunk(np.array(buf, dtype=np.uint32))
                buf.clear()
    if buf:
        w.write_chunk(np.array(buf, dtype=np.uint32))
    w.header.n = len(idmap)
    hdr = w.close()
    stats.n, stats.m = hdr.n, hdr.m
    return stats


# ------------------------------------------------------------------ #
# storage-order conversion
# ------------------------------------------------------------------ #

def convert_to_adjacency_order(src: str | os.PathLike, dst: str | os.PathLike,
                               counters: IoCounters | None = None,
                               buffer_edges: int | None = None,
                               block_bytes: int = DEFAULT_BLOCK) -> GraphHeader:
    """Rewrite the body clustered by (tail, head) ascending.

    External merge sort over packed tail*n+head keys; the in-memory buffer
    respects the semi-external budget (2n edges) unless overridden. An
    already-clustered input round-trips to a byte-identical body.
    """
    header, stream = open_edge_stream(src, counters, block_bytes)
    n = max(header.n, 1)
    budget = buffer_edges if buffer_edges is not None else 2 * n

    def keys() -> Iterator[np.ndarray]:
        for chunk in stream:
            a = chunk.astype(np.int64)
            yield a[:, 0] * n + a[:, 1]

    merged, scratch = extsort.sort_key_stream(keys(), budget, counters)
    out = EdgeListWriter(dst, n=header.n, root=header.root, adjacency=True,
                         counters=counters)
    try:
        for karr in merged:
            pairs = np.empty((karr.size, 2), dtype=np.uint32)
            pairs[:, 0] = karr // n
            pairs[:, 1] = karr % n
            out.write_chunk(pairs)
    finally:
        hdr = out.close()
        if scratch:
            extsort.cleanup_dir(scratch)
    if hdr.m != header.m:
        raise FormatError("edge count changed during conversion")
    return hdr
