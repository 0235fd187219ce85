"""Compressed on-disk store of the edges that can still go forward-cross.

File layout: a 14-byte header (magic "SEDX", version u16, edge count u64)
followed by one block per tail with outgoing survivors, blocks ascending by
tail id. A block is [out-degree][first head][gap-1 ...] as LEB128 varints,
heads strictly ascending. Tails are NOT stored in the file: the per-node
directory (byte offset and degree) lives in the tree store's idx_off and
idx_deg arrays and is rebuilt on every build or rewrite; the EdgeIndex
object additionally keeps flat per-block arrays so offset lists can be
resolved and coalesced without touching the directory.

Offsets must fit 32 bits; an index beyond 2^32 - 2 bytes is refused.
"""

from __future__ import annotations

import os
import struct
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import numpy as np

from . import extsort
from ._kernels import encode_tail_groups, index_decode_step, varint_decode_stream
from .iostats import CountingFile, IoCounters
from .tree_store import NO_OFFSET, TreeStore

MAGIC = b"SEDX"
VERSION = 1
HEADER = struct.Struct("<4sHQ")
MAX_INDEX_BYTES = (1 << 32) - 2
DEFAULT_READ = 64 * 1024


class IndexFormatError(ValueError):
    pass


class IndexSizeError(RuntimeError):
    pass


@dataclass
class EdgeIndex:
    path: str
    n: int
    edge_count: int
    block_tails: np.ndarray
    block_offsets: np.ndarray
    block_lens: np.ndarray
    block_degs: np.ndarray

    @property
    def data_bytes(self) -> int:
        if self.block_lens.size == 0:
            return 0
        return int(self.block_offsets[-1] + self.block_lens[-1])

    def install_directory(self, store: TreeStore) -> None:
        store.idx_off[:] = NO_OFFSET
        store.idx_deg[:] = 0
        store.idx_off[self.block_tails] = self.block_offsets
        store.idx_deg[self.block_tails] = self.block_degs


class IndexWriter:
    """Sequential encoder for a globally (tail, head)-sorted edge stream.

    Chunks may split a tail group anywhere; the writer carries the trailing
    group until the next chunk or finish(). Also deduplicates repeated
    (tail, head) pairs, which a sorted stream makes adjacent.
    """

    def __init__(self, path: str, n: int, counters: IoCounters | None):
        self.path = path
        self.n = n
        self._f = CountingFile(path, "wb", counters)
        self._f.write(HEADER.pack(MAGIC, VERSION, 0))
        self._tails: list[np.ndarray] = []
        self._offs: list[np.ndarray] = []
        self._lens: list[np.ndarray] = []
        self._degs: list[np.ndarray] = []
        self._carry_t = np.empty(0, dtype=np.int64)
        self._carry_h = np.empty(0, dtype=np.int64)
        self._pos = 0
        self.edge_count = 0

    def write_sorted_chunk(self, tails: np.ndarray, heads: np.ndarray) -> None:
        if tails.size == 0:
            return
        t = np.concatenate([self._carry_t, tails])
        h = np.concatenate([self._carry_h, heads])
        cut = int(np.searchsorted(t, t[-1], side="left"))
        self._carry_t, self._carry_h = t[cut:].copy(), h[cut:].copy()
        if cut:
            self._encode(t[:cut], h[:cut])

    def _encode(self, t: np.ndarray, h: np.ndarray) -> None:
        cap = 16 * t.size + 64
        while True:
            out = np.empty(cap, dtype=np.uint8)
            gt = np.empty(t.size, dtype=np.int64)
            go = np.empty(t.size, dtype=np.int64)
            gl = np.empty(t.size, dtype=np.int64)
            gd = np.empty(t.size, dtype=np.int64)
            nbytes, groups, kept = encode_tail_groups(
                np.ascontiguousarray(t), np.ascontiguousarray(h), out, gt, go, gl, gd)
            if nbytes >= 0:
                break
            cap *= 2
        self._f.write(out[:nbytes].tobytes())
        self._tails.append(gt[:groups].copy())
        self._offs.append(go[:groups] + self._pos)
        self._lens.append(gl[:groups].copy())
        self._degs.append(gd[:groups].copy())
        self._pos += int(nbytes)
        self.edge_count += int(kept)
        if self._pos > MAX_INDEX_BYTES:
            raise IndexSizeError(f"index exceeds {MAX_INDEX_BYTES} bytes")

    def finish(self) -> EdgeIndex:
        if self._carry_t.size:
            self._encode(self._carry_t, self._carry_h)
            self._carry_t = self._carry_h = np.empty(0, dtype=np.int64)
        self._f.seek(0)
        self._f.write(HEADER.pack(MAGIC, VERSION, self.edge_count))
        self._f.close()
        cat = lambda parts: (np.concatenate(parts) if parts
                             else np.empty(0, dtype=np.int64))
        return EdgeIndex(path=self.path, n=self.n, edge_count=self.edge_count,
                         block_tails=cat(self._tails),
                         block_offsets=cat(self._offs),
                         block_lens=cat(self._lens),
                         block_degs=cat(self._degs))


# ------------------------------------------------------------------ #
# build / scan / load / rewrite
# ------------------------------------------------------------------ #

def build_index(store: TreeStore, fnn: int, edge_chunks: Iterable[np.ndarray],
                path: str, *, budget_edges: int | None = None,
                counters: IoCounters | None = None,
                tmp_dir: str | None = None) -> EdgeIndex:
    """One pass over the raw edges: keep (u, v) with dfo(u) >= fnn and
    dfo(v) > fnn, externally sort by (tail, head), varint-encode, and install
    the directory. The sort buffer honors the 2n-edge budget."""
    n = store.n
    budget = budget_edges if budget_edges is not None else 2 * n
    dfo = store.dfo

    def keys() -> Iterator[np.ndarray]:
        for chunk in edge_chunks:
            arr = np.asarray(chunk, dtype=np.int64).reshape(-1, 2)
            keep = (dfo[arr[:, 0]] >= fnn) & (dfo[arr[:, 1]] > fnn)
            if keep.any():
                kept = arr[keep]
                yield kept[:, 0] * n + kept[:, 1]

    stream, scratch = extsort.sort_key_stream(keys(), budget, counters,
                                              tmp_root=tmp_dir)
    writer = IndexWriter(path, n, counters)
    try:
        for karr in stream:
            writer.write_sorted_chunk(karr // n, karr % n)
        index = writer.finish()
    finally:
        if scratch:
            extsort.cleanup_dir(scratch)
    index.install_directory(store)
    return index


def scan_index(index: EdgeIndex, counters: IoCounters | None = None,
               edges_per_chunk: int = 1 << 16,
               read_bytes: int = DEFAULT_READ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Decode the whole file front to back: zero seeks, (tails, heads)
    chunks ascending by (tail, head)."""
    with CountingFile(index.path, "rb", counters) as f:
        raw = f.read(HEADER.size)
        magic, version, count = HEADER.unpack(raw)
        if magic != MAGIC or version != VERSION:
            raise IndexFormatError("bad index header")
        state = np.zeros(4, dtype=np.int64)
        out_t = np.empty(edges_per_chunk, dtype=np.int64)
        out_h = np.empty(edges_per_chunk, dtype=np.int64)
        carry = b""
        emitted = 0
        while True:
            data = f.read_block(read_bytes)
            if not data:
                break
            buf = np.frombuffer(carry + data, dtype=np.uint8)
            values = np.empty(buf.size, dtype=np.int64)
            nvals, consumed = varint_decode_stream(buf, values)
            carry = buf[consumed:].tobytes()
            vstart = 0
            while vstart < nvals:
                used, e = index_decode_step(values[:nvals], vstart, state,
                                            index.block_tails, out_t, out_h)
                vstart += used
                if e:
                    emitted += e
                    yield out_t[:e].copy(), out_h[:e].copy()
        if carry or state[3] != 0 or emitted != index.edge_count:
            raise IndexFormatError("index file truncated or corrupt")


def load_sequentially(index: EdgeIndex, offsets: np.ndarray,
                      counters: IoCounters | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fetch the blocks at the given byte offsets with one ascending sweep:
    offsets are sorted, byte-adjacent blocks coalesce into single reads, and
    the file position never moves backward."""
    if len(offsets) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    offs = np.sort(np.asarray(offsets, dtype=np.int64))
    bi = np.searchsorted(index.block_offsets, offs)
    if not np.array_equal(index.block_offsets[bi], offs):
        raise IndexFormatError("offset does not start a block")
    total = int(index.block_degs[bi].sum())
    out_t = np.empty(total, dtype=np.int64)
    out_h = np.empty(total, dtype=np.int64)
    done = 0
    with CountingFile(index.path, "rb", counters) as f:
        f.read(HEADER.size)
        runs = np.split(bi, np.flatnonzero(np.diff(bi) != 1) + 1)
        for run in runs:
            b0, b1 = int(run[0]), int(run[-1])
            f.seek(HEADER.size + int(index.block_offsets[b0]))
            span = int(index.block_offsets[b1] + index.block_lens[b1]
                       - index.block_offsets[b0])
            data = f.read_block(span)
            if len(data) != span:
                raise IndexFormatError("short block read")
            buf = np.frombuffer(data, dtype=np.uint8)
            values = np.empty(buf.size, dtype=np.int64)
            nvals, consumed = varint_decode_stream(buf, values)
            state = np.zeros(4, dtype=np.int64)
            used, e = index_decode_step(values[:nvals], 0, state,
                                        index.block_tails[b0:b1 + 1],
                                        out_t[done:], out_h[done:])
            if used != nvals or state[3] != 0:
                raise IndexFormatError("block decode out of sync")
            done += e
    if done != total:
        raise IndexFormatError("decoded edge count mismatch")
    return out_t, out_h


def rewrite_index(index: EdgeIndex, store: TreeStore, fnn: int,
                  counters: IoCounters | None = None) -> EdgeIndex:
    """Drop every edge that can no longer go forward-cross (tail frozen or
    head at/below fnn under the current orders), re-encode, atomically
    replace the file, and refresh the directory."""
    tmp = index.path + ".new"
    writer = IndexWriter(tmp, index.n, counters)
    dfo = store.dfo
    for t, h in scan_index(index, counters):
        keep = (dfo[t] >= fnn) & (dfo[h] > fnn)
        if keep.any():
            writer.write_sorted_chunk(t[keep], h[keep])
    new = writer.finish()
    os.replace(tmp, index.path)
    new.path = index.path
    new.install_directory(store)
    return new
