"""In-memory ordered spanning tree over packed int64 arrays.

The store is the engine's whole working set: per node a chain head (a1), a
depth-first order, a parent, and the index directory (block offset and
degree); per edge slot a link and a head packed side by side in a2. Capacity
is exactly 2n slots (the semi-external budget) and the free list keeps an
exact low-water mark so peak usage is measured, not estimated.

Chain heads are rightmost children (prepending keeps claim order = child
order); merging is a single in-place DFS over the chains (see _kernels).
Nothing in this module touches disk except order snapshots, which borrow
idle directory slots when they can and spill a flat u32 file when they
cannot.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ._kernels import load_kernel, merge_kernel
from .iostats import CountingFile, IoCounters

MAX_NODES = (1 << 31) - 2
NO_OFFSET = -1


class SlotExhausted(RuntimeError):
    pass


class MergeError(RuntimeError):
    pass


class TreeStore:
    """n nodes, 2n edge slots, flat int64 state."""

    __slots__ = ("n", "root", "none_slot", "a1", "a2", "dfo", "parent",
                 "idx_off", "idx_deg", "free_head", "free_count",
                 "min_free_count")

    def __init__(self, n: int, root: int = 0):
        if not (1 <= n <= MAX_NODES):
            raise ValueError(f"n={n} outside [1, {MAX_NODES}]")
        if not (0 <= root < n):
            raise ValueError("root outside node range")
        self.n = n
        self.root = root
        self.none_slot = 2 * n
        self.a1 = np.full(n, self.none_slot, dtype=np.int64)
        self.a2 = np.empty(4 * n, dtype=np.int64)
        # free list: slot k links k-1; head is the top slot
        self.a2[0::2] = np.arange(-1, 2 * n - 1, dtype=np.int64)
        self.a2[1::2] = 0
        self.free_head = 2 * n - 1
        self.free_count = 2 * n
        self.min_free_count = 2 * n
        self.dfo = self._root_first_orders(n, root)
        self.parent = np.full(n, -1, dtype=np.int64)
        self.idx_off = np.full(n, NO_OFFSET, dtype=np.int64)
        self.idx_deg = np.zeros(n, dtype=np.int64)

    @staticmethod
    def _root_first_orders(n: int, root: int) -> np.ndarray:
        dfo = np.arange(1, n + 1, dtype=np.int64)
        dfo[root:] -= 1
        dfo[root] = 0
        return dfo

    @classmethod
    def star(cls, n: int, root: int = 0) -> "TreeStore":
        """Root connected to every other node; children ascending by id, so
        the depth-first order is root first, then the rest by id."""
        t = cls(n, root)
        others = np.concatenate([np.arange(0, root, dtype=np.int64),
                                 np.arange(root + 1, n, dtype=np.int64)])
        t.load_batch(np.column_stack([np.full(n - 1, root, dtype=np.int64),
                                      others]))
        t.parent[:] = root
        t.parent[root] = -1
        return t

    # -- capacity ------------------------------------------------------ #

    @property
    def used_slots(self) -> int:
        return 2 * self.n - self.free_count

    @property
    def peak_slots(self) -> int:
        return 2 * self.n - self.min_free_count

    # -- batch loading and merging ------------------------------------- #

    def load_batch(self, edges: np.ndarray) -> int:
        """Prepend (tail, head) rows to tail chains; duplicate tree edges
        are skipped. Returns the number of slots actually filled."""
        arr = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
        fh, fc, mfc, loaded, err = load_kernel(
            self.a1, self.a2, self.parent,
            np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]),
            self.none_slot, self.free_head, self.free_count,
            self.min_free_count)
        self.free_head, self.free_count, self.min_free_count = int(fh), int(fc), int(mfc)
        if err:
            raise SlotExhausted("out of edge slots during load")
        return int(loaded)

    def merge_batch(self) -> None:
        """Restructure into the DFS-tree of (current tree + loaded batch),
        recomputing dfo and parents in place."""
        counter, fh, fc = merge_kernel(self.a1, self.a2, self.parent, self.dfo,
                                       self.root, self.none_slot,
                                       self.free_head, self.free_count)
        self.free_head, self.free_count = int(fh), int(fc)
        if int(counter) != self.n:
            raise MergeError(f"tree+batch spans {int(counter)} of {self.n} nodes")
        np.invert(self.a1, out=self.a1)
        self.parent[self.root] = -1

    # -- views and test helpers ---------------------------------------- #

    def inv_order(self) -> np.ndarray:
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.dfo] = np.arange(self.n, dtype=np.int64)
        return inv

    def chain_slots(self, u: int) -> list[int]:
        out = []
        s = int(self.a1[u])
        if s == self.none_slot:
            return out
        while s != -1:
            out.append(s)
            s = int(self.a2[2 * s])
        return out

    def children(self, u: int) -> list[int]:
        """Left-to-right (chains store them right-to-left)."""
        return [int(self.a2[2 * s + 1]) for s in reversed(self.chain_slots(u))]

    def free_list(self) -> list[int]:
        out = []
        s = self.free_head
        while s != -1:
            out.append(s)
            s = int(self.a2[2 * s])
        return out

    def check_slot_conservation(self) -> None:
        seen = np.zeros(2 * self.n, dtype=bool)
        total = 0
        for u in range(self.n):
            for s in self.chain_slots(u):
                if seen[s]:
                    raise AssertionError(f"slot {s} in two chains")
                seen[s] = True
                total += 1
        for s in self.free_list():
            if seen[s]:
                raise AssertionError(f"slot {s} both free and chained")
            seen[s] = True
            total += 1
        if total != 2 * self.n:
            raise AssertionError(f"{total} slots accounted, expected {2 * self.n}")
        if len(self.free_list()) != self.free_count:
            raise AssertionError("free_count out of sync")


# ------------------------------------------------------------------ #
# order snapshots
# ------------------------------------------------------------------ #

def _spill_dir(tmp_dir: str | None) -> str:
    return tmp_dir or os.environ.get("SEDFS_TMPDIR") or tempfile.gettempdir()


@dataclass
class OrderSnapshot:
    """Node ids at orders [lo, hi] captured before a merge.

    mode "attrs": values parked in idx_deg of nodes that are frozen below
    `stable_below` and have no index block; both properties are unchanged
    by the merge being observed, so the borrowed slots can be re-derived at
    read time instead of stored. mode "spill": a flat little-endian u32
    file, 4 bytes per entry. Snapshots must be released.
    """

    lo: int
    hi: int
    mode: str
    stable_below: int
    path: str | None = None
    released: bool = field(default=False, compare=False)

    @property
    def width(self) -> int:
        return 0 if self.mode == "empty" else self.hi - self.lo + 1

    def _borrowed(self, store: TreeStore) -> np.ndarray:
        elig = np.flatnonzero((store.dfo < self.stable_below)
                              & (store.idx_off == NO_OFFSET))
        return elig[:self.width]

    def iter_chunks(self, store: TreeStore, counters: IoCounters | None = None,
                    chunk: int = 1 << 16):
        if self.released:
            raise RuntimeError("snapshot already released")
        if self.mode == "empty":
            return
        if self.mode == "attrs":
            slots = self._borrowed(store)
            for i in range(0, slots.size, chunk):
                yield store.idx_deg[slots[i:i + chunk]]
        else:
            with CountingFile(self.path, "rb", counters) as f:
                while True:
                    data = f.read_block(chunk * 4)
                    if not data:
                        return
                    yield np.frombuffer(data, dtype="<u4").astype(np.int64)

    def release(self, store: TreeStore) -> None:
        if self.released:
            return
        if self.mode == "attrs":
            store.idx_deg[self._borrowed(store)] = 0
        elif self.mode == "spill" and self.path:
            try:
                os.unlink(self.path)
            except OSError:
                pass
        self.released = True


def snapshot_orders(store: TreeStore, lo: int, hi: int, *,
                    stable_below: int | None = None,
                    counters: IoCounters | None = None,
                    tmp_dir: str | None = None) -> OrderSnapshot:
    """Capture who sits at orders [lo, hi] right now."""
    if hi < lo:
        return OrderSnapshot(lo=lo, hi=hi, mode="empty", stable_below=0)
    if stable_below is None:
        stable_below = lo
    width = hi - lo + 1
    ids = store.inv_order()[lo:hi + 1]
    eligible = int(np.count_nonzero((store.dfo < stable_below)
                                    & (store.idx_off == NO_OFFSET)))
    if 2 * width <= 2 * eligible:
        snap = OrderSnapshot(lo=lo, hi=hi, mode="attrs", stable_below=stable_below)
        store.idx_deg[snap._borrowed(store)] = ids
        return snap
    fd, path = tempfile.mkstemp(prefix="sedfs-snap-", suffix=".bin",
                                dir=_spill_dir(tmp_dir))
    os.close(fd)
    with CountingFile(path, "wb", counters) as f:
        f.write(ids.astype("<u4").tobytes())
    return OrderSnapshot(lo=lo, hi=hi, mode="spill", stable_below=stable_below,
                         path=path)


def compute_C(store: TreeStore, snap: OrderSnapshot,
              counters: IoCounters | None = None) -> int:
    """Length of the order prefix unchanged since the snapshot was taken.
    The snapshot must start at order 0 to mean the shared-prefix length."""
    inv = store.inv_order()
    off = snap.lo
    for ids in snap.iter_chunks(store, counters):
        cur = inv[off:off + ids.size]
        neq = ids != cur
        if neq.any():
            return off + int(np.flatnonzero(neq)[0])
        off += ids.size
    return off


def compute_C_plus(store: TreeStore, snap: OrderSnapshot,
                   counters: IoCounters | None = None) -> int:
    """Minimum current order among the snapped nodes (the nodes whose
    pre-merge order exceeded the batch window); n when the window is empty."""
    best = store.n
    for ids in snap.iter_chunks(store, counters):
        if ids.size:
            best = min(best, int(store.dfo[ids].min()))
    return best
