"""Jitted inner loops for the packed tree store.

Array conventions (shared with tree_store.py, fixed by the tests):

- a1[u]: head slot of u's entry chain, or NONE (= 2n) when empty. During a
  merge, visited nodes hold the bitwise NOT of that value, so a1[u] < 0 is
  the visited test and the payload survives intact.
- a2[2s], a2[2s+1]: link and head of slot s. Links end with -1. Free slots
  thread through the same link field; a fresh store has slot k linking k-1
  with free head 2n-1, so allocation hands out 2n-1, 2n-2, ...
- Chains store children right-to-left: the chain head is the rightmost
  (most recently attached) child. Pushing a chain front-first onto the merge
  stack therefore pops leftmost tree child first, then batch edges in load
  order, which is exactly the visiting rule the oracle implements.

Everything here is O(touched slots); none of it performs I/O.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def load_kernel(a1, a2, parent, tails, heads, none_slot, free_head, free_count,
                min_free_count):
    """Prepend batch edges to their tails' chains. Skips edges that already
    are tree edges (parent[head] == tail). Returns updated free-list state,
    the number of loaded edges, and -1 on slot exhaustion."""
    loaded = 0
    for i in range(tails.shape[0]):
        u = tails[i]
        v = heads[i]
        if parent[v] == u:
            continue
        s = free_head
        if s == -1:
            return free_head, free_count, min_free_count, loaded, -1
        free_head = a2[2 * s]
        free_count -= 1
        if free_count < min_free_count:
            min_free_count = free_count
        cur = a1[u]
        a2[2 * s] = -1 if cur == none_slot else cur
        a2[2 * s + 1] = v
        a1[u] = s
        loaded += 1
    return free_head, free_count, min_free_count, loaded, 0


@njit(cache=True)
def merge_kernel(a1, a2, parent, dfo, root, none_slot, free_head, free_count):
    """One full DFS over tree + batch chains, restructuring in place.

    Claimed slots keep their ids and are re-prepended to their tail's fresh
    chain in claim order (so the head stays the rightmost child); slots whose
    head is already visited go to the free list. The candidate parent of an
    unvisited head is written at push time; the LIFO discipline guarantees
    the last writer before the claim is the claiming tail.

    Returns (visited_count, free_head, free_count). Visited marks are left
    set; the caller flips them back in one vectorized pass.
    """
    stack_top = np.int64(-1)
    dfo[root] = 0
    counter = np.int64(1)

    s = a1[root]
    a1[root] = ~none_slot
    if s != none_slot:
        while s != -1:
            nxt = a2[2 * s]
            v = a2[2 * s + 1]
            if a1[v] >= 0:
                parent[v] = root
            a2[2 * s] = stack_top
            stack_top = s
            s = nxt

    while stack_top != -1:
        s = stack_top
        stack_top = a2[2 * s]
        v = a2[2 * s + 1]
        if a1[v] < 0:
            a2[2 * s] = free_head
            free_head = s
            free_count += 1
        else:
            u = parent[v]
            dfo[v] = counter
            counter += 1
            cur = ~a1[u]
            a2[2 * s] = -1 if cur == none_slot else cur
            a1[u] = ~s
            t = a1[v]
            a1[v] = ~none_slot
            if t != none_slot:
                while t != -1:
                    nxt = a2[2 * t]
                    w = a2[2 * t + 1]
                    if a1[w] >= 0:
                        parent[w] = v
                    a2[2 * t] = stack_top
                    stack_top = t
                    t = nxt
    return counter, free_head, free_count


@njit(cache=True)
def rearrange_kernel(a1, a2, inv_order, fnn, chunk, none_slot, free_head,
                     free_count, min_free_count, slots_buf, keys_buf, w_out,
                     collect_w):
    """Reverse-order sweep: subtree weights plus chunked child reordering.

    Weights live in a synthetic chain-head entry per node ("(u, W(u)) as an
    edge"), allocated when u is processed and freed when u's parent sums its
    children; the root's entry is freed at the end, so no synthetic entry
    survives. Weights are computed for every node; only nodes with order
    >= fnn get their children reordered (weight desc, previous position asc,
    within consecutive position chunks of `chunk`).

    Chains must be pure tree edges (call only after a merge).
    """
    n = a1.shape[0]
    shift = np.int64(32)
    for i in range(n - 1, -1, -1):
        u = inv_order[i]
        w = np.int64(1)
        k = 0
        s = a1[u]
        if s != none_slot:
            while s != -1:
                v = a2[2 * s + 1]
                ws = a1[v]
                wv = a2[2 * ws + 1]
                w += wv
                lnk = a2[2 * ws]
                a1[v] = none_slot if lnk == -1 else lnk
                a2[2 * ws] = free_head
                free_head = ws
                free_count += 1
                # chain is right-to-left; record left-to-right later
                slots_buf[k] = s
                keys_buf[k] = wv
                k += 1
                s = a2[2 * s]
        if i >= fnn and k > 1:
            # flip to left-to-right positions, then sort inside chunks
            half = k // 2
            for j in range(half):
                o = k - 1 - j
                slots_buf[j], slots_buf[o] = slots_buf[o], slots_buf[j]
                keys_buf[j], keys_buf[o] = keys_buf[o], keys_buf[j]
            for j in range(k):
                keys_buf[j] = ((np.int64(n) - keys_buf[j]) << shift) | np.int64(j)
            c0 = 0
            while c0 < k:
                c1 = min(c0 + chunk, k)
                span = c1 - c0
                sub = np.empty(span, dtype=np.int64)
                for j in range(span):
                    sub[j] = keys_buf[c0 + j]
                perm = np.argsort(sub)
                tmp = np.empty(span, dtype=np.int64)
                for j in range(span):
                    tmp[j] = slots_buf[c0 + perm[j]]
                for j in range(span):
                    slots_buf[c0 + j] = tmp[j]
                c0 = c1
            # rebuild chain rightmost-first from the new left-to-right order
            prev = np.int64(-1)
            for j in range(k):
                t = slots_buf[j]
                a2[2 * t] = prev
                prev = t
            a1[u] = prev
        ws = free_head
        free_head = a2[2 * ws]
        free_count -= 1
        if free_count < min_free_count:
            min_free_count = free_count
        cur = a1[u]
        a2[2 * ws] = -1 if cur == none_slot else cur
        a2[2 * ws + 1] = w
        a1[u] = ws
        if collect_w:
            w_out[u] = w
    root = inv_order[0]
    ws = a1[root]
    lnk = a2[2 * ws]
    a1[root] = none_slot if lnk == -1 else lnk
    a2[2 * ws] = free_head
    free_head = ws
    free_count += 1
    return free_head, free_count, min_free_count


# ------------------------------------------------------------------ #
# varint codec (LEB128) for the compressed edge index
# ------------------------------------------------------------------ #

@njit(cache=True)
def varint_encode_block(values, out):
    """LEB128-encode int64 values (must be >= 0) into a uint8 buffer.
    Returns bytes written, or -1 if out is too small."""
    pos = 0
    cap = out.shape[0]
    for i in range(values.shape[0]):
        x = values[i]
        while True:
            b = x & 0x7F
            x >>= 7
            if pos >= cap:
                return -1
            if x:
                out[pos] = b | 0x80
            else:
                out[pos] = b
            pos += 1
            if not x:
                break
    return pos


@njit(cache=True)
def encode_tail_groups(tails, heads, out, group_tails, group_offs, group_lens,
                       group_degs):
    """Varint-encode complete (tail, head) groups from a (tail, head)-sorted
    slice. Block layout per tail: [degree][first head][gap-1 ...], heads
    strictly ascending after in-kernel dedup of equal pairs.

    Returns (bytes written, groups written, edges kept); -1 bytes on buffer
    overflow (caller grows the buffer and retries).
    """
    pos = np.int64(0)
    cap = out.shape[0]
    g = 0
    kept = np.int64(0)
    i = 0
    m = tails.shape[0]
    while i < m:
        u = tails[i]
        j = i
        deg = np.int64(0)
        while j < m and tails[j] == u:
            if j == i or heads[j] != heads[j - 1]:
                deg += 1
            j += 1
        group_tails[g] = u
        group_offs[g] = pos
        group_degs[g] = deg
        start = pos
        # degree
        x = deg
        while True:
            b = x & 0x7F
            x >>= 7
            if pos >= cap:
                return np.int64(-1), 0, np.int64(0)
            out[pos] = b | 0x80 if x else b
            pos += 1
            if not x:
                break
        prev = np.int64(-1)
        k = i
        while k < j:
            h = heads[k]
            k += 1
            if h == prev:
                continue
            x = h - prev - 1 if prev >= 0 else h
            prev = h
            kept += 1
            while True:
                b = x & 0x7F
                x >>= 7
                if pos >= cap:
                    return np.int64(-1), 0, np.int64(0)
                out[pos] = b | 0x80 if x else b
                pos += 1
                if not x:
                    break
        group_lens[g] = pos - start
        g += 1
        i = j
    return pos, g, kept


@njit(cache=True)
def index_decode_step(values, vstart, state, block_tails, out_t, out_h):
    """Advance the block-structured value stream decoder.

    state = [block cursor, heads remaining in block, previous head, phase]
    with phase 0 = expect degree, 1 = expect first head, 2 = expect gap.
    Consumes values[vstart:] until either the output fills or the values
    run out; returns (values consumed, edges emitted).
    """
    b = state[0]
    rem = state[1]
    prev = state[2]
    phase = state[3]
    vi = vstart
    e = 0
    nv = values.shape[0]
    cap = out_t.shape[0]
    while vi < nv and e < cap:
        x = values[vi]
        vi += 1
        if phase == 0:
            rem = x
            phase = 1
        else:
            if phase == 1:
                prev = x
            else:
                prev = prev + x + 1
            out_t[e] = block_tails[b]
            out_h[e] = prev
            e += 1
            rem -= 1
            if rem == 0:
                b += 1
                phase = 0
            else:
                phase = 2
    state[0] = b
    state[1] = rem
    state[2] = prev
    state[3] = phase
    return vi - vstart, e


@njit(cache=True)
def varint_decode_stream(buf, out):
    """Decode every complete varint in buf into out (int64).
    Returns (values decoded, bytes consumed); a trailing partial varint is
    left unconsumed for the caller to carry over."""
    nvals = 0
    pos = 0
    end = buf.shape[0]
    cap = out.shape[0]
    while pos < end and nvals < cap:
        x = np.int64(0)
        shift = 0
        p = pos
        complete = False
        while p < end:
            b = buf[p]
            p += 1
            x |= np.int64(b & 0x7F) << shift
            shift += 7
            if not (b & 0x80):
                complete = True
                break
        if not complete:
            break
        out[nvals] = x
        nvals += 1
        pos = p
    return nvals, pos
