import numpy as np
import pytest

from sedfs.edge_index import (HEADER, EdgeIndex, IndexFormatError, IndexWriter,
                              build_index, load_sequentially, rewrite_index,
                              scan_index)
from sedfs.iostats import IoCounters
from sedfs.tree_store import NO_OFFSET

from conftest import random_edges, random_tree, store_from_tree


def _build(tmp_path, n=60, m=400, fnn=5, seed=0, name="x.nidx"):
    rng = np.random.default_rng(seed)
    children, _ = random_tree(rng, n)
    store = store_from_tree(n, 0, children)
    edges = random_edges(rng, n, m).astype(np.int64)
    path = str(tmp_path / name)
    index = build_index(store, fnn, [edges], path)
    return store, edges, index


def _oracle_set(store, edges, fnn):
    dfo = store.dfo
    return {(int(u), int(v)) for u, v in edges
            if dfo[u] >= fnn and dfo[v] > fnn}


def _decode_set(index):
    out = set()
    for t, h in scan_index(index):
        out.update(zip(t.tolist(), h.tolist()))
    return out


def test_build_matches_oracle_filter(tmp_path):
    store, edges, index = _build(tmp_path)
    expect = _oracle_set(store, edges, 5)
    assert _decode_set(index) == expect
    assert index.edge_count == len(expect)


def test_decode_is_grouped_and_sorted(tmp_path):
    _, _, index = _build(tmp_path, m=800)
    rows = []
    for t, h in scan_index(index):
        rows.extend(zip(t.tolist(), h.tolist()))
    assert rows == sorted(rows)


def test_directory_matches_blocks(tmp_path):
    store, edges, index = _build(tmp_path)
    tails = set(index.block_tails.tolist())
    for u in range(store.n):
        if u in tails:
            b = int(np.searchsorted(index.block_tails, u))
            assert store.idx_off[u] == index.block_offsets[b]
            assert store.idx_deg[u] == index.block_degs[b]
        else:
            assert store.idx_off[u] == NO_OFFSET
            assert store.idx_deg[u] == 0


def test_empty_index(tmp_path):
    store, edges, index = _build(tmp_path, fnn=10 ** 6)
    assert index.edge_count == 0
    assert _decode_set(index) == set()
    assert np.all(store.idx_off == NO_OFFSET)


def test_heads_deduplicated(tmp_path):
    # the sort puts equal (tail, head) pairs side by side; encode keeps one
    rng = np.random.default_rng(1)
    children, _ = random_tree(rng, 20)
    store = store_from_tree(20, 0, children)
    edges = np.array([[2, 3], [2, 3], [2, 5], [4, 3], [2, 3]], dtype=np.int64)
    index = build_index(store, 0, [edges], str(tmp_path / "d.nidx"))
    expect = {e for e in map(tuple, edges.tolist())
              if store.dfo[e[0]] >= 0 and store.dfo[e[1]] > 0}
    assert _decode_set(index) == expect


def test_load_sequentially_subset(tmp_path):
    store, edges, index = _build(tmp_path, m=600)
    rng = np.random.default_rng(3)
    live = np.flatnonzero(store.idx_off != NO_OFFSET)
    pick = rng.choice(live, size=min(10, live.size), replace=False)
    counters = IoCounters()
    t, h = load_sequentially(index, store.idx_off[pick], counters)
    got = set(zip(t.tolist(), h.tolist()))
    expect = {(u, v) for u, v in _decode_set(index) if u in set(pick.tolist())}
    assert got == expect
    c = counters.for_path(index.path)
    assert c.backward_seeks == 0


def test_load_sequentially_coalesces_adjacent_blocks(tmp_path):
    store, _, index = _build(tmp_path, m=600)
    counters = IoCounters()
    load_sequentially(index, index.block_offsets.copy(), counters)
    c = counters.for_path(index.path)
    # every block is requested, all byte-adjacent: one read covers them
    assert c.sequential_reads == 1
    assert c.backward_seeks == 0
    assert c.bytes_read == HEADER.size + index.data_bytes


def test_load_rejects_misaligned_offset(tmp_path):
    _, _, index = _build(tmp_path)
    with pytest.raises(IndexFormatError):
        load_sequentially(index, np.array([index.block_offsets[0] + 1]))


def test_rewrite_advancing_fnn(tmp_path):
    store, edges, index = _build(tmp_path, fnn=3)
    fnn2 = 20
    new = rewrite_index(index, store, fnn2)
    assert new.path == index.path
    assert _decode_set(new) == _oracle_set(store, edges, fnn2)
    # directory refreshed in place
    live = np.flatnonzero(store.idx_off != NO_OFFSET)
    assert set(live.tolist()) == set(new.block_tails.tolist())
    t, h = load_sequentially(new, store.idx_off[live])
    assert set(zip(t.tolist(), h.tolist())) == _oracle_set(store, edges, fnn2)


def test_writer_carry_across_chunks(tmp_path):
    # one tail group split across three write calls must encode as one block
    path = str(tmp_path / "c.nidx")
    w = IndexWriter(path, 50, None)
    w.write_sorted_chunk(np.array([7, 7]), np.array([1, 2]))
    w.write_sorted_chunk(np.array([7, 7]), np.array([3, 9]))
    w.write_sorted_chunk(np.array([7, 12]), np.array([11, 0]))
    index = w.finish()
    assert index.block_tails.tolist() == [7, 12]
    assert index.block_degs.tolist() == [5, 1]
    assert _decode_set(index) == {(7, 1), (7, 2), (7, 3), (7, 9), (7, 11),
                                  (12, 0)}


def test_scan_detects_truncation(tmp_path):
    _, _, index = _build(tmp_path, m=500)
    raw = open(index.path, "rb").read()
    open(index.path, "wb").write(raw[:-3])
    with pytest.raises(IndexFormatError):
        list(scan_index(index))
