import numpy as np
import pytest

from sedfs import verify
from sedfs.batching import (BatchOverflow, IrreducibleBatch, ParamGateError,
                            obtain_edges, scan_batch_B)
from sedfs.edge_index import build_index
from sedfs.graph_io import GraphSource, write_edge_list
from sedfs.verify import FIXTURE_EDGES, FIXTURE_N, FIXTURE_ROOT

from conftest import random_edges, random_tree, store_from_tree


def _t2_store():
    """The worked example's T2: orders r,a,d,p,f,b,g,c,h,q."""
    names = verify.FIXTURE_NAME_TO_ID
    children = [[] for _ in range(FIXTURE_N)]
    for u, v in verify._ids("ra rb ad dp pf bg bc ch hq"):
        children[u].append(v)
    store = store_from_tree(FIXTURE_N, FIXTURE_ROOT, children)
    assert verify.names_of(store.inv_order().tolist()) == "radpfbgchq"
    return store, names


def test_obtain_edges_fixture_window(tmp_path):
    store, names = _t2_store()
    edges = np.array(FIXTURE_EDGES, dtype=np.int64)
    index = build_index(store, 6, [edges], str(tmp_path / "f.nidx"))
    batch, max_order = obtain_edges(store, 6, index, budget_edges=2)
    assert max_order == 7
    # offsets ascend with tail id: c's block loads before g's
    assert batch.rows().tolist() == [[names["c"], names["h"]],
                                     [names["g"], names["q"]]]


def test_obtain_edges_full_walk(tmp_path):
    store, _ = _t2_store()
    edges = np.array(FIXTURE_EDGES, dtype=np.int64)
    index = build_index(store, 6, [edges], str(tmp_path / "f.nidx"))
    batch, max_order = obtain_edges(store, 6, index)
    assert max_order == store.n - 1
    assert {tuple(r) for r in batch.rows().tolist()} == \
        {tuple(e) for e in verify._ids("gq ch hq")}


def test_obtain_edges_oracle_window(tmp_path):
    rng = np.random.default_rng(12)
    n = 200
    children, _ = random_tree(rng, n)
    store = store_from_tree(n, 0, children)
    edges = random_edges(rng, n, 900).astype(np.int64)
    fnn = 17
    index = build_index(store, fnn, [edges], str(tmp_path / "w.nidx"))
    for budget in (10, 37, n):
        batch, max_order = obtain_edges(store, fnn, index,
                                        budget_edges=budget)
        assert batch.size <= budget
        dfo = store.dfo
        expect = {(int(u), int(v)) for u, v in edges
                  if dfo[u] >= fnn and dfo[v] > fnn
                  and fnn <= dfo[u] <= max_order}
        assert set(zip(batch.tails.tolist(), batch.heads.tolist())) == expect
        # deterministic
        again, mo2 = obtain_edges(store, fnn, index, budget_edges=budget)
        assert mo2 == max_order
        assert again.rows().tolist() == batch.rows().tolist()


def test_obtain_edges_irreducible(tmp_path):
    rng = np.random.default_rng(4)
    n = 12
    children, _ = random_tree(rng, n)
    store = store_from_tree(n, 0, children)
    hot = int(store.inv_order()[5])
    heads = [int(v) for v in store.inv_order()[6:11]]
    edges = np.array([(hot, v) for v in heads], dtype=np.int64)
    index = build_index(store, 5, [edges], str(tmp_path / "h.nidx"))
    with pytest.raises(IrreducibleBatch):
        obtain_edges(store, 5, index, budget_edges=3)
    # a later hot tail is not irreducible: the walk stops in front of it
    batch, max_order = obtain_edges(store, 4, index, budget_edges=3)
    assert batch.size == 0 and max_order == 4


def _fixture_source(tmp_path, order_edges=None):
    edges = np.array(order_edges or FIXTURE_EDGES, dtype=np.uint32)
    path = str(tmp_path / "fx.bin")
    write_edge_list(path, FIXTURE_N, edges, root=FIXTURE_ROOT)
    return GraphSource.open(path)


def test_scan_batch_B_worked_example(tmp_path):
    source = _fixture_source(tmp_path)
    children = [[] for _ in range(FIXTURE_N)]
    for u, v in verify.FIXTURE_TREE_EDGES:
        children[u].append(v)
    store = store_from_tree(FIXTURE_N, FIXTURE_ROOT, children)

    batch, max_order = scan_batch_B(source, store, 1, budget_edges=9)
    assert max_order == 5
    assert {tuple(r) for r in batch.rows().tolist()} == \
        {tuple(e) for e in verify._ids("ra rb rc ad dp pf bf bg bc")}
    # collection preserves file order
    positions = {tuple(e): i for i, e in enumerate(FIXTURE_EDGES)}
    got = [positions[tuple(r)] for r in batch.rows().tolist()]
    assert got == sorted(got)


def test_scan_batch_B_overflow(tmp_path):
    source = _fixture_source(tmp_path)
    children = [[] for _ in range(FIXTURE_N)]
    for u, v in verify.FIXTURE_TREE_EDGES:
        children[u].append(v)
    store = store_from_tree(FIXTURE_N, FIXTURE_ROOT, children)
    with pytest.raises(BatchOverflow):
        scan_batch_B(source, store, 1, budget_edges=2)


def test_scan_batch_B_node_gate(tmp_path):
    path = str(tmp_path / "big.bin")
    write_edge_list(path, 100_001, np.array([[0, 1]], dtype=np.uint32), root=0)
    source = GraphSource.open(path)
    store = None
    with pytest.raises(ParamGateError):
        scan_batch_B(source, store, 1)
