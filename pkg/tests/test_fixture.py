"""The worked 10-node example, end to end, against frozen values.

Every constant here was derived once by hand from the running example
(nodes r,a,b,c,d,f,g,h,p,q; tree ra rb rc ad bf bg ch dp hq; extras
pf bc gq) and is asserted exactly. A drift in any of them means the merge
rule, the classification, or the order bookkeeping changed meaning.
"""

import math

import numpy as np

from sedfs import verify
from sedfs.verify import (EdgeClass, FIXTURE_EDGES, FIXTURE_EXTRA_EDGES,
                          FIXTURE_N, FIXTURE_ROOT, FIXTURE_TREE_EDGES,
                          classify_edge, children_in_order, compute_upsilon,
                          dfo_of, fixture_t0, names_of, oracle_merge,
                          order_prefix_len)

from conftest import store_from_tree


def _merge_seq(*batches):
    """Apply successive single-batch merges starting from T0, oracle side."""
    parent, order = fixture_t0()
    for batch in batches:
        children = children_in_order(parent, order)
        parent, order = oracle_merge(FIXTURE_N, FIXTURE_ROOT, children, batch)
    return parent, order


def test_t0_preorder():
    parent, order = fixture_t0()
    assert names_of(order) == "radpbfgchq"
    assert parent[verify.FIXTURE_NAME_TO_ID["p"]] == verify.FIXTURE_NAME_TO_ID["d"]


def test_t1_merge_bc():
    parent, order = _merge_seq(verify._ids("bc"))
    assert names_of(order) == "radpbfgchq"          # order is unchanged
    dfo = dfo_of(order)
    c, b = verify.FIXTURE_NAME_TO_ID["c"], verify.FIXTURE_NAME_TO_ID["b"]
    assert dfo[c] == 7
    assert parent[c] == b                           # but the tree changed


def test_upsilon_chain():
    p0, o0 = fixture_t0()
    assert compute_upsilon(FIXTURE_EDGES, p0, dfo_of(o0)) == 3

    p1, o1 = _merge_seq(verify._ids("bc"))
    assert compute_upsilon(FIXTURE_EDGES, p1, dfo_of(o1)) == 3

    p2, o2 = _merge_seq(verify._ids("bc"), verify._ids("pf"))
    assert names_of(o2) == "radpfbgchq"
    assert compute_upsilon(FIXTURE_EDGES, p2, dfo_of(o2)) == 6
    assert order_prefix_len(o0, o2) == 4            # C(T0, T2)

    p3, o3 = _merge_seq(verify._ids("bc"), verify._ids("pf"), verify._ids("gq"))
    assert names_of(o3) == "radpfbgqch"
    assert compute_upsilon(FIXTURE_EDGES, p3, dfo_of(o3)) == math.inf
    ok, off = verify.is_dfs_tree(np.array(FIXTURE_EDGES), p3, o3)
    assert ok and off is None


def test_naive_first_iteration():
    """Budget-9 batch at FNN=1: the merge lands on T2 and the FNN update is
    min(C, Max+1) = min(4, 6) = 4."""
    p0, o0 = fixture_t0()
    dfo = dfo_of(o0)
    budget, fnn = 9, 1
    lo = {e: min(dfo[e[0]], dfo[e[1]]) for e in FIXTURE_EDGES}
    hi = {e: max(dfo[e[0]], dfo[e[1]]) for e in FIXTURE_EDGES}
    counts = np.bincount([lo[e] for e in FIXTURE_EDGES if hi[e] >= fnn],
                         minlength=FIXTURE_N)
    cum = np.cumsum(counts)
    K = int(np.searchsorted(cum, budget, side="right")) - 1
    assert K == 5
    batch = [e for e in FIXTURE_EDGES if lo[e] <= K and hi[e] >= fnn]
    assert len(batch) == 9
    assert set(batch) == set(verify._ids("ra rb rc ad dp pf bf bg bc"))

    children = children_in_order(p0, o0)
    p1, o1 = oracle_merge(FIXTURE_N, FIXTURE_ROOT, children, batch)
    assert names_of(o1) == "radpfbgchq"
    assert min(order_prefix_len(o0, o1), K + 1) == 4


def test_c_plus_t0_t2():
    """Minimum new order among nodes whose old order exceeded Max(B)=5."""
    _, o0 = fixture_t0()
    _, o2 = _merge_seq(verify._ids("bc"), verify._ids("pf"))
    dfo0, dfo2 = dfo_of(o0), dfo_of(o2)
    moved = [v for v in range(FIXTURE_N) if dfo0[v] > 5]
    assert min(dfo2[v] for v in moved) == 6


def test_classification_t0():
    parent, order = fixture_t0()
    dfo = dfo_of(order)
    got = {e: classify_edge(parent, dfo, e) for e in FIXTURE_EDGES}
    for e in FIXTURE_TREE_EDGES:
        assert got[e] is EdgeClass.TREE
    assert all(got[e] is EdgeClass.FORWARD_CROSS for e in FIXTURE_EXTRA_EDGES)


def test_store_free_list_after_fixture_merge(fixture_store):
    """Slot bookkeeping of the packed arrays over the full load+merge cycle.

    Slots are claimed top down, so T0's nine tree edges sit in 19..11 and
    the extras (pf, bc, gq) land in 10, 9, 8. The merge then skips exactly
    (b,f) slot 15, (h,q) slot 11, (r,c) slot 17, in that encounter order,
    leaving the free list 17 -> 11 -> 15 -> 7 -> ...
    """
    s = fixture_store
    names = verify.FIXTURE_NAME_TO_ID
    assert s.chain_slots(FIXTURE_ROOT) == [17, 18, 19]
    assert s.children(FIXTURE_ROOT) == [names["a"], names["b"], names["c"]]
    assert s.free_list()[:3] == [10, 9, 8]

    s.load_batch(np.array(FIXTURE_EXTRA_EDGES, dtype=np.int64))
    assert s.chain_slots(names["p"]) == [10]
    assert s.used_slots == 12
    s.merge_batch()
    assert names_of(s.inv_order().tolist()) == "radpfbgqch"
    assert s.free_list()[:4] == [17, 11, 15, 7]
    assert s.used_slots == 9
    s.check_slot_conservation()


def test_store_merges_match_oracle(fixture_store):
    p3, o3 = _merge_seq(FIXTURE_EXTRA_EDGES)
    s = fixture_store
    s.load_batch(np.array(FIXTURE_EXTRA_EDGES, dtype=np.int64))
    s.merge_batch()
    assert s.inv_order().tolist() == o3
    assert s.parent.tolist() == p3
