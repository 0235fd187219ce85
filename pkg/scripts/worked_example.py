#!/usr/bin/env python3
"""Walk the bundled 10-node example end to end, printing every state.

Three stages: the stability number of the starting tree and how it reacts
to merging non-tree edges one at a time, the first naive batch window at
FNN=1 with a budget of 9 edges, and finally full runs of the indexed and
naive drivers over the same graph.
"""

import argparse
import os
import tempfile

import numpy as np

from sedfs import verify
from sedfs.batching import scan_batch_B
from sedfs.graph_io import GraphSource, write_edge_list
from sedfs.runner import run_algorithm
from sedfs.tree_store import TreeStore, compute_C, snapshot_orders
from sedfs.verify import (FIXTURE_EDGES, FIXTURE_EXTRA_EDGES, FIXTURE_N,
                          FIXTURE_ROOT, FIXTURE_TREE_EDGES, compute_upsilon,
                          names_of)


def t0_store() -> TreeStore:
    store = TreeStore(FIXTURE_N, FIXTURE_ROOT)
    store.load_batch(np.array(FIXTURE_TREE_EDGES, dtype=np.int64))
    store.merge_batch()
    return store


def show(store: TreeStore, label: str) -> None:
    ups = compute_upsilon([tuple(e) for e in FIXTURE_EDGES],
                          store.parent.tolist(), store.dfo.tolist())
    print(f"  {label}: order {names_of(store.inv_order().tolist())}  "
          f"stability {ups}")


def edge_names(rows) -> str:
    return " ".join(f"{verify.FIXTURE_ID_TO_NAME[int(u)]}"
                    f"{verify.FIXTURE_ID_TO_NAME[int(v)]}" for u, v in rows)


def main() -> None:
    ap = argparse.ArgumentParser(description="bundled 10-node walkthrough")
    ap.add_argument("--budget", type=int, default=9,
                    help="edge budget for the naive window")
    args = ap.parse_args()

    print("graph: nodes", " ".join(verify.FIXTURE_ID_TO_NAME))
    print("  tree edges  ", edge_names(FIXTURE_TREE_EDGES))
    print("  extra edges ", edge_names(FIXTURE_EXTRA_EDGES))

    print("\nstability of the starting tree, one merged edge at a time:")
    show(t0_store(), f"{'T0':<13}")
    run = []
    for extra in verify._ids("bc pf gq"):
        run.append(extra)
        s = t0_store()
        s.load_batch(np.array(run, dtype=np.int64))
        s.merge_batch()
        show(s, f"{'T0 + ' + edge_names(run):<13}")

    print(f"\nnaive window at FNN=1 with budget {args.budget}:")
    with tempfile.TemporaryDirectory(prefix="sedfs-example-") as work:
        path = os.path.join(work, "fixture.g")
        write_edge_list(path, FIXTURE_N,
                        np.array(FIXTURE_EDGES, dtype=np.uint32),
                        root=FIXTURE_ROOT)
        source = GraphSource.open(path)
        store = t0_store()
        batch, k = scan_batch_B(source, store, 1, budget_edges=args.budget)
        rows = batch.rows()
        print(f"  cutoff K={k}, batch of {batch.size}: {edge_names(rows)}")
        snap = snapshot_orders(store, 0, FIXTURE_N - 1)
        store.load_batch(rows.astype(np.int64))
        store.merge_batch()
        c = compute_C(store, snap)
        snap.release(store)
        show(store, f"{'after merge':<13}")
        print(f"  prefix C={c}, next FNN = min(C, K+1) = {min(c, k + 1)}")

        print("\nfull runs over the same file:")
        for mode, kw in (("ep", {}), ("naive", {"budget_edges": args.budget})):
            s = run_algorithm(path, mode, **kw)
            print(f"  {mode:>5}: {s.iterations} iterations, "
                  f"{s.bytes_read} bytes read, digest {s.order_digest[:16]}..")
            for row in s.trace:
                print(f"         iter {row['iteration']}: FNN={row['fnn']} "
                      f"max_order={row['max_order']} "
                      f"batch={row['batch_edges']}")


if __name__ == "__main__":
    main()
