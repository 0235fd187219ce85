import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sedfs.graph_io import write_edge_list
from sedfs.tree_store import TreeStore
from sedfs import verify

settings.register_profile(
    "dev", max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile(
    "ci", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


# ------------------------------------------------------------------ #
# shared construction helpers
# ------------------------------------------------------------------ #

def random_tree(rng: np.random.Generator, n: int, root: int = 0):
    """Random ordered spanning tree: attach nodes in a random permutation,
    each to a random earlier node; child order = attachment order."""
    children = [[] for _ in range(n)]
    parent = [-1] * n
    placed = [root]
    rest = [v for v in range(n) if v != root]
    rng.shuffle(rest)
    for v in rest:
        p = int(placed[rng.integers(0, len(placed))])
        parent[v] = p
        children[p].append(v)
        placed.append(v)
    return children, parent


def store_from_tree(n: int, root: int, children) -> TreeStore:
    """A TreeStore whose tree and child order match `children` exactly:
    load the tree edges as a batch (load order = child order) and merge."""
    store = TreeStore(n, root)
    edges = [(u, v) for u in range(n) for v in children[u]]
    if edges:
        store.load_batch(np.array(edges, dtype=np.int64))
    store.merge_batch()
    return store


def random_edges(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """m distinct non-loop edges, order randomized."""
    seen = set()
    out = []
    while len(out) < m:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u != v and (u, v) not in seen:
            seen.add((u, v))
            out.append((u, v))
    return np.array(out, dtype=np.uint32)


def write_tmp_graph(path, n: int, edges) -> str:
    path = str(path)
    write_edge_list(path, n, np.asarray(edges, dtype=np.uint32))
    return path


@pytest.fixture(scope="session", autouse=True)
def kernel_warmup():
    """Touch every jitted kernel once so compile time never lands inside a
    timed assertion."""
    children, _ = random_tree(np.random.default_rng(0), 8)
    store = store_from_tree(8, 0, children)
    store.load_batch(np.array([[1, 2]], dtype=np.int64))
    store.merge_batch()
    from sedfs.rearrange import rearrange
    rearrange(store, 0)
    from sedfs import _kernels
    buf = np.zeros(8, dtype=np.uint8)
    out = np.zeros(4, dtype=np.int64)
    _kernels.varint_decode_stream(buf[:1], out)


@pytest.fixture
def fixture_store():
    """The worked 10-node example as a TreeStore holding T0."""
    children = [[] for _ in range(verify.FIXTURE_N)]
    for u, v in verify.FIXTURE_TREE_EDGES:
        children[u].append(v)
    return store_from_tree(verify.FIXTURE_N, verify.FIXTURE_ROOT, children)
