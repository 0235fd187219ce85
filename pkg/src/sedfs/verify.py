"""Ground truth: reference DFS, edge classification, validity checks.

Everything here is deliberately plain Python over lists and dicts. The point
is independence: the engine's packed-array machinery is tested against this
module, so this module must not share code (or cleverness) with it. The one
exception is the vectorized fast path in is_dfs_tree, which exists so the
full validity matrix finishes inside its time budget; it is cross-checked
against the slow classifier at small scale by the test suite.

Node visiting rule, used by every reference routine: after visiting u, first
exhaust u's unvisited tree children leftmost first, then u's batch edges in
their given order. A head that is already visited is skipped. This is also
exactly what the in-place merge kernel implements.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

INF = math.inf


class EdgeClass(Enum):
    TREE = "tree"
    FORWARD = "forward"
    BACKWARD = "backward"
    FORWARD_CROSS = "forward_cross"
    BACKWARD_CROSS = "backward_cross"


class AuditError(AssertionError):
    pass


# ------------------------------------------------------------------ #
# reference DFS
# ------------------------------------------------------------------ #

def oracle_dfs(n: int, root: int, children: list[list[int]],
               batch: list[list[int]]) -> tuple[list[int], list[int]]:
    """DFS of (tree + batch) under the visiting rule above.

    children[u] is u's tree children left to right; batch[u] is u's batch
    heads in consumption order. Returns (parent, order); parent[root] = -1.
    Iterative so deep chains do not hit the recursion limit.
    """
    parent = [-1] * n
    order: list[int] = []
    pos = [0] * n
    seq = [children[u] + batch[u] for u in range(n)]
    visited = [False] * n
    visited[root] = True
    order.append(root)
    stack = [root]
    while stack:
        u = stack[-1]
        i = pos[u]
        if i >= len(seq[u]):
            stack.pop()
            continue
        pos[u] = i + 1
        v = seq[u][i]
        if not visited[v]:
            visited[v] = True
            parent[v] = u
            order.append(v)
            stack.append(v)
    if len(order) != n:
        raise ValueError(f"not spanning: reached {len(order)} of {n} nodes")
    return parent, order


def oracle_merge(n: int, root: int, children: list[list[int]],
                 batch_edges: list[tuple[int, int]]) -> tuple[list[int], list[int]]:
    """Merge a flat edge batch into an ordered tree; batch edges are consumed
    per tail in list order (the engine's load order)."""
    batch: list[list[int]] = [[] for _ in range(n)]
    for u, v in batch_edges:
        batch[u].append(v)
    return oracle_dfs(n, root, children, batch)


def children_in_order(parent: list[int], order: list[int]) -> list[list[int]]:
    """Left-to-right child lists; preorder position gives sibling order."""
    children: list[list[int]] = [[] for _ in parent]
    for v in order:
        p = parent[v]
        if p >= 0:
            children[p].append(v)
    return children


def dfo_of(order: list[int]) -> list[int]:
    dfo = [0] * len(order)
    for k, v in enumerate(order):
        dfo[v] = k
    return dfo


def order_prefix_len(order_a, order_b) -> int:
    """Length of the shared order prefix of two visit sequences."""
    k = 0
    for x, y in zip(order_a, order_b):
        if x != y:
            break
        k += 1
    return k


# ------------------------------------------------------------------ #
# classification
# ------------------------------------------------------------------ #

def _ancestor_chain(parent: list[int], x: int) -> list[int]:
    chain = [x]
    while parent[x] >= 0:
        x = parent[x]
        chain.append(x)
    return chain


def lca(parent: list[int], u: int, v: int) -> int:
    anc = set(_ancestor_chain(parent, u))
    x = v
    while x not in anc:
        x = parent[x]
    return x


def classify_edge(parent: list[int], dfo: list[int], e: tuple[int, int]) -> EdgeClass:
    u, v = e
    if parent[v] == u:
        return EdgeClass.TREE
    w = lca(parent, u, v)
    if w == u:
        return EdgeClass.FORWARD
    if w == v:
        return EdgeClass.BACKWARD
    if dfo[u] < dfo[v]:
        return EdgeClass.FORWARD_CROSS
    return EdgeClass.BACKWARD_CROSS


def compute_upsilon(edges, parent: list[int], dfo: list[int]) -> float:
    """Smallest tail dfo over the graph's forward cross edges, inf if none."""
    best = INF
    for u, v in edges:
        if classify_edge(parent, dfo, (u, v)) is EdgeClass.FORWARD_CROSS:
            if dfo[u] < best:
                best = dfo[u]
    return best


# ------------------------------------------------------------------ #
# validity
# ------------------------------------------------------------------ #

def subtree_sizes(parent: list[int] | np.ndarray, order: list[int] | np.ndarray) -> np.ndarray:
    parent = np.asarray(parent, dtype=np.int64)
    order = np.asarray(order, dtype=np.int64)
    size = np.ones(parent.size, dtype=np.int64)
    for v in order[::-1].tolist():
        p = parent[v]
        if p >= 0:
            size[p] += size[v]
    return size


def is_dfs_tree(edge_chunks, parent, order) -> tuple[bool, tuple[int, int] | None]:
    """True iff no edge is a forward cross edge under (parent, order).

    Vectorized: v lies in u's subtree iff dfo[u] <= dfo[v] < dfo[u]+size[u]
    (preorder interval), so an offender is any edge with
    dfo[v] >= dfo[u] + size[u] and dfo[u] < dfo[v]. Streams the edges once;
    returns the first offender in stream order.
    """
    parent = np.asarray(parent, dtype=np.int64)
    order = np.asarray(order, dtype=np.int64)
    n = parent.size
    dfo = np.empty(n, dtype=np.int64)
    dfo[order] = np.arange(n, dtype=np.int64)
    size = subtree_sizes(parent, order)
    if isinstance(edge_chunks, np.ndarray):
        edge_chunks = [edge_chunks]
    for chunk in edge_chunks:
        arr = np.asarray(chunk, dtype=np.int64).reshape(-1, 2)
        du = dfo[arr[:, 0]]
        dv = dfo[arr[:, 1]]
        bad = dv >= du + size[arr[:, 0]]
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            return False, (int(arr[i, 0]), int(arr[i, 1]))
    return True, None


# ------------------------------------------------------------------ #
# transition audit
# ------------------------------------------------------------------ #

ALLOWED_TRANSITIONS = {
    EdgeClass.TREE: {EdgeClass.TREE, EdgeClass.FORWARD, EdgeClass.BACKWARD_CROSS},
    EdgeClass.FORWARD: {EdgeClass.FORWARD, EdgeClass.BACKWARD_CROSS},
    EdgeClass.BACKWARD: {EdgeClass.BACKWARD, EdgeClass.FORWARD_CROSS},
    EdgeClass.BACKWARD_CROSS: {EdgeClass.BACKWARD_CROSS, EdgeClass.BACKWARD,
                               EdgeClass.FORWARD_CROSS},
    # a forward cross edge may end up anywhere (it is the edge being merged,
    # or collateral); no constraint is asserted for it
    EdgeClass.FORWARD_CROSS: set(EdgeClass),
}


def chain_reaction_audit(n: int, root: int, parent: list[int], order: list[int],
                         edges: list[tuple[int, int]],
                         e: tuple[int, int]) -> dict[tuple[EdgeClass, EdgeClass], int]:
    """Merge the single forward cross edge e and check every other edge's
    class change against the allowed-transition table, plus the positional
    dichotomy: for a forward cross edge (x, v) and any proper ancestor u of
    v, dfo(x) > dfo(u) forces lca(u, x) = u, and dfo(x) < dfo(u) forces the
    lca to be neither u nor x.
    """
    dfo = dfo_of(order)
    before = {edge: classify_edge(parent, dfo, edge) for edge in edges}
    if before[e] is not EdgeClass.FORWARD_CROSS:
        raise ValueError("audit requires a forward cross edge to merge")
    _check_dichotomy(parent, dfo, edges)

    children = children_in_order(parent, order)
    parent2, order2 = oracle_merge(n, root, children, [e])
    dfo2 = dfo_of(order2)
    record: dict[tuple[EdgeClass, EdgeClass], int] = {}
    for edge in edges:
        cls_a = before[edge]
        cls_b = classify_edge(parent2, dfo2, edge)
        if edge != e and cls_b not in ALLOWED_TRANSITIONS[cls_a]:
            raise AuditError(f"forbidden transition {cls_a} -> {cls_b} for {edge} "
                             f"when merging {e}")
        key = (cls_a, cls_b)
        record[key] = record.get(key, 0) + 1
    return record


def _check_dichotomy(parent, dfo, edges) -> None:
    for x, v in edges:
        if classify_edge(parent, dfo, (x, v)) is not EdgeClass.FORWARD_CROSS:
            continue
        u = parent[v]
        while u >= 0:
            w = lca(parent, u, x)
            if dfo[x] > dfo[u]:
                if w != u:
                    raise AuditError(f"dichotomy: lca({u},{x}) = {w}, expected {u}")
            elif dfo[x] < dfo[u]:
                if w == u or w == x:
                    raise AuditError(f"dichotomy: lca({u},{x}) = {w}, "
                                     f"expected neither endpoint")
            u = parent[u]


# ------------------------------------------------------------------ #
# the worked 10-node example
# ------------------------------------------------------------------ #
# Node names r,a,b,c,d,f,g,h,p,q map to ids 0..9. The nine tree edges (in
# canonical load order) build the running tree T0; the three extra edges are
# what make T0 fail to be a DFS-tree. Every frozen constant the test suite
# asserts about this graph is derived from this block.

FIXTURE_N = 10
FIXTURE_ROOT = 0
FIXTURE_NAME_TO_ID = {name: i for i, name in enumerate("rabcdfghpq")}
FIXTURE_ID_TO_NAME = "rabcdfghpq"


def _ids(pairs: str) -> list[tuple[int, int]]:
    out = []
    for token in pairs.split():
        t, h = token
        out.append((FIXTURE_NAME_TO_ID[t], FIXTURE_NAME_TO_ID[h]))
    return out


FIXTURE_TREE_EDGES = _ids("ra rb rc ad bf bg ch dp hq")
FIXTURE_EXTRA_EDGES = _ids("pf bc gq")
FIXTURE_EDGES = FIXTURE_TREE_EDGES + FIXTURE_EXTRA_EDGES


def fixture_t0() -> tuple[list[int], list[int]]:
    """T0 with its child order: r:[a,b,c] a:[d] b:[f,g] c:[h] d:[p] h:[q]."""
    children: list[list[int]] = [[] for _ in range(FIXTURE_N)]
    for u, v in FIXTURE_TREE_EDGES:
        children[u].append(v)
    return oracle_dfs(FIXTURE_N, FIXTURE_ROOT, children,
                      [[] for _ in range(FIXTURE_N)])


def names_of(order: list[int]) -> str:
    return "".join(FIXTURE_ID_TO_NAME[v] for v in order)
