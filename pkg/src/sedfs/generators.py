"""Benchmark graph generators.

Both generators write edge-list files directly (streaming, deterministic
under a seed) and never hold more than O(n) working state for the ER large-m
path. Graphs are simple digraphs: no self loops, no duplicate edges.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph_io import EdgeListWriter, GraphHeader
from .iostats import IoCounters

_U64 = np.uint64
_C1 = _U64(0xBF58476D1CE4E5B9)
_C2 = _U64(0x94D049BB133111EB)
_CHUNK = 1 << 16


class ParamError(ValueError):
    pass


# ------------------------------------------------------------------ #
# Erdos-Renyi G(n, m)
# ------------------------------------------------------------------ #

def generate_er(path: str | os.PathLike, n: int, m: int, seed: int,
                counters: IoCounters | None = None) -> GraphHeader:
    """Uniform simple digraph with exactly m distinct directed edges.

    Small m (within the 2n in-memory budget): rejection sampling against a
    hash set of pair codes. Larger m: a keyed Feistel permutation of the pair
    code domain [0, n(n-1)) with cycle walking; codes are distinct by
    bijectivity, so no dedup state is needed at any m.
    """
    if n < 2:
        raise ParamError("need n >= 2")
    domain = n * (n - 1)
    if m > domain:
        raise ParamError(f"m={m} exceeds n(n-1)={domain}")
    rng = np.random.default_rng(seed)
    writer = EdgeListWriter(path, n=n, counters=counters)
    if m <= 2 * n:
        codes = _er_codes_rejection(rng, domain, m)
        writer.write_chunk(_decode_pairs(codes, n))
    else:
        for chunk in _er_codes_feistel(rng, domain, m):
            writer.write_chunk(_decode_pairs(chunk, n))
    return writer.close()


def _er_codes_rejection(rng: np.random.Generator, domain: int, m: int) -> np.ndarray:
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < m:
        draw = rng.integers(0, domain, size=max(64, m - len(out)), dtype=np.int64)
        for k in draw.tolist():
            if k not in seen:
                seen.add(k)
                out.append(k)
                if len(out) == m:
                    break
    return np.array(out, dtype=np.int64)


def _er_codes_feistel(rng: np.random.Generator, domain: int, m: int):
    half_bits = (max(domain.bit_length(), 2) + 1) // 2
    mask = _U64((1 << half_bits) - 1)
    shift = _U64(half_bits)
    keys = rng.integers(0, 1 << 63, size=4, dtype=np.uint64)
    produced = 0
    j = 0
    dom = _U64(domain)
    while produced < m:
        x = np.arange(j, j + _CHUNK, dtype=np.uint64)
        j += _CHUNK
        y = _feistel(x, keys, shift, mask)
        y = y[y < dom]
        if y.size == 0:
            continue
        take = min(y.size, m - produced)
        produced += take
        yield y[:take].astype(np.int64)


def _feistel(x: np.ndarray, keys: np.ndarray, shift: _U64, mask: _U64) -> np.ndarray:
    left = x >> shift
    right = x & mask
    for k in keys:
        z = right + k
        z = (z ^ (z >> _U64(30))) * _C1
        z = (z ^ (z >> _U64(27))) * _C2
        z = z ^ (z >> _U64(31))
        left, right = right, left ^ (z & mask)
    return (left << shift) | right


def _decode_pairs(codes: np.ndarray, n: int) -> np.ndarray:
    u, w = np.divmod(codes, n - 1)
    v = w + (w >= u)
    pairs = np.empty((codes.size, 2), dtype=np.uint32)
    pairs[:, 0] = u
    pairs[:, 1] = v
    return pairs


# ------------------------------------------------------------------ #
# scale-free (extended Barabasi-Albert, directed adaptation)
# ------------------------------------------------------------------ #

@dataclass
class SfStats:
    n: int
    m: int
    growth_edges: int
    link_edges: int
    rejected: int


def generate_sf(path: str | os.PathLike, n: int, seed: int,
                p_link: float = 0.9,
                counters: IoCounters | None = None) -> SfStats:
    """Heavy-tailed digraph grown by preferential attachment.

    Each step either (prob p_link) adds an edge from a uniform existing node
    to a target drawn from the endpoint multiset, or spawns a new node with
    one such growth edge; growth continues until n nodes exist, so the file
    has exactly n-1 growth edges plus the accepted link edges
    (~ n * p/(1-p) of them). Self loops and duplicates are rejected and
    retried a bounded number of times.
    """
    if n < 2:
        raise ParamError("need n >= 2")
    rng = np.random.default_rng(seed)
    endpoints: list[int] = [0]
    seen: set[int] = set()
    buf: list[tuple[int, int]] = []
    writer = EdgeListWriter(path, n=n, counters=counters)
    stats = SfStats(n=n, m=0, growth_edges=0, link_edges=0, rejected=0)
    nodes = 1

    def emit(u: int, v: int) -> None:
        buf.append((u, v))
        endpoints.append(u)
        endpoints.append(v)
        seen.add(u * n + v)
        if len(buf) >= _CHUNK:
            writer.write_chunk(np.array(buf, dtype=np.uint32))
            buf.clear()

    while nodes < n:
        if nodes >= 2 and rng.random() < p_link:
            for _ in range(16):
                u = int(rng.integers(0, nodes))
                v = endpoints[int(rng.integers(0, len(endpoints)))]
                if u != v and (u * n + v) not in seen:
                    emit(u, v)
                    stats.link_edges += 1
                    break
                stats.rejected += 1
        else:
            u = nodes
            v = endpoints[int(rng.integers(0, len(endpoints)))]
            nodes += 1
            emit(u, v)
            stats.growth_edges += 1
    if buf:
        writer.write_chunk(np.array(buf, dtype=np.uint32))
    hdr = writer.close()
    stats.m = hdr.m
    return stats
