"""External sorting of int64 key streams.

Shared by the adjacency-order converter (keys = packed edge pairs) and the
index builder (same packing, pre-filtered). Runs are plain little-endian
int64 files in a temp directory; the merge phase is heapq.merge, the stdlib's
tournament-tree merge, nested in groups of at most 64 runs so the open-file
count stays bounded no matter how many runs the sort phase produced.
"""

from __future__ import annotations

import heapq
import itertools
import os
import shutil
import tempfile
from collections.abc import Iterable, Iterator

import numpy as np

from .iostats import CountingFile, IoCounters

MAX_FANIN = 64
_RUN_CHUNK = 1 << 16  # keys per read while merging


def run_dir(tmp_root: str | None = None) -> str:
    base = tmp_root or os.environ.get("SEDFS_TMPDIR") or tempfile.gettempdir()
    return tempfile.mkdtemp(prefix="sedfs-runs-", dir=base)


def cleanup_dir(path: str) -> None:
    shutil.rmtree(path, ignore_errors=True)


def write_run(dirpath: str, seq: int, keys: np.ndarray, counters: IoCounters | None) -> str:
    path = os.path.join(dirpath, f"run-{seq:05d}.bin")
    with CountingFile(path, "wb", counters) as f:
        f.write(np.ascontiguousarray(keys, dtype=np.int64).tobytes())
    return path


def iter_run(path: str, counters: IoCounters | None, chunk: int = _RUN_CHUNK) -> Iterator[int]:
    with CountingFile(path, "rb", counters) as f:
        while True:
            data = f.read_block(chunk * 8)
            if not data:
                return
            yield from np.frombuffer(data, dtype="<i8").tolist()


def merge_runs(paths: list[str], counters: IoCounters | None,
               tmp_dir: str | None = None) -> Iterator[int]:
    """Lazily merge sorted run files into one ascending key stream.

    More than MAX_FANIN runs: merge groups of MAX_FANIN into fresh run files
    first (classic multi-pass external merge), then recurse.
    """
    if len(paths) > MAX_FANIN:
        assert tmp_dir is not None, "multi-pass merge needs a scratch dir"
        merged: list[str] = []
        for g in range(0, len(paths), MAX_FANIN):
            group = paths[g:g + MAX_FANIN]
            out = os.path.join(tmp_dir, f"merge-{len(merged):05d}-{os.getpid()}.bin")
            with CountingFile(out, "wb", counters) as f:
                for chunk in chunked(heapq.merge(*(iter_run(p, counters) for p in group))):
                    f.write(chunk.tobytes())
            for p in group:
                os.unlink(p)
            merged.append(out)
        yield from merge_runs(merged, counters, tmp_dir)
        return
    if len(paths) == 1:
        yield from iter_run(paths[0], counters)
        return
    yield from heapq.merge(*(iter_run(p, counters) for p in paths))


def chunked(it: Iterable[int], size: int = _RUN_CHUNK) -> Iterator[np.ndarray]:
    """Re-batch a scalar key stream into int64 arrays of at most `size`."""
    it = iter(it)
    while True:
        arr = np.fromiter(itertools.islice(it, size), dtype=np.int64)
        if arr.size == 0:
            return
        yield arr


def sort_key_stream(chunks: Iterable[np.ndarray], buffer_keys: int,
                    counters: IoCounters | None,
                    tmp_root: str | None = None) -> tuple[Iterator[np.ndarray], str | None]:
    """Sort a key stream holding at most `buffer_keys` in memory at once.

    Returns (iterator of ascending int64 array chunks, scratch dir). When the
    whole stream fits in the buffer nothing is spilled and the scratch dir is
    None; otherwise the caller removes it after draining the iterator.
    """
    scratch: str | None = None
    paths: list[str] = []
    buf: list[np.ndarray] = []
    held = 0
    for chunk in chunks:
        buf.append(chunk)
        held += chunk.size
        if held >= buffer_keys:
            if scratch is None:
                scratch = run_dir(tmp_root)
            keys = np.sort(np.concatenate(buf))
            paths.append(write_run(scratch, len(paths), keys, counters))
            buf, held = [], 0
    if not paths:
        keys = np.sort(np.concatenate(buf)) if buf else np.empty(0, np.int64)
        return iter([keys] if keys.size else []), None
    if held:
        keys = np.sort(np.concatenate(buf))
        paths.append(write_run(scratch, len(paths), keys, counters))
    return chunked(merge_runs(paths, counters, tmp_dir=scratch)), scratch
