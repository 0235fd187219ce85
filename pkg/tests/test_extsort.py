import os

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sedfs import extsort
from sedfs.iostats import IoCounters


def _collect(chunks):
    parts = [np.asarray(c) for c in chunks]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def test_chunked_partial_tail():
    out = list(extsort.chunked(iter(range(10)), size=4))
    assert [c.tolist() for c in out] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]


def test_chunked_empty():
    assert list(extsort.chunked(iter([]), size=4)) == []


@settings(max_examples=80)
@given(st.lists(st.integers(0, 2 ** 40), max_size=400),
       st.integers(1, 64), st.integers(1, 50))
def test_sort_key_stream_total_order(values, chunk, buffer_keys):
    arr = np.array(values, dtype=np.int64)
    chunks = [arr[i:i + chunk] for i in range(0, arr.size, chunk)]
    merged, scratch = extsort.sort_key_stream(iter(chunks), buffer_keys, None)
    got = _collect(merged)
    assert got.tolist() == sorted(values)
    if scratch:
        extsort.cleanup_dir(scratch)
        assert not os.path.isdir(scratch)


def test_in_memory_fast_path_spills_nothing(tmp_path):
    keys = np.arange(100, dtype=np.int64)[::-1].copy()
    counters = IoCounters()
    merged, scratch = extsort.sort_key_stream(
        iter([keys]), buffer_keys=1000, counters=counters,
        tmp_root=str(tmp_path))
    assert scratch is None
    assert _collect(merged).tolist() == list(range(100))
    assert counters.totals().bytes_written == 0
    assert not list(tmp_path.iterdir())


def test_spill_path_counts_run_io(tmp_path):
    rng = np.random.default_rng(0)
    keys = rng.integers(0, 1 << 30, 5000).astype(np.int64)
    counters = IoCounters()
    chunks = [keys[i:i + 256] for i in range(0, 5000, 256)]
    merged, scratch = extsort.sort_key_stream(
        iter(chunks), buffer_keys=512, counters=counters,
        tmp_root=str(tmp_path))
    got = _collect(merged)
    assert got.tolist() == sorted(keys.tolist())
    assert scratch is not None and scratch.startswith(str(tmp_path))
    # every key spilled once and read back once, 8 bytes each
    assert counters.totals().bytes_written == 8 * 5000
    assert counters.totals().bytes_read == 8 * 5000
    extsort.cleanup_dir(scratch)


def test_merge_runs_handles_duplicates(tmp_path):
    d = str(tmp_path)
    a = np.array([1, 1, 3, 5], dtype=np.int64)
    b = np.array([1, 2, 3, 3], dtype=np.int64)
    pa = extsort.write_run(d, 0, a, None)
    pb = extsort.write_run(d, 1, b, None)
    got = list(extsort.merge_runs([pa, pb], None, tmp_dir=d))
    assert got == [1, 1, 1, 2, 3, 3, 3, 5]
