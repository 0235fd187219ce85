"""I/O accounting.

Every file the engine touches (raw edge lists, index files, sort runs,
snapshot spills) goes through a CountingFile so byte counts, block reads and
seeks come from one place. The numbers are exact, not sampled; both the
benchmark CSV and the acceptance checks read them, so nothing here may
estimate.

Convention: ``sequential_reads`` counts body block reads (``read_block``),
not header reads (plain ``read``). A fresh open followed by block reads of a
small file therefore counts as exactly one sequential read and zero seeks.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


@dataclass
class PathCounters:
    bytes_read: int = 0
    bytes_written: int = 0
    sequential_reads: int = 0
    seeks: int = 0
    backward_seeks: int = 0

    def add(self, other: "PathCounters") -> None:
        self.bytes_read += other.bytes_read
        self.bytes_written += other.bytes_written
        self.sequential_reads += other.sequential_reads
        self.seeks += other.seeks
        self.backward_seeks += other.backward_seeks


@dataclass
class IoCounters:
    """Per-path counters plus lazily computed totals."""

    per_path: dict[str, PathCounters] = field(default_factory=dict)

    def for_path(self, path: str | os.PathLike) -> PathCounters:
        key = os.fspath(path)
        if key not in self.per_path:
            self.per_path[key] = PathCounters()
        return self.per_path[key]

    def totals(self) -> PathCounters:
        tot = PathCounters()
        for c in self.per_path.values():
            tot.add(c)
        return tot

    def reset(self) -> None:
        self.per_path.clear()


class CountingFile:
    """Binary file wrapper reporting to a PathCounters.

    Only the operations the engine actually needs: sequential reads, block
    reads, writes, and absolute seeks. Seeks that do not move the position
    are free (reopening a file and seeking to 0 does not count).
    """

    def __init__(self, path: str | os.PathLike, mode: str, counters: IoCounters | None):
        self._f = open(path, mode)
        self._c = counters.for_path(path) if counters is not None else PathCounters()

    # -- reads ---------------------------------------------------------- #

    def read(self, size: int = -1) -> bytes:
        data = self._f.read(size)
        self._c.bytes_read += len(data)
        return data

    def read_block(self, size: int) -> bytes:
        """Read one body block; counts toward sequential_reads."""
        data = self._f.read(size)
        if data:
            self._c.bytes_read += len(data)
            self._c.sequential_reads += 1
        return data

    def readinto_block(self, buf) -> int:
        got = self._f.readinto(buf)
        if got:
            self._c.bytes_read += got
            self._c.sequential_reads += 1
        return got

    # -- writes --------------------------------------------------------- #

    def write(self, data) -> int:
        n = self._f.write(data)
        self._c.bytes_written += n
        return n

    # -- positioning ---------------------------------------------------- #

    def seek(self, pos: int) -> None:
        cur = self._f.tell()
        if pos != cur:
            if pos < cur:
                self._c.backward_seeks += 1
            self._c.seeks += 1
            self._f.seek(pos)

    def tell(self) -> int:
        return self._f.tell()

    def flush(self) -> None:
        self._f.flush()

    def close(self) -> None:
        self._f.close()

    def __enter__(self) -> "CountingFile":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
