"""Semi-external depth-first search: build a DFS-tree and a total
depth-first order of a disk-resident digraph while holding at most 2n
edges in memory."""

__version__ = "0.1.0"

from .batching import (BatchOverflow, EdgeBatch, IrreducibleBatch,
                       ParamGateError, obtain_edges, scan_batch_B)
from .driver import (NaiveStall, ProgressState, RunConfig, TimeLimitExceeded,
                     eb_dfs, ep_dfs, naive_ep_dfs, order_digest)
from .edge_index import EdgeIndex, IndexSizeError, build_index, rewrite_index
from .generators import ParamError, generate_er, generate_sf
from .graph_io import (FormatError, GraphHeader, GraphSource,
                       convert_to_adjacency_order, open_edge_stream,
                       read_header, write_edge_list)
from .iostats import IoCounters
from .runner import (RunStats, run_algorithm, run_matrix, verify_artifacts,
                     write_artifacts)
from .tree_store import NO_OFFSET, TreeStore

__all__ = [
    "BatchOverflow", "EdgeBatch", "EdgeIndex", "FormatError", "GraphHeader",
    "GraphSource", "IndexSizeError", "IoCounters", "IrreducibleBatch",
    "NO_OFFSET", "NaiveStall", "ParamError", "ParamGateError",
    "ProgressState", "RunConfig", "RunStats", "TimeLimitExceeded",
    "TreeStore", "build_index", "convert_to_adjacency_order", "eb_dfs",
    "ep_dfs", "generate_er", "generate_sf", "naive_ep_dfs", "obtain_edges",
    "open_edge_stream", "order_digest", "read_header", "rewrite_index",
    "run_algorithm", "run_matrix", "scan_batch_B", "verify_artifacts",
    "write_artifacts", "write_edge_list",
]
