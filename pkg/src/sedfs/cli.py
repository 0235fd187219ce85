"""Command line front end: generate graphs, run a search, certify artifacts,
sweep a benchmark matrix."""

from __future__ import annotations

import json
import os

import click

from . import __version__
from .generators import ParamError, generate_er, generate_sf
from .graph_io import DEFAULT_BLOCK, FormatError, convert_to_adjacency_order
from .rearrange import DEFAULT_CHUNK
from .runner import run_algorithm, run_matrix, verify_artifacts

ALGORITHMS = ("ep", "naive", "eb", "inmem")


@click.group()
@click.version_option(__version__, prog_name="sedfs")
def main() -> None:
    """Semi-external depth-first search over on-disk edge lists."""


@main.command("gen")
@click.argument("kind", type=click.Choice(["er", "sf"]))
@click.option("--n", type=int, required=True, help="Node count.")
@click.option("--m", type=int, default=None,
              help="Edge count (er only; sf derives its own).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--order", type=click.Choice(["random", "adjacency"]),
              default="random", show_default=True,
              help="On-disk edge order.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def cmd_gen(kind: str, n: int, m: int | None, seed: int, order: str,
            out: str) -> None:
    """Generate a benchmark digraph file."""
    try:
        target = out if order == "random" else out + ".unsorted"
        if kind == "er":
            if m is None:
                raise ParamError("er generation needs --m")
            made_m = generate_er(target, n, m, seed).m
        else:
            if m is not None:
                raise ParamError("sf derives its edge count; drop --m")
            made_m = generate_sf(target, n, seed).m
        if order == "adjacency":
            convert_to_adjacency_order(target, out)
            os.unlink(target)
    except ParamError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out}: {kind} n={n} m={made_m} "
               f"(m/n={made_m / n:.1f}) seed={seed} order={order}")


@main.command("run")
@click.argument("algorithm", type=click.Choice(ALGORITHMS))
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("--root", type=int, default=None,
              help="Start node; default is the stored root, else a virtual "
                   "root over all nodes.")
@click.option("--gamma", type=float, default=0.10, show_default=True,
              help="Fraction of n the frontier must gain between index "
                   "rebuilds.")
@click.option("--budget", "budget_edges", type=int, default=None,
              help="Edges per loaded batch; default is the node count.")
@click.option("--block-bytes", type=int, default=DEFAULT_BLOCK,
              show_default=True, help="Read granularity for scans.")
@click.option("--rearrange-chunk", type=int, default=DEFAULT_CHUNK,
              show_default=True)
@click.option("--trace", "trace_out", type=click.Path(dir_okay=False),
              default=None, help="Write the per-iteration CSV here.")
@click.option("--order-out", type=click.Path(dir_okay=False), default=None,
              help="Write the visit order artifact here.")
@click.option("--parent-out", type=click.Path(dir_okay=False), default=None,
              help="Write the parent artifact here (default: ORDER_OUT with "
                   "a .parent suffix).")
@click.option("--verify", "do_verify", is_flag=True, default=False,
              help="Re-scan the graph and certify the result.")
@click.option("--time-limit", type=float, default=600.0, show_default=True,
              help="Abort after this many seconds.")
@click.option("--tmp-dir", type=click.Path(file_okay=False), default=None,
              help="Scratch directory (default: $SEDFS_TMPDIR or the "
                   "system temp).")
def cmd_run(algorithm: str, graph: str, root: int | None, gamma: float,
            budget_edges: int | None, block_bytes: int, rearrange_chunk: int,
            trace_out: str | None, order_out: str | None,
            parent_out: str | None, do_verify: bool, time_limit: float,
            tmp_dir: str | None) -> None:
    """Run one algorithm over GRAPH and report exact I/O numbers."""
    try:
        stats = run_algorithm(
            graph, algorithm, root=root, gamma=gamma,
            budget_edges=budget_edges, block_bytes=block_bytes,
            rearrange_chunk=rearrange_chunk, time_limit=time_limit,
            tmp_dir=tmp_dir, verify_output=do_verify,
            order_out=order_out, parent_out=parent_out, trace_out=trace_out)
    except (FormatError, ValueError) as exc:
        raise click.ClickException(str(exc))
    vr = " +virtual root" if stats.virtual_root else ""
    click.echo(f"{stats.algorithm} on {graph}: n={stats.n}{vr} m={stats.m} "
               f"root={stats.root}")
    click.echo(f"  wall={stats.wall_time_s:.3f}s "
               f"bytes_read={stats.bytes_read} "
               f"bytes_written={stats.bytes_written}")
    if stats.peak_slots is not None:
        click.echo(f"  peak_slots={stats.peak_slots} "
                   f"slot_budget={stats.slot_budget}")
    if stats.aborted:
        click.echo(f"  aborted: time limit of {time_limit:g}s hit")
        raise SystemExit(1)
    if stats.error:
        click.echo(f"  failed: {stats.error}")
        raise SystemExit(1)
    click.echo(f"  iterations={stats.iterations}"
               + (f" fnn={stats.fnn_final}" if stats.fnn_final is not None
                  else "")
               + f" digest={stats.order_digest}")
    if do_verify:
        if stats.verified:
            click.echo("  verified: DFS-tree and order are consistent")
        else:
            click.echo(f"  VERIFY FAILED: {stats.offender}")
            raise SystemExit(1)


@main.command("verify")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("--order", "order_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--parent", "parent_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def cmd_verify(graph: str, order_path: str, parent_path: str) -> None:
    """Certify an order/parent artifact pair against GRAPH.

    Exit status 0 iff the pair encodes a DFS-tree plus a matching total
    depth-first order; otherwise the first offending edge is printed.
    """
    try:
        ok, msg = verify_artifacts(graph, order_path, parent_path)
    except FormatError as exc:
        raise click.ClickException(str(exc))
    click.echo(msg)
    if not ok:
        raise SystemExit(1)


@main.command("bench")
@click.argument("matrix", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Result CSV path.")
def cmd_bench(matrix: str, out: str) -> None:
    """Sweep the JSON benchmark MATRIX and write one CSV row per cell.

    The matrix either lists explicit "cells" or gives lists for kind, n,
    ratio, order, algorithms and seeds that are crossed. Cells that time
    out or fail keep their row with "-" in every measured column.
    """
    with open(matrix) as f:
        spec = json.load(f)
    rows = run_matrix(spec, out, echo=click.echo)
    done = sum(1 for r in rows if r["status"] == "ok")
    click.echo(f"{done}/{len(rows)} cells ok -> {out}")


if __name__ == "__main__":
    main()
