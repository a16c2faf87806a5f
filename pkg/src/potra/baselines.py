"""Prior-art parallel transposition algorithms sharing one output contract.

Three methods: the atomic fetch-and-add baseline (shared counters and
insertion points), ScanTrans (per-thread counters, no atomics, sorted by
construction) and MergeTrans (serial per-subgraph transposition plus
pairwise merge rounds, also sorted by construction). A separate pass sorts
neighbor lists of unsorted outputs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import psutil
from numba import njit, prange

from . import hw
from ._nb import atomic_fetch_add, edge_balanced_vertex_bounds, use_workers
from .errors import CounterOverflowError, FootprintError
from .graph import CsrGraph

__all__ = [
    "TransposeOutput",
    "prefix_sum_parallel",
    "transpose_atomic",
    "transpose_scantrans",
    "transpose_mergetrans",
    "sort_neighbor_lists",
    "DEFAULT_PARTITION_EDGES",
]

DEFAULT_PARTITION_EDGES = 1 << 18
_FALLBACK_CACHE_BUDGET = 32 * 1024 * 1024


@dataclass
class TransposeOutput:
    """Result of one transposition run plus its cost accounting.

    aux_footprint_bytes counts peak allocations beyond the input graph and
    the output arrays. `sorted` tells whether neighbor lists are guaranteed
    ascending without a sort pass.
    """

    graph: CsrGraph
    phase_times: dict[str, float]
    aux_footprint_bytes: int
    method: str
    sorted: bool
    details: dict = field(default_factory=dict)


def _flip(orientation: str) -> str:
    return "CSC" if orientation == "CSR" else "CSR"


# ---------------------------------------------------------------------------
# Prefix sums: parallel block sums, one serial stitch, parallel local scans.
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _scan_exclusive(counts, out, workers):
    n = counts.shape[0]
    sums = np.zeros(workers, dtype=np.int64)
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        s = np.int64(0)
        for i in range(lo, hi):
            s += np.int64(counts[i])
        sums[w] = s
    total = np.int64(0)
    for w in range(workers):
        t = sums[w]
        sums[w] = total
        total += t
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        acc = sums[w]
        for i in range(lo, hi):
            out[i] = acc
            acc += np.int64(counts[i])
    out[n] = total


@njit(cache=True, parallel=True)
def _scan_inclusive_inplace(vals, workers):
    n = vals.shape[0]
    sums = np.zeros(workers, dtype=np.int64)
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        s = np.int64(0)
        for i in range(lo, hi):
            s += vals[i]
        sums[w] = s
    run = np.int64(0)
    for w in range(workers):
        t = sums[w]
        sums[w] = run
        run += t
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        acc = sums[w]
        for i in range(lo, hi):
            acc += vals[i]
            vals[i] = acc


def prefix_sum_parallel(counts: np.ndarray, threads: int) -> np.ndarray:
    """Exclusive prefix sum of `counts` with the total appended (uint64).

    Block decomposition: per-block sums in parallel, a serial scan over the
    block totals, then a parallel within-block scan. Matches the serial
    np.cumsum result for any thread count.
    """
    workers = use_workers(threads)
    counts = np.ascontiguousarray(counts)
    out = np.zeros(counts.shape[0] + 1, dtype=np.uint64)
    _scan_exclusive(counts, out.view(np.int64), workers)
    return out


# ---------------------------------------------------------------------------
# Atomic transposition
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _count_endpoints_atomic(edges, counters, workers):
    n = edges.shape[0]
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        for i in range(lo, hi):
            atomic_fetch_add(counters, np.intp(edges[i]), np.uint32(1))


@njit(cache=True, parallel=True)
def _scatter_atomic(offsets, edges, vb, cursor, ip, t_edges, workers):
    num_parts = vb.shape[0] - 1
    for w in prange(workers):
        while True:
            p = atomic_fetch_add(cursor, 0, np.int64(1))
            if p >= num_parts:
                break
            for v in range(vb[p], vb[p + 1]):
                for j in range(offsets[v], offsets[v + 1]):
                    u = edges[j]
                    idx = atomic_fetch_add(ip, np.intp(u), np.int64(1))
                    t_edges[idx] = v


def _partition_count(num_edges: int, workers: int, partition_edges: int) -> int:
    if num_edges == 0:
        return 1
    parts = math.ceil(num_edges / partition_edges)
    # keep enough partitions for dynamic balancing on small inputs
    return max(1, min(num_edges, max(parts, 4 * workers)))


def transpose_atomic(
    g: CsrGraph, threads: int, partition_edges: int = DEFAULT_PARTITION_EDGES
) -> TransposeOutput:
    """Three-step atomic transposition over shared counter and IP arrays.

    Step 1 atomically counts endpoint frequencies, step 2 prefix-sums them
    into t_offsets (keeping a copy as insertion points), step 3 reserves a
    slot per edge with fetch-and-add and writes the owner there. Neighbor
    list order is scheduling-dependent; output is unsorted.
    """
    workers = use_workers(threads)
    nv, ne = g.num_vertices, g.num_edges
    off64 = g.offsets.view(np.int64)

    t0 = time.perf_counter()
    counters = np.zeros(nv, dtype=np.uint32)
    _count_endpoints_atomic(g.edges, counters, workers)
    t1 = time.perf_counter()

    t_offsets = np.zeros(nv + 1, dtype=np.uint64)
    _scan_exclusive(counters, t_offsets.view(np.int64), workers)
    if int(t_offsets[-1]) != ne:
        raise CounterOverflowError(
            "32-bit degree counter overflowed (a transposed degree >= 2^32)"
        )
    ip = t_offsets[:nv].astype(np.int64)
    t2 = time.perf_counter()

    t_edges = np.empty(ne, dtype=g.edges.dtype)
    vb = edge_balanced_vertex_bounds(g.offsets, _partition_count(ne, workers, partition_edges))
    cursor = np.zeros(1, dtype=np.int64)
    _scatter_atomic(off64, g.edges, vb, cursor, ip, t_edges, workers)
    t3 = time.perf_counter()

    aux = counters.nbytes + ip.nbytes + vb.nbytes + cursor.nbytes
    return TransposeOutput(
        graph=CsrGraph(nv, ne, t_offsets, t_edges, _flip(g.orientation)),
        phase_times={"step1": t1 - t0, "step2": t2 - t1, "step3": t3 - t2},
        aux_footprint_bytes=aux,
        method="atomic",
        sorted=False,
    )


# ---------------------------------------------------------------------------
# ScanTrans
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _scantrans_count(offsets, edges, vb, c):
    workers = c.shape[0]
    for w in prange(workers):
        for v in range(vb[w], vb[w + 1]):
            for j in range(offsets[v], offsets[v + 1]):
                c[w, edges[j]] += np.uint32(1)


@njit(cache=True, parallel=True)
def _scantrans_totals(c, t_offsets, workers):
    nthreads = c.shape[0]
    nv = c.shape[1]
    for b in prange(workers):
        for v in range(b * nv // workers, (b + 1) * nv // workers):
            s = np.int64(0)
            for w in range(nthreads):
                s += np.int64(c[w, v])
            t_offsets[v + 1] = s


@njit(cache=True, parallel=True)
def _scantrans_make_ip(c, t_offsets, workers):
    # turns private counters into private insertion cursors, in place,
    # regions ordered by thread rank within each vertex slot
    nthreads = c.shape[0]
    nv = c.shape[1]
    for b in prange(workers):
        for v in range(b * nv // workers, (b + 1) * nv // workers):
            run = np.uint32(t_offsets[v])
            for w in range(nthreads):
                tmp = c[w, v]
                c[w, v] = run
                run += tmp


@njit(cache=True, parallel=True)
def _scantrans_scatter(offsets, edges, vb, c, t_edges):
    workers = c.shape[0]
    for w in prange(workers):
        for v in range(vb[w], vb[w + 1]):
            for j in range(offsets[v], offsets[v + 1]):
                u = edges[j]
                idx = np.int64(c[w, u])
                c[w, u] = np.uint32(idx + 1)
                t_edges[idx] = v


def transpose_scantrans(
    g: CsrGraph, threads: int, footprint_limit: int | None = None
) -> TransposeOutput:
    """ScanTrans: per-thread counters and insertion points, no atomics.

    Each thread owns one contiguous, edge-balanced range of source vertices
    and processes the same edges in steps 1 and 3, so neighbor lists come
    out sorted. The private counter matrix costs threads * |V| * 4 bytes,
    which is prechecked against `footprint_limit` (default: available RAM)
    before anything is allocated.
    """
    workers = use_workers(threads)
    nv, ne = g.num_vertices, g.num_edges
    if ne >= 2**32:
        raise CounterOverflowError(
            "scantrans uses 32-bit insertion cursors; |E| must be < 2^32"
        )
    need = workers * nv * 4
    limit = footprint_limit if footprint_limit is not None else psutil.virtual_memory().available
    if need > limit:
        raise FootprintError(need, limit)

    off64 = g.offsets.view(np.int64)
    vb = edge_balanced_vertex_bounds(g.offsets, workers)

    t0 = time.perf_counter()
    c = np.zeros((workers, nv), dtype=np.uint32)
    _scantrans_count(off64, g.edges, vb, c)
    t1 = time.perf_counter()

    t_offsets = np.zeros(nv + 1, dtype=np.uint64)
    toff64 = t_offsets.view(np.int64)
    _scantrans_totals(c, toff64, workers)
    _scan_inclusive_inplace(toff64[1:], workers)
    _scantrans_make_ip(c, toff64, workers)
    t2 = time.perf_counter()

    t_edges = np.empty(ne, dtype=g.edges.dtype)
    _scantrans_scatter(off64, g.edges, vb, c, t_edges)
    t3 = time.perf_counter()

    return TransposeOutput(
        graph=CsrGraph(nv, ne, t_offsets, t_edges, _flip(g.orientation)),
        phase_times={"step1": t1 - t0, "step2": t2 - t1, "step3": t3 - t2},
        aux_footprint_bytes=c.nbytes + vb.nbytes,
        method="scantrans",
        sorted=True,
    )


# ---------------------------------------------------------------------------
# MergeTrans
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _mt_transpose_subgraphs(offsets, edges, sub_size, sub_sv, ends, buf):
    nsub = ends.shape[0]
    nv = ends.shape[1]
    ne = edges.shape[0]
    for si in prange(nsub):
        lo = si * sub_size
        hi = min(ne, lo + sub_size)
        for j in range(lo, hi):
            ends[si, edges[j]] += 1
        run = np.int64(0)  # exclusive scan: row becomes local starts
        for v in range(nv):
            cnt = ends[si, v]
            ends[si, v] = run
            run += cnt
        v = sub_sv[si]
        for j in range(lo, hi):
            while offsets[v + 1] <= j:
                v += 1
            u = edges[j]
            idx = ends[si, u]
            ends[si, u] = idx + 1
            buf[lo + idx] = v
        # row now holds local end positions (start of v+1's list)


@njit(cache=True, parallel=True)
def _mt_merge_round(ends_in, ends_out, src, dst, bases, live):
    nv = ends_in.shape[1]
    for j in prange(ends_out.shape[0]):
        a = 2 * j
        b = a + 1
        base_a = bases[a]
        if b >= live:
            for v in range(nv):
                ends_out[j, v] = ends_in[a, v]
            length = ends_in[a, nv - 1] if nv > 0 else 0
            for x in range(base_a, base_a + length):
                dst[x] = src[x]
        else:
            base_b = bases[b]
            q = base_a
            la = np.int64(0)
            lb = np.int64(0)
            for v in range(nv):
                ea = ends_in[a, v]
                for x in range(la, ea):
                    dst[q] = src[base_a + x]
                    q += 1
                la = ea
                eb = ends_in[b, v]
                for x in range(lb, eb):
                    dst[q] = src[base_b + x]
                    q += 1
                lb = eb
                ends_out[j, v] = ea + eb


def default_subgraph_edges(g: CsrGraph) -> int:
    """Edges per subgraph sized so a transposed subgraph fits in cache."""
    budget = hw.detect_cache_budget() or _FALLBACK_CACHE_BUDGET
    return max(1, budget // (2 * g.edges.dtype.itemsize))


def transpose_mergetrans(
    g: CsrGraph, threads: int, subgraph_edges: int | None = None
) -> TransposeOutput:
    """MergeTrans: serial transposition of edge-range subgraphs, merged pairwise.

    The edge stream is cut into ceil(|E|/subgraph_edges) contiguous
    subgraphs, each transposed serially by a worker, then merged in rounds
    of adjacent pairs by per-vertex list concatenation (subgraph order), so
    neighbor lists stay sorted. Rounds ping-pong between two edge buffers;
    a round barrier is the kernel-call boundary.
    """
    workers = use_workers(threads)
    nv, ne = g.num_vertices, g.num_edges
    if subgraph_edges is None:
        subgraph_edges = default_subgraph_edges(g)
    if subgraph_edges < 1:
        raise ValueError("subgraph_edges must be >= 1")
    nsub = max(1, math.ceil(ne / subgraph_edges))

    off64 = g.offsets.view(np.int64)
    sub_lo = np.arange(nsub, dtype=np.int64) * subgraph_edges
    sub_sv = (np.searchsorted(g.offsets, sub_lo.astype(np.uint64), side="right") - 1).astype(np.int64)
    np.clip(sub_sv, 0, max(nv - 1, 0), out=sub_sv)

    t0 = time.perf_counter()
    ends = np.zeros((nsub, nv), dtype=np.int64)
    cur = np.empty(ne, dtype=g.edges.dtype)
    _mt_transpose_subgraphs(off64, g.edges, subgraph_edges, sub_sv, ends, cur)
    t1 = time.perf_counter()

    aux_peak = ends.nbytes + sub_lo.nbytes + sub_sv.nbytes
    other = None
    bases = sub_lo
    live = nsub
    while live > 1:
        if other is None:
            other = np.empty(ne, dtype=g.edges.dtype)
        ends_out = np.zeros(((live + 1) // 2, nv), dtype=np.int64)
        aux_peak = max(aux_peak, ends.nbytes + ends_out.nbytes + other.nbytes + sub_lo.nbytes)
        _mt_merge_round(ends, ends_out, cur, other, bases, live)
        cur, other = other, cur
        ends = ends_out
        bases = bases[::2].copy()
        live = ends.shape[0]
    t2 = time.perf_counter()

    t_offsets = np.zeros(nv + 1, dtype=np.uint64)
    if nv:
        t_offsets[1:] = ends[0].astype(np.uint64)
    return TransposeOutput(
        graph=CsrGraph(nv, ne, t_offsets, cur, _flip(g.orientation)),
        phase_times={"step1": t1 - t0, "step2": t2 - t1, "step3": 0.0},
        aux_footprint_bytes=int(aux_peak),
        method="mergetrans",
        sorted=True,
        details={"subgraphs": nsub, "subgraph_edges": subgraph_edges},
    )


# ---------------------------------------------------------------------------
# Canonicalizing sort
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _sort_segments(offsets, edges):
    for v in prange(offsets.shape[0] - 1):
        a = offsets[v]
        b = offsets[v + 1]
        if b - a > 1:
            edges[a:b].sort()


def sort_neighbor_lists(t: TransposeOutput, threads: int) -> TransposeOutput:
    """Sort each vertex's neighbor list ascending (serial sort per vertex,
    parallelized over vertices); records the sort time in phase_times."""
    use_workers(threads)
    t0 = time.perf_counter()
    edges = t.graph.edges.copy()
    _sort_segments(t.graph.offsets.view(np.int64), edges)
    dt = time.perf_counter() - t0
    g = t.graph
    phase_times = dict(t.phase_times)
    phase_times["sort"] = phase_times.get("sort", 0.0) + dt
    return TransposeOutput(
        graph=CsrGraph(g.num_vertices, g.num_edges, g.offsets.copy(), edges, g.orientation),
        phase_times=phase_times,
        aux_footprint_bytes=t.aux_footprint_bytes,
        method=t.method,
        sorted=True,
        details=dict(t.details),
    )
