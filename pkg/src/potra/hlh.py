"""Structure-aware transposition with cache-resident high-degree-vertex state.

The pipeline: step 0 samples the edges array to find the most frequently
referenced endpoints (the HDV of the *transposed* direction), compresses
their scattered IDs into dense indices through a read-only linear-probing
hash table, and probes whether the split-counter method actually beats the
plain atomic baseline on this graph and machine; if not, it delegates.

Steps 1-3 mirror the atomic baseline but fork per edge on the hash lookup:
LDV go through shared atomic counters/cursors, HDV through per-thread
counters split into one cached low byte plus a 32-bit overflow word, and
per-thread insertion cursors. Threads re-process in step 3 exactly the
partitions they claimed in step 1 (recorded in part2tid) so the private
cursor state lines up.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import hw
from ._nb import (
    atomic_fetch_add,
    edge_balanced_vertex_bounds,
    use_workers,
    worker_seeds,
    xoshiro_seed_scalar,
    xoshiro_step,
)
from .baselines import DEFAULT_PARTITION_EDGES, TransposeOutput, _flip, _scan_inclusive_inplace, transpose_atomic
from .errors import CounterOverflowError
from .graph import CsrGraph
from .model import HdvBudget, hdv_count

__all__ = [
    "HdvPlan",
    "HlhCounters",
    "ProbeDecision",
    "sample_hdv",
    "hash_lookup",
    "probe_methods",
    "transpose_potra",
    "coverage_exact",
    "DEFAULT_SAMPLE_FRACTION",
]

DEFAULT_SAMPLE_FRACTION = 0.01
_MAX_PROBE_EDGES = 1 << 24
_EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
# physical slot/record sizes of this implementation's structures
_SLOT_BYTES = 12  # 8-byte key + 4-byte dense index
_PER_HDV_BYTES = 13  # 1 low counter + 4 high counter + 8 insertion cursor


# ---------------------------------------------------------------------------
# Compressing hash table: open addressing, linear probing, power-of-two
# capacity, built once and read-only afterwards.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _table_find(keys, vals, shift, key):
    mask = np.uint64(keys.shape[0] - 1)
    i = (key * _GOLD) >> shift
    while True:
        k = keys[np.intp(i & mask)]
        if k == key:
            return np.int64(vals[np.intp(i & mask)])
        if k == _EMPTY:
            return np.int64(-1)
        i += np.uint64(1)


@njit(cache=True)
def _table_build(keys, vals, shift, ids):
    mask = np.uint64(keys.shape[0] - 1)
    for n in range(ids.shape[0]):
        key = ids[n]
        i = (key * _GOLD) >> shift
        while keys[np.intp(i & mask)] != _EMPTY:
            i += np.uint64(1)
        keys[np.intp(i & mask)] = key
        vals[np.intp(i & mask)] = n


@dataclass
class HdvPlan:
    """The selected high-degree endpoints and their lookup structure.

    hdv_ids is ordered most-frequent-first; the table maps each ID to its
    position in hdv_ids and everything else to -1. coverage_estimate is the
    fraction of drawn samples that hit a selected vertex.
    """

    k: int
    hdv_ids: np.ndarray
    table_keys: np.ndarray
    table_vals: np.ndarray
    table_shift: int
    coverage_estimate: float
    sample_size: int

    @property
    def capacity(self) -> int:
        return self.table_keys.shape[0]

    def aux_bytes(self) -> int:
        return self.table_keys.nbytes + self.table_vals.nbytes + self.hdv_ids.nbytes


def _next_pow2(n: int) -> int:
    return 1 << max(1, (int(n) - 1).bit_length())


def _build_plan(hdv_ids: np.ndarray, load_factor: float, coverage_estimate: float, sample_size: int) -> HdvPlan:
    k = int(hdv_ids.shape[0])
    cap = max(2, _next_pow2(math.ceil(k / load_factor))) if k else 2
    keys = np.full(cap, _EMPTY, dtype=np.uint64)
    vals = np.zeros(cap, dtype=np.uint32)
    shift = 64 - int(math.log2(cap))
    if k:
        _table_build(keys, vals, np.uint64(shift), hdv_ids)
    return HdvPlan(
        k=k,
        hdv_ids=hdv_ids,
        table_keys=keys,
        table_vals=vals,
        table_shift=shift,
        coverage_estimate=coverage_estimate,
        sample_size=sample_size,
    )


def hash_lookup(plan: HdvPlan, v: int) -> int:
    """Dense index of v in the plan, or -1 when v is low-degree."""
    return int(
        _table_find(plan.table_keys, plan.table_vals, np.uint64(plan.table_shift), np.uint64(v))
    )


# ---------------------------------------------------------------------------
# Step 0: sampling and probing
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _sample_tally(edges, num_samples, seeds, freq):
    workers = seeds.shape[0]
    n = np.uint64(edges.shape[0])
    for w in prange(workers):
        lo = w * num_samples // workers
        hi = (w + 1) * num_samples // workers
        s0, s1, s2, s3 = xoshiro_seed_scalar(seeds[w])
        for _ in range(lo, hi):
            r, s0, s1, s2, s3 = xoshiro_step(s0, s1, s2, s3)
            e = edges[np.intp(r % n)]
            atomic_fetch_add(freq, np.intp(e), np.uint32(1))


def sample_hdv(
    g: CsrGraph,
    k: int,
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
    seed: int = 0,
    threads: int = 1,
    load_factor: float = 0.5,
) -> HdvPlan:
    """Select the k most frequently referenced endpoints by sampling.

    Draws ceil(sample_fraction * |V|) positions of the edges array at
    random (split across threads, tallied into one shared frequency array)
    and keeps the k most frequent endpoints, ties broken toward the lower
    vertex ID. The coverage estimate comes from a second, independent
    sample of the same size: scoring the selected set on the sample that
    chose it overestimates coverage whenever k reaches into the sampling
    noise floor. sample_fraction == 1 switches to an exhaustive count of
    the whole edges array, making selection and estimate exact. k is
    clamped to |V|.
    """
    if not 0 < sample_fraction <= 1:
        raise ValueError("sample_fraction must be in (0, 1]")
    if k < 0:
        raise ValueError("k must be >= 0")
    workers = use_workers(threads)
    nv, ne = g.num_vertices, g.num_edges
    k = min(k, nv)

    if sample_fraction >= 1.0 or ne == 0:
        freq = np.bincount(g.edges.astype(np.int64, copy=False), minlength=nv).astype(np.int64) \
            if ne else np.zeros(nv, dtype=np.int64)
        est_freq = freq
        sample_size = ne
    else:
        sample_size = math.ceil(sample_fraction * nv)
        streams = worker_seeds(seed, 2 * workers)
        freq32 = np.zeros(nv, dtype=np.uint32)
        est32 = np.zeros(nv, dtype=np.uint32)
        if sample_size:
            _sample_tally(g.edges, sample_size, streams[:workers], freq32)
            _sample_tally(g.edges, sample_size, streams[workers:], est32)
        freq = freq32.astype(np.int64)
        est_freq = est32.astype(np.int64)

    if k:
        order = np.lexsort((np.arange(nv, dtype=np.int64), -freq))
        hdv_ids = order[:k].astype(np.uint64)
    else:
        hdv_ids = np.empty(0, dtype=np.uint64)
    hits = int(est_freq[hdv_ids.astype(np.int64)].sum()) if k else 0
    est = hits / sample_size if sample_size else 0.0
    return _build_plan(hdv_ids, load_factor, est, sample_size)


def coverage_exact(g: CsrGraph, plan: HdvPlan) -> float:
    """Exact fraction of edges whose endpoint is a selected vertex (full pass)."""
    if g.num_edges == 0:
        return 0.0
    mask = np.zeros(g.num_vertices, dtype=bool)
    if plan.k:
        mask[plan.hdv_ids.astype(np.int64)] = True
    return float(mask[g.edges.astype(np.int64, copy=False)].sum()) / g.num_edges


@dataclass
class ProbeDecision:
    """Outcome of timing both counting methods on a small edge prefix."""

    method: str
    probe_edges: int
    atomic_ns_per_edge: float | None = None
    hlh_ns_per_edge: float | None = None
    forced: bool = False


@dataclass
class HlhCounters:
    """The split counting state after step 1, exposed for inspection.

    ldv_counters is the shared atomic array; hdv_low/hdv_high are the
    per-thread split counters (low byte cached, high word for overflow);
    part2tid records which worker claimed each edge partition.
    """

    ldv_counters: np.ndarray
    hdv_low: np.ndarray
    hdv_high: np.ndarray
    part2tid: np.ndarray

    def assembled_degrees(self, plan: HdvPlan) -> np.ndarray:
        """Per-vertex transposed degrees from the split counters (int64)."""
        deg = self.ldv_counters.astype(np.int64)
        if plan.k:
            per_hdv = (
                self.hdv_high.astype(np.int64) * 256 + self.hdv_low.astype(np.int64)
            ).sum(axis=0)
            deg[plan.hdv_ids.astype(np.int64)] = per_hdv[: plan.k]
        return deg


@njit(cache=True, parallel=True)
def _probe_count_atomic(edges, n, counters, workers):
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        for i in range(lo, hi):
            atomic_fetch_add(counters, np.intp(edges[i]), np.uint32(1))


@njit(cache=True, parallel=True)
def _probe_count_hlh(edges, n, keys, vals, shift, ldv, low, high, workers):
    for w in prange(workers):
        lo = w * n // workers
        hi = (w + 1) * n // workers
        for i in range(lo, hi):
            e = edges[i]
            t = _table_find(keys, vals, shift, np.uint64(e))
            if t < 0:
                atomic_fetch_add(ldv, np.intp(e), np.uint32(1))
            else:
                nv8 = (np.int64(low[w, t]) + 1) & 0xFF
                low[w, t] = nv8
                if nv8 == 0:
                    high[w, t] += np.uint32(1)


def probe_methods(
    g: CsrGraph, plan: HdvPlan, probe_edges: int, threads: int
) -> ProbeDecision:
    """Time step-1-style counting over a prefix of the edges array under both
    methods (scratch counters, discarded) and pick the faster one.

    Both kernels get one short warm-up before the timed pass. A zero-edge
    probe falls back to the atomic method with a warning.
    """
    workers = use_workers(threads)
    n = int(min(probe_edges, g.num_edges))
    if n <= 0:
        warnings.warn("probe_methods with no edges to probe; defaulting to atomic")
        return ProbeDecision(method="atomic", probe_edges=0)

    shift = np.uint64(plan.table_shift)
    k1 = max(plan.k, 1)
    ldv = np.zeros(g.num_vertices, dtype=np.uint32)
    counters = np.zeros(g.num_vertices, dtype=np.uint32)
    low = np.zeros((workers, k1), dtype=np.uint8)
    high = np.zeros((workers, k1), dtype=np.uint32)

    warm = min(n, 4096)
    _probe_count_hlh(g.edges, warm, plan.table_keys, plan.table_vals, shift, ldv, low, high, workers)
    _probe_count_atomic(g.edges, warm, counters, workers)

    t0 = time.perf_counter()
    _probe_count_hlh(g.edges, n, plan.table_keys, plan.table_vals, shift, ldv, low, high, workers)
    t_hlh = time.perf_counter() - t0

    t0 = time.perf_counter()
    _probe_count_atomic(g.edges, n, counters, workers)
    t_atomic = time.perf_counter() - t0

    method = "hlh" if t_hlh < t_atomic else "atomic"
    return ProbeDecision(
        method=method,
        probe_edges=n,
        atomic_ns_per_edge=t_atomic * 1e9 / n,
        hlh_ns_per_edge=t_hlh * 1e9 / n,
    )


# ---------------------------------------------------------------------------
# Steps 1-3
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _hlh_step1(offsets, edges, vb, part2tid, cursor, keys, vals, shift, ldv, low, high, workers):
    num_parts = vb.shape[0] - 1
    for w in prange(workers):
        while True:
            p = atomic_fetch_add(cursor, 0, np.int64(1))
            if p >= num_parts:
                break
            part2tid[p] = w
            for v in range(vb[p], vb[p + 1]):
                for j in range(offsets[v], offsets[v + 1]):
                    e = edges[j]
                    t = _table_find(keys, vals, shift, np.uint64(e))
                    if t < 0:
                        atomic_fetch_add(ldv, np.intp(e), np.uint32(1))
                    else:
                        nv8 = (np.int64(low[w, t]) + 1) & 0xFF
                        low[w, t] = nv8
                        if nv8 == 0:
                            high[w, t] += np.uint32(1)


@njit(cache=True, parallel=True)
def _hlh_degrees(t_offsets, ldv, low, high, keys, vals, shift, workers):
    # per-vertex transposed degree into t_offsets[v+1]: shared counter for
    # LDV, sum of per-thread (high*256 + low) for HDV
    nv = t_offsets.shape[0] - 1
    nthreads = low.shape[0]
    for b in prange(workers):
        for v in range(b * nv // workers, (b + 1) * nv // workers):
            t = _table_find(keys, vals, shift, np.uint64(v))
            if t < 0:
                t_offsets[v + 1] = np.int64(ldv[v])
            else:
                d = np.int64(0)
                for w in range(nthreads):
                    d += np.int64(high[w, t]) * 256 + np.int64(low[w, t])
                t_offsets[v + 1] = d


@njit(cache=True, parallel=True)
def _hlh_step3(offsets, edges, vb, part2tid, keys, vals, shift, ip, hdv_ip, t_edges, workers):
    num_parts = part2tid.shape[0]
    for w in prange(workers):
        for p in range(num_parts):
            if part2tid[p] != w:
                continue
            for v in range(vb[p], vb[p + 1]):
                for j in range(offsets[v], offsets[v + 1]):
                    u = edges[j]
                    t = _table_find(keys, vals, shift, np.uint64(u))
                    if t < 0:
                        idx = atomic_fetch_add(ip, np.intp(u), np.int64(1))
                    else:
                        idx = hdv_ip[w, t]
                        hdv_ip[w, t] = idx + 1
                    t_edges[idx] = v


@njit(cache=True, parallel=True)
def _hlh_step3_debug(offsets, edges, vb, part2tid, keys, vals, shift, ip, hdv_ip, t_edges, workers, seen, flag):
    # identical to _hlh_step3 plus an occupancy bitmap over t_edges
    num_parts = part2tid.shape[0]
    for w in prange(workers):
        for p in range(num_parts):
            if part2tid[p] != w:
                continue
            for v in range(vb[p], vb[p + 1]):
                for j in range(offsets[v], offsets[v + 1]):
                    u = edges[j]
                    t = _table_find(keys, vals, shift, np.uint64(u))
                    if t < 0:
                        idx = atomic_fetch_add(ip, np.intp(u), np.int64(1))
                    else:
                        idx = hdv_ip[w, t]
                        hdv_ip[w, t] = idx + 1
                    if atomic_fetch_add(seen, np.intp(idx), np.uint32(1)) != 0:
                        flag[0] = 1
                    t_edges[idx] = v


def _fit_table_budget(k_raw: int, load_factor: float, workers: int, cache_bytes: int) -> int:
    """Largest k <= k_raw whose power-of-two table plus per-thread arrays
    physically fit the cache budget (the formula ignores table rounding)."""
    if k_raw <= 0:
        return 0
    cap = max(2, _next_pow2(math.ceil(k_raw / load_factor)))
    while cap >= 2:
        k = min(k_raw, math.floor(load_factor * cap))
        if _SLOT_BYTES * cap + _PER_HDV_BYTES * workers * k <= cache_bytes:
            return k
        cap //= 2
    return 0


def default_budget(threads: int) -> HdvBudget:
    cache = hw.detect_cache_budget() or 32 * 1024 * 1024
    return HdvBudget(cache_bytes=cache, threads=threads)


def transpose_potra(
    g: CsrGraph,
    threads: int,
    budget: HdvBudget | None = None,
    *,
    force_method: str | None = None,
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
    probe_edges: int | None = None,
    seed: int = 0,
    partition_edges: int = DEFAULT_PARTITION_EDGES,
    debug: bool = False,
) -> TransposeOutput:
    """Full structure-aware transposition (see module docstring).

    force_method ("atomic" or "hlh") skips the probe. The cache budget
    defaults to the detected L2+L3 total with this implementation's record
    sizes. debug enables the write-once bitmap check on the output edges
    array and partition bookkeeping asserts.
    """
    workers = use_workers(threads)
    nv, ne = g.num_vertices, g.num_edges
    if force_method not in (None, "atomic", "hlh"):
        raise ValueError(f"force_method must be 'atomic' or 'hlh', got {force_method!r}")
    if budget is None:
        budget = default_budget(workers)

    t_start = time.perf_counter()
    k_raw = hdv_count(budget).k
    k = _fit_table_budget(k_raw, budget.load_factor, workers, budget.cache_bytes)
    plan = sample_hdv(
        g, k, sample_fraction=sample_fraction, seed=seed,
        threads=workers, load_factor=budget.load_factor,
    )
    if force_method is not None:
        decision = ProbeDecision(method=force_method, probe_edges=0, forced=True)
    elif ne == 0:
        decision = ProbeDecision(method="atomic", probe_edges=0)
    else:
        limit = probe_edges if probe_edges is not None else min(max(ne // 100, 1), _MAX_PROBE_EDGES)
        decision = probe_methods(g, plan, limit, workers)
    step0 = time.perf_counter() - t_start

    details = {
        "method_chosen": decision.method,
        "k": plan.k,
        "coverage_estimate": plan.coverage_estimate,
        "sample_size": plan.sample_size,
        "probe": decision,
    }

    if decision.method == "atomic":
        out = transpose_atomic(g, workers, partition_edges)
        phase_times = {"step0": step0, **out.phase_times}
        details["hdv_aux_bytes"] = plan.aux_bytes()
        details.update(out.details)
        return TransposeOutput(
            graph=out.graph,
            phase_times=phase_times,
            aux_footprint_bytes=out.aux_footprint_bytes + plan.aux_bytes(),
            method="potra",
            sorted=False,
            details=details,
        )

    off64 = g.offsets.view(np.int64)
    shift = np.uint64(plan.table_shift)
    k1 = max(plan.k, 1)
    num_parts = max(1, math.ceil(ne / partition_edges))
    vb = edge_balanced_vertex_bounds(g.offsets, num_parts)
    num_parts = vb.shape[0] - 1

    t0 = time.perf_counter()
    part2tid = np.full(num_parts, -1, dtype=np.int32)
    cursor = np.zeros(1, dtype=np.int64)
    ldv = np.zeros(nv, dtype=np.uint32)
    low = np.zeros((workers, k1), dtype=np.uint8)
    high = np.zeros((workers, k1), dtype=np.uint32)
    _hlh_step1(
        off64, g.edges, vb, part2tid, cursor,
        plan.table_keys, plan.table_vals, shift, ldv, low, high, workers,
    )
    t1 = time.perf_counter()
    if debug:
        if num_parts and ((part2tid < 0) | (part2tid >= workers)).any():
            raise AssertionError("step 1 left unclaimed or out-of-range partitions")
        counters = HlhCounters(ldv.copy(), low.copy(), high.copy(), part2tid.copy())
        if int(counters.assembled_degrees(plan).sum()) != ne:
            raise AssertionError("split counters do not sum to the edge count")
        details["counters"] = counters

    t_offsets = np.zeros(nv + 1, dtype=np.uint64)
    toff64 = t_offsets.view(np.int64)
    _hlh_degrees(toff64, ldv, low, high, plan.table_keys, plan.table_vals, shift, workers)
    _scan_inclusive_inplace(toff64[1:], workers)
    if int(t_offsets[-1]) != ne:
        raise CounterOverflowError(
            "32-bit LDV counter overflowed (a transposed degree >= 2^32)"
        )
    ip = t_offsets[:nv].astype(np.int64)
    if plan.k:
        cnt = high.astype(np.int64) * 256 + low.astype(np.int64)
        base = t_offsets[plan.hdv_ids.astype(np.int64)].astype(np.int64)
        hdv_ip = base[None, :] + np.cumsum(cnt, axis=0) - cnt
        hdv_ip = np.ascontiguousarray(hdv_ip)
    else:
        hdv_ip = np.zeros((workers, 1), dtype=np.int64)
    t2 = time.perf_counter()

    t_edges = np.empty(ne, dtype=g.edges.dtype)
    if debug:
        seen = np.zeros(ne, dtype=np.uint32)
        flag = np.zeros(1, dtype=np.int64)
        _hlh_step3_debug(
            off64, g.edges, vb, part2tid, plan.table_keys, plan.table_vals,
            shift, ip, hdv_ip, t_edges, workers, seen, flag,
        )
        if flag[0]:
            raise AssertionError("a t_edges index was written more than once")
    else:
        _hlh_step3(
            off64, g.edges, vb, part2tid, plan.table_keys, plan.table_vals,
            shift, ip, hdv_ip, t_edges, workers,
        )
    t3 = time.perf_counter()

    part_edges = off64[vb[1:]] - off64[vb[:-1]]
    per_worker = np.bincount(part2tid[part2tid >= 0], weights=part_edges[part2tid >= 0], minlength=workers)
    mean = per_worker.mean() if workers else 0.0
    imbalance = float((per_worker.max() - mean) / mean) if mean > 0 else 0.0

    shared_aux = ldv.nbytes + ip.nbytes
    hdv_aux = plan.aux_bytes() + low.nbytes + high.nbytes + hdv_ip.nbytes
    details.update(
        {
            "hdv_aux_bytes": hdv_aux,
            "shared_aux_bytes": shared_aux,
            "partitions": num_parts,
            "step3_imbalance": imbalance,
        }
    )
    return TransposeOutput(
        graph=CsrGraph(nv, ne, t_offsets, t_edges, _flip(g.orientation)),
        phase_times={"step0": step0, "step1": t1 - t0, "step2": t2 - t1, "step3": t3 - t2},
        aux_footprint_bytes=shared_aux + hdv_aux + part2tid.nbytes + vb.nbytes + cursor.nbytes,
        method="potra",
        sorted=False,
        details=details,
    )
