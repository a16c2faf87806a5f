"""Benchmark orchestration: dataset preparation in the four standard
representations, algorithm runs with verification, and CSV/JSON reporting."""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    TransposeOutput,
    sort_neighbor_lists,
    transpose_atomic,
    transpose_mergetrans,
    transpose_scantrans,
)
from .errors import FootprintError
from .graph import CsrGraph, relabel_random, transpose_oracle
from .hlh import transpose_potra
from .io import load_graph, store_graph

__all__ = [
    "VerifyReport",
    "RunReport",
    "BenchConfig",
    "prepare_representations",
    "run_benchmark",
    "verify_output",
    "footprint_report",
    "write_reports_csv",
    "write_reports_json",
    "REPORT_SCHEMA_VERSION",
]

REPORT_SCHEMA_VERSION = 1
FULL_ORACLE_MAX_EDGES = 10**8
SAMPLE_VERTICES = 100_000

REPRESENTATIONS = ("CSR", "CSR-Rnd", "CSC", "CSC-Rnd")


def prepare_representations(g: CsrGraph, seed: int, out_dir, name: str) -> dict[str, Path]:
    """Write the four standard representations of a dataset.

    CSR is the input as-is, CSR-Rnd its seeded random relabeling, CSC the
    (oracle) transposition of the input, CSC-Rnd the relabeling of that.
    Returns representation -> file path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csc = transpose_oracle(g)
    variants = {
        "CSR": g,
        "CSR-Rnd": relabel_random(g, seed)[0],
        "CSC": csc,
        "CSC-Rnd": relabel_random(csc, seed)[0],
    }
    paths = {}
    for rep, graph in variants.items():
        path = out_dir / f"{name}.{rep.lower().replace('-', '_')}.potg"
        store_graph(graph, path)
        paths[rep] = path
    return paths


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class VerifyReport:
    passed: bool
    mode: str
    mismatch_vertex: int | None = None
    message: str = ""


def _canonical(g: CsrGraph) -> CsrGraph:
    """Sort neighbor lists by re-compressing pairs (numpy path, independent
    of the parallel kernels)."""
    owners = np.repeat(np.arange(g.num_vertices, dtype=np.int64), g.degrees())
    return CsrGraph.from_edge_pairs(owners, g.edges, g.num_vertices, g.orientation)


def _first_mismatch_vertex(expected: CsrGraph, got: CsrGraph) -> tuple[int, str]:
    if not np.array_equal(expected.offsets, got.offsets):
        v = int(np.nonzero(expected.offsets != got.offsets)[0][0]) - 1
        v = max(v, 0)
        return v, f"t_offsets differ at vertex {v}"
    diff = np.nonzero(expected.edges != got.edges)[0]
    i = int(diff[0])
    v = int(np.searchsorted(expected.offsets, i, side="right")) - 1
    return v, f"neighbor lists differ at vertex {v} (edge index {i})"


def verify_output(
    input_graph: CsrGraph,
    output: TransposeOutput,
    mode: str = "full-oracle",
    seed: int = 0,
    sample_vertices: int = SAMPLE_VERTICES,
) -> VerifyReport:
    """Check a transposition output against the input graph.

    full-oracle compares the canonicalized output against the serial oracle
    bit for bit. multiset-sample checks t_offsets exactly plus per-vertex
    edge multisets on a seeded vertex sample, without materializing the
    oracle. On mismatch the report names the first differing vertex.
    """
    if mode == "full-oracle":
        expected = transpose_oracle(input_graph)
        got = output.graph if output.sorted else _canonical(output.graph)
        if expected == got:
            return VerifyReport(passed=True, mode=mode)
        v, msg = _first_mismatch_vertex(expected, got)
        return VerifyReport(passed=False, mode=mode, mismatch_vertex=v, message=msg)

    if mode != "multiset-sample":
        raise ValueError(f"unknown verify mode {mode!r}")

    g = input_graph
    out = output.graph
    counts = np.bincount(g.edges.astype(np.int64, copy=False), minlength=g.num_vertices)
    expected_offsets = np.zeros(g.num_vertices + 1, dtype=np.uint64)
    np.cumsum(counts, out=expected_offsets[1:])
    if not np.array_equal(expected_offsets, out.offsets):
        v = max(int(np.nonzero(expected_offsets != out.offsets)[0][0]) - 1, 0)
        return VerifyReport(
            passed=False, mode=mode, mismatch_vertex=v,
            message=f"t_offsets differ at vertex {v}",
        )

    rng = np.random.default_rng(seed)
    nv = g.num_vertices
    n_sample = min(sample_vertices, nv)
    sample = np.sort(rng.choice(nv, size=n_sample, replace=False)) if n_sample else np.empty(0, np.int64)
    mask = np.zeros(nv, dtype=bool)
    mask[sample] = True

    hit_pos = np.nonzero(mask[g.edges.astype(np.int64, copy=False)])[0]
    owners = np.searchsorted(g.offsets, hit_pos.astype(np.uint64), side="right") - 1
    endpoints = g.edges[hit_pos].astype(np.int64)
    order = np.lexsort((owners, endpoints))
    expected_concat = owners[order].astype(np.int64)

    got_parts = []
    off = out.offsets.view(np.int64)
    for v in sample.tolist():
        seg = np.sort(out.edges[off[v] : off[v + 1]].astype(np.int64))
        got_parts.append(seg)
    got_concat = np.concatenate(got_parts) if got_parts else np.empty(0, np.int64)

    if expected_concat.shape != got_concat.shape or not np.array_equal(expected_concat, got_concat):
        lengths = counts[sample]
        ends = np.cumsum(lengths)
        upto = min(expected_concat.shape[0], got_concat.shape[0])
        bad = np.nonzero(expected_concat[:upto] != got_concat[:upto])[0]
        pos = int(bad[0]) if bad.size else upto
        v = int(sample[np.searchsorted(ends, pos, side="right")])
        return VerifyReport(
            passed=False, mode=mode, mismatch_vertex=v,
            message=f"sampled neighbor multisets differ at vertex {v}",
        )
    return VerifyReport(passed=True, mode=mode)


def _auto_mode(g: CsrGraph) -> str:
    return "full-oracle" if g.num_edges <= FULL_ORACLE_MAX_EDGES else "multiset-sample"


# ---------------------------------------------------------------------------
# Benchmark runs
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    """One benchmark cell: a dataset/algorithm/thread-count combination."""

    dataset: str
    representation: str
    algo: str
    threads: int
    status: str = "ok"
    phase_times: dict = field(default_factory=dict)
    total_time: float = 0.0
    sort_time: float | None = None
    aux_footprint_bytes: int = 0
    graph_bytes: int = 0
    method_chosen: str | None = None
    coverage: float | None = None
    k: int | None = None
    speedup_vs_baseline: float | None = None
    verified: str | None = None
    mismatch_vertex: int | None = None
    repetitions: int = 1
    error: str = ""


@dataclass
class BenchConfig:
    """What to run: datasets are (label, path) pairs; algos may be atomic,
    scantrans, mergetrans, potra, potra-hlh or potra-atomic (forced)."""

    datasets: list[tuple[str, str]]
    algos: list[str]
    threads: list[int]
    repetitions: int = 3
    verify: str = "auto"  # off | auto | full-oracle | multiset-sample
    sort: bool = False
    seed: int = 0
    footprint_limit: int | None = None
    subgraph_edges: int | None = None
    potra_kwargs: dict = field(default_factory=dict)


def _run_algo(g: CsrGraph, algo: str, threads: int, config: BenchConfig) -> TransposeOutput:
    if algo == "atomic":
        return transpose_atomic(g, threads)
    if algo == "scantrans":
        return transpose_scantrans(g, threads, footprint_limit=config.footprint_limit)
    if algo == "mergetrans":
        return transpose_mergetrans(g, threads, subgraph_edges=config.subgraph_edges)
    if algo in ("potra", "potra-hlh", "potra-atomic"):
        kwargs = dict(config.potra_kwargs)
        if algo == "potra-hlh":
            kwargs["force_method"] = "hlh"
        elif algo == "potra-atomic":
            kwargs["force_method"] = "atomic"
        kwargs.setdefault("seed", config.seed)
        return transpose_potra(g, threads, **kwargs)
    raise ValueError(f"unknown algorithm {algo!r}")


def _representation_of(label: str) -> str:
    lowered = label.lower()
    for rep in ("CSR-Rnd", "CSC-Rnd", "CSC", "CSR"):  # most specific first
        if rep.lower().replace("-", "_") in lowered or rep.lower() in lowered:
            return rep
    return "CSR"


def run_benchmark(config: BenchConfig) -> list[RunReport]:
    """Run every (dataset, algo, threads) cell `repetitions` times.

    Reports the median total time; verifies the first repetition's output
    in the configured mode; records per-cell failures (footprint prechecks,
    counter overflows) and keeps going. Speedups are normalized to the
    atomic cell of the same dataset and thread count when present.
    """
    reports: list[RunReport] = []
    for label, path in config.datasets:
        g = load_graph(path)
        for algo in config.algos:
            for threads in config.threads:
                reports.append(_run_cell(g, label, algo, threads, config))

    by_key = {
        (r.dataset, r.threads): r.total_time
        for r in reports
        if r.algo == "atomic" and r.status == "ok" and r.total_time > 0
    }
    for r in reports:
        base = by_key.get((r.dataset, r.threads))
        if base and r.status == "ok" and r.total_time > 0:
            r.speedup_vs_baseline = base / r.total_time
    return reports


def _run_cell(g: CsrGraph, label: str, algo: str, threads: int, config: BenchConfig) -> RunReport:
    report = RunReport(
        dataset=label,
        representation=_representation_of(label),
        algo=algo,
        threads=threads,
        graph_bytes=g.nbytes(),
        repetitions=config.repetitions,
    )
    totals = []
    phases = []
    out = None
    try:
        for rep in range(config.repetitions):
            t0 = time.perf_counter()
            result = _run_algo(g, algo, threads, config)
            totals.append(time.perf_counter() - t0)
            phases.append(result.phase_times)
            if out is None:
                out = result
    except FootprintError as exc:
        report.status = "OOM-precheck"
        report.error = str(exc)
        return report
    except Exception as exc:  # keep the sweep alive; record the cell failure
        report.status = "error"
        report.error = f"{type(exc).__name__}: {exc}"
        return report

    # median_low keeps total and phase decomposition from the same repetition
    report.total_time = statistics.median_low(totals)
    report.phase_times = phases[totals.index(report.total_time)]
    report.aux_footprint_bytes = out.aux_footprint_bytes
    report.method_chosen = out.details.get("method_chosen")
    report.coverage = out.details.get("coverage_estimate")
    report.k = out.details.get("k")

    if config.sort:
        sorted_out = sort_neighbor_lists(out, threads)
        report.sort_time = sorted_out.phase_times["sort"]
        out = sorted_out

    if config.verify != "off":
        mode = _auto_mode(g) if config.verify == "auto" else config.verify
        v = verify_output(g, out, mode=mode, seed=config.seed)
        report.verified = mode if v.passed else "failed"
        if not v.passed:
            report.status = "verify-failed"
            report.mismatch_vertex = v.mismatch_vertex
            report.error = v.message
    return report


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

_CSV_FIELDS = [
    "dataset", "representation", "algo", "threads", "status", "total_time",
    "sort_time", "aux_footprint_bytes", "graph_bytes", "method_chosen",
    "coverage", "k", "speedup_vs_baseline", "verified", "repetitions", "error",
]


def write_reports_csv(reports: list[RunReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=_CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for r in reports:
            writer.writerow({k: getattr(r, k) for k in _CSV_FIELDS})


def write_reports_json(reports: list[RunReport], path) -> None:
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "runs": [
            {
                **{k: getattr(r, k) for k in _CSV_FIELDS},
                "phase_times": r.phase_times,
                "mismatch_vertex": r.mismatch_vertex,
            }
            for r in reports
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, default=str)


def footprint_report(reports: list[RunReport], path=None) -> list[dict]:
    """Auxiliary footprint of each completed run as a multiple of graph bytes."""
    rows = []
    for r in reports:
        if r.status != "ok" or not r.graph_bytes:
            continue
        rows.append(
            {
                "dataset": r.dataset,
                "algo": r.algo,
                "threads": r.threads,
                "aux_footprint_bytes": r.aux_footprint_bytes,
                "graph_bytes": r.graph_bytes,
                "footprint_multiple": r.aux_footprint_bytes / r.graph_bytes,
            }
        )
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(
                f,
                fieldnames=[
                    "dataset", "algo", "threads", "aux_footprint_bytes",
                    "graph_bytes", "footprint_multiple",
                ],
            )
            writer.writeheader()
            writer.writerows(rows)
    return rows
