"""Analytic cost model of the random-access component of transposition.

Three pieces: the cache budget formula for how many high-degree vertices
fit in cache-resident per-thread state; linear per-edge time models of the
atomic method (as a function of cache hit ratio) and the hash-based
LDV/HDV method (as a function of edge coverage); and the exact crossover
hit ratio where the two tie. All outputs are "random-access ns per edge",
not total runtime: sequential edge-array reads are outside the model, and
the hash lookup is charged one cache-hit read (collision-free assumption).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

from .memlat import MemoryTimings

__all__ = [
    "HdvBudget",
    "HdvCount",
    "ModelInput",
    "ModelEstimate",
    "CrossoverResult",
    "hdv_count",
    "atomic_per_edge",
    "hlh_per_edge",
    "crossover",
    "estimate",
    "plot_model",
]


@dataclass(frozen=True)
class HdvBudget:
    """Inputs of the cache budget formula.

    cache_bytes is the target budget, record_bytes the hash-table record
    size, load_factor the desired table load, per_hdv_bytes the per-thread
    bytes of counter/cursor state per high-degree vertex, threads the
    thread count.
    """

    cache_bytes: int
    record_bytes: int = 12
    load_factor: float = 0.5
    per_hdv_bytes: int = 13
    threads: int = 1

    def __post_init__(self):
        if self.cache_bytes <= 0 or self.record_bytes <= 0 or self.per_hdv_bytes <= 0:
            raise ValueError("byte sizes must be positive")
        if not 0 < self.load_factor <= 1:
            raise ValueError("load_factor must be in (0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


class HdvCount(NamedTuple):
    k: int
    implied_bytes: float


def hdv_count(b: HdvBudget) -> HdvCount:
    """How many high-degree vertices the cache budget can host.

    k = floor(cache_bytes / (record_bytes/load_factor + per_hdv_bytes*threads)),
    never negative; implied_bytes = k times the denominator, always within
    the budget.
    """
    denom = b.record_bytes / b.load_factor + b.per_hdv_bytes * b.threads
    k = max(0, math.floor(b.cache_bytes / denom))
    return HdvCount(k=k, implied_bytes=k * denom)


@dataclass(frozen=True)
class ModelInput:
    """One evaluation point of the cost models."""

    timings: MemoryTimings
    hit_ratio: float = 0.0
    coverage: float = 0.0
    num_edges: int = 0

    def __post_init__(self):
        if not 0 <= self.hit_ratio <= 1:
            raise ValueError("hit_ratio must be in [0, 1]")
        if not 0 <= self.coverage <= 1:
            raise ValueError("coverage must be in [0, 1]")


def atomic_per_edge(m: ModelInput) -> float:
    """Atomic method: h*t_aw_h + (1-h)*t_aw_m nanoseconds per edge."""
    t = m.timings
    return m.hit_ratio * t.t_aw_h + (1.0 - m.hit_ratio) * t.t_aw_m


def hlh_per_edge(m: ModelInput) -> float:
    """LDV/HDV method: coverage*(t_w_h - t_aw_m) + t_aw_m + t_r_h ns per edge.

    Covered edges pay a cached private write, the rest a missing atomic
    write; every edge pays one cache-hit read for the hash lookup.
    """
    t = m.timings
    return m.coverage * (t.t_w_h - t.t_aw_m) + t.t_aw_m + t.t_r_h


@dataclass(frozen=True)
class CrossoverResult:
    """Where the two per-edge models tie as a function of hit ratio.

    status is "crossover" when the tie lies in [0, 1], "hlh-always-wins" /
    "hlh-never-wins" when it falls outside, or "degenerate" when atomic hit
    and miss times coincide (flat slope; hit_ratio is None).
    """

    status: str
    hit_ratio: float | None


def crossover(m: ModelInput) -> CrossoverResult:
    """Solve atomic_per_edge(h) == hlh_per_edge for h, exactly."""
    t = m.timings
    slope = t.t_aw_h - t.t_aw_m
    if slope == 0:
        return CrossoverResult(status="degenerate", hit_ratio=None)
    h = (m.coverage * (t.t_w_h - t.t_aw_m) + t.t_r_h) / slope
    if 0.0 <= h <= 1.0:
        return CrossoverResult(status="crossover", hit_ratio=h)
    at_zero = ModelInput(
        timings=t, hit_ratio=0.0, coverage=m.coverage, num_edges=m.num_edges
    )
    if atomic_per_edge(at_zero) < hlh_per_edge(at_zero):
        return CrossoverResult(status="hlh-never-wins", hit_ratio=h)
    return CrossoverResult(status="hlh-always-wins", hit_ratio=h)


@dataclass(frozen=True)
class ModelEstimate:
    """Per-edge predictions of both methods at one (hit ratio, coverage) point."""

    atomic_ns_per_edge: float
    hlh_ns_per_edge: float
    crossover_h: CrossoverResult

    def __post_init__(self):
        if self.atomic_ns_per_edge < 0 or self.hlh_ns_per_edge < 0:
            raise ValueError("per-edge times must be >= 0")


def estimate(m: ModelInput) -> ModelEstimate:
    return ModelEstimate(
        atomic_ns_per_edge=atomic_per_edge(m),
        hlh_ns_per_edge=hlh_per_edge(m),
        crossover_h=crossover(m),
    )


def plot_model(
    timings: MemoryTimings,
    coverages: list[float],
    out_path=None,
    samples: int = 101,
) -> list[dict]:
    """Tabulate both models over h in {0, 0.01, ..., 1} for external plotting.

    Emits one atomic row per h sample plus one hlh row per coverage (a
    horizontal line in h). Returns the rows; writes CSV when out_path is
    given, columns: series, h, coverage, ns_per_edge.
    """
    rows = []
    for i in range(samples):
        h = i / (samples - 1) if samples > 1 else 0.0
        m = ModelInput(timings=timings, hit_ratio=h)
        rows.append(
            {"series": "atomic", "h": h, "coverage": "", "ns_per_edge": atomic_per_edge(m)}
        )
        for cov in coverages:
            mc = ModelInput(timings=timings, hit_ratio=h, coverage=cov)
            rows.append(
                {"series": "hlh", "h": h, "coverage": cov, "ns_per_edge": hlh_per_edge(mc)}
            )
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=["series", "h", "coverage", "ns_per_edge"])
            writer.writeheader()
            writer.writerows(rows)
    return rows
