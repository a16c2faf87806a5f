"""Random-access memory microbenchmark.

Measures the per-access time of random reads, writes and atomic
read-modify-write increments against a shared array under two regimes: one
sized to the last-level cache (hit) and one vastly larger (miss). Indices
come from per-thread xoshiro256** streams so the access pattern is random,
reproducible, and cheap to generate. Per-access time is aggregate:
wall time / (threads * iterations), matching a rate-style reading.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import hw
from ._nb import atomic_fetch_add, use_workers, worker_seeds, xoshiro_seed_scalar, xoshiro_step

__all__ = [
    "MemoryTimings",
    "XoshiroState",
    "xoshiro_next",
    "measure_timings",
    "report_rates",
    "write_rates_csv",
    "load_timings_csv",
    "detect_l3_bytes",
]

detect_l3_bytes = hw.detect_l3_bytes

DEFAULT_MISS_FACTOR = 1000
DEFAULT_MAX_MISS_BYTES = 64 * 1024**3
_MIN_MISS_FACTOR = 100
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# xoshiro256** (functional API; kernels use the scalar-register form)
# ---------------------------------------------------------------------------


def _splitmix64(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64, x


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


@dataclass(frozen=True)
class XoshiroState:
    """256-bit xoshiro256** generator state (never all zero)."""

    words: tuple[int, int, int, int]
    seed: int = 0

    def __post_init__(self):
        if not any(self.words):
            raise ValueError("xoshiro state must not be all zero")

    @classmethod
    def from_seed(cls, seed: int) -> "XoshiroState":
        """Expand a 64-bit seed through splitmix64, per the generator's authors."""
        x = seed & _MASK64
        words = []
        for _ in range(4):
            z, x = _splitmix64(x)
            words.append(z)
        return cls(words=tuple(words), seed=seed & _MASK64)


def xoshiro_next(state: XoshiroState) -> tuple[int, XoshiroState]:
    """One xoshiro256** step: returns (value, advanced state)."""
    s0, s1, s2, s3 = state.words
    result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
    t = (s1 << 17) & _MASK64
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    return result, XoshiroState(words=(s0, s1, s2, s3), seed=state.seed)


# ---------------------------------------------------------------------------
# Timed kernels. The xor accumulator (read) and the stored random value
# (write) keep the accesses observable so they cannot be elided; accesses
# may overlap in the pipeline, which is the rate being measured.
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _kernel_read(arr, mask, iters, seeds, sink):
    for w in prange(seeds.shape[0]):
        s0, s1, s2, s3 = xoshiro_seed_scalar(seeds[w])
        acc = np.uint64(0)
        for _ in range(iters):
            r, s0, s1, s2, s3 = xoshiro_step(s0, s1, s2, s3)
            acc ^= arr[np.intp(r & mask)]
        sink[w] = acc


@njit(cache=True, parallel=True)
def _kernel_write(arr, mask, iters, seeds):
    for w in prange(seeds.shape[0]):
        s0, s1, s2, s3 = xoshiro_seed_scalar(seeds[w])
        for _ in range(iters):
            r, s0, s1, s2, s3 = xoshiro_step(s0, s1, s2, s3)
            arr[np.intp(r & mask)] = r


@njit(cache=True, parallel=True)
def _kernel_atomic_write(arr, mask, iters, seeds):
    for w in prange(seeds.shape[0]):
        s0, s1, s2, s3 = xoshiro_seed_scalar(seeds[w])
        for _ in range(iters):
            r, s0, s1, s2, s3 = xoshiro_step(s0, s1, s2, s3)
            atomic_fetch_add(arr, np.intp(r & mask), np.uint64(1))


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


@dataclass
class MemoryTimings:
    """Per-access times in nanoseconds for the six (kind, regime) cells."""

    t_r_h: float
    t_w_h: float
    t_aw_h: float
    t_r_m: float
    t_w_m: float
    t_aw_m: float
    threads: int = 1
    hit_array_bytes: int = 0
    miss_array_bytes: int = 0
    iterations: int = 0
    repeats: int = 0
    seed: int = 0

    def validate(self, slack: float = 0.10) -> None:
        """Check measured-timing invariants: positive cells, and the miss
        regime never beating the hit regime by more than `slack`."""
        for name in ("t_r_h", "t_w_h", "t_aw_h", "t_r_m", "t_w_m", "t_aw_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for kind, th, tm in (
            ("read", self.t_r_h, self.t_r_m),
            ("write", self.t_w_h, self.t_w_m),
            ("atomic_write", self.t_aw_h, self.t_aw_m),
        ):
            if tm < (1.0 - slack) * th:
                raise ValueError(
                    f"{kind}: miss-regime time {tm:.4g} ns is faster than "
                    f"hit-regime time {th:.4g} ns beyond {slack:.0%} slack"
                )


def _pow2_floor(n: int) -> int:
    return 1 << (max(int(n), 1).bit_length() - 1)


def _alloc_filled(n_words: int) -> np.ndarray:
    # fill() faults every page up front so the timed loop never page-faults,
    # and avoids calloc's shared zero-page mapping on reads
    arr = np.empty(n_words, dtype=np.uint64)
    arr.fill(1)
    return arr


def measure_timings(
    threads: int,
    total_l3_bytes: int | None = None,
    iterations: int = 1 << 22,
    seed: int = 0,
    max_miss_bytes: int = DEFAULT_MAX_MISS_BYTES,
    miss_factor: int = DEFAULT_MISS_FACTOR,
    warmup_iterations: int | None = None,
    repeats: int = 3,
) -> MemoryTimings:
    """Run all six benchmark cells and return the measured timings.

    The hit-regime array is sized to `total_l3_bytes` (auto-detected when
    the OS exposes the cache topology, otherwise required); the miss-regime
    array is `miss_factor` times that, capped at `max_miss_bytes` and backed
    off on allocation failure down to 100x. Array lengths round down to a
    power of two so indices are a mask of the generator output. Each cell
    runs one discarded warm-up pass, then `repeats` timed passes of which
    the fastest counts (noise rejection on shared machines).
    """
    if iterations <= 0:
        raise ValueError("empty measurement: iterations must be >= 1")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    workers = use_workers(threads)
    if total_l3_bytes is None:
        total_l3_bytes = hw.detect_l3_bytes()
        if total_l3_bytes is None:
            raise ValueError(
                "L3 size not detectable on this machine; pass total_l3_bytes explicitly"
            )
    if total_l3_bytes <= 0:
        raise ValueError("total_l3_bytes must be > 0")

    hit_n = _pow2_floor(max(total_l3_bytes // 8, 1))
    miss_target = min(total_l3_bytes * miss_factor, max_miss_bytes)
    miss_n = _pow2_floor(max(miss_target // 8, 1))
    floor_n = _pow2_floor(max(_MIN_MISS_FACTOR * total_l3_bytes // 8, 1))

    seeds = worker_seeds(seed, workers)
    if warmup_iterations is None:
        warmup_iterations = min(iterations, 1 << 16)

    hit_arr = _alloc_filled(hit_n)
    results: dict[tuple[str, str], float] = {}
    _run_cells(hit_arr, "hit", workers, iterations, warmup_iterations, seeds, results, repeats)

    miss_arr = None
    while miss_arr is None:
        try:
            miss_arr = _alloc_filled(miss_n)
        except MemoryError:
            if miss_n // 2 < floor_n:
                raise MemoryError(
                    f"cannot allocate a miss-regime array of at least "
                    f"{_MIN_MISS_FACTOR}x the L3 size ({floor_n * 8} bytes)"
                ) from None
            miss_n //= 2
    _run_cells(miss_arr, "miss", workers, iterations, warmup_iterations, seeds, results, repeats)

    t = MemoryTimings(
        t_r_h=results[("read", "hit")],
        t_w_h=results[("write", "hit")],
        t_aw_h=results[("atomic_write", "hit")],
        t_r_m=results[("read", "miss")],
        t_w_m=results[("write", "miss")],
        t_aw_m=results[("atomic_write", "miss")],
        threads=workers,
        hit_array_bytes=hit_n * 8,
        miss_array_bytes=miss_n * 8,
        iterations=iterations,
        repeats=repeats,
        seed=seed,
    )
    t.validate()
    return t


def _run_cells(arr, regime, workers, iterations, warmup, seeds, results, repeats):
    mask = np.uint64(arr.shape[0] - 1)
    sink = np.zeros(workers, dtype=np.uint64)
    total = workers * iterations
    for kind, runner in (
        ("read", lambda it: _kernel_read(arr, mask, it, seeds, sink)),
        ("write", lambda it: _kernel_write(arr, mask, it, seeds)),
        ("atomic_write", lambda it: _kernel_atomic_write(arr, mask, it, seeds)),
    ):
        runner(warmup)
        best = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            runner(iterations)
            dt = time.perf_counter() - t0
            best = dt if best is None else min(best, dt)
        results[(kind, regime)] = best * 1e9 / total


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

_CELLS = (
    ("read", "hit", "t_r_h"),
    ("write", "hit", "t_w_h"),
    ("atomic_write", "hit", "t_aw_h"),
    ("read", "miss", "t_r_m"),
    ("write", "miss", "t_w_m"),
    ("atomic_write", "miss", "t_aw_m"),
)


def report_rates(t: MemoryTimings) -> list[dict]:
    """Access rates normalized to the hit-regime read rate (value 1.0)."""
    base = t.t_r_h
    return [
        {
            "kind": kind,
            "regime": regime,
            "ns_per_access": getattr(t, attr),
            "normalized_rate": base / getattr(t, attr),
        }
        for kind, regime, attr in _CELLS
    ]


def write_rates_csv(t: MemoryTimings, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# threads={t.threads}\n")
        f.write(f"# hit_array_bytes={t.hit_array_bytes}\n")
        f.write(f"# miss_array_bytes={t.miss_array_bytes}\n")
        f.write(f"# iterations={t.iterations}\n")
        f.write(f"# repeats={t.repeats}\n")
        f.write(f"# seed={t.seed}\n")
        f.write("kind,regime,ns_per_access,normalized_rate\n")
        for row in report_rates(t):
            f.write(
                f"{row['kind']},{row['regime']},"
                f"{row['ns_per_access']:.6f},{row['normalized_rate']:.6f}\n"
            )


def load_timings_csv(path) -> MemoryTimings:
    meta = {
        "threads": 1, "hit_array_bytes": 0, "miss_array_bytes": 0,
        "iterations": 0, "repeats": 0, "seed": 0,
    }
    cells: dict[tuple[str, str], float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key in meta and value:
                    meta[key] = int(value)
                continue
            if line.startswith("kind,"):
                continue
            kind, regime, ns, _rate = line.split(",")
            cells[(kind, regime)] = float(ns)
    missing = [c for c, _, _ in _CELLS if (c, "hit") not in cells or (c, "miss") not in cells]
    if missing:
        raise ValueError(f"timings CSV is missing cells for: {sorted(set(missing))}")
    t = MemoryTimings(
        t_r_h=cells[("read", "hit")],
        t_w_h=cells[("write", "hit")],
        t_aw_h=cells[("atomic_write", "hit")],
        t_r_m=cells[("read", "miss")],
        t_w_m=cells[("write", "miss")],
        t_aw_m=cells[("atomic_write", "miss")],
        **meta,
    )
    try:
        t.validate()
    except ValueError as exc:
        warnings.warn(f"loaded timings violate measurement invariants: {exc}")
    return t
