"""Low-level numba building blocks shared by the parallel kernels.

Everything here is deliberately tiny: a hardware fetch-and-add intrinsic,
the xoshiro256** step in scalar-register form, and helpers to pick worker
counts and work partitions. The kernels built on top live next to the
algorithms that own them.
"""

from __future__ import annotations

import numpy as np
from numba import config as _nb_config
from numba import njit, set_num_threads, types
from numba.core import cgutils
from numba.extending import intrinsic

U64 = np.uint64
_SPLITMIX_GAMMA = U64(0x9E3779B97F4A7C15)


@intrinsic
def atomic_fetch_add(typingctx, arr, idx, val):
    """Hardware atomic read-modify-write add on ``arr[idx]``.

    Emits an LLVM ``atomicrmw add`` (lock xadd on x86) and returns the value
    held *before* the addition, i.e. the reserved slot. ``arr`` must be a
    1-D integer array and ``val`` must already have the array's dtype.
    """
    if not isinstance(arr, types.Array) or arr.ndim != 1:
        return None
    if not isinstance(arr.dtype, types.Integer):
        return None
    sig = arr.dtype(arr, types.intp, arr.dtype)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, arr_v)
        ptr = cgutils.get_item_pointer(
            context, builder, aryty, ary, [idx_v], wraparound=False
        )
        return builder.atomic_rmw("add", ptr, val_v, ordering="monotonic")

    return sig, codegen


@njit(cache=True, inline="always")
def splitmix64(x):
    """One splitmix64 step: returns (output, advanced state)."""
    x = U64(x) + _SPLITMIX_GAMMA
    z = x
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31)), x


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, inline="always")
def xoshiro_seed_scalar(seed):
    """Expand a 64-bit seed into the four xoshiro256** state words."""
    z0, x = splitmix64(U64(seed))
    z1, x = splitmix64(x)
    z2, x = splitmix64(x)
    z3, x = splitmix64(x)
    return z0, z1, z2, z3


@njit(cache=True, inline="always")
def xoshiro_step(s0, s1, s2, s3):
    """xoshiro256** step on scalar state words: (value, s0', s1', s2', s3')."""
    result = _rotl(s1 * U64(5), U64(7)) * U64(9)
    t = s1 << U64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, U64(45))
    return result, s0, s1, s2, s3


def worker_seeds(seed: int, workers: int) -> np.ndarray:
    """Deterministic per-worker seeds: successive splitmix64 outputs of `seed`."""
    out = np.empty(workers, dtype=np.uint64)
    x = np.uint64(seed)
    for w in range(workers):
        z, x = _splitmix64_py(x)
        out[w] = z
    return out


def _splitmix64_py(x):
    mask = (1 << 64) - 1
    x = (int(x) + 0x9E3779B97F4A7C15) & mask
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return np.uint64(z ^ (z >> 31)), np.uint64(x)


def use_workers(requested: int) -> int:
    """Clamp numba's OS thread pool to `requested` logical workers.

    Kernels take the worker count as an explicit prange extent, so more
    workers than cores is legal (iterations get multiplexed); numba just
    refuses pools larger than the machine.
    """
    if requested < 1:
        raise ValueError(f"thread count must be >= 1, got {requested}")
    set_num_threads(min(requested, _nb_config.NUMBA_NUM_THREADS))
    return requested


def edge_balanced_vertex_bounds(offsets: np.ndarray, parts: int) -> np.ndarray:
    """Split vertices into `parts` contiguous ranges of near-equal edge count.

    Returns an int64 array of parts+1 vertex boundaries; range p is
    [bounds[p], bounds[p+1]). Trailing zero-degree vertices land in the last
    range. Empty ranges are possible when parts exceeds |E|.
    """
    num_vertices = offsets.shape[0] - 1
    num_edges = int(offsets[-1])
    parts = max(1, parts)
    targets = (np.arange(parts + 1, dtype=np.int64) * num_edges) // parts
    bounds = np.searchsorted(offsets, targets, side="left").astype(np.int64)
    bounds[0] = 0
    bounds[-1] = num_vertices
    return bounds
