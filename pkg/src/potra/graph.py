"""Graph data model: CSR/CSC container, synthetic generation, relabeling,
degree and locality statistics, and the serial transposition oracle.

The oracle in this module is the correctness reference for every parallel
transposition algorithm in the package; it stays deliberately simple
(expand to pairs, lexicographic sort, re-compress) and single-threaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CsrGraph",
    "EdgeMultiset",
    "DegreeStats",
    "edge_id_dtype",
    "transpose_oracle",
    "edge_multiset",
    "generate_skewed",
    "relabel",
    "relabel_random",
    "locality_metric",
    "degree_stats",
    "lists_are_sorted",
    "sort_lists",
]

_GEN_CHUNK = 1 << 24


def edge_id_dtype(num_vertices: int) -> np.dtype:
    """Edge-ID storage width rule: 32-bit up to 2^32 vertices, else 64-bit."""
    return np.dtype(np.uint32) if num_vertices <= 2**32 else np.dtype(np.uint64)


@dataclass(eq=False)
class CsrGraph:
    """A directed graph in compressed sparse row/column layout.

    `offsets` has num_vertices+1 uint64 entries with offsets[0] == 0 and
    offsets[-1] == num_edges; `edges` holds the stored endpoint of each edge
    (destinations for CSR, sources for CSC). The orientation is a semantic
    label only; both share this layout. Instances are treated as immutable
    after construction and are safe to share read-only across threads.
    """

    num_vertices: int
    num_edges: int
    offsets: np.ndarray
    edges: np.ndarray
    orientation: str = "CSR"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.num_vertices < 0 or self.num_edges < 0:
            raise ValueError("vertex and edge counts must be non-negative")
        if self.orientation not in ("CSR", "CSC"):
            raise ValueError(f"orientation must be CSR or CSC, got {self.orientation!r}")
        if self.offsets.dtype != np.uint64:
            raise ValueError("offsets must be uint64")
        if self.offsets.shape != (self.num_vertices + 1,):
            raise ValueError(
                f"offsets must have exactly {self.num_vertices + 1} entries, "
                f"got {self.offsets.shape[0]}"
            )
        if self.edges.shape != (self.num_edges,):
            raise ValueError("edges length must equal num_edges")
        if self.offsets[0] != 0:
            raise ValueError("offsets[0] must be 0")
        if int(self.offsets[-1]) != self.num_edges:
            raise ValueError("offsets[-1] must equal num_edges")
        if self.num_vertices and np.any(np.diff(self.offsets.view(np.int64)) < 0):
            raise ValueError("non-monotone offsets")
        if self.num_edges and int(self.edges.max()) >= self.num_vertices:
            raise ValueError("edge ID >= num_vertices")

    def __eq__(self, other):
        if not isinstance(other, CsrGraph):
            return NotImplemented
        return (
            self.num_vertices == other.num_vertices
            and self.num_edges == other.num_edges
            and self.orientation == other.orientation
            and self.edges.dtype == other.edges.dtype
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.edges, other.edges)
        )

    def degrees(self) -> np.ndarray:
        """Per-vertex list lengths (int64)."""
        return np.diff(self.offsets.view(np.int64))

    def neighbors(self, v: int) -> np.ndarray:
        return self.edges[int(self.offsets[v]) : int(self.offsets[v + 1])]

    def nbytes(self) -> int:
        return self.offsets.nbytes + self.edges.nbytes

    @classmethod
    def from_edge_pairs(cls, src, dst, num_vertices, orientation="CSR") -> "CsrGraph":
        """Build a CSR structure from parallel (owner, endpoint) arrays.

        Pairs are sorted by owner then endpoint; duplicates are kept. This is
        the brute-force compression path shared by the oracle, text ingestion,
        relabeling and the generator.
        """
        src = np.asarray(src)
        dst = np.asarray(dst)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        dt = edge_id_dtype(num_vertices)
        order = np.lexsort((dst, src))
        edges = dst[order].astype(dt, copy=False)
        counts = np.bincount(src.astype(np.int64, copy=False), minlength=num_vertices)
        offsets = np.zeros(num_vertices + 1, dtype=np.uint64)
        np.cumsum(counts, out=offsets[1:])
        return cls(num_vertices, int(src.shape[0]), offsets, np.ascontiguousarray(edges), orientation)


def _owners(g: CsrGraph) -> np.ndarray:
    """Expand offsets into the owner vertex of every edge slot."""
    return np.repeat(
        np.arange(g.num_vertices, dtype=g.edges.dtype), g.degrees()
    )


def _flip(orientation: str) -> str:
    return "CSC" if orientation == "CSR" else "CSR"


def transpose_oracle(g: CsrGraph) -> CsrGraph:
    """Serial reference transposition.

    Expands the graph to (endpoint, owner) pairs, sorts them
    lexicographically, and re-compresses, so every neighbor list of the
    result is sorted ascending. All parallel algorithms are validated
    against this output.
    """
    owners = _owners(g)
    out = CsrGraph.from_edge_pairs(
        g.edges, owners, g.num_vertices, orientation=_flip(g.orientation)
    )
    return out


@dataclass(eq=False)
class EdgeMultiset:
    """Canonical multiset of (owner, endpoint) pairs for correctness checks.

    `pairs` is an (n, 2) uint64 array sorted lexicographically, so equal
    multisets compare as equal arrays.
    """

    pairs: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, EdgeMultiset):
            return NotImplemented
        return np.array_equal(self.pairs, other.pairs)

    def __len__(self):
        return self.pairs.shape[0]

    def swapped(self) -> "EdgeMultiset":
        """The multiset with every pair reversed, re-canonicalized."""
        return _canonical_pairs(self.pairs[:, 1], self.pairs[:, 0])


def _canonical_pairs(a, b) -> EdgeMultiset:
    order = np.lexsort((b, a))
    pairs = np.empty((a.shape[0], 2), dtype=np.uint64)
    pairs[:, 0] = a[order]
    pairs[:, 1] = b[order]
    return EdgeMultiset(pairs)


def edge_multiset(g: CsrGraph) -> EdgeMultiset:
    """Multiset of (owner, endpoint) pairs materialized from the layout."""
    return _canonical_pairs(_owners(g).astype(np.uint64), g.edges.astype(np.uint64))


def generate_skewed(
    num_vertices: int, num_edges: int, zipf_exponent: float, seed: int
) -> CsrGraph:
    """Random graph with Zipf-distributed endpoints and uniform owners.

    Destination IDs follow p(i) proportional to 1/(i+1)^exponent, so the
    *transposed* direction has a handful of very high-degree vertices while
    out-degrees stay near-uniform. Deterministic for a fixed seed. Self-loops
    and parallel edges may occur and are kept.
    """
    if num_vertices < 0 or num_edges < 0:
        raise ValueError("counts must be non-negative")
    if zipf_exponent <= 0:
        raise ValueError("zipf_exponent must be > 0")
    if num_vertices == 0 and num_edges > 0:
        raise ValueError("cannot place edges in an empty graph")
    dt = edge_id_dtype(num_vertices)
    if num_edges == 0:
        return CsrGraph(
            num_vertices,
            0,
            np.zeros(num_vertices + 1, dtype=np.uint64),
            np.empty(0, dtype=dt),
        )

    rng = np.random.default_rng(seed)
    cdf = np.cumsum(np.arange(1, num_vertices + 1, dtype=np.float64) ** -zipf_exponent)
    cdf /= cdf[-1]

    src = rng.integers(0, num_vertices, size=num_edges, dtype=np.int64)
    dst = np.empty(num_edges, dtype=np.int64)
    for lo in range(0, num_edges, _GEN_CHUNK):
        hi = min(lo + _GEN_CHUNK, num_edges)
        u = rng.random(hi - lo)
        dst[lo:hi] = np.searchsorted(cdf, u, side="right")
    return CsrGraph.from_edge_pairs(src, dst, num_vertices)


def relabel(g: CsrGraph, perm: np.ndarray) -> CsrGraph:
    """Apply vertex permutation `perm` (old ID -> new ID) to owners and endpoints.

    The result is rebuilt in canonical order (lists sorted ascending); the
    degree multiset is preserved and the edge multiset maps pairwise through
    the permutation.
    """
    perm = np.asarray(perm)
    if perm.shape != (g.num_vertices,):
        raise ValueError("permutation length must equal num_vertices")
    new_src = perm[_owners(g)]
    new_dst = perm[g.edges]
    return CsrGraph.from_edge_pairs(
        new_src, new_dst, g.num_vertices, orientation=g.orientation
    )


def relabel_random(g: CsrGraph, seed: int) -> tuple[CsrGraph, np.ndarray]:
    """Relabel with a seeded uniform permutation; returns (graph, mapping).

    The mapping sends old vertex IDs to new ones; invert it with
    ``np.argsort`` to undo the relabeling.
    """
    perm = np.random.default_rng(seed).permutation(g.num_vertices).astype(np.int64)
    return relabel(g, perm), perm


def locality_metric(g: CsrGraph) -> float:
    """Mean absolute ID gap between consecutive entries of each neighbor list.

    Order-sensitive stand-in for a locality score: consecutive IDs give 1.0,
    random permutations push it toward O(|V|). Lists with fewer than two
    entries contribute nothing; the degenerate value is 0.
    """
    if g.num_edges < 2:
        return 0.0
    gaps = np.abs(np.diff(g.edges.astype(np.int64)))
    valid = np.ones(g.num_edges - 1, dtype=bool)
    starts = g.offsets[1:-1].view(np.int64)
    starts = starts[(starts > 0) & (starts < g.num_edges)]
    valid[starts - 1] = False
    if not valid.any():
        return 0.0
    return float(gaps[valid].mean())


@dataclass
class DegreeStats:
    """Exact degree histogram plus cumulative fractions at round thresholds."""

    histogram: np.ndarray
    fraction_below: dict[int, float] = field(default_factory=dict)
    max_degree: int = 0


def degree_stats(g: CsrGraph, direction: str = "offsets") -> DegreeStats:
    """Degree distribution of a graph in one of its two directions.

    direction="offsets" reads list lengths from the offsets array;
    direction="endpoints" counts endpoint frequencies in the edges array,
    i.e. the degrees of the transposed direction.
    """
    if direction == "offsets":
        deg = g.degrees()
    elif direction == "endpoints":
        deg = np.bincount(
            g.edges.astype(np.int64, copy=False), minlength=g.num_vertices
        )
    else:
        raise ValueError(f"direction must be 'offsets' or 'endpoints', got {direction!r}")

    max_degree = int(deg.max()) if deg.size else 0
    histogram = np.bincount(deg, minlength=1)
    cum = np.cumsum(histogram)
    thresholds = {256} | {2**i for i in range(0, max(9, max_degree.bit_length() + 1))}
    nv = max(g.num_vertices, 1)
    fraction_below = {
        t: float(cum[min(t - 1, max_degree)]) / nv for t in sorted(thresholds) if t >= 1
    }
    if g.num_vertices == 0:
        fraction_below = {t: 0.0 for t in fraction_below}
    return DegreeStats(histogram=histogram, fraction_below=fraction_below, max_degree=max_degree)


def lists_are_sorted(g: CsrGraph) -> bool:
    """True when every neighbor list is ascending (the canonical form)."""
    if g.num_edges < 2:
        return True
    nondec = np.diff(g.edges.astype(np.int64)) >= 0
    starts = g.offsets[1:-1].view(np.int64)
    starts = starts[(starts > 0) & (starts < g.num_edges)]
    nondec[starts - 1] = True
    return bool(nondec.all())


def sort_lists(g: CsrGraph) -> CsrGraph:
    """Copy of g with each neighbor list sorted ascending (serial, oracle-side)."""
    edges = g.edges.copy()
    off = g.offsets.view(np.int64)
    for v in range(g.num_vertices):
        a, b = off[v], off[v + 1]
        if b - a > 1:
            edges[a:b].sort()
    return CsrGraph(g.num_vertices, g.num_edges, g.offsets.copy(), edges, g.orientation)
