import numpy as np
import pytest

from potra import CsrGraph


def make_graph(src, dst, num_vertices, orientation="CSR") -> CsrGraph:
    return CsrGraph.from_edge_pairs(
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        num_vertices,
        orientation,
    )


def random_graph(rng: np.random.Generator, max_vertices=1000, max_edges=10_000) -> CsrGraph:
    """Random multigraph with self-loops, parallel edges and isolated vertices."""
    nv = int(rng.integers(1, max_vertices + 1))
    ne = int(rng.integers(0, max_edges + 1))
    src = rng.integers(0, nv, size=ne)
    if rng.random() < 0.5:
        dst = rng.integers(0, nv, size=ne)
    else:
        # skewed endpoints so some graphs have pronounced high-degree vertices
        dst = np.minimum((nv * rng.random(ne) ** 3).astype(np.int64), nv - 1)
    return CsrGraph.from_edge_pairs(src, dst, nv)


def canonical(g: CsrGraph) -> CsrGraph:
    """Independent list-sorting canonicalizer (numpy pair re-compression)."""
    owners = np.repeat(np.arange(g.num_vertices, dtype=np.int64), g.degrees())
    return CsrGraph.from_edge_pairs(owners, g.edges, g.num_vertices, g.orientation)


@pytest.fixture
def fig1() -> CsrGraph:
    # vertex 0 points to 1 and 2 and has exactly one in-edge, from vertex 3,
    # so the transposed offsets begin [0, 1] and transposed edges begin [3]
    return make_graph([0, 0, 1, 1, 2, 3], [1, 2, 2, 3, 3, 0], 4)


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return make
