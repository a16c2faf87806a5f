import numpy as np
import pytest

from conftest import canonical, make_graph, random_graph
from potra import (
    CsrGraph,
    degree_stats,
    edge_multiset,
    generate_skewed,
    locality_metric,
    relabel,
    relabel_random,
    transpose_oracle,
)
from potra.graph import edge_id_dtype, lists_are_sorted, sort_lists


class TestCsrGraph:
    def test_fig1_layout(self, fig1):
        assert fig1.num_vertices == 4
        assert fig1.num_edges == 6
        assert list(fig1.neighbors(0)) == [1, 2]
        assert fig1.offsets[0] == 0
        assert fig1.offsets[-1] == 6

    def test_invariant_violations_rejected(self):
        with pytest.raises(ValueError, match="non-monotone"):
            CsrGraph(2, 1, np.array([0, 2, 1], dtype=np.uint64), np.array([0], np.uint32))
        with pytest.raises(ValueError, match="edge ID"):
            CsrGraph(2, 1, np.array([0, 1, 1], dtype=np.uint64), np.array([5], np.uint32))
        with pytest.raises(ValueError, match="offsets"):
            CsrGraph(2, 1, np.array([0, 1], dtype=np.uint64), np.array([0], np.uint32))

    def test_id_width_rule(self):
        assert edge_id_dtype(10) == np.uint32
        assert edge_id_dtype(2**32) == np.uint32
        assert edge_id_dtype(2**32 + 1) == np.uint64


class TestOracle:
    def test_fig1_transpose(self, fig1):
        t = transpose_oracle(fig1)
        assert list(t.offsets[:2]) == [0, 1]
        assert t.edges[0] == 3
        assert t.orientation == "CSC"

    def test_self_loop_fixed_point(self):
        g = make_graph([0], [0], 1)
        assert transpose_oracle(g) == CsrGraph(
            1, 1, g.offsets.copy(), g.edges.copy(), "CSC"
        )

    def test_involution_random(self, rng_factory):
        rng = rng_factory(0)
        for _ in range(10):
            g = random_graph(rng, max_vertices=50, max_edges=300)
            assert transpose_oracle(transpose_oracle(g)) == canonical(g)

    def test_output_lists_sorted(self, rng_factory):
        g = random_graph(rng_factory(1))
        assert lists_are_sorted(transpose_oracle(g))


class TestEdgeMultiset:
    def test_fig1_pairs(self, fig1):
        ms = edge_multiset(fig1)
        pairs = {tuple(p) for p in ms.pairs.tolist()}
        assert (0, 1) in pairs and (0, 2) in pairs
        assert len(ms) == 6

    def test_empty(self):
        g = make_graph([], [], 3)
        assert len(edge_multiset(g)) == 0

    def test_parallel_edges_kept(self):
        g = make_graph([1, 1], [0, 0], 2)
        ms = edge_multiset(g)
        assert ms.pairs.tolist() == [[1, 0], [1, 0]]

    def test_swap_matches_transpose(self, rng_factory):
        g = random_graph(rng_factory(2), max_vertices=40, max_edges=200)
        assert edge_multiset(transpose_oracle(g)) == edge_multiset(g).swapped()


class TestGenerator:
    def test_deterministic(self):
        a = generate_skewed(500, 2000, 1.0, seed=42)
        b = generate_skewed(500, 2000, 1.0, seed=42)
        assert a == b

    def test_higher_exponent_more_skew(self):
        flat = generate_skewed(200, 5000, 1.0, seed=9)
        steep = generate_skewed(200, 5000, 3.0, seed=9)
        top_flat = np.bincount(flat.edges.astype(np.int64), minlength=200).max()
        top_steep = np.bincount(steep.edges.astype(np.int64), minlength=200).max()
        assert top_steep > top_flat

    def test_zero_edges(self):
        g = generate_skewed(10, 0, 1.0, seed=1)
        assert g.num_edges == 0
        assert np.all(g.offsets == 0)

    def test_bad_params(self):
        with pytest.raises(ValueError):
            generate_skewed(10, 10, 0.0, seed=1)
        with pytest.raises(ValueError):
            generate_skewed(0, 5, 1.0, seed=1)


class TestRelabel:
    def test_inverse_recovers_original(self, rng_factory):
        g = canonical(random_graph(rng_factory(3), max_vertices=60, max_edges=400))
        out, perm = relabel_random(g, seed=5)
        back = relabel(out, np.argsort(perm))
        assert back == g

    def test_degree_multiset_invariant(self, fig1):
        out, _ = relabel_random(fig1, seed=11)
        assert sorted(out.degrees().tolist()) == sorted(fig1.degrees().tolist())

    def test_edge_multiset_maps_through_permutation(self, fig1):
        out, perm = relabel_random(fig1, seed=13)
        src, dst = [], []
        for v in range(fig1.num_vertices):
            for u in fig1.neighbors(v):
                src.append(perm[v])
                dst.append(perm[u])
        expected = edge_multiset(make_graph(src, dst, fig1.num_vertices))
        assert edge_multiset(out) == expected


class TestLocalityMetric:
    def test_consecutive_ids(self):
        g = make_graph([0, 0, 0], [5, 6, 7], 8)
        assert locality_metric(g) == 1.0

    def test_short_lists_are_zero(self):
        g = make_graph([0, 1, 2], [1, 2, 0], 3)
        assert locality_metric(g) == 0.0

    def test_relabeling_degrades_locality(self):
        nv = 100_000
        src = np.repeat(np.arange(nv), 5)
        dst = (src + np.tile(np.arange(1, 6), nv)) % nv
        g = CsrGraph.from_edge_pairs(src, dst, nv)
        base = locality_metric(g)
        worse = sum(
            locality_metric(relabel_random(g, seed)[0]) > base for seed in range(20)
        )
        assert worse >= 19


class TestDegreeStats:
    def test_fig1_out_degree(self, fig1):
        s = degree_stats(fig1, "offsets")
        assert fig1.degrees()[0] == 2
        assert s.histogram[2] == 2  # vertices 0 and 1
        assert s.histogram[1] == 2  # vertices 2 and 3
        assert s.max_degree == 2

    def test_regular_graph_all_below_256(self):
        src = np.repeat(np.arange(50), 3)
        dst = (src + np.tile(np.arange(1, 4), 50)) % 50
        g = CsrGraph.from_edge_pairs(src, dst, 50)
        s = degree_stats(g, "offsets")
        assert s.fraction_below[256] == 1.0

    def test_endpoint_direction_matches_serial_count(self, rng_factory):
        g = random_graph(rng_factory(4))
        s = degree_stats(g, "endpoints")
        ref = np.bincount(g.edges.astype(np.int64), minlength=g.num_vertices)
        assert s.max_degree == int(ref.max())
        below = int((ref < 256).sum()) / g.num_vertices
        assert s.fraction_below[256] == pytest.approx(below)

    def test_histogram_mass(self, rng_factory):
        g = random_graph(rng_factory(5))
        s = degree_stats(g, "endpoints")
        assert int(s.histogram.sum()) == g.num_vertices
        degs = np.arange(s.histogram.shape[0])
        assert int((s.histogram * degs).sum()) == g.num_edges


def test_sort_lists_canonicalizes(rng_factory):
    g = random_graph(rng_factory(6), max_vertices=30, max_edges=100)
    s = sort_lists(g)
    assert lists_are_sorted(s)
    assert s == canonical(g)
