import numpy as np
import pytest
from numba import njit

from conftest import make_graph, random_graph
from potra import (
    HdvBudget,
    coverage_exact,
    edge_multiset,
    hash_lookup,
    probe_methods,
    sample_hdv,
    sort_neighbor_lists,
    transpose_atomic,
    transpose_oracle,
    transpose_potra,
)
from potra.hlh import _hlh_step1, _table_find
from potra._nb import edge_balanced_vertex_bounds


def skewed_endpoint_graph(nv, ne, hot_vertex, hot_share, seed):
    rng = np.random.default_rng(seed)
    dst = rng.integers(0, nv, size=ne)
    hot = rng.random(ne) < hot_share
    dst[hot] = hot_vertex
    src = rng.integers(0, nv, size=ne)
    return make_graph(src, dst, nv)


class TestSampling:
    def test_dominant_vertex_found(self):
        g = skewed_endpoint_graph(20_000, 50_000, hot_vertex=7, hot_share=0.9, seed=1)
        plan = sample_hdv(g, k=1, sample_fraction=0.5, seed=3, threads=2)
        assert plan.sample_size == 10_000
        assert plan.hdv_ids.tolist() == [7]
        exact = coverage_exact(g, plan)
        assert abs(plan.coverage_estimate - exact) <= 0.05

    def test_k_zero_empty_plan(self, fig1):
        plan = sample_hdv(fig1, k=0, seed=1)
        assert plan.k == 0
        for v in range(fig1.num_vertices):
            assert hash_lookup(plan, v) == -1

    def test_exhaustive_matches_exact_topk(self, rng_factory):
        g = random_graph(rng_factory(80), max_vertices=300, max_edges=3000)
        k = 10
        plan = sample_hdv(g, k=k, sample_fraction=1.0, seed=0)
        freq = np.bincount(g.edges.astype(np.int64), minlength=g.num_vertices)
        expected = np.lexsort((np.arange(g.num_vertices), -freq))[:k]
        assert plan.hdv_ids.tolist() == expected.tolist()
        assert plan.coverage_estimate == pytest.approx(coverage_exact(g, plan))

    def test_k_clamped_to_num_vertices(self, fig1):
        plan = sample_hdv(fig1, k=100, sample_fraction=1.0)
        assert plan.k == fig1.num_vertices

    def test_deterministic_for_seed(self):
        g = skewed_endpoint_graph(5000, 20_000, hot_vertex=3, hot_share=0.4, seed=2)
        a = sample_hdv(g, k=5, sample_fraction=0.2, seed=9, threads=2)
        b = sample_hdv(g, k=5, sample_fraction=0.2, seed=9, threads=2)
        assert a.hdv_ids.tolist() == b.hdv_ids.tolist()
        assert a.coverage_estimate == b.coverage_estimate

    def test_bad_fraction(self, fig1):
        with pytest.raises(ValueError):
            sample_hdv(fig1, k=1, sample_fraction=0.0)


class TestHashLookup:
    def test_members_and_non_members(self, rng_factory):
        g = random_graph(rng_factory(81), max_vertices=500, max_edges=5000)
        plan = sample_hdv(g, k=20, sample_fraction=1.0)
        members = set(plan.hdv_ids.tolist())
        for i, v in enumerate(plan.hdv_ids.tolist()):
            assert hash_lookup(plan, v) == i
        for v in range(g.num_vertices):
            if v not in members:
                assert hash_lookup(plan, v) == -1

    def test_bulk_lookups_match_reference_map(self):
        g = skewed_endpoint_graph(100_000, 200_000, hot_vertex=11, hot_share=0.2, seed=4)
        plan = sample_hdv(g, k=1000, sample_fraction=1.0)
        reference = {int(v): i for i, v in enumerate(plan.hdv_ids)}

        @njit(cache=True)
        def batch_find(keys, vals, shift, queries, out):
            for i in range(queries.shape[0]):
                out[i] = _table_find(keys, vals, shift, np.uint64(queries[i]))

        queries = np.random.default_rng(5).integers(0, 100_000, size=1_000_000)
        got = np.empty(queries.shape[0], dtype=np.int64)
        batch_find(plan.table_keys, plan.table_vals, np.uint64(plan.table_shift), queries, got)
        expected = np.array([reference.get(int(q), -1) for q in queries], dtype=np.int64)
        assert np.array_equal(got, expected)

    def test_load_factor_bound(self):
        g = skewed_endpoint_graph(1000, 5000, hot_vertex=0, hot_share=0.3, seed=6)
        plan = sample_hdv(g, k=100, sample_fraction=1.0, load_factor=0.5)
        assert plan.k / plan.capacity <= 0.5


class TestCounterSplit:
    def test_low_byte_wrap(self):
        # one vertex with in-degree 300: the 8-bit counter wraps once
        src = np.arange(300) % 40
        g = make_graph(src, np.zeros(300, np.int64), 40)
        plan = sample_hdv(g, k=1, sample_fraction=1.0)
        assert plan.hdv_ids.tolist() == [0]

        off64 = g.offsets.view(np.int64)
        vb = edge_balanced_vertex_bounds(g.offsets, 1)
        part2tid = np.full(vb.shape[0] - 1, -1, dtype=np.int32)
        cursor = np.zeros(1, dtype=np.int64)
        ldv = np.zeros(g.num_vertices, dtype=np.uint32)
        low = np.zeros((1, 1), dtype=np.uint8)
        high = np.zeros((1, 1), dtype=np.uint32)
        _hlh_step1(
            off64, g.edges, vb, part2tid, cursor,
            plan.table_keys, plan.table_vals, np.uint64(plan.table_shift),
            ldv, low, high, 1,
        )
        assert int(high[0, 0]) == 1
        assert int(low[0, 0]) == 44
        assert int(high[0, 0]) * 256 + int(low[0, 0]) == 300

    @pytest.mark.parametrize("threads", [1, 8])
    def test_wrap_degrees_exact(self, threads):
        degrees = {0: 255, 1: 256, 2: 257, 3: 300, 4: 700}
        dst = np.concatenate([np.full(d, v) for v, d in degrees.items()])
        src = np.arange(dst.shape[0]) % 64
        g = make_graph(src, dst, 64)
        out = transpose_potra(
            g, threads, HdvBudget(cache_bytes=4096, threads=threads),
            force_method="hlh", sample_fraction=1.0, debug=True,
        )
        got = np.diff(out.graph.offsets.astype(np.int64))
        for v, d in degrees.items():
            assert got[v] == d
        counters = out.details["counters"]
        plan = sample_hdv(g, out.details["k"], sample_fraction=1.0)
        assembled = counters.assembled_degrees(plan)
        assert int(assembled.sum()) == g.num_edges
        for v, d in degrees.items():
            assert assembled[v] == d
        assert sort_neighbor_lists(out, threads).graph == transpose_oracle(g)


class TestProbe:
    def test_zero_probe_defaults_to_atomic(self, fig1):
        plan = sample_hdv(fig1, k=2, sample_fraction=1.0)
        with pytest.warns(UserWarning, match="probe"):
            decision = probe_methods(fig1, plan, probe_edges=0, threads=1)
        assert decision.method == "atomic"

    def test_probe_reports_both_rates(self):
        g = skewed_endpoint_graph(10_000, 100_000, hot_vertex=1, hot_share=0.5, seed=8)
        plan = sample_hdv(g, k=100, sample_fraction=1.0, threads=2)
        decision = probe_methods(g, plan, probe_edges=50_000, threads=2)
        assert decision.method in ("atomic", "hlh")
        assert decision.atomic_ns_per_edge > 0
        assert decision.hlh_ns_per_edge > 0
        assert decision.probe_edges == 50_000

    def test_forced_method_skips_probe(self, fig1):
        out = transpose_potra(fig1, 1, force_method="hlh")
        assert out.details["probe"].forced is True
        out = transpose_potra(fig1, 1, force_method="atomic")
        assert out.details["method_chosen"] == "atomic"


class TestTransposePotra:
    @pytest.mark.parametrize("threads", [1, 2, 8])
    @pytest.mark.parametrize("cache_bytes", [128, 65536])
    def test_fig1_equals_oracle(self, fig1, threads, cache_bytes):
        budget = HdvBudget(cache_bytes=cache_bytes, threads=threads)
        out = transpose_potra(fig1, threads, budget, force_method="hlh", debug=True)
        assert sort_neighbor_lists(out, threads).graph == transpose_oracle(fig1)

    def test_k_zero_degenerates_to_all_ldv(self, rng_factory):
        g = random_graph(rng_factory(90), max_vertices=200, max_edges=1500)
        out = transpose_potra(
            g, 2, HdvBudget(cache_bytes=1, threads=2), force_method="hlh", debug=True
        )
        assert out.details["k"] == 0
        atomic = transpose_atomic(g, 2)
        assert np.array_equal(out.graph.offsets, atomic.graph.offsets)
        assert sort_neighbor_lists(out, 2).graph == transpose_oracle(g)

    @pytest.mark.parametrize("threads", [1, 2, 8])
    def test_offsets_match_atomic_and_multisets_equal(self, threads):
        g = skewed_endpoint_graph(3000, 30_000, hot_vertex=5, hot_share=0.3, seed=12)
        out = transpose_potra(g, threads, force_method="hlh", seed=1)
        atomic = transpose_atomic(g, threads)
        assert np.array_equal(out.graph.offsets, atomic.graph.offsets)
        assert edge_multiset(out.graph) == edge_multiset(g).swapped()

    def test_auto_probe_correct_either_way(self):
        g = skewed_endpoint_graph(2000, 40_000, hot_vertex=9, hot_share=0.6, seed=13)
        oracle = transpose_oracle(g)
        for forced in (None, "atomic", "hlh"):
            out = transpose_potra(g, 2, force_method=forced, seed=2)
            assert sort_neighbor_lists(out, 2).graph == oracle

    def test_hdv_aux_within_budget(self):
        g = skewed_endpoint_graph(50_000, 200_000, hot_vertex=2, hot_share=0.4, seed=14)
        for cache_bytes in (4096, 1 << 16, 1 << 20):
            for threads in (1, 2, 8):
                budget = HdvBudget(cache_bytes=cache_bytes, threads=threads)
                out = transpose_potra(g, threads, budget, force_method="hlh", seed=3)
                assert out.details["hdv_aux_bytes"] <= 1.1 * cache_bytes

    def test_step3_imbalance_reported(self):
        g = skewed_endpoint_graph(5000, 50_000, hot_vertex=3, hot_share=0.2, seed=15)
        out = transpose_potra(g, 2, force_method="hlh", partition_edges=4096)
        assert out.details["partitions"] > 1
        assert out.details["step3_imbalance"] >= 0.0

    def test_bad_force_method(self, fig1):
        with pytest.raises(ValueError):
            transpose_potra(fig1, 1, force_method="fastest")


class TestCoverage:
    def test_full_plan_covers_everything(self, rng_factory):
        g = random_graph(rng_factory(91), max_vertices=100, max_edges=1000)
        plan = sample_hdv(g, k=g.num_vertices, sample_fraction=1.0)
        assert coverage_exact(g, plan) == 1.0

    def test_estimate_close_to_exact(self):
        g = skewed_endpoint_graph(20_000, 100_000, hot_vertex=17, hot_share=0.5, seed=16)
        for seed in range(3):
            plan = sample_hdv(g, k=50, sample_fraction=0.5, seed=seed, threads=2)
            assert abs(plan.coverage_estimate - coverage_exact(g, plan)) <= 0.05
