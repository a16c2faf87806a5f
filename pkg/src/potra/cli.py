"""Command-line front end.

Exit codes: 0 success, 2 verification failure, 3 resource precheck failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench, hlh, memlat, model
from .baselines import sort_neighbor_lists, transpose_atomic, transpose_mergetrans, transpose_scantrans
from .errors import FootprintError
from .graph import degree_stats, generate_skewed, locality_metric, relabel_random
from .io import load_graph, store_graph
from .model import HdvBudget, ModelInput

EXIT_VERIFY_FAILURE = 2
EXIT_PRECHECK_FAILURE = 3


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="potra", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a skewed random graph")
    g.add_argument("--vertices", type=int, required=True)
    g.add_argument("--edges", type=int, required=True)
    g.add_argument("--exponent", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("relabel", help="randomize vertex labels")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, default=0)

    p4 = sub.add_parser("prep4", help="emit CSR/CSR-Rnd/CSC/CSC-Rnd files")
    p4.add_argument("--in", dest="input", required=True)
    p4.add_argument("--out-dir", required=True)
    p4.add_argument("--name", required=True)
    p4.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("transpose", help="transpose a graph file")
    t.add_argument("--algo", choices=["atomic", "scantrans", "mergetrans", "potra"], required=True)
    t.add_argument("--threads", type=int, default=1)
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--sort", action="store_true")
    t.add_argument("--report", help="write a JSON run report here")
    t.add_argument("--footprint-limit", type=int)
    t.add_argument("--subgraph-edges", type=int)
    t.add_argument("--cache-bytes", type=int)
    t.add_argument("--alpha", type=float, default=0.5)
    t.add_argument("--record-bytes", type=int, default=12)
    t.add_argument("--per-hdv-bytes", type=int, default=13)
    t.add_argument("--sample-frac", type=float, default=hlh.DEFAULT_SAMPLE_FRACTION)
    t.add_argument("--probe-edges", type=int)
    t.add_argument("--force-method", choices=["atomic", "hlh"])
    t.add_argument("--partition-edges", type=int, default=1 << 18)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--coverage-exact", action="store_true",
                   help="add the exact coverage of the selected set to the report")

    s = sub.add_parser("sort", help="sort neighbor lists of a graph file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=1)

    v = sub.add_parser("verify", help="verify a transposition against its input")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--transposed", required=True)
    v.add_argument("--mode", choices=["auto", "full-oracle", "multiset-sample"], default="auto")
    v.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="run a benchmark sweep")
    b.add_argument("--inputs", required=True, help="comma-separated graph files")
    b.add_argument("--algos", default="atomic,scantrans,mergetrans,potra")
    b.add_argument("--threads-list", default="1")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--verify", choices=["off", "auto", "full-oracle", "multiset-sample"], default="auto")
    b.add_argument("--sort", action="store_true")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--footprint-limit", type=int)
    b.add_argument("--out", help="CSV output path")
    b.add_argument("--report", help="JSON output path")
    b.add_argument("--footprint-out", help="footprint CSV path")

    m = sub.add_parser("microbench", help="measure memory access rates")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--l3-bytes", type=int, help="required when not detectable")
    m.add_argument("--iters", type=int, default=1 << 22)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--max-miss-bytes", type=int, default=memlat.DEFAULT_MAX_MISS_BYTES)
    m.add_argument("--repeats", type=int, default=3, help="timed passes per cell; fastest counts")
    m.add_argument("--out", help="rates CSV path")

    mo = sub.add_parser("model", help="evaluate the performance model")
    mo.add_argument("mode", nargs="?", choices=["table", "crossover"], default="table")
    mo.add_argument("--timings", required=True, help="rates CSV from microbench")
    mo.add_argument("--coverage", default="0.2,0.5")
    mo.add_argument("--out", help="model CSV path (table mode)")

    st = sub.add_parser("stats", help="degree and locality statistics")
    st.add_argument("--in", dest="input", required=True)
    st.add_argument("--out", help="JSON output path (default stdout)")

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except FootprintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECHECK_FAILURE


def _dispatch(args) -> int:
    if args.command == "gen":
        g = generate_skewed(args.vertices, args.edges, args.exponent, args.seed)
        store_graph(g, args.out)
        print(f"wrote {args.out}: |V|={g.num_vertices} |E|={g.num_edges}")
        return 0

    if args.command == "relabel":
        g = load_graph(args.input)
        out, _ = relabel_random(g, args.seed)
        store_graph(out, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "prep4":
        g = load_graph(args.input)
        paths = bench.prepare_representations(g, args.seed, args.out_dir, args.name)
        for rep, path in paths.items():
            print(f"{rep}: {path}")
        return 0

    if args.command == "transpose":
        return _cmd_transpose(args)

    if args.command == "sort":
        g = load_graph(args.input)
        from .baselines import TransposeOutput

        out = sort_neighbor_lists(
            TransposeOutput(g, {}, 0, "file", sorted=False), args.threads
        )
        store_graph(out.graph, args.out)
        print(f"wrote {args.out} (sort {out.phase_times['sort']:.3f}s)")
        return 0

    if args.command == "verify":
        g = load_graph(args.input)
        t = load_graph(args.transposed)
        from .baselines import TransposeOutput

        mode = args.mode
        if mode == "auto":
            mode = "full-oracle" if g.num_edges <= bench.FULL_ORACLE_MAX_EDGES else "multiset-sample"
        report = bench.verify_output(
            g, TransposeOutput(t, {}, 0, "file", sorted=False), mode=mode, seed=args.seed
        )
        if report.passed:
            print(f"verify: pass ({report.mode})")
            return 0
        print(f"verify: FAIL ({report.mode}): {report.message}", file=sys.stderr)
        return EXIT_VERIFY_FAILURE

    if args.command == "bench":
        config = bench.BenchConfig(
            datasets=[(p.rsplit("/", 1)[-1], p) for p in args.inputs.split(",") if p],
            algos=[a for a in args.algos.split(",") if a],
            threads=_int_list(args.threads_list),
            repetitions=args.reps,
            verify=args.verify,
            sort=args.sort,
            seed=args.seed,
            footprint_limit=args.footprint_limit,
        )
        reports = bench.run_benchmark(config)
        if args.out:
            bench.write_reports_csv(reports, args.out)
        if args.report:
            bench.write_reports_json(reports, args.report)
        if args.footprint_out:
            bench.footprint_report(reports, args.footprint_out)
        failed = [r for r in reports if r.status == "verify-failed"]
        for r in reports:
            print(
                f"{r.dataset} {r.algo} t={r.threads}: {r.status} "
                f"total={r.total_time:.4f}s verified={r.verified}"
            )
        return EXIT_VERIFY_FAILURE if failed else 0

    if args.command == "microbench":
        t = memlat.measure_timings(
            threads=args.threads,
            total_l3_bytes=args.l3_bytes,
            iterations=args.iters,
            seed=args.seed,
            max_miss_bytes=args.max_miss_bytes,
            repeats=args.repeats,
        )
        if args.out:
            memlat.write_rates_csv(t, args.out)
            print(f"wrote {args.out}")
        for row in memlat.report_rates(t):
            print(
                f"{row['kind']:>12} {row['regime']:>4}: "
                f"{row['ns_per_access']:8.3f} ns/access  rate={row['normalized_rate']:.3f}"
            )
        return 0

    if args.command == "model":
        timings = memlat.load_timings_csv(args.timings)
        coverages = _float_list(args.coverage)
        if args.mode == "crossover":
            for cov in coverages:
                res = model.crossover(ModelInput(timings=timings, coverage=cov))
                h = "none" if res.hit_ratio is None else f"{res.hit_ratio:.4f}"
                print(f"coverage={cov}: {res.status} (h*={h})")
            return 0
        rows = model.plot_model(timings, coverages, out_path=args.out)
        if args.out:
            print(f"wrote {args.out} ({len(rows)} rows)")
        else:
            for row in rows[:12]:
                print(row)
        return 0

    if args.command == "stats":
        g = load_graph(args.input)
        out_stats = degree_stats(g, "offsets")
        in_stats = degree_stats(g, "endpoints")
        payload = {
            "num_vertices": g.num_vertices,
            "num_edges": g.num_edges,
            "orientation": g.orientation,
            "locality_metric": locality_metric(g),
            "offsets_direction": {
                "max_degree": out_stats.max_degree,
                "fraction_below_256": out_stats.fraction_below.get(256),
            },
            "endpoints_direction": {
                "max_degree": in_stats.max_degree,
                "fraction_below_256": in_stats.fraction_below.get(256),
            },
        }
        text = json.dumps(payload, indent=2)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        else:
            print(text)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _cmd_transpose(args) -> int:
    g = load_graph(args.input)
    if args.algo == "atomic":
        out = transpose_atomic(g, args.threads, partition_edges=args.partition_edges)
    elif args.algo == "scantrans":
        out = transpose_scantrans(g, args.threads, footprint_limit=args.footprint_limit)
    elif args.algo == "mergetrans":
        out = transpose_mergetrans(g, args.threads, subgraph_edges=args.subgraph_edges)
    else:
        budget = None
        if args.cache_bytes:
            budget = HdvBudget(
                cache_bytes=args.cache_bytes,
                record_bytes=args.record_bytes,
                load_factor=args.alpha,
                per_hdv_bytes=args.per_hdv_bytes,
                threads=args.threads,
            )
        out = hlh.transpose_potra(
            g,
            args.threads,
            budget,
            force_method=args.force_method,
            sample_fraction=args.sample_frac,
            probe_edges=args.probe_edges,
            seed=args.seed,
            partition_edges=args.partition_edges,
        )
    if args.sort:
        out = sort_neighbor_lists(out, args.threads)
    store_graph(out.graph, args.out)
    if args.report:
        payload = {
            "schema_version": bench.REPORT_SCHEMA_VERSION,
            "algo": args.algo,
            "threads": args.threads,
            "phase_times": out.phase_times,
            "aux_footprint_bytes": out.aux_footprint_bytes,
            "sorted": out.sorted,
            "details": {k: v for k, v in out.details.items() if k not in ("probe", "counters")},
        }
        if args.algo == "potra" and getattr(args, "coverage_exact", False):
            plan = hlh.sample_hdv(
                g, out.details.get("k", 0), sample_fraction=args.sample_frac,
                seed=args.seed, threads=args.threads, load_factor=args.alpha,
            )
            payload["details"]["coverage_exact"] = hlh.coverage_exact(g, plan)
        probe = out.details.get("probe")
        if probe is not None:
            payload["details"]["probe"] = vars(probe)
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
    print(f"wrote {args.out} ({args.algo}, {sum(out.phase_times.values()):.4f}s in phases)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
