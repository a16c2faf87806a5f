"""Shared-memory graph transposition toolkit.

CSR/CSC graph model and file formats, three baseline parallel transposition
algorithms (atomic, scantrans, mergetrans), a structure-aware method with
cache-resident high-degree-vertex state, the memory-access microbenchmark
and analytic model used to choose between methods, and a benchmark CLI.
"""

from .baselines import (
    TransposeOutput,
    prefix_sum_parallel,
    sort_neighbor_lists,
    transpose_atomic,
    transpose_mergetrans,
    transpose_scantrans,
)
from .bench import (
    BenchConfig,
    RunReport,
    VerifyReport,
    footprint_report,
    prepare_representations,
    run_benchmark,
    verify_output,
)
from .errors import CounterOverflowError, FootprintError, GraphFormatError
from .graph import (
    CsrGraph,
    DegreeStats,
    EdgeMultiset,
    degree_stats,
    edge_multiset,
    generate_skewed,
    locality_metric,
    relabel,
    relabel_random,
    transpose_oracle,
)
from .hlh import (
    HdvPlan,
    HlhCounters,
    ProbeDecision,
    coverage_exact,
    hash_lookup,
    probe_methods,
    sample_hdv,
    transpose_potra,
)
from .io import load_graph, store_graph
from .memlat import (
    MemoryTimings,
    XoshiroState,
    measure_timings,
    report_rates,
    xoshiro_next,
)
from .model import (
    CrossoverResult,
    HdvBudget,
    ModelEstimate,
    ModelInput,
    atomic_per_edge,
    crossover,
    estimate,
    hdv_count,
    hlh_per_edge,
    plot_model,
)

__version__ = "0.1.0"

__all__ = [
    "CsrGraph",
    "DegreeStats",
    "EdgeMultiset",
    "degree_stats",
    "edge_multiset",
    "generate_skewed",
    "locality_metric",
    "relabel",
    "relabel_random",
    "transpose_oracle",
    "load_graph",
    "store_graph",
    "GraphFormatError",
    "FootprintError",
    "CounterOverflowError",
    "TransposeOutput",
    "prefix_sum_parallel",
    "transpose_atomic",
    "transpose_scantrans",
    "transpose_mergetrans",
    "sort_neighbor_lists",
    "HdvPlan",
    "HlhCounters",
    "ProbeDecision",
    "sample_hdv",
    "hash_lookup",
    "probe_methods",
    "transpose_potra",
    "coverage_exact",
    "MemoryTimings",
    "XoshiroState",
    "xoshiro_next",
    "measure_timings",
    "report_rates",
    "HdvBudget",
    "ModelInput",
    "ModelEstimate",
    "CrossoverResult",
    "hdv_count",
    "atomic_per_edge",
    "hlh_per_edge",
    "crossover",
    "estimate",
    "plot_model",
    "BenchConfig",
    "RunReport",
    "VerifyReport",
    "prepare_representations",
    "run_benchmark",
    "verify_output",
    "footprint_report",
    "__version__",
]
