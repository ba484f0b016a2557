"""graphpack: randomized perfect packing of degenerate guest graphs into
dense quasirandom hosts, with instance generators, condition diagnostics,
and an exact packing validator."""

from .core import (
    DegeneracyOrder,
    Graph,
    QuasirandomReport,
    check_coquasirandom,
    check_quasirandom,
    common_neighbourhood,
    complete_graph,
    degeneracy_order,
    empty_graph,
    gnp_random_graph,
    read_edge_list,
    write_edge_list,
)
from .diagnostics import LeftoverDiagnostics, leftover_diagnostics
from .embed import (
    ConditionReport,
    EmbedFailure,
    PartialEmbedding,
    candidate_set,
    codiet_check,
    cover_check,
    diet_check,
    random_embedding,
)
from .leafmatch import (
    LeafMatchingGraph,
    MatchLeavesFailure,
    build_leaf_graphs,
    check_degree_codegree,
    check_matching_preconditions,
    match_leaves,
)
from .matching import (
    BipartiteGraph,
    MatchingSample,
    enumerate_perfect_matchings,
    hopcroft_karp,
    sample_perfect_matching,
)
from .orient import (
    OrientationFailure,
    OrientedGraph,
    orientation_switch,
    random_orientation,
)
from .pack import (
    CompletionFailure,
    ConstantSchedule,
    PackFailure,
    PackResult,
    complete_embedding,
    constant_schedule,
    desk_schedule,
    packing_process,
    split_reservoir,
)
from .pipeline import (
    BudgetExhausted,
    PackingCertificate,
    RunConfig,
    gyarfas_instance,
    harness_gyarfas,
    harness_ringel,
    perfect_packing,
    ringel_instance,
    run_almost_perfect,
    split_seed,
)
from .prep import (
    GuestSequence,
    InsufficientLeavesError,
    OrderedGuest,
    Overlay,
    RawGuest,
    WeightMap,
    build_subgraph_sequence,
    compress,
    compute_weights,
    uniform_independent_tail,
)
from .trees import TreeStats, prufer_decode, prufer_encode, random_tree, tree_stats
from .validate import BruteForceResult, brute_force_pack, validate_packing

__version__ = "0.1.0"
