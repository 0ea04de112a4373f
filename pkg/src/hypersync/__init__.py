"""Higher-order group synchronization over SO(2) and SO(3) on uniform hypergraphs."""

from .chmp import ChmpParams, CorruptionState, chmp_init, chmp_iterate, chmp_run, ideal_weight_update
from .exceptions import (
    ConvergenceError,
    DegenerateInputError,
    DisconnectedError,
    GoodCycleConditionError,
    HypersyncError,
    InconsistencyError,
    VariantMismatchError,
)
from .group import GroupElement, GroupTuple, Variant, VertexPotential
from .hypergraph import (
    Cycle,
    CycleHyperedgeGraph,
    UniformHypergraph,
    build_chg,
    cycle_consistency,
    enumerate_cycles,
    synchronize_noiseless,
)
from .metrics import EvalReport, align_procrustes, corruption_errors, trace_stats
from .model import GroundTruth, ModelParams, classify_cycles, generate_ucmh, mode_estimator
from .recovery import (
    WeightedPairGraph,
    recover_gcw,
    recover_mst,
    recover_spectral_baseline,
    reduce_two_section_medoid,
    refine,
)

__version__ = "0.1.0"
