"""Numerical laboratory for Bernstein-lethargy machinery on finite chains.

Concrete finite-dimensional normed spaces stand in for the Banach-space
setting: the package computes best-approximation distances to nested
subspace chains, separation profiles, the anchor/step recursions, witness
elements realizing prescribed error sequences, and two-sided sandwich
bounds, with deterministic JSON/CSV reporting.
"""

from .distances import (
    DistanceResult,
    brute_force_distance,
    descent_distance,
    distance,
    distance_lp,
    project_euclidean,
)
from .errors import (
    BadStaircase,
    ConfigInvalid,
    DegreeExceedsGrid,
    DimensionMismatch,
    EmptySpan,
    HorizonExhausted,
    HorizonTooLarge,
    InvariantViolation,
    LethargyLabError,
    MismatchedInputs,
    NoContributors,
    NoProgress,
    NotGeometricSequence,
    NotNested,
    NotNonIncreasing,
    NotStrict,
    PlanStalled,
    RankDeficientBasis,
    SimplexCycleGuard,
    TargetsNotMonotonic,
    TooManyBasisVectors,
)
from .machinery import (
    IndexPlan,
    StepSequence,
    TildeA,
    build_index_plan,
    build_step_sequence,
    compute_tilde_a,
    verify_step_inequality,
)
from .report import SandwichReport, sandwich_check, write_sandwich_csv
from .separation import (
    ConditionReport,
    SeparationProfile,
    check_geometric_condition,
    check_span_ratio_condition,
    check_uniform_separation,
    min_ratio_over_span,
    separation_profile,
)
from .spaces import (
    ErrorSequence,
    NormedSpace,
    Subspace,
    SubspaceChain,
    chain_from_json,
    make_chain_from_bases,
    make_coordinate_chain,
    norm_of,
    validate_chain,
)
from .scenarios import (
    bundled_scenarios,
    demo_dense_chain,
    orthogonal_geometric_config,
    random_tilted_config,
    run_scenario,
    tilted_chain_config,
)
from .witness import (
    Witness,
    achieved_distances,
    witness_coordinate_exact,
    witness_solve,
)

__version__ = "0.1.0"
