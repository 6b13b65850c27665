"""Finite conditional-LATE models: monotonicity, latent-index representations and their tests."""

from ._version import __version__
from .data import Dataset, empirical_model, ingest_csv
from .diagnostics import (
    MomentMonotonicityReport,
    OutcomeFunction,
    SufficiencyReport,
    audit,
    constant_function,
    default_family,
    indicator_function,
    moment_monotonicity_check,
    rank_invariance_from_moments,
    sufficiency_check,
)
from .estimator import OrderedIndexEstimator, SeparableIndexEstimator
from .exceptions import *  # noqa: F401,F403
from .model import (
    CheckResult,
    ConflictWitness,
    FiniteModel,
    FlipWitness,
    JointModel,
    MonotonicityVerdict,
    ObservableJoint,
    OrderedModel,
    PropensityMatrix,
    ResponseType,
    TypeMass,
    Verdict,
    check_conditional_independence,
    check_overlap,
    check_relevance,
    classify_monotonicity,
    monotone_conditional,
    monotone_unconditional,
    observable_joint,
    propensity_matrix,
)
from .ordered import (
    ThresholdRepresentation,
    as_ordered,
    binarize_levels,
    construct_ordered_representation,
    mean_treatment,
    ordered_index,
    ordered_pushforward,
    verify_ordered,
)
from .report import AuditReport, CheckEntry, canonical_json
from .representation import (
    IndexFunction,
    IndexRepresentation,
    RankInvarianceReport,
    check_rank_invariance,
    construct_index_m,
    construct_representation,
    normalize_uniform,
    pushforward,
    verify_normalized,
    verify_representation,
)
from .serialization import load_model, model_from_json, model_to_json
from .simulate import DgpSpec, generate_model, generate_with_representation, sample
