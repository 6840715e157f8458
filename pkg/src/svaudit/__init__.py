"""Group-fairness auditing for speaker-verification systems.

The audit pipeline is: parse (or synthesize) trials and speaker metadata,
score trials by cosine similarity of embeddings, pick the operating
threshold at the equal error rate over all trials, then compare the two
demographic groups' decision statistics (statistical parity, equalized
odds, equal opportunity). A small loss lab trains a toy linear encoder with
five verification losses so the whole chain can be exercised end to end on
synthetic cohorts.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import SvauditError
from .fairness import (
    FairnessReport,
    GroupConfusion,
    audit,
    bootstrap_intervals,
    equal_opportunity,
    equalized_odds,
    equalized_odds_gaps,
    group_confusion,
    nationality_sweep,
    statistical_parity,
)
from .ingest import (
    EmbeddingTable,
    parse_embeddings,
    parse_metadata,
    parse_scores,
    parse_trials,
)
from .model import (
    AssignmentPolicy,
    Attribute,
    Decision,
    Gender,
    GroupAssignment,
    GroupScheme,
    GroupValue,
    Label,
    SchemeKind,
    ScoredTrial,
    SpeakerMeta,
    Trial,
    assign_group,
)
from .losses import (
    aam_softmax,
    am_softmax,
    compute_prototypes,
    grad_check,
    prototypical_episode,
    prototypical_loss,
    softmax_ce,
    triplet_loss,
)
from .report import ExperimentGrid, render_grid, render_nationality_series
from .scoring import cosine_similarity, score_trials
from .synth import Cohort, SynthConfig, gen_cohort, gen_trials
from .thresholding import EerResult, RocPoint, apply_threshold, compute_eer, roc_curve
from .training import (
    EncoderParams,
    LossConfig,
    ToyBatch,
    ToyDataset,
    dataset_from_cohort,
    encode_batch,
    export_embeddings,
    train_toy,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "SvauditError",
    "SpeakerMeta",
    "Trial",
    "ScoredTrial",
    "Decision",
    "Label",
    "Gender",
    "GroupScheme",
    "GroupAssignment",
    "GroupValue",
    "SchemeKind",
    "Attribute",
    "AssignmentPolicy",
    "assign_group",
    "EmbeddingTable",
    "parse_metadata",
    "parse_trials",
    "parse_scores",
    "parse_embeddings",
    "cosine_similarity",
    "score_trials",
    "RocPoint",
    "EerResult",
    "roc_curve",
    "compute_eer",
    "apply_threshold",
    "GroupConfusion",
    "FairnessReport",
    "group_confusion",
    "statistical_parity",
    "equalized_odds",
    "equalized_odds_gaps",
    "equal_opportunity",
    "audit",
    "nationality_sweep",
    "bootstrap_intervals",
    "softmax_ce",
    "am_softmax",
    "aam_softmax",
    "triplet_loss",
    "compute_prototypes",
    "prototypical_loss",
    "prototypical_episode",
    "grad_check",
    "EncoderParams",
    "LossConfig",
    "ToyBatch",
    "ToyDataset",
    "dataset_from_cohort",
    "encode_batch",
    "train_toy",
    "export_embeddings",
    "SynthConfig",
    "Cohort",
    "gen_cohort",
    "gen_trials",
    "ExperimentGrid",
    "render_grid",
    "render_nationality_series",
]
