"""Random-walk classification of nodes in dynamic, text-attributed graphs."""

__version__ = "0.1.0"

from .classifier import (
    Assignment,
    HopStats,
    LabelDistribution,
    Source,
    classify_all,
    classify_node,
    label_distribution,
    reclassify_expired,
)
from .errors import (
    AlreadyLabeled,
    DeadEnd,
    DycosError,
    EmptyCorpus,
    InvalidSpec,
    NoContentPath,
    NoLabeledNodes,
    OutOfOrderEvent,
    ParseError,
    TooFewLabeledNodes,
    UnknownEdge,
    UnknownNode,
    ZeroTotal,
)
from .evaluation import (
    BoundParams,
    EvaluationReport,
    FoldPlan,
    cross_validate,
    make_folds,
    misclassification_bound,
)
from .graph import DynamicGraph, tokenize
from .io import dump_events, load_dataset, replay_events
from .vocabulary import (
    Vocabulary,
    VocabularyConfig,
    WordStats,
    build_vocabulary,
    compute_gini,
    rebuild_inverted_index,
    sample_labeled_nodes,
)
from .walks import (
    WalkConfig,
    candidate_set,
    content_two_hop,
    structural_hop,
    top_q,
    two_hop_path_counts,
)
