"""k-fold cross-validation over labelled nodes and the misclassification bound."""
from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import dataclass, field, replace

from .classifier import classify_all, classify_node, label_distribution
from .errors import TooFewLabeledNodes
from .graph import DynamicGraph
from .vocabulary import Vocabulary, VocabularyConfig, build_vocabulary
from .walks import WalkConfig, derive_rng, derive_seed

DEFAULT_BOUND_GRID = (0.05, 0.1, 0.2, 0.3, 0.5)


@dataclass
class FoldPlan:
    k: int
    folds: list[list[int]]
    rng_seed: int


@dataclass(frozen=True)
class BoundParams:
    b: float
    l: int
    label_count: int

    def __post_init__(self):
        if not 0 < self.b <= 1:
            raise ValueError("b must lie in (0, 1]")
        if self.l < 1:
            raise ValueError("l must be >= 1")
        if self.label_count < 1:
            raise ValueError("label_count must be >= 1")


@dataclass
class EvaluationReport:
    per_fold_accuracy: list[float]
    fold_sizes: list[int]
    mean_accuracy: float
    stddev: float
    bound_table: list[dict]
    wall_time: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        """Deterministic part of the report (timings are left out)."""
        return {
            "per_fold_accuracy": self.per_fold_accuracy,
            "fold_sizes": self.fold_sizes,
            "mean_accuracy": self.mean_accuracy,
            "stddev": self.stddev,
            "bound_table": self.bound_table,
        }


def make_folds(graph: DynamicGraph, k: int, rng: random.Random) -> FoldPlan:
    """Split the labelled nodes into *k* random folds whose sizes differ by at most one."""
    nodes = graph.labeled_nodes()
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(nodes) < k:
        raise TooFewLabeledNodes(f"{len(nodes)} labelled nodes cannot fill {k} folds")
    seed = rng.getrandbits(64)
    random.Random(seed).shuffle(nodes)
    size, extra = divmod(len(nodes), k)
    folds = []
    start = 0
    for i in range(k):
        stop = start + size + (1 if i < extra else 0)
        folds.append(sorted(nodes[start:stop]))
        start = stop
    return FoldPlan(k, folds, seed)


def misclassification_bound(params: BoundParams) -> float:
    """Upper bound on picking a label that trails the leader by more than ``b``.

    ``(label_count - 1) * exp(-l * b**2 / 2)``, clamped to [0, 1].
    """
    raw = (params.label_count - 1) * math.exp(-params.l * params.b ** 2 / 2)
    return min(1.0, max(0.0, raw))


def bound_table(bs, ls, label_count: int) -> list[dict]:
    return [
        {"b": b, "l": l, "labels": label_count,
         "bound": misclassification_bound(BoundParams(b, l, label_count))}
        for b in bs for l in ls
    ]


def cross_validate(graph: DynamicGraph, vocabulary_config: VocabularyConfig,
                   walk_config: WalkConfig, fold_plan: FoldPlan, *,
                   workers: int = 1, bound_grid=DEFAULT_BOUND_GRID) -> EvaluationReport:
    """Hide each fold in turn, rebuild the vocabulary, and score the predictions.

    The vocabulary is rebuilt from the visible labels only. The graph is
    left exactly as it was found, whatever happens inside a fold.
    """
    accs, sizes, times = [], [], []
    for i, fold in enumerate(fold_plan.folds):
        started = time.perf_counter()
        truth = {v: graph.label_of(v) for v in fold}
        saved_assignments = {v: graph.assignments.pop(v) for v in fold if v in graph.assignments}
        for v in fold:
            graph._drop_label(v)
        try:
            vconf = replace(vocabulary_config, rng_seed=derive_seed(fold_plan.rng_seed, i, 0))
            vocab = _fold_vocabulary(graph, vconf)
            preds = classify_all(graph, vocab, walk_config, derive_rng(fold_plan.rng_seed, i, 1),
                                 nodes=fold, apply=False, workers=workers)
        finally:
            for v, label in truth.items():
                graph._put_label(v, label)
            graph.assignments.update(saved_assignments)
        correct = sum(1 for a in preds if a.label == truth[a.node])
        accs.append(correct / len(fold))
        sizes.append(len(fold))
        times.append(time.perf_counter() - started)
    mean = statistics.fmean(accs)
    std = statistics.pstdev(accs) if len(accs) > 1 else 0.0
    table = bound_table(bound_grid, [walk_config.length], max(graph.num_labels, 1))
    return EvaluationReport(accs, sizes, mean, std, table, times)


def _fold_vocabulary(graph: DynamicGraph, config: VocabularyConfig) -> Vocabulary | None:
    if not any(graph.word_counts(v) for v in graph.labeled_nodes()):
        return None
    return build_vocabulary(graph, config, install=False)


def reference_label_frequencies(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int,
                                config: WalkConfig, rng: random.Random,
                                walks: int = 100_000) -> dict[int, float]:
    """Label visit frequencies of walks from *v*, estimated with many walks."""
    dist = label_distribution(graph, vocabulary, v, replace(config, walks=walks), rng)
    total = dist.total_visits
    return {lab: c / total for lab, c in dist.counts.items()} if total else {}


def empirical_misclassification(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int,
                                config: WalkConfig, b: float, rng: random.Random, *,
                                trials: int = 2000, reference: dict[int, float] | None = None,
                                relative: bool = False) -> float:
    """Fraction of runs whose chosen label trails the most frequent one by more than *b*.

    Frequencies are relative frequencies among labelled visits, taken from
    *reference* (or estimated with :func:`reference_label_frequencies`).
    With *relative* a label counts as bad when its frequency is below
    ``b * top`` instead of ``top - b``.
    """
    if reference is None:
        reference = reference_label_frequencies(graph, vocabulary, v, config, rng)
    top = max(reference.values())
    cut = b * top if relative else top - b
    bad = {lab for lab, f in reference.items() if f < cut}
    misses = 0
    for _ in range(trials):
        a = classify_node(graph, vocabulary, v, config, rng)
        if a.label in bad or (a.label not in reference and cut > 0):
            misses += 1
    return misses / trials
