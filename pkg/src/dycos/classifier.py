"""Label unlabelled nodes by majority vote over random-walk visits.

For every target node ``r`` walks of ``l`` hops are run. Each hop is a
structural hop with probability ``p_structural`` and a content two-hop
otherwise; if the chosen kind is impossible the other kind is tried once,
and if that fails too the walk stops early. Every visited node carrying a
label adds one vote for it. The winner is drawn uniformly among the labels
with most votes; without any vote it is drawn among the labels most common
in the whole graph.

``classify_all`` works in one of two modes:

* ``batch``: walks see the labelling as it was before the call; new
  labels are written once every target is done.
* ``immediate``: targets are processed by ascending id and each new
  label is visible to the walks of the following targets.
"""
from __future__ import annotations

import enum
import multiprocessing
import random
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import AlreadyLabeled, NoLabeledNodes, UnknownNode
from .graph import DynamicGraph
from .vocabulary import Vocabulary
from .walks import WalkConfig, derive_rng

MODES = ("batch", "immediate")


class Source(str, enum.Enum):
    WALK_MAJORITY = "walk_majority"
    GLOBAL_FALLBACK = "global_fallback"


@dataclass(frozen=True)
class Assignment:
    node: int
    label: int
    source: Source
    confidence: float
    assigned_at: int
    ttl: int | None = None


@dataclass
class LabelDistribution:
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total_visits(self) -> int:
        return sum(self.counts.values())

    def argmax(self) -> list[int]:
        if not self.counts:
            return []
        top = max(self.counts.values())
        return sorted(lab for lab, c in self.counts.items() if c == top)


@dataclass
class HopStats:
    structural: int = 0
    content: int = 0
    structural_fallback: int = 0  # structural hop taken after a failed content hop
    content_fallback: int = 0     # content hop taken after a failed structural hop
    truncated_walks: int = 0

    def merge(self, other: HopStats) -> None:
        self.structural += other.structural
        self.content += other.content
        self.structural_fallback += other.structural_fallback
        self.content_fallback += other.content_fallback
        self.truncated_walks += other.truncated_walks


def label_distribution(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int,
                       config: WalkConfig, rng: random.Random,
                       stats: HopStats | None = None) -> LabelDistribution:
    """Run the walks from *v* and tally the labels of visited nodes."""
    if v not in graph:
        raise UnknownNode(v)
    labels = graph._labels
    neighbors = graph.out_neighbors
    candidates = vocabulary.candidates if vocabulary is not None else None
    q = config.top_q
    ps = config.p_structural
    rand = rng.random
    randrange = rng.randrange
    counts: dict[int, int] = {}
    n_struct = n_content = n_struct_fb = n_content_fb = n_trunc = 0

    for _ in range(config.walks):
        w = v
        for _ in range(config.length):
            if rand() < ps:
                nbrs = neighbors(w)
                if nbrs:
                    w = nbrs[randrange(len(nbrs))]
                    n_struct += 1
                else:
                    nodes = ()
                    if candidates is not None:
                        nodes, _, cum = candidates(w, q)
                    if not nodes:
                        n_trunc += 1
                        break
                    w = nodes[bisect_right(cum, randrange(cum[-1]))]
                    n_content_fb += 1
            else:
                nodes = ()
                if candidates is not None:
                    nodes, _, cum = candidates(w, q)
                if nodes:
                    w = nodes[bisect_right(cum, randrange(cum[-1]))]
                    n_content += 1
                else:
                    nbrs = neighbors(w)
                    if not nbrs:
                        n_trunc += 1
                        break
                    w = nbrs[randrange(len(nbrs))]
                    n_struct_fb += 1
            lab = labels.get(w)
            if lab is not None:
                counts[lab] = counts.get(lab, 0) + 1

    if stats is not None:
        stats.structural += n_struct
        stats.content += n_content
        stats.structural_fallback += n_struct_fb
        stats.content_fallback += n_content_fb
        stats.truncated_walks += n_trunc
    return LabelDistribution(counts)


def classify_node(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int,
                  config: WalkConfig, rng: random.Random, *,
                  ttl: int | None = None, stats: HopStats | None = None) -> Assignment:
    """Pick a label for the unlabelled node *v* (the graph is not modified)."""
    if v not in graph:
        raise UnknownNode(v)
    if graph.is_labeled(v):
        raise AlreadyLabeled(f"node {v} already carries a label")
    if graph.num_labeled == 0:
        raise NoLabeledNodes("graph has no labelled nodes")
    dist = label_distribution(graph, vocabulary, v, config, rng, stats)
    best = dist.argmax()
    if best:
        label = best[0] if len(best) == 1 else rng.choice(best)
        return Assignment(v, label, Source.WALK_MAJORITY,
                          dist.counts[label] / dist.total_visits, graph.clock, ttl)
    fallback = sorted(graph.most_frequent_labels())
    label = fallback[0] if len(fallback) == 1 else rng.choice(fallback)
    return Assignment(v, label, Source.GLOBAL_FALLBACK, 0.0, graph.clock, ttl)


def apply_assignments(graph: DynamicGraph, assignments: list[Assignment]) -> None:
    for a in assignments:
        graph._put_label(a.node, a.label)
        graph.assignments[a.node] = a
    if assignments:
        graph.revision += 1


# set in the parent before forking workers; read-only in the children
_SHARED: tuple | None = None


def _classify_chunk(chunk: list[int]) -> tuple[list[Assignment], HopStats]:
    graph, vocabulary, config, master, ttl = _SHARED
    stats = HopStats()
    out = [classify_node(graph, vocabulary, v, config, derive_rng(master, v), ttl=ttl, stats=stats)
           for v in chunk]
    return out, stats


def classify_all(graph: DynamicGraph, vocabulary: Vocabulary | None, config: WalkConfig,
                 rng: random.Random, *, mode: str = "batch", ttl: int | None = None,
                 apply: bool = True, nodes: list[int] | None = None, workers: int = 1,
                 stats: HopStats | None = None) -> list[Assignment]:
    """Classify every unlabelled node (or the unlabelled subset *nodes*).

    Each target uses its own random stream derived from one draw of *rng*
    and the node id, so results do not depend on processing order or on
    the number of *workers*. In batch mode *apply* controls whether the new
    labels are written to the graph.
    """
    global _SHARED
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if ttl is not None and ttl < 1:
        raise ValueError("ttl must be >= 1")
    if graph.num_labeled == 0:
        raise NoLabeledNodes("graph has no labelled nodes")
    if nodes is None:
        targets = sorted(graph.unlabeled_nodes())
    else:
        targets = sorted(nodes)
        for v in targets:
            if v not in graph:
                raise UnknownNode(v)
            if graph.is_labeled(v):
                raise AlreadyLabeled(f"node {v} already carries a label")
    master = rng.getrandbits(64)
    if stats is None:
        stats = HopStats()

    if mode == "immediate":
        if not apply:
            raise ValueError("immediate mode always applies labels")
        out = []
        for v in targets:
            a = classify_node(graph, vocabulary, v, config, derive_rng(master, v), ttl=ttl, stats=stats)
            apply_assignments(graph, [a])
            out.append(a)
        return out

    if workers > 1 and len(targets) > workers:
        chunks = [targets[i::workers] for i in range(workers)]
        _SHARED = (graph, vocabulary, config, master, ttl)
        try:
            with multiprocessing.get_context("fork").Pool(workers) as pool:
                parts = pool.map(_classify_chunk, chunks)
        finally:
            _SHARED = None
        by_node = {}
        for part, part_stats in parts:
            stats.merge(part_stats)
            for a in part:
                by_node[a.node] = a
        out = [by_node[v] for v in targets]
    else:
        out = [classify_node(graph, vocabulary, v, config, derive_rng(master, v), ttl=ttl, stats=stats)
               for v in targets]
    if apply:
        apply_assignments(graph, out)
    return out


def expired_nodes(graph: DynamicGraph, now: int) -> list[int]:
    return sorted(v for v, a in graph.assignments.items()
                  if a.ttl is not None and a.assigned_at + a.ttl <= now)


def reclassify_expired(graph: DynamicGraph, vocabulary: Vocabulary | None, config: WalkConfig,
                       rng: random.Random, now: int, *, mode: str = "batch") -> list[Assignment]:
    """Strip walk-derived labels whose lifetime ran out and classify those nodes again.

    Ground-truth labels are never touched. The renewed labels keep the
    lifetime they had before.
    """
    expired = expired_nodes(graph, now)
    if not expired:
        return []
    ttls = {v: graph.assignments[v].ttl for v in expired}
    for v in expired:
        graph.clear_label(v)
    if mode == "immediate":
        out = []
        for v in expired:
            out += classify_all(graph, vocabulary, config, rng, mode="immediate",
                                ttl=ttls[v], nodes=[v])
        return out
    out = classify_all(graph, vocabulary, config, rng, nodes=expired, apply=False)
    out = [Assignment(a.node, a.label, a.source, a.confidence, a.assigned_at, ttls[a.node]) for a in out]
    apply_assignments(graph, out)
    return out
