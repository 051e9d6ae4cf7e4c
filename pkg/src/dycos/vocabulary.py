"""Gini-based vocabulary selection and the word-node inverted index.

The vocabulary is the set of ``m`` words whose label distribution over a
sample of labelled nodes is most concentrated. Each selected word
becomes a word node linked to every structural node whose text contains
it; those links are kept as inverted lists.

Besides the inverted lists the vocabulary keeps, per node, a bitmask of
the vocabulary words it contains. Two nodes are joined by exactly
``popcount(mask_a & mask_b)`` structural-word-structural paths, which
lets content hops be answered per distinct mask instead of per node.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import nsmallest
from itertools import chain

from .errors import EmptyCorpus, NoLabeledNodes, ZeroTotal
from .graph import DynamicGraph


@dataclass
class WordStats:
    word: str
    per_label_counts: list[int]

    @property
    def total(self) -> int:
        return sum(self.per_label_counts)


@dataclass
class VocabularyConfig:
    m: int = 10
    sample_size: int | None = None  # None: use every labelled node
    rng_seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.sample_size is not None and self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")


@dataclass
class VocabEntry:
    gini: float
    total: int
    nodes: set[int] = field(default_factory=set)


def sample_labeled_nodes(graph: DynamicGraph, sample_size: int, rng: random.Random) -> set[int]:
    """Uniform sample without replacement of labelled nodes (Algorithm R)."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    stream = graph.labeled_nodes()
    if not stream:
        raise NoLabeledNodes("cannot sample from an empty labelled set")
    reservoir = stream[:sample_size]
    for i in range(sample_size, len(stream)):
        j = rng.randrange(i + 1)
        if j < sample_size:
            reservoir[j] = stream[i]
    return set(reservoir)


def compute_gini(stats: WordStats) -> float:
    """Sum of squared per-label relative frequencies of a word.

    Ranges from 1/len(counts) (uniform) to 1 (word seen under one label).
    """
    total = stats.total
    if total <= 0:
        raise ZeroTotal(f"word {stats.word!r} has no occurrences")
    # one correctly rounded division, so equal ratios give equal floats
    return sum(c * c for c in stats.per_label_counts) / (total * total)


def word_label_counts(graph: DynamicGraph, nodes) -> dict[str, list[int]]:
    """Per-label occurrence counts of every word in the texts of *nodes*."""
    num_labels = graph.num_labels
    counts: dict[str, list[int]] = {}
    for v in nodes:
        label = graph.label_of(v)
        bag = graph.word_counts(v)
        if label is None or not bag:
            continue
        for word, c in bag.items():
            row = counts.get(word)
            if row is None:
                row = counts[word] = [0] * num_labels
            row[label] += c
    return counts


def rank_words(stats: list[WordStats]) -> list[tuple[WordStats, float]]:
    """Sort by Gini desc, then total count desc, then word asc.

    The order uses the exact rational Gini so that ties are real ties.
    """
    def key(s: WordStats):
        exact = Fraction(sum(c * c for c in s.per_label_counts), s.total * s.total)
        return (-exact, -s.total, s.word)

    return [(s, compute_gini(s)) for s in sorted(stats, key=key)]


class Vocabulary:
    """Selected words with their Gini scores and inverted node lists."""

    def __init__(self, words: list[tuple[str, float, int]], built_at: int = 0) -> None:
        # words: (word, gini, total) in rank order
        self.words = [w for w, _, _ in words]
        self.entries = {w: VocabEntry(g, t) for w, g, t in words}
        self._bit = {w: 1 << i for i, w in enumerate(self.words)}
        self.built_at = built_at
        self._masks: dict[int, int] = {}
        self._groups: dict[int, list[int]] | None = None
        self._cand_cache: dict[tuple[int, int], tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]] = {}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.entries

    def gini(self, word: str) -> float:
        return self.entries[word].gini

    def inverted_list(self, word: str) -> set[int]:
        return self.entries[word].nodes

    def words_of(self, node: int) -> list[str]:
        """Vocabulary words contained in the text of *node*, in rank order."""
        mask = self._masks.get(node, 0)
        return [w for w in self.words if mask & self._bit[w]]

    def mask_of(self, node: int) -> int:
        return self._masks.get(node, 0)

    # ---- index maintenance ------------------------------------------------

    def reindex(self, graph: DynamicGraph) -> None:
        for entry in self.entries.values():
            entry.nodes = set()
        masks: dict[int, int] = {}
        bit = self._bit
        entries = self.entries
        for v in graph.nodes_with_text():
            mask = 0
            for word in graph.word_counts(v):
                b = bit.get(word)
                if b is not None:
                    entries[word].nodes.add(v)
                    mask |= b
            if mask:
                masks[v] = mask
        self._masks = masks
        self._invalidate()

    def discard_node(self, node: int) -> None:
        mask = self._masks.pop(node, 0)
        if not mask:
            return
        for entry in self.entries.values():
            entry.nodes.discard(node)
        self._invalidate()

    def _invalidate(self) -> None:
        self._groups = None
        self._cand_cache.clear()

    def _mask_groups(self) -> dict[int, list[int]]:
        if self._groups is None:
            groups: dict[int, list[int]] = {}
            for v, mask in self._masks.items():
                groups.setdefault(mask, []).append(v)
            for ids in groups.values():
                ids.sort()
            self._groups = groups
        return self._groups

    def candidates(self, node: int, q: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        """Top-*q* two-hop targets of *node* as (nodes, path counts, cumulative counts).

        Ordered by path count descending, then node id ascending. Cached per
        (word mask, q) since every node with the same mask sees the same set.
        """
        mask = self._masks.get(node, 0)
        if not mask:
            return (), (), ()
        key = (mask, q)
        hit = self._cand_cache.get(key)
        if hit is not None:
            return hit
        levels: dict[int, list[list[int]]] = {}
        for other, ids in self._mask_groups().items():
            c = (mask & other).bit_count()
            if c:
                levels.setdefault(c, []).append(ids)
        nodes: list[int] = []
        counts: list[int] = []
        for c in sorted(levels, reverse=True):
            need = q - len(nodes)
            if need <= 0:
                break
            best = nsmallest(need, chain.from_iterable(ids[:need] for ids in levels[c]))
            nodes.extend(best)
            counts.extend([c] * len(best))
        cum = []
        s = 0
        for c in counts:
            s += c
            cum.append(s)
        hit = (tuple(nodes), tuple(counts), tuple(cum))
        self._cand_cache[key] = hit
        return hit

    def state(self) -> dict:
        return {
            "built_at": self.built_at,
            "entries": {w: (e.gini, e.total, sorted(e.nodes)) for w, e in self.entries.items()},
            "words": list(self.words),
        }


def build_vocabulary(graph: DynamicGraph, config: VocabularyConfig, install: bool = True) -> Vocabulary:
    """Pick the top-``m`` words by Gini over a sample of labelled nodes.

    The inverted lists span every node of the graph, not only the sample.
    With *install* the result replaces ``graph.vocabulary``.
    """
    if graph.num_labeled == 0:
        raise NoLabeledNodes("vocabulary needs labelled nodes")
    size = config.sample_size or graph.num_labeled
    sample = sample_labeled_nodes(graph, size, random.Random(config.rng_seed))
    counts = word_label_counts(graph, sorted(sample))
    if not counts:
        raise EmptyCorpus("no sampled labelled node has text")
    ranked = rank_words([WordStats(w, row) for w, row in counts.items()])
    top = [(s.word, g, s.total) for s, g in ranked[: config.m]]
    vocab = Vocabulary(top, built_at=graph.revision)
    vocab.reindex(graph)
    if install:
        graph.vocabulary = vocab
    return vocab


def rebuild_inverted_index(graph: DynamicGraph, vocabulary: Vocabulary) -> None:
    """Recompute the word-node links of *vocabulary* from current texts."""
    vocabulary.reindex(graph)
