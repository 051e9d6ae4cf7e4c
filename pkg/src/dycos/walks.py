"""Single hops over the word-extended graph.

Two hop kinds exist: a structural hop moves to a uniformly chosen
traversal neighbour; a content two-hop goes node -> word -> node, limited
to the ``q`` nodes joined to the start by the most such paths and drawn
in proportion to the path count.
"""
from __future__ import annotations

import random
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass

from .errors import DeadEnd, NoContentPath, UnknownNode
from .graph import DynamicGraph
from .vocabulary import Vocabulary

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class WalkConfig:
    walks: int = 10          # r
    length: int = 5          # l
    p_structural: float = 0.5
    top_q: int = 10

    def __post_init__(self):
        if self.walks < 1 or self.length < 1 or self.top_q < 1:
            raise ValueError("walks, length and top_q must be >= 1")
        if not 0.0 <= self.p_structural <= 1.0:
            raise ValueError("p_structural must lie in [0, 1]")


def derive_seed(seed: int, *keys: int) -> int:
    """Mix *keys* into *seed* with splitmix64; stable across runs and platforms."""
    x = seed & _MASK64
    for k in keys:
        x = (x ^ (k & _MASK64)) + 0x9E3779B97F4A7C15 & _MASK64
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
        x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
        x ^= x >> 31
    return x


def derive_rng(seed: int, *keys: int) -> random.Random:
    return random.Random(derive_seed(seed, *keys))


def structural_hop(graph: DynamicGraph, v: int, rng: random.Random) -> int:
    nbrs = graph.out_neighbors(v)
    if not nbrs:
        raise DeadEnd(v)
    return nbrs[rng.randrange(len(nbrs))]


def two_hop_path_counts(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int) -> dict[int, int]:
    """Number of node -> word -> node paths from *v* to every reachable node.

    Direct enumeration over the inverted lists; *v* itself is included.
    """
    if v not in graph:
        raise UnknownNode(v)
    counts: Counter = Counter()
    if vocabulary is None:
        return {}
    for word in vocabulary.words_of(v):
        counts.update(vocabulary.inverted_list(word))
    return dict(counts)


def top_q(counts: dict[int, int], q: int) -> list[tuple[int, int]]:
    """The *q* largest entries, ties broken by ascending node id."""
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:q]


def candidate_set(vocabulary: Vocabulary | None, v: int, q: int) -> list[tuple[int, int]]:
    if vocabulary is None:
        return []
    nodes, counts, _ = vocabulary.candidates(v, q)
    return list(zip(nodes, counts))


def content_two_hop(graph: DynamicGraph, vocabulary: Vocabulary | None, v: int, q: int,
                    rng: random.Random) -> int:
    if v not in graph:
        raise UnknownNode(v)
    if vocabulary is None:
        raise NoContentPath(v)
    nodes, _, cum = vocabulary.candidates(v, q)
    if not nodes:
        raise NoContentPath(v)
    return nodes[bisect_right(cum, rng.randrange(cum[-1]))]
