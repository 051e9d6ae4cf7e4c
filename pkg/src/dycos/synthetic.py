"""Seeded planted-partition graphs with community-specific vocabularies.

Nodes are split into equal communities. Each unordered node pair is
joined with probability ``p_intra`` inside a community and ``p_inter``
across communities; the edge gets a random direction. Every node gets a
text of ``text_length`` words, each drawn from the community's own words
with probability ``purity`` and from a pool shared by all communities
otherwise. A fixed number of nodes per community keep their label.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .graph import DynamicGraph

# all-pairs Bernoulli sampling below this many pairs, rejection sampling above
_DENSE_PAIRS = 2_000_000


@dataclass(frozen=True)
class SyntheticSpec:
    communities: int = 2
    nodes_per_community: int = 100
    labeled_fraction: float = 0.2
    p_intra: float = 0.1
    p_inter: float = 0.01
    words_per_community: int = 20
    shared_words: int = 30
    text_length: int = 20
    purity: float = 0.7
    seed: int = 0

    def labeled_per_community(self) -> int:
        return int(round(self.labeled_fraction * self.nodes_per_community))

    def validate(self) -> None:
        if self.communities < 2:
            raise InvalidSpec("need at least two communities")
        if self.nodes_per_community < 1:
            raise InvalidSpec("nodes_per_community must be >= 1")
        if not 0 < self.labeled_fraction < 1:
            raise InvalidSpec("labeled_fraction must lie in (0, 1)")
        if self.labeled_per_community() < 1:
            raise InvalidSpec("labeled_fraction leaves a community without labelled nodes")
        if not 1 >= self.p_intra > self.p_inter > 0:
            raise InvalidSpec("need 1 >= p_intra > p_inter > 0")
        if self.words_per_community < 1 or self.text_length < 1 or self.shared_words < 0:
            raise InvalidSpec("word counts must be positive")
        if not 0 < self.purity <= 1:
            raise InvalidSpec("purity must lie in (0, 1]")
        if self.purity < 1 and self.shared_words == 0:
            raise InvalidSpec("purity < 1 needs shared words")


@dataclass
class SyntheticData:
    spec: SyntheticSpec
    community: np.ndarray      # ground-truth community per node
    labeled: np.ndarray        # bool mask of nodes whose label is visible
    edges: np.ndarray          # (E, 2) int array, directed
    texts: list[str]

    @property
    def num_nodes(self) -> int:
        return len(self.community)

    def label_name(self, c: int) -> str:
        return f"c{c}"


def community_word(c: int, j: int) -> str:
    return f"c{c}w{j}"


def shared_word(j: int) -> str:
    return f"common{j}"


def _sample_pairs(rng: np.random.Generator, n_a: int, n_b: int, p: float, same: bool) -> np.ndarray:
    """Independent Bernoulli(p) pairs of a block; rows (i, j) local indices."""
    total = n_a * (n_a - 1) // 2 if same else n_a * n_b
    if total == 0:
        return np.empty((0, 2), dtype=np.int64)
    if total <= _DENSE_PAIRS:
        if same:
            i, j = np.triu_indices(n_a, k=1)
        else:
            i, j = np.divmod(np.arange(total, dtype=np.int64), n_b)
        keep = rng.random(total) < p
        return np.stack([i[keep], j[keep]], axis=1).astype(np.int64)
    # G(n, p) is G(n, M) with M ~ Binomial(pairs, p); draw M distinct pairs
    m = int(rng.binomial(total, p))
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < m:
        need = m - len(keys)
        i = rng.integers(0, n_a, size=need * 2)
        j = rng.integers(0, n_b if not same else n_a, size=need * 2)
        if same:
            ok = i != j
            i, j = np.minimum(i[ok], j[ok]), np.maximum(i[ok], j[ok])
            new = i * n_a + j
        else:
            new = i * n_b + j
        # keep first occurrences in draw order so the result does not depend on sorting
        merged = np.concatenate([keys, new])
        _, first = np.unique(merged, return_index=True)
        keys = merged[np.sort(first)][:m]
    width = n_a if same else n_b
    return np.stack(np.divmod(keys, width), axis=1)


def generate(spec: SyntheticSpec) -> SyntheticData:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    k, n = spec.communities, spec.nodes_per_community
    community = np.repeat(np.arange(k), n)

    labeled = np.zeros(k * n, dtype=bool)
    per = spec.labeled_per_community()
    for c in range(k):
        labeled[c * n + rng.choice(n, size=per, replace=False)] = True

    blocks = []
    for a in range(k):
        for b in range(a, k):
            same = a == b
            pairs = _sample_pairs(rng, n, n, spec.p_intra if same else spec.p_inter, same)
            blocks.append(pairs + np.array([a * n, b * n]))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    flip = rng.random(len(edges)) < 0.5
    edges[flip] = edges[flip][:, ::-1]

    own = rng.random((k * n, spec.text_length)) < spec.purity
    own_idx = rng.integers(0, spec.words_per_community, size=(k * n, spec.text_length))
    shared_idx = rng.integers(0, max(spec.shared_words, 1), size=(k * n, spec.text_length))
    texts = []
    for v in range(k * n):
        c = int(community[v])
        texts.append(" ".join(
            community_word(c, int(oi)) if o else shared_word(int(si))
            for o, oi, si in zip(own[v], own_idx[v], shared_idx[v])
        ))
    return SyntheticData(spec, community, labeled, edges, texts)


def to_graph(data: SyntheticData, direction: str = "undirected") -> tuple[DynamicGraph, dict[int, int]]:
    """Build the graph directly; returns it with the hidden ground truth (node -> label id)."""
    graph = DynamicGraph(direction=direction)
    lids = [graph.intern_label(data.label_name(c)) for c in range(data.spec.communities)]
    truth = {}
    for v in range(data.num_nodes):
        c = int(data.community[v])
        node = graph.add_node(lids[c] if data.labeled[v] else None)
        truth[node] = lids[c]
        graph.attach_text(node, data.texts[v].split())
    for u, w in data.edges.tolist():
        graph.add_edge(u, w)
    return graph, truth


def write_dataset(data: SyntheticData, directory: str | os.PathLike) -> None:
    """Write edges/labels/texts TSVs plus ``truth.tsv`` with every node's community."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "labels.tsv", "w", encoding="utf-8") as fh:
        for v in np.flatnonzero(data.labeled):
            fh.write(f"{v}\t{data.label_name(int(data.community[v]))}\n")
    with open(out / "texts.tsv", "w", encoding="utf-8") as fh:
        for v, text in enumerate(data.texts):
            fh.write(f"{v}\t{text}\n")
    with open(out / "edges.tsv", "w", encoding="utf-8") as fh:
        for u, w in data.edges.tolist():
            fh.write(f"{u}\t{w}\n")
    with open(out / "nodes.tsv", "w", encoding="utf-8") as fh:
        for v in range(data.num_nodes):
            fh.write(f"{v}\n")
    with open(out / "truth.tsv", "w", encoding="utf-8") as fh:
        for v in range(data.num_nodes):
            fh.write(f"{v}\t{data.label_name(int(data.community[v]))}\n")
