"""Mutable store for a partially labelled, text-attributed directed graph.

Node ids are dense integers handed out at insertion and never reused.
Every node also carries a string key (its external name, defaulting to
``str(node_id)``) so files and event streams can refer to it.

Edges are stored directed, with both out- and in-adjacency kept as
insertion-ordered sets. Walks see them through ``out_neighbors`` which
honours the graph's direction mode:

* ``"undirected"`` (default): out-neighbours followed by in-neighbours
* ``"out"``: out-neighbours only
"""
from __future__ import annotations

import re
from collections import Counter
from typing import TYPE_CHECKING, Iterable, Iterator

from .errors import NoLabeledNodes, UnknownEdge, UnknownNode

if TYPE_CHECKING:
    from .classifier import Assignment
    from .vocabulary import Vocabulary

DIRECTIONS = ("undirected", "out")

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str, min_length: int = 2) -> list[str]:
    """Lowercase *text*, split on non-alphanumerics, drop short tokens."""
    return [tok for tok in _TOKEN_RE.findall(text.lower()) if len(tok) >= min_length]


class DynamicGraph:
    """Directed graph with node labels, per-node word counts and a clock.

    ``revision`` is bumped by every mutation. ``clock`` is the logical
    time of the stream feeding the graph (set by event replay or by the
    caller through :meth:`advance_clock`); label lifetimes are measured
    against it.
    """

    def __init__(self, direction: str = "undirected") -> None:
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        self.direction = direction
        self.revision = 0
        self.clock = 0
        self._next_id = 0
        self._out: dict[int, dict[int, None]] = {}
        self._in: dict[int, dict[int, None]] = {}
        self._labels: dict[int, int] = {}
        self._texts: dict[int, Counter] = {}
        self._keys: dict[int, str] = {}
        self._by_key: dict[str, int] = {}
        self._label_names: list[str] = []
        self._label_ids: dict[str, int] = {}
        self._hist: list[int] = []
        self._nbr_cache: dict[int, tuple[int, ...]] = {}
        # walk-derived labels, keyed by node; ground-truth labels never appear here
        self.assignments: dict[int, Assignment] = {}
        self.vocabulary: Vocabulary | None = None

    # ---- label dictionary ------------------------------------------------

    def intern_label(self, name: str) -> int:
        """Return the id for label *name*, registering it if new."""
        lid = self._label_ids.get(name)
        if lid is None:
            lid = len(self._label_names)
            self._label_names.append(name)
            self._label_ids[name] = lid
            self._hist.append(0)
        return lid

    def label_name(self, label: int) -> str:
        return self._label_names[label]

    def label_id(self, name: str) -> int:
        return self._label_ids[name]

    @property
    def label_names(self) -> list[str]:
        return list(self._label_names)

    @property
    def num_labels(self) -> int:
        """Size of the label dictionary, i.e. |L_t|."""
        return len(self._label_names)

    # ---- mutation --------------------------------------------------------

    def add_node(self, label: int | None = None, key: str | None = None) -> int:
        node = self._next_id
        if key is None:
            key = str(node)
        if key in self._by_key:
            raise ValueError(f"duplicate node key {key!r}")
        if label is not None:
            self._check_label(label)
        self._next_id += 1
        self._out[node] = {}
        self._in[node] = {}
        self._keys[node] = key
        self._by_key[key] = node
        if label is not None:
            self._labels[node] = label
            self._hist[label] += 1
        self.revision += 1
        return node

    def add_edge(self, src: int, dst: int) -> None:
        self._require(src)
        self._require(dst)
        if dst in self._out[src]:
            return
        self._out[src][dst] = None
        self._in[dst][src] = None
        self._nbr_cache.pop(src, None)
        self._nbr_cache.pop(dst, None)
        self.revision += 1

    def remove_edge(self, src: int, dst: int) -> None:
        if src not in self._out or dst not in self._out[src]:
            raise UnknownEdge(src, dst)
        del self._out[src][dst]
        del self._in[dst][src]
        self._nbr_cache.pop(src, None)
        self._nbr_cache.pop(dst, None)
        self.revision += 1

    def remove_node(self, node: int) -> None:
        """Remove *node* with its edges, label, text and index entries."""
        self._require(node)
        for dst in self._out[node]:
            del self._in[dst][node]
            self._nbr_cache.pop(dst, None)
        for src in self._in[node]:
            if src != node:
                del self._out[src][node]
                self._nbr_cache.pop(src, None)
        del self._out[node]
        del self._in[node]
        self._nbr_cache.pop(node, None)
        label = self._labels.pop(node, None)
        if label is not None:
            self._hist[label] -= 1
        self._texts.pop(node, None)
        self.assignments.pop(node, None)
        del self._by_key[self._keys.pop(node)]
        if self.vocabulary is not None:
            self.vocabulary.discard_node(node)
        self.revision += 1

    def attach_text(self, node: int, tokens: Iterable[str]) -> None:
        """Merge *tokens* into the word multiset of *node*."""
        self._require(node)
        counts = Counter(tokens)
        if not counts:
            return
        bag = self._texts.get(node)
        if bag is None:
            self._texts[node] = counts
        else:
            bag.update(counts)
        self.revision += 1

    def set_label(self, node: int, label: int) -> None:
        """Assign a ground-truth label, replacing any previous one."""
        self._require(node)
        self._check_label(label)
        self._put_label(node, label)
        self.assignments.pop(node, None)
        self.revision += 1

    def clear_label(self, node: int) -> None:
        self._require(node)
        self._drop_label(node)
        self.assignments.pop(node, None)
        self.revision += 1

    def advance_clock(self, t: int) -> None:
        if t < self.clock:
            raise ValueError(f"clock cannot move backwards ({t} < {self.clock})")
        self.clock = t

    def _put_label(self, node: int, label: int) -> None:
        old = self._labels.get(node)
        if old is not None:
            self._hist[old] -= 1
        self._labels[node] = label
        self._hist[label] += 1

    def _drop_label(self, node: int) -> None:
        old = self._labels.pop(node, None)
        if old is not None:
            self._hist[old] -= 1

    # ---- queries ---------------------------------------------------------

    def __contains__(self, node: object) -> bool:
        return node in self._out

    def __len__(self) -> int:
        return len(self._out)

    def nodes(self) -> Iterator[int]:
        return iter(self._out)

    def edges(self) -> Iterator[tuple[int, int]]:
        for src, dsts in self._out.items():
            for dst in dsts:
                yield src, dst

    @property
    def num_edges(self) -> int:
        return sum(len(d) for d in self._out.values())

    def has_edge(self, src: int, dst: int) -> bool:
        return src in self._out and dst in self._out[src]

    def out_neighbors(self, node: int) -> tuple[int, ...]:
        """Traversal neighbours of *node* under the direction mode."""
        nbrs = self._nbr_cache.get(node)
        if nbrs is None:
            self._require(node)
            out = self._out[node]
            if self.direction == "out":
                nbrs = tuple(out)
            else:
                nbrs = tuple(out) + tuple(u for u in self._in[node] if u not in out)
            self._nbr_cache[node] = nbrs
        return nbrs

    def successors(self, node: int) -> list[int]:
        self._require(node)
        return list(self._out[node])

    def predecessors(self, node: int) -> list[int]:
        self._require(node)
        return list(self._in[node])

    def label_of(self, node: int) -> int | None:
        return self._labels.get(node)

    def is_labeled(self, node: int) -> bool:
        return node in self._labels

    def labeled_nodes(self) -> list[int]:
        """Labelled node ids in ascending order."""
        return sorted(self._labels)

    def unlabeled_nodes(self) -> list[int]:
        return [v for v in self._out if v not in self._labels]

    @property
    def num_labeled(self) -> int:
        return len(self._labels)

    def label_histogram(self) -> list[int]:
        return list(self._hist)

    def most_frequent_labels(self) -> set[int]:
        """All labels whose node count is maximal."""
        if not self._labels:
            raise NoLabeledNodes("graph has no labelled nodes")
        top = max(self._hist)
        return {lid for lid, c in enumerate(self._hist) if c == top}

    def text_of(self, node: int) -> Counter:
        """Word multiset of *node* (a copy; empty if no text)."""
        self._require(node)
        return Counter(self._texts.get(node, ()))

    def word_counts(self, node: int) -> Counter | None:
        """Live word multiset of *node* or ``None``; do not mutate."""
        return self._texts.get(node)

    def nodes_with_text(self) -> Iterator[int]:
        return iter(self._texts)

    def key_of(self, node: int) -> str:
        return self._keys[node]

    def node_by_key(self, key: str) -> int:
        try:
            return self._by_key[key]
        except KeyError:
            raise UnknownNode(key) from None

    def has_key(self, key: str) -> bool:
        return key in self._by_key

    # ---- comparison ------------------------------------------------------

    def canonical(self) -> dict:
        """Id-independent description of the graph, keyed by node key.

        Two graphs with equal ``canonical()`` hold the same nodes, edges,
        labels and texts, whatever order they were built in.
        """
        key = self._keys
        return {
            "direction": self.direction,
            "nodes": sorted(key.values()),
            "edges": sorted((key[s], key[d]) for s, d in self.edges()),
            "labels": {key[v]: self._label_names[l] for v, l in self._labels.items()},
            "texts": {key[v]: dict(sorted(c.items())) for v, c in self._texts.items()},
        }

    def state(self) -> dict:
        """Full internal state for field-by-field comparison (ids included)."""
        return {
            "direction": self.direction,
            "clock": self.clock,
            "next_id": self._next_id,
            "out": {v: list(d) for v, d in self._out.items()},
            "in": {v: list(d) for v, d in self._in.items()},
            "labels": dict(self._labels),
            "histogram": list(self._hist),
            "label_names": list(self._label_names),
            "texts": {v: dict(c) for v, c in self._texts.items()},
            "keys": dict(self._keys),
            "assignments": dict(self.assignments),
            "vocabulary": None if self.vocabulary is None else self.vocabulary.state(),
        }

    def check_invariants(self) -> None:
        """Assert the structural invariants; used by tests."""
        for src, dsts in self._out.items():
            for dst in dsts:
                assert dst in self._out, (src, dst)
                assert src in self._in[dst], (src, dst)
        for dst, srcs in self._in.items():
            for src in srcs:
                assert dst in self._out[src], (src, dst)
        assert set(self._labels) <= set(self._out)
        recount = [0] * len(self._label_names)
        for lid in self._labels.values():
            recount[lid] += 1
        assert recount == self._hist, (recount, self._hist)
        for bag in self._texts.values():
            assert all(c > 0 for c in bag.values())
        assert set(self.assignments) <= set(self._labels)

    # ---- helpers ---------------------------------------------------------

    def _require(self, node: int) -> None:
        if node not in self._out:
            raise UnknownNode(node)

    def _check_label(self, label: int) -> None:
        if not 0 <= label < len(self._label_names):
            raise ValueError(f"label id {label} not in label dictionary")
