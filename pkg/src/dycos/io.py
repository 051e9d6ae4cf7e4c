"""Reading TSV datasets and JSON-lines event streams.

A dataset directory holds up to four UTF-8, tab-separated files:

``edges.tsv``   ``from_id<TAB>to_id``
``labels.tsv``  ``node_id<TAB>label``
``texts.tsv``   ``node_id<TAB>raw text`` (several rows per node accumulate)
``nodes.tsv``   ``node_id`` (optional)

Without ``nodes.tsv`` every id mentioned in any file is a node. With it,
only the listed ids exist and references to anything else are errors.
Blank lines and lines starting with ``#`` are ignored.

An event stream has one JSON object per line::

    {"t": 1, "op": "add_node", "node": "v1", "label": "A"}
    {"t": 2, "op": "add_edge", "from": "v2", "to": "v1"}
    {"t": 2, "op": "attach_text", "node": "v2", "text": "graph mining"}
    {"t": 3, "op": "set_label", "node": "v2", "label": null}

``op`` is one of add_node, add_edge, remove_node, remove_edge,
attach_text (``text`` or ``tokens``) and set_label (``null`` clears).
"""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import OutOfOrderEvent, ParseError, UnknownNode
from .graph import DynamicGraph, tokenize

log = logging.getLogger(__name__)

EVENT_OPS = ("add_node", "add_edge", "remove_node", "remove_edge", "attach_text", "set_label")


def _rows(path: Path, width: int, maxsplit: int = -1) -> Iterator[tuple[int, list[str] | ParseError]]:
    """Yield (line number, fields) or (line number, ParseError) per data line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t", maxsplit)
            if len(fields) != width:
                yield lineno, ParseError(str(path), lineno,
                                         f"expected {width} tab-separated fields, got {len(fields)}")
                continue
            # with a maxsplit the last field is free text and kept verbatim
            n_ids = width if maxsplit < 0 else width - 1
            ids = [f.strip() for f in fields[:n_ids]]
            if not all(ids):
                yield lineno, ParseError(str(path), lineno, "empty field")
                continue
            yield lineno, ids + fields[n_ids:]


def load_dataset(directory: str | os.PathLike | None = None, *, edges=None, labels=None, texts=None,
                 nodes=None, direction: str = "undirected",
                 tokenizer: Callable[[str], list[str]] = tokenize,
                 errors: list[ParseError] | None = None) -> DynamicGraph:
    """Build a graph from TSV files.

    Files default to the standard names inside *directory*; missing ones are
    skipped. Bad rows raise :class:`ParseError`, unless an *errors* list is
    given, in which case they are collected there and skipped.
    """
    def pick(explicit, name):
        if explicit is not None:
            return Path(explicit)
        if directory is not None and (Path(directory) / name).exists():
            return Path(directory) / name
        return None

    paths = {
        "nodes": pick(nodes, "nodes.tsv"),
        "labels": pick(labels, "labels.tsv"),
        "texts": pick(texts, "texts.tsv"),
        "edges": pick(edges, "edges.tsv"),
    }
    for p in paths.values():
        if p is not None and not p.exists():
            raise FileNotFoundError(p)

    graph = DynamicGraph(direction=direction)
    closed = paths["nodes"] is not None

    def reject(err: ParseError) -> None:
        if errors is None:
            raise err
        log.warning("%s", err)
        errors.append(err)

    def rows(kind, width, maxsplit=-1):
        path = paths[kind]
        if path is None:
            return
        for lineno, fields in _rows(path, width, maxsplit):
            if isinstance(fields, ParseError):
                reject(fields)
            else:
                yield path, lineno, fields

    def node(key, path, lineno):
        if graph.has_key(key):
            return graph.node_by_key(key)
        if closed:
            reject(ParseError(str(path), lineno, f"unknown node {key!r}"))
            return None
        return graph.add_node(key=key)

    for path, lineno, (key,) in rows("nodes", 1):
        if graph.has_key(key):
            reject(ParseError(str(path), lineno, f"duplicate node {key!r}"))
            continue
        graph.add_node(key=key)

    for path, lineno, (key, name) in rows("labels", 2):
        v = node(key, path, lineno)
        if v is None:
            continue
        lid = graph.intern_label(name)
        old = graph.label_of(v)
        if old is not None and old != lid:
            reject(ParseError(str(path), lineno, f"conflicting label for node {key!r}"))
            continue
        graph.set_label(v, lid)

    for path, lineno, (key, text) in rows("texts", 2, 1):
        v = node(key, path, lineno)
        if v is not None:
            graph.attach_text(v, tokenizer(text))

    for path, lineno, (src, dst) in rows("edges", 2):
        u = node(src, path, lineno)
        w = node(dst, path, lineno)
        if u is not None and w is not None:
            graph.add_edge(u, w)
    return graph


def read_events(path: str | os.PathLike) -> Iterator[dict]:
    """Parse a JSON-lines event file; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(event, dict):
                raise ParseError(str(path), lineno, "event must be a JSON object")
            event["_line"] = lineno
            yield event


def write_events(path: str | os.PathLike, events: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps({k: v for k, v in event.items() if k != "_line"}, ensure_ascii=False))
            fh.write("\n")


def _field(event: dict, name: str):
    try:
        return event[name]
    except KeyError:
        raise ParseError("<events>", event.get("_line", 0), f"event {event.get('op')!r} lacks {name!r}") from None


def apply_event(graph: DynamicGraph, event: dict, tokenizer: Callable[[str], list[str]] = tokenize) -> None:
    """Apply one event to *graph* (the clock is not touched)."""
    op = event.get("op")
    if op == "add_node":
        key = str(_field(event, "node"))
        label = event.get("label")
        graph.add_node(None if label is None else graph.intern_label(str(label)), key=key)
    elif op == "add_edge":
        graph.add_edge(graph.node_by_key(str(_field(event, "from"))),
                       graph.node_by_key(str(_field(event, "to"))))
    elif op == "remove_edge":
        graph.remove_edge(graph.node_by_key(str(_field(event, "from"))),
                          graph.node_by_key(str(_field(event, "to"))))
    elif op == "remove_node":
        graph.remove_node(graph.node_by_key(str(_field(event, "node"))))
    elif op == "attach_text":
        v = graph.node_by_key(str(_field(event, "node")))
        if "tokens" in event:
            graph.attach_text(v, [str(t) for t in event["tokens"]])
        else:
            graph.attach_text(v, tokenizer(str(_field(event, "text"))))
    elif op == "set_label":
        v = graph.node_by_key(str(_field(event, "node")))
        label = _field(event, "label")
        if label is None:
            graph.clear_label(v)
        else:
            graph.set_label(v, graph.intern_label(str(label)))
    else:
        raise ParseError("<events>", event.get("_line", 0), f"unknown op {op!r}")


def replay_events(events: Iterable[dict] | str | os.PathLike, *, direction: str = "undirected",
                  checkpoints: Iterable[int] = (),
                  on_checkpoint: Callable[[DynamicGraph, int], None] | None = None,
                  tokenizer: Callable[[str], list[str]] = tokenize) -> DynamicGraph:
    """Build a graph by applying *events* in order.

    ``on_checkpoint(graph, t)`` runs for every checkpoint ``t`` once all
    events with time <= ``t`` are applied, with ``graph.clock == t``.
    """
    if isinstance(events, (str, os.PathLike)):
        events = read_events(events)
    pending = sorted(set(checkpoints))
    graph = DynamicGraph(direction=direction)
    last = None

    def fire_until(t):
        while pending and pending[0] < t:
            cp = pending.pop(0)
            graph.advance_clock(max(cp, graph.clock))
            if on_checkpoint is not None:
                on_checkpoint(graph, cp)

    for event in events:
        t = event.get("t")
        if not isinstance(t, int) or isinstance(t, bool):
            raise ParseError("<events>", event.get("_line", 0), "event needs an integer 't'")
        if last is not None and t < last:
            raise OutOfOrderEvent(f"event at t={t} after t={last} (line {event.get('_line', '?')})")
        fire_until(t)
        last = t
        graph.advance_clock(t)
        try:
            apply_event(graph, event, tokenizer)
        except UnknownNode as exc:
            log.error("event on line %s references unknown node %r", event.get("_line", "?"), exc.node)
            raise
    fire_until(float("inf"))
    return graph


def dump_events(graph: DynamicGraph) -> list[dict]:
    """Event stream that rebuilds *graph* (up to node ids) when replayed."""
    t = graph.clock
    out = []
    for v in graph.nodes():
        event = {"t": t, "op": "add_node", "node": graph.key_of(v)}
        label = graph.label_of(v)
        if label is not None:
            event["label"] = graph.label_name(label)
        out.append(event)
    for v in graph.nodes():
        bag = graph.word_counts(v)
        if bag:
            tokens = [w for w in sorted(bag) for _ in range(bag[w])]
            out.append({"t": t, "op": "attach_text", "node": graph.key_of(v), "tokens": tokens})
    for src, dst in graph.edges():
        out.append({"t": t, "op": "add_edge", "from": graph.key_of(src), "to": graph.key_of(dst)})
    return out
