"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .classifier import Assignment, HopStats, classify_all, reclassify_expired
from .errors import DycosError
from .evaluation import bound_table, cross_validate, make_folds
from .graph import DIRECTIONS, DynamicGraph
from .io import dump_events, load_dataset, replay_events, write_events
from .synthetic import SyntheticSpec, generate, write_dataset
from .vocabulary import VocabularyConfig, build_vocabulary
from .walks import WalkConfig, derive_rng, derive_seed

SCHEMA = 1
EXIT_USAGE = 1
EXIT_DATA = 2

log = logging.getLogger("dycos")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _default_seed() -> int:
    env = os.environ.get("DYCOS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DYCOS_SEED must be an integer, got {env!r}") from None


def _add_input(p):
    g = p.add_argument_group("input (exactly one source)")
    g.add_argument("--data", metavar="DIR", help="directory with edges.tsv, labels.tsv, texts.tsv")
    g.add_argument("--events", metavar="FILE", help="JSON-lines event stream")
    p.add_argument("--direction", choices=DIRECTIONS, default="undirected",
                   help="edge traversal mode (default: undirected)")


def _add_vocab(p):
    p.add_argument("--vocab-size", type=int, default=10, metavar="M")
    p.add_argument("--vocab-sample-size", type=int, default=None, metavar="N",
                   help="labelled nodes sampled for word statistics (default: all)")


def _add_walk(p):
    p.add_argument("--ps", type=float, default=0.5, help="structural hop probability")
    p.add_argument("--walks", type=int, default=10, metavar="R")
    p.add_argument("--walk-length", type=int, default=5, metavar="L")
    p.add_argument("--top-q", type=int, default=10, metavar="Q")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $DYCOS_SEED or 0)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for classification")
    p.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dycos", description="Random-walk node classification on text-attributed graphs.")
    parser.add_argument("--version", action="version", version=f"dycos {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("load-check", help="parse a dataset and report its size")
    _add_input(p)

    p = sub.add_parser("vocab", help="vocabulary tools")
    p.add_argument("action", choices=["dump"], help="dump: print word, gini, document frequency")
    _add_input(p)
    _add_vocab(p)
    _add_common(p)

    p = sub.add_parser("classify", help="label every unlabelled node")
    _add_input(p)
    _add_vocab(p)
    _add_walk(p)
    _add_common(p)
    p.add_argument("--mode", choices=("batch", "immediate"), default="batch")
    p.add_argument("--ttl", type=int, default=None, help="lifetime of walk-derived labels")

    p = sub.add_parser("evaluate", help="k-fold cross-validation over labelled nodes")
    _add_input(p)
    _add_vocab(p)
    _add_walk(p)
    _add_common(p)
    p.add_argument("--folds", type=int, default=10, metavar="K")

    p = sub.add_parser("bound", help="tabulate the misclassification bound")
    p.add_argument("--labels", type=int, required=True, help="number of labels")
    p.add_argument("--b", type=_float_list, default=[0.05, 0.1, 0.2, 0.3, 0.5], metavar="B1,B2,...")
    p.add_argument("--l", type=_int_list, default=[5, 10, 50, 100, 1000], metavar="L1,L2,...")

    p = sub.add_parser("synth", help="write a planted-community dataset")
    d = SyntheticSpec()
    p.add_argument("--communities", type=int, default=d.communities)
    p.add_argument("--nodes-per-community", type=int, default=d.nodes_per_community)
    p.add_argument("--labeled-fraction", type=float, default=d.labeled_fraction)
    p.add_argument("--p-intra", type=float, default=d.p_intra)
    p.add_argument("--p-inter", type=float, default=d.p_inter)
    p.add_argument("--words-per-community", type=int, default=d.words_per_community)
    p.add_argument("--shared-words", type=int, default=d.shared_words)
    p.add_argument("--text-length", type=int, default=d.text_length)
    p.add_argument("--purity", type=float, default=d.purity)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", metavar="DIR", required=True)

    p = sub.add_parser("replay", help="replay an event stream, classifying at checkpoints")
    p.add_argument("--events", metavar="FILE", required=True)
    p.add_argument("--direction", choices=DIRECTIONS, default="undirected")
    p.add_argument("--classify-at", type=_int_list, default=[], metavar="T1,T2,...")
    p.add_argument("--dump", metavar="FILE", help="write the final graph as an event stream")
    _add_vocab(p)
    _add_walk(p)
    _add_common(p)
    p.add_argument("--mode", choices=("batch", "immediate"), default="batch")
    p.add_argument("--ttl", type=int, default=None)
    return parser


# ---- helpers ------------------------------------------------------------------


def _load(args) -> DynamicGraph:
    if bool(args.data) == bool(args.events):
        raise UsageError("give exactly one of --data or --events")
    if args.data:
        if not Path(args.data).is_dir():
            raise UsageError(f"--data {args.data!r} is not a directory")
        return load_dataset(args.data, direction=args.direction)
    if not Path(args.events).is_file():
        raise UsageError(f"--events {args.events!r} does not exist")
    return replay_events(args.events, direction=args.direction)


def _configs(args, seed):
    try:
        vconf = VocabularyConfig(args.vocab_size, args.vocab_sample_size, derive_seed(seed, 1))
        wconf = None
        if hasattr(args, "ps"):
            wconf = WalkConfig(args.walks, args.walk_length, args.ps, args.top_q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return vconf, wconf


def _vocabulary(graph, vconf):
    if not any(graph.word_counts(v) for v in graph.labeled_nodes()):
        log.info("no labelled node has text; running without content hops")
        return None
    return build_vocabulary(graph, vconf)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_assignments(fh, graph: DynamicGraph, assignments: list[Assignment]) -> None:
    for a in sorted(assignments, key=lambda a: a.node):
        fh.write(f"{graph.key_of(a.node)}\t{graph.label_name(a.label)}\t{a.confidence:.6f}\t{a.source.value}\n")


def _summary(graph: DynamicGraph) -> dict:
    return {
        "nodes": len(graph),
        "edges": graph.num_edges,
        "labeled": graph.num_labeled,
        "labels": graph.num_labels,
        "nodes_with_text": sum(1 for _ in graph.nodes_with_text()),
        "clock": graph.clock,
    }


def _config_dict(args, seed, vconf, wconf) -> dict:
    cfg = {"seed": seed, "direction": args.direction,
           "vocab": {"m": vconf.m, "sample_size": vconf.sample_size}}
    if wconf is not None:
        cfg["walk"] = asdict(wconf)
    for name in ("mode", "ttl", "folds"):
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
    return cfg


# ---- commands -----------------------------------------------------------------


def cmd_load_check(args) -> int:
    if bool(args.data) == bool(args.events):
        raise UsageError("give exactly one of --data or --events")
    errors = []
    if args.data:
        graph = load_dataset(args.data, direction=args.direction, errors=errors)
    else:
        graph = replay_events(args.events, direction=args.direction)
    summary = _summary(graph)
    summary["rejected_rows"] = [{"file": e.path, "line": e.line, "reason": e.reason} for e in errors]
    print(json.dumps(summary, indent=2))
    return EXIT_DATA if errors else 0


def cmd_vocab(args, seed) -> int:
    graph = _load(args)
    vconf, _ = _configs(args, seed)
    vocab = build_vocabulary(graph, vconf)
    lines = [f"{w}\t{vocab.gini(w):.6f}\t{len(vocab.inverted_list(w))}" for w in vocab.words]
    out = _out_dir(args)
    text = "".join(line + "\n" for line in lines)
    if out is not None:
        (out / "vocab.tsv").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_classify(args, seed) -> int:
    graph = _load(args)
    vconf, wconf = _configs(args, seed)
    vocab = _vocabulary(graph, vconf)
    stats = HopStats()
    started = time.perf_counter()
    assignments = classify_all(graph, vocab, wconf, derive_rng(seed, 2), mode=args.mode,
                               ttl=args.ttl, workers=args.threads, stats=stats)
    elapsed = time.perf_counter() - started
    report = {
        "schema": SCHEMA,
        "command": "classify",
        "config": _config_dict(args, seed, vconf, wconf),
        "graph": _summary(graph),
        "vocabulary": None if vocab is None else [[w, vocab.gini(w)] for w in vocab.words],
        "assigned": len(assignments),
        "by_source": {s: sum(1 for a in assignments if a.source.value == s)
                      for s in ("walk_majority", "global_fallback")},
        "hops": asdict(stats),
    }
    out = _out_dir(args)
    if out is not None:
        with open(out / "assignments.tsv", "w", encoding="utf-8") as fh:
            _write_assignments(fh, graph, assignments)
        _write_json(out / "report.json", report)
        _write_json(out / "timings.json", {"classify_seconds": elapsed})
    else:
        _write_assignments(sys.stdout, graph, assignments)
    log.info("classified %d nodes in %.2fs", len(assignments), elapsed)
    return 0


def cmd_evaluate(args, seed) -> int:
    graph = _load(args)
    vconf, wconf = _configs(args, seed)
    plan = make_folds(graph, args.folds, derive_rng(seed, 3))
    report = cross_validate(graph, vconf, wconf, plan, workers=args.threads)
    payload = {
        "schema": SCHEMA,
        "command": "evaluate",
        "config": _config_dict(args, seed, vconf, wconf),
        "graph": _summary(graph),
        **report.to_dict(),
    }
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "report.json", payload)
        with open(out / "folds.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["fold", "size", "accuracy"])
            for i, (size, acc) in enumerate(zip(report.fold_sizes, report.per_fold_accuracy)):
                w.writerow([i, size, f"{acc:.6f}"])
        _write_json(out / "timings.json", {"fold_seconds": report.wall_time})
    print(f"mean accuracy {report.mean_accuracy:.4f} (sd {report.stddev:.4f}) over {plan.k} folds")
    return 0


def cmd_bound(args) -> int:
    if args.labels < 1 or any(not 0 < b <= 1 for b in args.b) or any(l < 1 for l in args.l):
        raise UsageError("need --labels >= 1, b in (0, 1], l >= 1")
    print("b\tl\tlabels\tbound")
    for row in bound_table(args.b, args.l, args.labels):
        print(f"{row['b']}\t{row['l']}\t{row['labels']}\t{row['bound']:.6g}")
    return 0


def cmd_synth(args, seed) -> int:
    spec = SyntheticSpec(args.communities, args.nodes_per_community, args.labeled_fraction,
                         args.p_intra, args.p_inter, args.words_per_community, args.shared_words,
                         args.text_length, args.purity, seed)
    try:
        spec.validate()
    except DycosError as exc:
        raise UsageError(str(exc)) from None
    data = generate(spec)
    write_dataset(data, args.out)
    print(json.dumps({"nodes": data.num_nodes, "edges": len(data.edges),
                      "labeled": int(data.labeled.sum()), "out": args.out}))
    return 0


def cmd_replay(args, seed) -> int:
    if not Path(args.events).is_file():
        raise UsageError(f"--events {args.events!r} does not exist")
    vconf, wconf = _configs(args, seed)
    rng = derive_rng(seed, 4)
    log_rows = []

    def checkpoint(graph, t):
        if graph.num_labeled == 0:
            log.warning("t=%d: no labelled nodes, skipping classification", t)
            return
        vocab = _vocabulary(graph, vconf)
        renewed = reclassify_expired(graph, vocab, wconf, rng, t, mode=args.mode)
        fresh = classify_all(graph, vocab, wconf, rng, mode=args.mode, ttl=args.ttl, workers=args.threads)
        for a in renewed + fresh:
            log_rows.append((t, graph.key_of(a.node), graph.label_name(a.label), a.confidence, a.source.value))

    graph = replay_events(args.events, direction=args.direction, checkpoints=args.classify_at,
                          on_checkpoint=checkpoint)
    out = _out_dir(args)
    if out is not None:
        with open(out / "assignments.tsv", "w", encoding="utf-8") as fh:
            for t, key, label, conf, source in log_rows:
                fh.write(f"{t}\t{key}\t{label}\t{conf:.6f}\t{source}\n")
        _write_json(out / "report.json", {"schema": SCHEMA, "command": "replay",
                                          "config": _config_dict(args, seed, vconf, wconf),
                                          "graph": _summary(graph), "assignments": len(log_rows)})
    else:
        for t, key, label, conf, source in log_rows:
            print(f"{t}\t{key}\t{label}\t{conf:.6f}\t{source}")
    if args.dump:
        write_events(args.dump, dump_events(graph))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "ttl", None) is not None and args.ttl < 1:
            raise UsageError("--ttl must be >= 1")
        if args.command == "load-check":
            return cmd_load_check(args)
        if args.command == "bound":
            return cmd_bound(args)
        handler = {"vocab": cmd_vocab, "classify": cmd_classify, "evaluate": cmd_evaluate,
                   "synth": cmd_synth, "replay": cmd_replay}[args.command]
        return handler(args, seed)
    except UsageError as exc:
        print(f"dycos: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DycosError, OSError, UnicodeDecodeError) as exc:
        print(f"dycos: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
