import random
from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dycos import (
    AlreadyLabeled,
    DynamicGraph,
    HopStats,
    NoLabeledNodes,
    Source,
    UnknownNode,
    VocabularyConfig,
    WalkConfig,
    build_vocabulary,
    classify_all,
    classify_node,
    label_distribution,
    reclassify_expired,
    replay_events,
)
from dycos.classifier import expired_nodes
from dycos.synthetic import to_graph

from conftest import PLANTED, growing_graph, random_text_graph

GROWING_EVENTS = Path(__file__).parent / "data" / "growing.jsonl"
ONE_HOP = WalkConfig(walks=1, length=1, p_structural=1.0)


# ---- overfitting example ---------------------------------------------------------


def test_v2_at_t3_picks_b_half_the_time():
    g, n = growing_graph(3)
    rng = random.Random(1)
    trials = 20_000
    hits = Counter(classify_node(g, None, n["v2"], ONE_HOP, rng).label for _ in range(trials))
    assert hits[g.label_id("B")] / trials == pytest.approx(0.5, abs=0.02)


def test_v4_with_v2_prelabelled():
    g, n = growing_graph(4, v2_label="A")
    rng = random.Random(2)
    trials = 20_000
    hits = Counter(classify_node(g, None, n["v4"], ONE_HOP, rng).label for _ in range(trials))
    assert hits[g.label_id("A")] / trials == pytest.approx(2 / 3, abs=0.02)


def test_batch_hides_pending_label_of_v2():
    g, n = growing_graph(4)
    a = g.label_id("A")
    rng = random.Random(3)
    trials = 10_000
    wins = 0
    for _ in range(trials):
        out = classify_all(g, None, ONE_HOP, rng, apply=False)
        wins += {x.node: x.label for x in out}[n["v4"]] == a
    assert wins / trials == pytest.approx(0.5, abs=0.02)
    assert not g.is_labeled(n["v2"])


def _immediate_replay(seed, checkpoints, ttl=None):
    rng = random.Random(seed)

    def at(graph, t):
        if ttl is not None:
            reclassify_expired(graph, None, ONE_HOP, rng, t)
        if graph.unlabeled_nodes():
            classify_all(graph, None, ONE_HOP, rng, mode="immediate", ttl=ttl)

    return replay_events(GROWING_EVENTS, checkpoints=checkpoints, on_checkpoint=at)


def test_immediate_replay_overfits():
    trials = 6000
    wins = 0
    for s in range(trials):
        g = _immediate_replay(s, [2, 4])
        assert g.label_name(g.label_of(g.node_by_key("v2"))) == "A"
        wins += g.label_name(g.label_of(g.node_by_key("v4"))) == "A"
    assert wins / trials == pytest.approx(2 / 3, abs=0.02)


def test_ttl_lets_v2_see_v3():
    trials = 6000
    b = 0
    for s in range(trials):
        g = _immediate_replay(s, [2, 3], ttl=1)
        v2 = g.node_by_key("v2")
        assert g.assignments[v2].assigned_at == 3
        b += g.label_name(g.label_of(v2)) == "B"
    assert b / trials == pytest.approx(0.5, abs=0.02)


# ---- fallback and errors ----------------------------------------------------------


def test_global_fallback_when_nothing_labelled_is_reachable():
    g = DynamicGraph()
    a, b = g.intern_label("A"), g.intern_label("B")
    g.add_node(a)
    g.add_node(a)
    g.add_node(b)
    lonely = g.add_node()
    other = g.add_node()
    g.add_edge(lonely, other)
    out = classify_node(g, None, lonely, WalkConfig(walks=5, length=3), random.Random(0))
    assert out.source is Source.GLOBAL_FALLBACK
    assert out.label == a
    assert out.confidence == 0.0


def test_fallback_tie_is_uniform():
    g = DynamicGraph()
    a, b = g.intern_label("A"), g.intern_label("B")
    g.add_node(a)
    g.add_node(b)
    v = g.add_node()
    rng = random.Random(4)
    trials = 10_000
    hits = Counter(classify_node(g, None, v, ONE_HOP, rng).label for _ in range(trials))
    assert hits[a] / trials == pytest.approx(0.5, abs=0.02)


def test_errors():
    g, n = growing_graph(3)
    with pytest.raises(AlreadyLabeled):
        classify_node(g, None, n["v1"], ONE_HOP, random.Random(0))
    with pytest.raises(UnknownNode):
        classify_node(g, None, 99, ONE_HOP, random.Random(0))
    with pytest.raises(AlreadyLabeled):
        classify_all(g, None, ONE_HOP, random.Random(0), nodes=[n["v1"]])
    empty = DynamicGraph()
    v = empty.add_node()
    with pytest.raises(NoLabeledNodes):
        classify_node(empty, None, v, ONE_HOP, random.Random(0))
    with pytest.raises(NoLabeledNodes):
        classify_all(empty, None, ONE_HOP, random.Random(0))
    with pytest.raises(ValueError):
        classify_all(g, None, ONE_HOP, random.Random(0), mode="sideways")
    with pytest.raises(ValueError):
        classify_all(g, None, ONE_HOP, random.Random(0), mode="immediate", apply=False)


def test_no_unlabelled_nodes_gives_empty_list():
    g, _ = growing_graph(1)
    assert classify_all(g, None, ONE_HOP, random.Random(0)) == []


# ---- tallies and hop kinds ------------------------------------------------------------


def test_tally_reaches_r_times_l_when_every_visit_is_labelled():
    g = DynamicGraph(direction="out")
    a = g.intern_label("A")
    ring = [g.add_node(a) for _ in range(5)]
    for i, u in enumerate(ring):
        g.add_edge(u, ring[(i + 1) % 5])
    v = g.add_node()
    g.add_edge(v, ring[0])
    cfg = WalkConfig(walks=7, length=4, p_structural=1.0)
    stats = HopStats()
    dist = label_distribution(g, None, v, cfg, random.Random(0), stats)
    assert dist.total_visits == 28
    assert stats.truncated_walks == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6),
       st.sampled_from([0.0, 0.3, 1.0]))
def test_tally_bound_and_argmax(seed, r, l, ps):
    rng = random.Random(seed)
    g = random_text_graph(rng, n_nodes=25, n_words=6, edge_prob=0.08)
    vocab = build_vocabulary(g, VocabularyConfig(m=6), install=False) if any(
        g.word_counts(v) for v in g.labeled_nodes()) else None
    cfg = WalkConfig(walks=r, length=l, p_structural=ps, top_q=3)
    for v in g.unlabeled_nodes():
        dist = label_distribution(g, vocab, v, cfg, random.Random(seed + v))
        assert dist.total_visits <= r * l
        a = classify_node(g, vocab, v, cfg, random.Random(seed + v))
        assert 0.0 <= a.confidence <= 1.0
        assert a.label < g.num_labels
        if a.source is Source.WALK_MAJORITY:
            assert a.label in dist.argmax()
            assert a.confidence == dist.counts[a.label] / dist.total_visits
        else:
            assert dist.total_visits == 0
            assert a.label in g.most_frequent_labels()


def test_ps_one_never_tries_content():
    rng = random.Random(8)
    g = random_text_graph(rng, n_nodes=40, n_words=8, edge_prob=0.1)
    vocab = build_vocabulary(g, VocabularyConfig(m=8), install=False)
    stats = HopStats()
    classify_all(g, vocab, WalkConfig(walks=5, length=4, p_structural=1.0), rng, stats=stats)
    assert stats.structural > 0
    assert stats.content == 0 and stats.structural_fallback == 0


def test_ps_zero_walks_only_on_text():
    rng = random.Random(9)
    g = random_text_graph(rng, n_nodes=40, n_words=8, edge_prob=0.1, text_prob=1.0)
    vocab = build_vocabulary(g, VocabularyConfig(m=8), install=False)
    stats = HopStats()
    classify_all(g, vocab, WalkConfig(walks=5, length=4, p_structural=0.0), rng, stats=stats)
    assert stats.content > 0
    assert stats.structural == 0 and stats.content_fallback == 0


def test_dead_end_fallback_uses_structure():
    # no vocabulary at all: content hops fall back to structural ones
    g, n = growing_graph(3)
    stats = HopStats()
    classify_node(g, None, n["v2"], WalkConfig(walks=10, length=2, p_structural=0.0),
                  random.Random(0), stats=stats)
    assert stats.content == 0 and stats.structural_fallback == 20


def test_isolated_node_truncates_every_walk():
    g = DynamicGraph()
    g.add_node(g.intern_label("A"))
    v = g.add_node()
    stats = HopStats()
    a = classify_node(g, None, v, WalkConfig(walks=4, length=3), random.Random(0), stats=stats)
    assert stats.truncated_walks == 4
    assert a.source is Source.GLOBAL_FALLBACK


# ---- batch semantics and determinism --------------------------------------------------


def test_order_and_worker_independence():
    rng = random.Random(12)
    g = random_text_graph(rng, n_nodes=120, n_words=10, edge_prob=0.04)
    vocab = build_vocabulary(g, VocabularyConfig(m=8), install=False)
    cfg = WalkConfig(walks=6, length=4, p_structural=0.5, top_q=5)
    targets = g.unlabeled_nodes()
    base = classify_all(g, vocab, cfg, random.Random(5), apply=False)
    for perm_seed in range(3):
        shuffled = list(targets)
        random.Random(perm_seed).shuffle(shuffled)
        assert classify_all(g, vocab, cfg, random.Random(5), apply=False, nodes=shuffled) == base
    assert classify_all(g, vocab, cfg, random.Random(5), apply=False, workers=3) == base
    # one node alone sees the same stream as inside the full pass
    one = classify_all(g, vocab, cfg, random.Random(5), apply=False, nodes=[targets[3]])
    assert one == [a for a in base if a.node == targets[3]]


def test_batch_applies_after_all_nodes():
    g, n = growing_graph(4)
    before = g.label_histogram()
    out = classify_all(g, None, ONE_HOP, random.Random(0))
    assert [a.node for a in out] == [n["v2"], n["v4"]]
    assert sum(g.label_histogram()) == sum(before) + 2
    assert set(g.assignments) == {n["v2"], n["v4"]}
    g.check_invariants()


def test_same_seed_same_assignments(planted):
    g, _ = planted
    vocab = build_vocabulary(g, VocabularyConfig(m=10), install=False)
    cfg = WalkConfig(walks=5, length=5, p_structural=0.5, top_q=10)
    assert classify_all(g, vocab, cfg, random.Random(1), apply=False) == \
        classify_all(g, vocab, cfg, random.Random(1), apply=False)


def test_planted_accuracy(planted):
    g, truth = planted
    vocab = build_vocabulary(g, VocabularyConfig(m=10), install=False)
    cfg = WalkConfig(walks=20, length=5, p_structural=0.5, top_q=10)
    out = classify_all(g, vocab, cfg, random.Random(PLANTED.seed))
    assert len(out) == 200 - 40
    accuracy = sum(a.label == truth[a.node] for a in out) / len(out)
    assert accuracy > 0.9


# ---- lifetimes ---------------------------------------------------------------------------


def test_no_expired_nodes():
    g, _ = growing_graph(4)
    classify_all(g, None, ONE_HOP, random.Random(0))
    assert reclassify_expired(g, None, ONE_HOP, random.Random(0), now=100) == []


def test_expiry_time_and_ground_truth_kept():
    g, n = growing_graph(4)
    classify_all(g, None, ONE_HOP, random.Random(0), ttl=3)
    assert expired_nodes(g, 6) == []
    assert expired_nodes(g, 7) == [n["v2"], n["v4"]]
    g.advance_clock(7)
    out = reclassify_expired(g, None, ONE_HOP, random.Random(1), now=7)
    assert {a.node for a in out} == {n["v2"], n["v4"]}
    assert all(a.ttl == 3 and a.assigned_at == 7 for a in out)
    assert g.label_name(g.label_of(n["v1"])) == "A"
    assert g.label_name(g.label_of(n["v3"])) == "B"


def test_immediate_reclassification():
    g, n = growing_graph(4)
    classify_all(g, None, ONE_HOP, random.Random(0), ttl=1)
    g.advance_clock(5)
    out = reclassify_expired(g, None, ONE_HOP, random.Random(1), now=5, mode="immediate")
    assert [a.node for a in out] == [n["v2"], n["v4"]]
    assert all(g.is_labeled(v) for v in g.nodes())


def test_stable_relabel_with_many_walks():
    g = DynamicGraph()
    a, b = g.intern_label("A"), g.intern_label("B")
    v = g.add_node()
    for lab in (a, a, a, b):
        g.add_edge(v, g.add_node(lab))
    cfg = WalkConfig(walks=1000, length=1, p_structural=1.0)
    rng = random.Random(6)
    first = classify_all(g, None, cfg, rng, ttl=1)[0].label
    same = 0
    for step in range(50):
        g.advance_clock(g.clock + 1)
        same += reclassify_expired(g, None, cfg, rng, now=g.clock)[0].label == first
    assert first == a and same == 50


def test_ttl_must_be_positive():
    g, _ = growing_graph(3)
    with pytest.raises(ValueError):
        classify_all(g, None, ONE_HOP, random.Random(0), ttl=0)


def test_planted_graph_built_from_fixture(planted_data):
    g, truth = to_graph(planted_data)
    assert g.num_labeled == 40 and len(truth) == 200
