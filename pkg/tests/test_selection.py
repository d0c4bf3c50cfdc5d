"""Document selection: synonym enrichment, pseudo-labels, classifier
ensembles, assignment, temporal filtering, and the feedback loop."""

import math

import numpy as np
import pytest

from newsevents import _kernels
from newsevents.corpus import build_occurrence_index
from newsevents.embeddings import EmbeddingTable
from newsevents.errors import DataError
from newsevents.graph import CandidateEvent
from newsevents.peaks import PeakPhrase
from newsevents.selection import (
    ClassifierEnsemble,
    KeyEvent,
    PseudoLabelSet,
    _consecutive_day_clusters,
    enrich_phrases,
    generate_pseudo_labels,
    refine_iteration,
    run_selection_loop,
    score_and_assign,
    temporal_post_filter,
    train_ensemble,
)
from tests.conftest import day_records


def _unit_at(cosine_value):
    """2-d unit vector at the given cosine to [1, 0]."""
    return [cosine_value, math.sqrt(max(0.0, 1.0 - cosine_value ** 2))]


def _candidate(event_id=0, phrases=("tear gas",), span=(0, 2)):
    return CandidateEvent(
        event_id=event_id, phrases=set(phrases), span=span,
        member_nodes=[PeakPhrase(p, span[0], 1.0, 2.0, 1.0) for p in phrases],
    )


# ---------------------------------------------------------------------------
# synonym enrichment
# ---------------------------------------------------------------------------

def test_threshold_separates_near_from_far_synonyms():
    table = EmbeddingTable()
    table.add("tear gas", [1.0, 0.0])
    table.add("close call", _unit_at(0.96))
    table.add("near miss", _unit_at(0.94))
    pool = ["tear gas", "close call", "near miss"]
    got = enrich_phrases({"tear gas"}, pool, table, threshold=0.95)
    assert got == {"tear gas", "close call"}


def test_threshold_boundary_is_inclusive():
    # cosine of parallel integer vectors is exactly 1.0, so threshold=1.0
    # exercises the >= comparison without float slop
    table = EmbeddingTable()
    table.add("tear gas", [1.0, 0.0])
    table.add("tear gas rounds", [2.0, 0.0])
    table.add("close call", _unit_at(0.96))
    pool = ["tear gas", "tear gas rounds", "close call"]
    got = enrich_phrases({"tear gas"}, pool, table, threshold=1.0)
    assert got == {"tear gas", "tear gas rounds"}


def test_enrichment_matches_brute_force_similarity_scan():
    sims = [0.97, 0.95, 0.80, 0.40, 0.10]
    table = EmbeddingTable()
    table.add("anchor", [1.0, 0.0])
    pool = ["anchor"]
    for i, s in enumerate(sims):
        table.add(f"cand{i}", _unit_at(s))
        pool.append(f"cand{i}")
    got = enrich_phrases({"anchor"}, pool, table, threshold=0.95)
    oracle = {"anchor"} | {
        f"cand{i}" for i, s in enumerate(sims) if s >= 0.95
    }
    assert got == oracle == {"anchor", "cand0", "cand1"}


def test_phrases_without_vectors_are_skipped_and_reported():
    table = EmbeddingTable()
    table.add("anchor", [1.0, 0.0])
    skipped = []
    got = enrich_phrases(
        {"anchor"}, ["anchor", "ghost phrase"], table,
        threshold=0.95, skipped=skipped,
    )
    assert got == {"anchor"}
    assert skipped == ["ghost phrase"]


# ---------------------------------------------------------------------------
# pseudo labels
# ---------------------------------------------------------------------------

def test_pseudo_ranking_by_total_match_count(write_corpus):
    corpus = write_corpus(day_records({
        0: ["tear gas fired. tear gas again. tear gas thick. water cannon."],
        1: ["tear gas lingered downtown."],
        2: ["calm streets at last."],
    }))
    index = build_occurrence_index(corpus, ["tear gas", "water cannon"])
    ps = generate_pseudo_labels(
        _candidate(phrases=("tear gas", "water cannon")),
        {"tear gas", "water cannon"}, corpus, index, pseudo_top=10,
    )
    assert ps.positives == ["d00x0", "d01x0"]
    assert ps.match_scores["d00x0"] == 4
    assert ps.match_scores["d01x0"] == 1


def test_out_of_span_docs_never_pseudo_labeled(write_corpus):
    corpus = write_corpus(day_records({
        0: ["tear gas fired."],
        5: ["tear gas fired. tear gas everywhere."],
    }))
    index = build_occurrence_index(corpus, ["tear gas"])
    ps = generate_pseudo_labels(
        _candidate(span=(0, 2)), {"tear gas"}, corpus, index, pseudo_top=10)
    assert ps.positives == ["d00x0"]


def test_pseudo_top_caps_the_set(write_corpus):
    texts = {0: [f"tear gas round {i}. tear gas." for i in range(15)]}
    corpus = write_corpus(day_records(texts))
    index = build_occurrence_index(corpus, ["tear gas"])
    ps = generate_pseudo_labels(
        _candidate(span=(0, 0)), {"tear gas"}, corpus, index, pseudo_top=10)
    assert len(ps.positives) == 10


# ---------------------------------------------------------------------------
# classifier ensembles
# ---------------------------------------------------------------------------

def _separable_setup(write_corpus, n_pos=5, n_neg=20):
    records = []
    table = EmbeddingTable()
    for i in range(n_pos):
        records.append({"id": f"p{i:02d}", "date": "2020-01-01",
                        "text": "positive doc."})
        table.add(f"p{i:02d}", [1.0, 0.0])
    for i in range(n_neg):
        records.append({"id": f"n{i:02d}", "date": "2020-01-02",
                        "text": "negative doc."})
        table.add(f"n{i:02d}", [-1.0, 0.0])
    corpus = write_corpus(records)
    pseudo = PseudoLabelSet(
        event_id=0, positives=[f"p{i:02d}" for i in range(n_pos)])
    return corpus, table, pseudo


def test_separable_data_scores_by_side(write_corpus):
    corpus, table, pseudo = _separable_setup(write_corpus)
    ens = train_ensemble(pseudo, corpus, table,
                         negative_ratio=2, ensemble_size=5, seed=3)
    assert ens.score(np.array([1.0, 0.0])) > 0
    assert ens.score(np.array([-1.0, 0.0])) < 0


def test_same_seed_reproduces_weights_and_scores(write_corpus):
    corpus, table, pseudo = _separable_setup(write_corpus)
    a = train_ensemble(pseudo, corpus, table, ensemble_size=4, seed=9)
    b = train_ensemble(pseudo, corpus, table, ensemble_size=4, seed=9)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.biases, b.biases)
    probe = np.array([0.3, 0.7])
    assert a.score(probe) == b.score(probe)


def test_sampling_sizes_match_instrumented_counter(write_corpus, monkeypatch):
    corpus, table, pseudo = _separable_setup(write_corpus)
    seen = []
    original = _kernels.hinge_sgd

    def spy(x, y, order, lam):
        seen.append((x.shape[0], int((np.asarray(y) < 0).sum())))
        return original(x, y, order, lam)

    monkeypatch.setattr(_kernels, "hinge_sgd", spy)
    train_ensemble(pseudo, corpus, table,
                   negative_ratio=2, ensemble_size=3, seed=0)
    # 3 members x (5 positives + 10 sampled negatives) each
    assert seen == [(15, 10)] * 3
    assert sum(neg for _, neg in seen) == 30


def test_too_few_positives_is_an_error(write_corpus):
    corpus, table, _ = _separable_setup(write_corpus)
    lone = PseudoLabelSet(event_id=0, positives=["p00"])
    with pytest.raises(DataError, match=">= 2"):
        train_ensemble(lone, corpus, table)


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------

def _matrix_setup(write_corpus, matrix):
    n_docs, n_events = matrix.shape
    records = [
        {"id": f"m{i}", "date": "2020-01-01", "text": "body."}
        for i in range(n_docs)
    ]
    corpus = write_corpus(records)
    table = EmbeddingTable()
    for i in range(n_docs):
        one_hot = np.zeros(n_docs)
        one_hot[i] = 1.0
        table.add(f"m{i}", one_hot)
    ensembles = [
        ClassifierEnsemble(
            event_id=e,
            weights=matrix[:, e].reshape(1, -1).copy(),
            biases=np.zeros(1),
            negative_ratio=2, seed=0,
        )
        for e in range(n_events)
    ]
    events = {e: _candidate(event_id=e, span=(0, 0)) for e in range(n_events)}
    phrase_sets = {e: {f"phrase {e}"} for e in range(n_events)}
    return corpus, table, ensembles, events, phrase_sets


def test_all_negative_scores_make_an_outlier(write_corpus):
    matrix = np.array([[-0.5, -0.1]])
    corpus, table, ensembles, events, phrases = _matrix_setup(
        write_corpus, matrix)
    found, outliers = score_and_assign(ensembles, corpus, table,
                                       events, phrases)
    assert outliers == ["m0"]
    assert all(ev.documents == [] for ev in found)


def test_positive_docs_go_to_argmax_event(write_corpus):
    matrix = np.array([[0.2, 0.7]])
    corpus, table, ensembles, events, phrases = _matrix_setup(
        write_corpus, matrix)
    found, outliers = score_and_assign(ensembles, corpus, table,
                                       events, phrases)
    assert outliers == []
    assert found[1].documents == [("m0", pytest.approx(0.7))]
    assert found[0].documents == []


def test_assignment_matches_brute_force_over_fixed_matrix(write_corpus):
    matrix = np.array([
        [-0.5, -0.1],
        [0.2, 0.7],
        [0.9, 0.1],
        [0.0, 0.0],
        [0.3, 0.3],
        [-1.0, 0.4],
    ])
    corpus, table, ensembles, events, phrases = _matrix_setup(
        write_corpus, matrix)
    found, outliers = score_and_assign(ensembles, corpus, table,
                                       events, phrases)
    expected = {0: [], 1: []}
    expected_outliers = []
    for i in range(matrix.shape[0]):
        row = matrix[i]
        if row.max() > 0:
            expected[int(row.argmax())].append(f"m{i}")
        else:
            expected_outliers.append(f"m{i}")
    got = {ev.event_id: sorted(d for d, _ in ev.documents) for ev in found}
    assert got == {e: sorted(v) for e, v in expected.items()}
    assert outliers == expected_outliers


def test_assigned_documents_are_ranked_by_score(write_corpus):
    matrix = np.array([[0.2], [0.9], [0.5]])
    corpus, table, ensembles, events, phrases = _matrix_setup(
        write_corpus, matrix)
    found, _ = score_and_assign(ensembles, corpus, table, events, phrases)
    assert [d for d, _ in found[0].documents] == ["m1", "m2", "m0"]


# ---------------------------------------------------------------------------
# temporal post-filter
# ---------------------------------------------------------------------------

def test_consecutive_day_cluster_grouping():
    docs = [("a", 5), ("b", 6), ("c", 6), ("d", 9)]
    clusters = _consecutive_day_clusters(docs)
    as_sets = [sorted(d for d, _ in c) for c in clusters]
    assert as_sets == [["a", "b", "c"], ["d"]]


def _post_filter_corpus(write_corpus):
    # base 2019-08-02 anchored by the day-0 doc, so day 10 -> August 12
    texts = {
        0: ["Quiet start to the month."],
        10: ["The march filled the square. More below."],
        11: ["Clashes continued into the night."],
        14: ["A retrospective on the August 12 march and what followed."],
        20: ["An unrelated feature story with no dates at all."],
        5: ["Early rumblings, recalling August 12 as a flashpoint."],
        6: ["More early coverage, also naming August 12 expressly."],
    }
    return write_corpus(day_records(texts, base="2019-08-02"))


def test_rule_table_matches_exhaustive_evaluation(write_corpus):
    corpus = _post_filter_corpus(write_corpus)
    docs = [(d.id, 0.5) for d in corpus.documents]
    event = KeyEvent(event_id=0, documents=docs,
                     phrases={"march"}, span=(10, 11))
    kept, clusters = temporal_post_filter(event, corpus)
    kept_ids = {d for d, _ in kept.documents}
    # in-span stay; the dated singleton (day 14) is rescued; the dateless
    # singletons (days 0 and 20) fall; the day 5-6 pair falls as a cluster
    # even though both docs mention an in-span date
    assert kept_ids == {"d10x0", "d11x0", "d14x0"}
    cluster_sets = [sorted(c) for c in clusters]
    assert sorted(cluster_sets) == [["d00x0"], ["d05x0", "d06x0"], ["d20x0"]]


def test_filter_is_identity_when_everything_is_in_span(write_corpus):
    corpus = _post_filter_corpus(write_corpus)
    event = KeyEvent(
        event_id=0, documents=[("d10x0", 0.9), ("d11x0", 0.8)],
        phrases=set(), span=(10, 11),
    )
    kept, clusters = temporal_post_filter(event, corpus)
    assert kept.documents == event.documents
    assert clusters == []


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def _refine_setup(write_corpus):
    ids = ["a", "b", "c", "d", "e", "f", "g"]
    records = [
        {"id": i, "date": "2020-01-01", "text": "steady coverage."}
        for i in ids
    ]
    corpus = write_corpus(records)
    table = EmbeddingTable()
    dim = len(ids)
    for k, i in enumerate(ids):
        one_hot = np.zeros(dim)
        one_hot[k] = 1.0
        table.add(i, one_hot)
    # member scores +1 for a..e, -0.2 for f, -1 for g
    w = np.array([[1.0, 1.0, 1.0, 1.0, 1.0, -0.2, -1.0]])
    ens = ClassifierEnsemble(event_id=0, weights=w, biases=np.zeros(1),
                             negative_ratio=2, seed=0)
    return corpus, table, ens


def test_negative_pseudo_docs_are_dropped(write_corpus):
    corpus, table, ens = _refine_setup(write_corpus)
    event = KeyEvent(event_id=0, documents=[("a", 1.0)], phrases=set(),
                     span=(0, 0))
    pseudo = PseudoLabelSet(event_id=0, positives=["a", "f"])
    new_pseudo, _, audit = refine_iteration(
        [event], {0: pseudo}, {0: ens}, [], corpus,
        build_occurrence_index(corpus, ["steady coverage"]), table,
    )
    assert new_pseudo[0].positives == ["a"]
    assert audit["removed"][0] == ["f"]


def test_top_ranked_additions_deduplicate(write_corpus):
    corpus, table, ens = _refine_setup(write_corpus)
    ranked = [("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.6), ("e", 0.5)]
    event = KeyEvent(event_id=0, documents=ranked, phrases=set(), span=(0, 0))
    pseudo = PseudoLabelSet(event_id=0, positives=["a", "b"])
    new_pseudo, _, audit = refine_iteration(
        [event], {0: pseudo}, {0: ens}, [], corpus,
        build_occurrence_index(corpus, ["steady coverage"]), table,
        add_top=5,
    )
    assert audit["added"][0] == ["c", "d", "e"]
    assert new_pseudo[0].positives == ["a", "b", "c", "d", "e"]


def test_filtered_cluster_becomes_new_candidate_with_tfidf_phrases(
        write_corpus):
    texts = {
        0: ["nothing to report today."],
        20: ["water cannon on the plaza. water cannon trucks lined up.",
             "water cannon bursts scattered the crowd."],
        21: ["water cannon again at dawn. city council stayed silent.",
             "a water cannon rolled past city hall."],
        3: ["city council met. city council voted. city council adjourned."],
        4: ["city council faced questions."],
    }
    corpus = write_corpus(day_records(texts))
    pool = ["water cannon", "city council"]
    index = build_occurrence_index(corpus, pool)
    table = EmbeddingTable()
    for d in corpus.documents:
        table.add(d.id, [1.0, 0.0])
    cluster = ["d20x0", "d20x1", "d21x0", "d21x1"]
    _, new_events, audit = refine_iteration(
        [], {}, {}, [cluster], corpus, index, table, next_event_id=40,
    )
    assert len(new_events) == 1
    ev = new_events[0]
    assert ev.event_id == 40
    assert ev.span == (20, 21)
    assert "water cannon" in ev.phrases

    # brute-force tf-idf over the cluster vocabulary
    num_docs = len(corpus)
    def cluster_tfidf(phrase):
        tf = sum(index.freq_in_doc(phrase, d) for d in cluster)
        df = len(index.doc_presence(phrase))
        if tf == 0 or df == 0:
            return 0.0
        return (1.0 + math.log(tf)) * math.log(num_docs / df)
    assert cluster_tfidf("water cannon") > cluster_tfidf("city council")


def test_sub_pair_clusters_are_ignored(write_corpus):
    corpus, table, ens = _refine_setup(write_corpus)
    _, new_events, _ = refine_iteration(
        [], {}, {}, [["a"]], corpus,
        build_occurrence_index(corpus, ["steady coverage"]), table,
    )
    assert new_events == []


# ---------------------------------------------------------------------------
# the full loop
# ---------------------------------------------------------------------------

def _loop_inputs(tmp_path, seed=5):
    from newsevents.corpus import ingest_corpus
    from newsevents.embeddings import load_embeddings
    from newsevents.graph import build_graph, detect_communities
    from newsevents.peaks import score_all, select_peaks
    from newsevents.synth import SynthSpec, generate_corpus

    out = tmp_path / f"loop{seed}"
    generate_corpus(
        SynthSpec(num_events=2, docs_per_event=10, noise_docs=30,
                  span_days=30, seed=seed),
        out,
    )
    corpus = ingest_corpus(out / "corpus.jsonl")
    pool = [l.strip() for l in open(out / "phrases.txt") if l.strip()]
    index = build_occurrence_index(corpus, pool)
    ptable = load_embeddings(out / "phrase_vectors.tsv")
    dtable = load_embeddings(out / "doc_vectors.tsv")
    peaks = select_peaks(score_all(corpus, index, pool))
    cands = detect_communities(build_graph(peaks, corpus, index, ptable))
    return cands, corpus, index, pool, ptable, dtable


def test_loop_outputs_are_disjoint_and_deterministic(tmp_path):
    cands, corpus, index, pool, ptable, dtable = _loop_inputs(tmp_path)
    a = run_selection_loop(cands, corpus, index, pool, ptable, dtable, seed=5)
    b = run_selection_loop(cands, corpus, index, pool, ptable, dtable, seed=5)
    seen = set()
    for ev in a.events:
        ids = {d for d, _ in ev.documents}
        assert not (ids & seen)
        seen |= ids
    assert [(e.event_id, e.documents) for e in a.events] == \
        [(e.event_id, e.documents) for e in b.events]
    assert a.outliers == b.outliers
    # outliers are exactly the docs that scored positive for no event, so
    # they never overlap assignments; docs cut by the last temporal filter
    # pass may be in neither set
    assert not (seen & set(a.outliers))
    assert seen | set(a.outliers) <= set(corpus.by_id)


def test_single_iteration_writes_one_audit_record(tmp_path):
    cands, corpus, index, pool, ptable, dtable = _loop_inputs(tmp_path)
    res = run_selection_loop(cands, corpus, index, pool, ptable, dtable,
                             iterations=1, seed=5)
    assert [r["iteration"] for r in res.audit] == [1]
    assert res.events


def test_match_only_mode_needs_no_training(tmp_path):
    cands, corpus, index, pool, ptable, dtable = _loop_inputs(tmp_path)
    res = run_selection_loop(cands, corpus, index, pool, ptable, dtable,
                             seed=5, mode="match")
    assert res.events
    for ev in res.events:
        for doc_id, score in ev.documents:
            assert score > 0 and score == int(score)  # match counts


def test_all_dormant_candidates_raise(write_corpus):
    corpus = write_corpus(day_records({
        0: ["lone mention of water cannon here."],
        1: ["completely unrelated text."],
    }))
    pool = ["water cannon"]
    index = build_occurrence_index(corpus, pool)
    table = EmbeddingTable()
    table.add("water cannon", [1.0, 0.0])
    dtable = EmbeddingTable()
    for d in corpus.documents:
        dtable.add(d.id, [1.0, 0.0])
    cand = _candidate(phrases=("water cannon",), span=(0, 1))
    with pytest.raises(DataError, match="dormant"):
        run_selection_loop([cand], corpus, index, pool, table, dtable)
