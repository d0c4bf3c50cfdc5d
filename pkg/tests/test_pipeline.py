"""End-to-end pipeline runs and their artifact layout."""

import filecmp
import json
import time
from types import SimpleNamespace

import pytest

from newsevents.config import PipelineConfig, load_config
from newsevents.corpus import build_occurrence_index, ingest_corpus
from newsevents.embeddings import load_embeddings
from newsevents.errors import DataError, StageError
from newsevents.peaks import score_all, select_peaks
from newsevents.pipeline import _new_run_dir, detect_key_events, run_pipeline
from newsevents.synth import SynthSpec, generate_corpus
import newsevents.pipeline as pipeline_module

_ARTIFACTS = [
    "config.txt", "peaks.tsv", "graph_edges.tsv", "candidate_events.tsv",
    "audit.jsonl", "key_events.jsonl", "key_events.txt", "outliers.tsv",
]


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    generate_corpus(
        SynthSpec(num_events=2, docs_per_event=10, noise_docs=30,
                  span_days=30, seed=11),
        out,
    )
    return out


def _cfg(**overrides):
    return PipelineConfig(seed=11).merged(overrides)


def _run(bench, out_root, with_truth=True, **kw):
    return run_pipeline(
        _cfg(), str(bench / "corpus.jsonl"),
        phrases_path=str(bench / "phrases.txt"),
        truth_path=str(bench / "truth.jsonl") if with_truth else None,
        phrase_vectors_path=str(bench / "phrase_vectors.tsv"),
        doc_vectors_path=str(bench / "doc_vectors.tsv"),
        out_root=str(out_root),
        **kw,
    )


def test_run_writes_the_full_artifact_set(bench, tmp_path):
    artifacts = _run(bench, tmp_path / "runs")
    run_dir = artifacts.run_dir
    for name in _ARTIFACTS + ["metrics.tsv"]:
        assert (tmp_path / "runs" / run_dir.split("/")[-1] / name).exists(), name

    rows = [json.loads(l) for l in
            open(f"{run_dir}/key_events.jsonl", encoding="utf-8")]
    assert rows, "no key events written"
    for row in rows:
        assert row["first_day"] <= row["last_day"]
        assert row["phrases"] == sorted(row["phrases"])
        ranks = [d["rank"] for d in row["documents"]]
        assert ranks == list(range(1, len(ranks) + 1))
        scores = [d["score"] for d in row["documents"]]
        assert scores == sorted(scores, reverse=True)

    metrics = open(f"{run_dir}/metrics.tsv", encoding="utf-8").read()
    assert metrics.startswith("k\tprecision\trecall\tf1\n")

    # the stored config reproduces the run's settings exactly
    assert load_config(f"{run_dir}/config.txt") == _cfg()


def test_recovers_the_planted_events(bench, tmp_path):
    artifacts = _run(bench, tmp_path / "runs")
    result = artifacts.result
    truth_sets = artifacts.truth.events
    assert len(result.events) >= 2
    # each planted event is some detected event's majority
    for truth in truth_sets:
        hit = any(
            len(set(ev.doc_ids[:5]) & truth) >= 3 for ev in result.events
        )
        assert hit, f"no detected event covers {sorted(truth)[:3]}..."


def test_reruns_are_byte_identical(bench, tmp_path):
    a = _run(bench, tmp_path / "a").run_dir
    b = _run(bench, tmp_path / "b").run_dir
    names = _ARTIFACTS + ["metrics.tsv"]
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert sorted(match) == sorted(names)
    assert mismatch == [] and errors == []


def test_without_truth_no_metrics_artifact(bench, tmp_path):
    artifacts = _run(bench, tmp_path / "runs", with_truth=False)
    run_dir = artifacts.run_dir
    assert not (tmp_path / "runs" / run_dir.split("/")[-1] / "metrics.tsv").exists()
    for name in _ARTIFACTS:
        assert (tmp_path / "runs" / run_dir.split("/")[-1] / name).exists()


def test_match_mode_skips_training(bench, tmp_path):
    artifacts = _run(bench, tmp_path / "runs", mode="match")
    for ev in artifacts.result.events:
        for _, score in ev.documents:
            assert score == int(score) and score > 0


def test_missing_corpus_fails_in_the_ingest_stage(bench, tmp_path):
    with pytest.raises(StageError, match="ingest") as exc_info:
        _run(bench / "nope", tmp_path / "runs")
    assert isinstance(exc_info.value.__cause__, DataError)


def test_absent_doc_vectors_is_a_data_error(bench, tmp_path):
    with pytest.raises(StageError, match="embeddings") as exc_info:
        run_pipeline(
            _cfg(), str(bench / "corpus.jsonl"),
            phrases_path=str(bench / "phrases.txt"),
            phrase_vectors_path=str(bench / "phrase_vectors.tsv"),
            doc_vectors_path=None,
            out_root=str(tmp_path / "runs"),
        )
    assert isinstance(exc_info.value.__cause__, DataError)
    assert "lack vectors" in str(exc_info.value)


def test_peaks_without_vectors_are_dropped_and_audited(bench):
    corpus = ingest_corpus(bench / "corpus.jsonl")
    pool = [l.strip() for l in open(bench / "phrases.txt") if l.strip()]
    index = build_occurrence_index(corpus, pool)
    dtable = load_embeddings(bench / "doc_vectors.tsv")

    cfg = _cfg()
    peaks = select_peaks(
        score_all(corpus, index, pool, window=cfg.peak_window),
        quantile=cfg.peak_quantile,
    )
    victim = max(peaks, key=lambda p: p.score).phrase

    lines = (bench / "phrase_vectors.tsv").read_text().splitlines(True)
    pruned = [l for l in lines if not l.startswith(victim + "\t")]
    pruned_path = bench / "phrase_vectors_pruned.tsv"
    pruned_path.write_text("".join(pruned))
    ptable = load_embeddings(pruned_path)

    result = detect_key_events(corpus, pool, index, ptable, dtable, cfg)
    assert result.dropped_peaks == [victim]
    assert all(p.phrase != victim for p in result.peaks)
    dropped_records = [r for r in result.audit
                       if r.get("record") == "dropped_peak_phrases"]
    assert len(dropped_records) == 1
    assert dropped_records[0]["phrases"] == [victim]


def test_run_directories_never_collide(tmp_path, monkeypatch):
    frozen = time.gmtime(0)
    monkeypatch.setattr(
        pipeline_module, "time",
        SimpleNamespace(strftime=time.strftime, gmtime=lambda: frozen),
    )
    first = _new_run_dir(str(tmp_path), seed=7)
    second = _new_run_dir(str(tmp_path), seed=7)
    third = _new_run_dir(str(tmp_path), seed=7)
    assert first.endswith("19700101T000000Z-7")
    assert second == f"{first}.2"
    assert third == f"{first}.3"


def test_outlier_report_lists_id_date_title(bench, tmp_path):
    artifacts = _run(bench, tmp_path / "runs")
    lines = open(f"{artifacts.run_dir}/outliers.tsv", encoding="utf-8").read().splitlines()
    assert lines[0] == "doc_id\tdate\ttitle"
    assert len(lines) - 1 == len(artifacts.result.outliers)
    corpus = ingest_corpus(bench / "corpus.jsonl")
    for line in lines[1:3]:
        doc_id, date, title = line.split("\t")
        assert corpus.by_id[doc_id].date.isoformat() == date
        assert corpus.by_id[doc_id].title == title
