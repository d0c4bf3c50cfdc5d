"""End-to-end orchestration: corpus file in, key-event report out.

The pipeline chains the library stages in a fixed order -- ingest,
candidate phrases, embeddings, peak detection, graph construction,
community detection, document selection, evaluation, report -- and
writes every intermediate artifact into a fresh run directory so that
two runs can be diffed file by file. Any exception raised inside a
stage is re-raised as a StageError tagged with the stage name.

Artifact files never embed wall-clock time; with a fixed seed and
pre-computed embedding tables, rerunning the pipeline produces
byte-identical contents (the directory name carries the timestamp).
"""

from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .config import PipelineConfig, serialize_config
from .corpus import Corpus, OccurrenceIndex, build_occurrence_index, ingest_corpus
from .embeddings import EmbeddingRequest, EmbeddingTable, fetch_missing, load_embeddings
from .errors import DataError, StageError
from .evaluation import GroundTruth, load_ground_truth, write_metrics_tsv
from .graph import CandidateEvent, PeakPhraseGraph, build_graph, detect_communities, write_edges_tsv, write_events_tsv
from .peaks import PeakPhrase, score_all, select_peaks, write_peaks_tsv
from .phrases import build_candidates
from .selection import KeyEvent, SelectionResult, run_selection_loop


@dataclass
class PipelineResult:
    """Everything the in-memory pipeline produces."""

    peaks: list[PeakPhrase]
    dropped_peaks: list[str]
    graph: PeakPhraseGraph
    candidates: list[CandidateEvent]
    events: list[KeyEvent]
    outliers: list[str]
    audit: list[dict] = field(default_factory=list)


@contextmanager
def _stage(name: str):
    """Re-raise anything from the wrapped block as a tagged StageError."""
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc


def detect_key_events(
    corpus: Corpus,
    candidate_pool: list[str],
    index: OccurrenceIndex,
    phrase_table: EmbeddingTable,
    doc_table: EmbeddingTable,
    cfg: PipelineConfig,
    mode: str = "full",
) -> PipelineResult:
    """Run peak scoring through document selection, all in memory.

    Peak phrases without a vector in phrase_table cannot take part in
    the similarity half of the edge weights, so they are dropped before
    graph construction and reported in the result (and in the audit
    trail) rather than silently ignored.
    """
    with _stage("peaks"):
        scored = score_all(corpus, index, candidate_pool, window=cfg.peak_window)
        chosen = select_peaks(scored, quantile=cfg.peak_quantile)

    dropped = sorted({p.phrase for p in chosen if p.phrase not in phrase_table})
    kept = [p for p in chosen if p.phrase in phrase_table]
    audit: list[dict] = []
    if dropped:
        audit.append({
            "record": "dropped_peak_phrases",
            "reason": "no embedding available",
            "phrases": dropped,
        })

    with _stage("graph"):
        g = build_graph(
            kept, corpus, index, phrase_table,
            temporal_weight=cfg.temporal_weight,
            edge_floor=cfg.edge_floor,
        )

    with _stage("communities"):
        candidates = detect_communities(
            g, min_size=cfg.min_community, seed=cfg.seed
        )

    with _stage("selection"):
        result = run_selection_loop(
            candidates, corpus, index, candidate_pool,
            phrase_table, doc_table,
            threshold=cfg.synonym_threshold,
            pseudo_top=cfg.pseudo_top,
            negative_ratio=cfg.negative_ratio,
            ensemble_size=cfg.ensemble_size,
            add_top=cfg.add_top,
            iterations=cfg.iterations,
            seed=cfg.seed,
            mode=mode,
        )
    audit.extend(result.audit)

    return PipelineResult(
        peaks=kept,
        dropped_peaks=dropped,
        graph=g,
        candidates=candidates,
        events=result.events,
        outliers=result.outliers,
        audit=audit,
    )


def _phrase_mentions(corpus: Corpus, phrase: str, cap: int = 8) -> list[dict]:
    """Locate up to cap occurrences of phrase as (sentence tokens, span)."""
    want = phrase.split()
    n = len(want)
    found: list[dict] = []
    for doc in corpus.documents:
        for sent in doc.sentences:
            for start in range(len(sent) - n + 1):
                if sent[start:start + n] == want:
                    found.append({"tokens": list(sent), "span": [start, start + n]})
                    break
            if len(found) >= cap:
                return found
    return found


def _resolve_embeddings(
    corpus: Corpus,
    peak_phrases: list[str],
    phrase_table: EmbeddingTable,
    doc_table: EmbeddingTable,
    endpoint: str | None,
) -> list[dict]:
    """Fill missing vectors from the service when one is configured.

    Returns audit records describing any fetches. Documents must all
    end up with vectors -- the selection stage scores every document --
    while phrases without vectors are tolerated (the caller drops those
    peaks). Without an endpoint nothing is fetched.
    """
    records: list[dict] = []
    if not endpoint:
        return records

    phrase_requests = [
        EmbeddingRequest(
            key=p, kind="phrase",
            payload={"mentions": _phrase_mentions(corpus, p)},
        )
        # one request per distinct phrase: the same phrase may peak on
        # several days, and the vector is day-independent
        for p in phrase_table.missing(dict.fromkeys(peak_phrases))
    ]
    doc_requests = [
        EmbeddingRequest(
            key=doc.id, kind="document",
            payload={"sentences": doc.sentence_texts[:3]},
        )
        for doc in corpus.documents
        if doc.id not in doc_table
    ]
    if phrase_requests:
        failed = fetch_missing(phrase_table, phrase_requests, endpoint)
        records.append({
            "record": "fetched_phrase_vectors",
            "requested": len(phrase_requests),
            "failed": sorted(failed),
        })
    if doc_requests:
        failed = fetch_missing(doc_table, doc_requests, endpoint)
        records.append({
            "record": "fetched_document_vectors",
            "requested": len(doc_requests),
            "failed": sorted(failed),
        })
    return records


def _new_run_dir(out_root: str, seed: int) -> str:
    """Create runs/<timestamp>-<seed>/, never reusing an existing one."""
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    base = os.path.join(out_root, f"{stamp}-{seed}")
    path = base
    bump = 1
    while True:
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            bump += 1
            path = f"{base}.{bump}"


def _write_key_events_jsonl(path: str, events: list[KeyEvent], corpus: Corpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            lo, hi = ev.span
            row = {
                "event_id": ev.event_id,
                "first_day": lo,
                "last_day": hi,
                "first_date": corpus.date_of_day(lo).isoformat(),
                "last_date": corpus.date_of_day(hi).isoformat(),
                "phrases": sorted(ev.phrases),
                "documents": [
                    {
                        "rank": rank,
                        "id": doc_id,
                        "title": corpus.by_id[doc_id].title,
                        "score": score,
                    }
                    for rank, (doc_id, score) in enumerate(ev.documents, start=1)
                ],
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_key_events_txt(path: str, events: list[KeyEvent], corpus: Corpus) -> None:
    lines: list[str] = []
    for ev in events:
        lo, hi = ev.span
        lines.append(
            f"event {ev.event_id}: {corpus.date_of_day(lo).isoformat()}"
            f" .. {corpus.date_of_day(hi).isoformat()}"
            f" (days {lo}-{hi}, {len(ev.documents)} documents)"
        )
        lines.append("  phrases: " + "; ".join(sorted(ev.phrases)))
        for rank, (doc_id, score) in enumerate(ev.documents, start=1):
            title = corpus.by_id[doc_id].title
            lines.append(f"  {rank:3d}. {score:+9.4f}  {doc_id}  {title}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def _write_outliers_tsv(path: str, outliers: list[str], corpus: Corpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tdate\ttitle\n")
        for doc_id in outliers:
            doc = corpus.by_id[doc_id]
            fh.write(f"{doc_id}\t{doc.date.isoformat()}\t{doc.title}\n")


@dataclass
class RunArtifacts:
    """Where a pipeline run landed and what it produced."""

    run_dir: str
    result: PipelineResult
    truth: GroundTruth | None = None


def run_pipeline(
    cfg: PipelineConfig,
    corpus_path: str,
    phrases_path: str | None = None,
    truth_path: str | None = None,
    phrase_vectors_path: str | None = None,
    doc_vectors_path: str | None = None,
    out_root: str = "runs",
    mode: str = "full",
) -> RunArtifacts:
    """Execute every stage and write the artifact set for one run.

    The run directory receives: config.txt, peaks.tsv, graph_edges.tsv,
    candidate_events.tsv, audit.jsonl, key_events.jsonl, key_events.txt,
    outliers.tsv, and metrics.tsv when a truth file is supplied.
    Existing run directories are never touched.
    """
    cfg.validate()

    with _stage("ingest"):
        corpus = ingest_corpus(corpus_path)

    with _stage("phrases"):
        if phrases_path is not None:
            try:
                with open(phrases_path, encoding="utf-8") as fh:
                    pool = [line.strip() for line in fh if line.strip()]
            except OSError as exc:
                raise DataError(
                    f"cannot read {phrases_path!r}: {exc}"
                ) from exc
            if not pool:
                raise DataError(f"no phrases in {phrases_path}")
            index = build_occurrence_index(corpus, pool)
        else:
            mined, index = build_candidates(
                corpus, keep_fraction=cfg.keep_fraction
            )
            pool = [c.phrase for c in mined]

    with _stage("embeddings"):
        phrase_table = (
            load_embeddings(phrase_vectors_path)
            if phrase_vectors_path is not None
            else EmbeddingTable()
        )
        doc_table = (
            load_embeddings(doc_vectors_path)
            if doc_vectors_path is not None
            else EmbeddingTable()
        )
        fetch_audit: list[dict] = []
        if cfg.endpoint:
            peak_preview = select_peaks(
                score_all(corpus, index, pool, window=cfg.peak_window),
                quantile=cfg.peak_quantile,
            )
            fetch_audit = _resolve_embeddings(
                corpus, [p.phrase for p in peak_preview],
                phrase_table, doc_table, cfg.endpoint,
            )
        still_missing = doc_table.missing([d.id for d in corpus.documents])
        if still_missing:
            raise DataError(
                f"{len(still_missing)} documents lack vectors"
                f" (first: {still_missing[0]!r}); supply --doc-vectors"
                " or configure an endpoint"
            )

    truth = None
    if truth_path is not None:
        with _stage("truth"):
            truth = load_ground_truth(truth_path)

    result = detect_key_events(
        corpus, pool, index, phrase_table, doc_table, cfg, mode=mode
    )
    result.audit = fetch_audit + result.audit

    with _stage("report"):
        run_dir = _new_run_dir(out_root, cfg.seed)
        with open(os.path.join(run_dir, "config.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_config(cfg))
        write_peaks_tsv(os.path.join(run_dir, "peaks.tsv"), result.peaks, corpus)
        write_edges_tsv(os.path.join(run_dir, "graph_edges.tsv"), result.graph)
        write_events_tsv(
            os.path.join(run_dir, "candidate_events.tsv"),
            result.candidates, corpus,
        )
        with open(os.path.join(run_dir, "audit.jsonl"), "w", encoding="utf-8") as fh:
            for record in result.audit:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        _write_key_events_jsonl(
            os.path.join(run_dir, "key_events.jsonl"), result.events, corpus
        )
        _write_key_events_txt(
            os.path.join(run_dir, "key_events.txt"), result.events, corpus
        )
        _write_outliers_tsv(
            os.path.join(run_dir, "outliers.tsv"), result.outliers, corpus
        )
        if truth is not None:
            write_metrics_tsv(
                os.path.join(run_dir, "metrics.tsv"), result.events, truth
            )

    return RunArtifacts(run_dir=run_dir, result=result, truth=truth)
