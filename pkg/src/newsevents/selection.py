"""Document selection for candidate events.

Candidate events arrive as phrase communities with a day span. Selection
proceeds in rounds:

1. enrich each event's phrase set with near-synonyms (embedding cosine);
2. pseudo-label in-span documents by enriched-phrase mention counts;
3. train an ensemble of linear hinge-loss classifiers per event, each on
   the pseudo positives plus freshly sampled negatives;
4. score every document with every ensemble and assign to the argmax
   event when that score is positive (events stay disjoint);
5. drop out-of-span documents that cluster together in time or never
   mention an in-span date;
6. refine pseudo labels (drop negatives, add top-ranked docs) and promote
   dropped clusters to new candidate events, then repeat.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import Corpus, OccurrenceIndex
from .dates import mentions_date_in
from .embeddings import EmbeddingTable, cosine
from .errors import DataError
from .graph import CandidateEvent
from .seeds import derive_seed


@dataclass
class PseudoLabelSet:
    """Ranked pseudo-positive documents for one event."""

    event_id: int
    positives: list[str]
    match_scores: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.positives)


@dataclass
class ClassifierEnsemble:
    """A bag of linear decision functions; the event score is their mean."""

    event_id: int
    weights: np.ndarray  # shape (ensemble size, dim)
    biases: np.ndarray  # shape (ensemble size,)
    negative_ratio: int
    seed: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def score(self, vec: np.ndarray) -> float:
        return float(np.mean(self.weights @ vec + self.biases))

    def score_many(self, matrix: np.ndarray) -> np.ndarray:
        """Mean decision value for each row of matrix."""
        return (matrix @ self.weights.T + self.biases).mean(axis=1)


@dataclass
class KeyEvent:
    """A detected event: ranked positive documents plus indicative phrases."""

    event_id: int
    documents: list[tuple[str, float]]
    phrases: set[str]
    span: tuple[int, int]

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.documents]


def enrich_phrases(
    event_phrases: set[str],
    candidate_pool,
    embeddings: EmbeddingTable,
    threshold: float = 0.95,
    skipped: list | None = None,
) -> set[str]:
    """Event phrases plus pool phrases whose best cosine to any event
    phrase reaches the threshold. Pool entries lacking an embedding are
    skipped (recorded in `skipped` when a list is supplied)."""
    if not 0.0 < threshold <= 1.0:
        raise DataError(f"threshold must lie in (0, 1], got {threshold}")
    anchors = []
    for p in sorted(event_phrases):
        vec = embeddings.get(p)
        if vec is None:
            if skipped is not None:
                skipped.append(p)
            continue
        anchors.append(vec)
    enriched = set(event_phrases)
    if not anchors:
        return enriched
    for cand in candidate_pool:
        phrase = getattr(cand, "phrase", cand)
        if phrase in enriched:
            continue
        vec = embeddings.get(phrase)
        if vec is None:
            if skipped is not None:
                skipped.append(phrase)
            continue
        best = max(cosine(vec, a) for a in anchors)
        if best >= threshold:
            enriched.add(phrase)
    return enriched


def generate_pseudo_labels(
    event: CandidateEvent,
    enriched: set[str],
    corpus: Corpus,
    index: OccurrenceIndex,
    pseudo_top: int = 10,
) -> PseudoLabelSet:
    """Top in-span documents by total enriched-phrase mention count.

    Only positive counts qualify; ties break toward earlier publication,
    then lexicographic document id. An event whose span contains no
    matching document yields an empty set (dormant event).
    """
    if pseudo_top < 1:
        raise DataError(f"pseudo_top must be >= 1, got {pseudo_top}")
    lo, hi = event.span
    counts: dict[str, int] = {}
    for phrase in sorted(enriched):
        for doc_id, c in index.doc_freq.get(phrase, {}).items():
            counts[doc_id] = counts.get(doc_id, 0) + c
    scored = []
    for doc_id, c in counts.items():
        if c <= 0:
            continue
        day = corpus.day_of(doc_id)
        if lo <= day <= hi:
            scored.append((doc_id, c, day))
    scored.sort(key=lambda t: (-t[1], t[2], t[0]))
    top = scored[:pseudo_top]
    return PseudoLabelSet(
        event_id=event.event_id,
        positives=[d for d, _, _ in top],
        match_scores={d: c for d, c, _ in top},
    )


def _doc_matrix(doc_ids: list[str], doc_embeddings: EmbeddingTable) -> np.ndarray:
    missing = [d for d in doc_ids if d not in doc_embeddings]
    if missing:
        raise DataError(
            "missing document embeddings: " + ", ".join(sorted(missing)[:10])
        )
    return np.stack([doc_embeddings.get(d) for d in doc_ids])


def train_ensemble(
    positives: PseudoLabelSet,
    corpus: Corpus,
    doc_embeddings: EmbeddingTable,
    negative_ratio: int = 2,
    ensemble_size: int = 50,
    seed: int = 0,
    epochs: int = 10,
    lam: float = 0.01,
) -> ClassifierEnsemble:
    """Train an ensemble of linear hinge-loss classifiers with per-member
    negative sampling.

    Each member trains on the pseudo positives plus negative_ratio times
    as many negatives sampled uniformly without replacement from the rest
    of the corpus, visiting samples in a seeded shuffled order for a fixed
    number of epochs with the schedule eta_t = 1/(lam*t). Deterministic
    for a fixed seed.
    """
    if len(positives) < 2:
        raise DataError(
            f"event {positives.event_id}: need >= 2 pseudo positives, "
            f"got {len(positives)}"
        )
    if negative_ratio < 1:
        raise DataError(
            f"negative sampling ratio must be >= 1, got {negative_ratio}"
        )
    if ensemble_size < 1:
        raise DataError(f"ensemble size must be >= 1, got {ensemble_size}")
    pos_ids = list(positives.positives)
    pool = sorted(set(corpus.by_id) - set(pos_ids))
    need = negative_ratio * len(pos_ids)
    if len(pool) < need:
        raise DataError(
            f"event {positives.event_id}: corpus has {len(pool)} candidate "
            f"negatives, need {need}"
        )
    x_pos = _doc_matrix(pos_ids, doc_embeddings)
    dim = x_pos.shape[1]
    n_total = (negative_ratio + 1) * len(pos_ids)
    y = np.ones(n_total, dtype=np.float64)
    y[len(pos_ids):] = -1.0

    all_w = np.empty((ensemble_size, dim), dtype=np.float64)
    all_b = np.empty(ensemble_size, dtype=np.float64)
    for s in range(ensemble_size):
        rng = random.Random(derive_seed(seed, "member", s))
        neg_ids = rng.sample(pool, need)
        x = np.concatenate([x_pos, _doc_matrix(neg_ids, doc_embeddings)])
        order = np.empty(epochs * n_total, dtype=np.int64)
        idx = list(range(n_total))
        for e in range(epochs):
            rng.shuffle(idx)
            order[e * n_total : (e + 1) * n_total] = idx
        w, b = _kernels.hinge_sgd(x, y, order, lam)
        all_w[s] = w
        all_b[s] = b
    return ClassifierEnsemble(
        event_id=positives.event_id,
        weights=all_w,
        biases=all_b,
        negative_ratio=negative_ratio,
        seed=seed,
    )


def score_and_assign(
    ensembles: list[ClassifierEnsemble],
    corpus: Corpus,
    doc_embeddings: EmbeddingTable,
    events: dict[int, CandidateEvent],
    phrase_sets: dict[int, set[str]],
) -> tuple[list[KeyEvent], list[str]]:
    """Score every document with every ensemble; assign each document to
    its argmax event iff that mean score is positive.

    Returns the key events (documents ranked by score, disjoint across
    events) and the outliers — documents positive for no event.
    """
    if not ensembles:
        raise DataError("need at least one trained ensemble")
    doc_ids = sorted(corpus.by_id)
    matrix = _doc_matrix(doc_ids, doc_embeddings)
    ordered = sorted(ensembles, key=lambda e: e.event_id)
    scores = np.stack([ens.score_many(matrix) for ens in ordered], axis=1)

    best_idx = scores.argmax(axis=1)
    best_val = scores[np.arange(len(doc_ids)), best_idx]

    assigned: dict[int, list[tuple[str, float]]] = {e.event_id: [] for e in ordered}
    outliers = []
    for i, doc_id in enumerate(doc_ids):
        if best_val[i] > 0.0:
            assigned[ordered[best_idx[i]].event_id].append((doc_id, float(best_val[i])))
        else:
            outliers.append(doc_id)
    key_events = []
    for ens in ordered:
        docs = sorted(assigned[ens.event_id], key=lambda t: (-t[1], t[0]))
        key_events.append(
            KeyEvent(
                event_id=ens.event_id,
                documents=docs,
                phrases=set(phrase_sets.get(ens.event_id, set())),
                span=events[ens.event_id].span,
            )
        )
    return key_events, outliers


def _consecutive_day_clusters(
    docs: list[tuple[str, int]]
) -> list[list[tuple[str, int]]]:
    """Group (doc id, day) pairs so that docs on the same or adjacent days
    chain into one cluster."""
    clusters: list[list[tuple[str, int]]] = []
    for doc_id, day in sorted(docs, key=lambda t: (t[1], t[0])):
        if clusters and day - clusters[-1][-1][1] <= 1:
            clusters[-1].append((doc_id, day))
        else:
            clusters.append([(doc_id, day)])
    return clusters


def temporal_post_filter(
    event: KeyEvent, corpus: Corpus, lead_n: int = 3
) -> tuple[KeyEvent, list[list[str]]]:
    """Remove suspect out-of-span documents from an event.

    Out-of-span documents are grouped into consecutive-day clusters. A
    document is removed iff its cluster holds two or more documents, or
    its lead sentences mention no explicit date inside the event span.
    Removed documents come back as clusters for the refinement step.
    """
    lo, hi = event.span
    window = (corpus.date_of_day(lo), corpus.date_of_day(hi))
    out_of_span = []
    for doc_id, _ in event.documents:
        day = corpus.day_of(doc_id)
        if day < lo or day > hi:
            out_of_span.append((doc_id, day))

    removed: set[str] = set()
    filtered_clusters: list[list[str]] = []
    for cluster in _consecutive_day_clusters(out_of_span):
        if len(cluster) >= 2:
            filtered_clusters.append([d for d, _ in cluster])
            removed.update(d for d, _ in cluster)
            continue
        doc_id, _ = cluster[0]
        doc = corpus.by_id[doc_id]
        text = " ".join(doc.lead_sentences(lead_n))
        if not mentions_date_in(text, doc.date, window):
            filtered_clusters.append([doc_id])
            removed.add(doc_id)

    kept = [(d, s) for d, s in event.documents if d not in removed]
    return (
        KeyEvent(
            event_id=event.event_id,
            documents=kept,
            phrases=set(event.phrases),
            span=event.span,
        ),
        filtered_clusters,
    )


def _cluster_phrases(
    cluster: list[str],
    corpus: Corpus,
    index: OccurrenceIndex,
    top: int = 5,
) -> set[str]:
    """Indicative phrases for a document cluster: rank the candidate
    vocabulary by cluster term frequency times corpus inverse document
    frequency."""
    num_docs = len(corpus)
    cluster_set = set(cluster)
    scored = []
    for phrase in sorted(index.doc_freq):
        docs = index.doc_freq[phrase]
        tf = sum(c for d, c in docs.items() if d in cluster_set)
        if tf <= 0:
            continue
        idf = math.log(num_docs / len(docs))
        score = (1.0 + math.log(tf)) * idf
        scored.append((phrase, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return {p for p, _ in scored[:top]}


def refine_iteration(
    events: list[KeyEvent],
    pseudo: dict[int, PseudoLabelSet],
    ensembles: dict[int, ClassifierEnsemble],
    filtered_clusters: list[list[str]],
    corpus: Corpus,
    index: OccurrenceIndex,
    doc_embeddings: EmbeddingTable,
    add_top: int = 5,
    new_phrase_top: int = 5,
    next_event_id: int = 0,
) -> tuple[dict[int, PseudoLabelSet], list[CandidateEvent], dict]:
    """One feedback step.

    Per event: pseudo positives scoring negative under the event's own
    ensemble are dropped, then the event's add_top highest-ranked
    retrieved documents are appended (without duplicates). Every filtered
    cluster of two or more documents becomes a new candidate event
    spanning its publication days, carrying the cluster's top tf-idf
    phrases.
    """
    if add_top < 1:
        raise DataError(f"add_top must be >= 1, got {add_top}")
    new_pseudo: dict[int, PseudoLabelSet] = {}
    audit = {"removed": {}, "added": {}, "new_events": []}
    for ev in events:
        ps = pseudo[ev.event_id]
        ens = ensembles[ev.event_id]
        keep = []
        removed = []
        for doc_id in ps.positives:
            vec = doc_embeddings.get(doc_id)
            if vec is None:
                raise DataError(f"missing document embedding: {doc_id}")
            if ens.score(vec) < 0.0:
                removed.append(doc_id)
            else:
                keep.append(doc_id)
        additions = []
        have = set(keep)
        for doc_id, _ in ev.documents[:add_top]:
            if doc_id not in have:
                additions.append(doc_id)
                have.add(doc_id)
        positives = keep + additions
        scores = {d: ps.match_scores.get(d, 0) for d in positives}
        new_pseudo[ev.event_id] = PseudoLabelSet(
            event_id=ev.event_id, positives=positives, match_scores=scores
        )
        audit["removed"][ev.event_id] = removed
        audit["added"][ev.event_id] = additions

    new_events: list[CandidateEvent] = []
    next_id = next_event_id
    for cluster in filtered_clusters:
        if len(cluster) < 2:
            continue
        days = [corpus.day_of(d) for d in cluster]
        phrases = _cluster_phrases(cluster, corpus, index, top=new_phrase_top)
        if not phrases:
            continue
        new_events.append(
            CandidateEvent(
                event_id=next_id,
                phrases=phrases,
                span=(min(days), max(days)),
                member_nodes=[],
            )
        )
        audit["new_events"].append(
            {"event": next_id, "docs": sorted(cluster), "phrases": sorted(phrases)}
        )
        next_id += 1
    return new_pseudo, new_events, audit


@dataclass
class SelectionResult:
    events: list[KeyEvent]
    outliers: list[str]
    audit: list[dict]


def run_selection_loop(
    candidates: list[CandidateEvent],
    corpus: Corpus,
    index: OccurrenceIndex,
    candidate_pool,
    phrase_embeddings: EmbeddingTable,
    doc_embeddings: EmbeddingTable,
    threshold: float = 0.95,
    pseudo_top: int = 10,
    negative_ratio: int = 2,
    ensemble_size: int = 50,
    add_top: int = 5,
    new_phrase_top: int = 5,
    iterations: int = 2,
    seed: int = 0,
    mode: str = "full",
) -> SelectionResult:
    """Run the selection rounds over all candidate events.

    mode "full" runs classifier training with refinement for the requested
    iterations; "match" skips classifiers entirely and assigns documents
    by enriched-phrase match counts (the no-classifier baseline).
    """
    if not candidates:
        raise DataError("need at least one candidate event")
    if iterations < 1:
        raise DataError(f"iterations must be >= 1, got {iterations}")
    if mode not in ("full", "match"):
        raise DataError(f"unknown selection mode {mode!r}")

    enriched: dict[int, set[str]] = {}
    skipped: list[str] = []
    for ev in candidates:
        enriched[ev.event_id] = enrich_phrases(
            ev.phrases, candidate_pool, phrase_embeddings, threshold,
            skipped=skipped,
        )

    if mode == "match":
        events = _match_only_assign(candidates, enriched, corpus, index)
        assigned = {d for ev in events for d in ev.doc_ids}
        outliers = sorted(set(corpus.by_id) - assigned)
        return SelectionResult(events=events, outliers=outliers, audit=[])

    live: dict[int, CandidateEvent] = {}
    pseudo: dict[int, PseudoLabelSet] = {}
    pending: list[CandidateEvent] = list(candidates)
    audit: list[dict] = []
    next_event_id = max(ev.event_id for ev in candidates) + 1
    final_events: list[KeyEvent] = []
    final_outliers: list[str] = []

    for it in range(1, iterations + 1):
        # absorb events that are new this round: enrich and pseudo-label
        for ev in pending:
            if ev.event_id not in enriched:
                enriched[ev.event_id] = enrich_phrases(
                    ev.phrases, candidate_pool, phrase_embeddings, threshold,
                    skipped=skipped,
                )
            ps = generate_pseudo_labels(
                ev, enriched[ev.event_id], corpus, index, pseudo_top
            )
            if len(ps) >= 2:
                live[ev.event_id] = ev
                pseudo[ev.event_id] = ps
        pending = []

        # events whose pseudo sets shrank below the training floor drop out
        for event_id in sorted(list(live)):
            if len(pseudo[event_id]) < 2:
                del live[event_id]
                del pseudo[event_id]
        if not live:
            if it > 1:
                # refinement starved every event of pseudo-labels; a further
                # iteration cannot train anything, so the previous pass
                # stands as the final answer
                break
            raise DataError("all candidate events went dormant")

        ensembles: dict[int, ClassifierEnsemble] = {}
        for event_id in sorted(live):
            ensembles[event_id] = train_ensemble(
                pseudo[event_id],
                corpus,
                doc_embeddings,
                negative_ratio=negative_ratio,
                ensemble_size=ensemble_size,
                seed=derive_seed(seed, "train", it, event_id),
            )
        events, outliers = score_and_assign(
            list(ensembles.values()), corpus, doc_embeddings, live, enriched
        )
        filtered: list[list[str]] = []
        post_events = []
        for ev in events:
            kept, clusters = temporal_post_filter(ev, corpus)
            post_events.append(kept)
            filtered.extend(clusters)

        record = {
            "iteration": it,
            "events": {
                str(ev.event_id): {
                    "docs": len(ev.documents),
                    "pseudo": list(pseudo[ev.event_id].positives),
                }
                for ev in post_events
            },
            "outliers": len(outliers),
        }

        if it < iterations:
            pseudo, new_events, refine_audit = refine_iteration(
                post_events,
                pseudo,
                ensembles,
                filtered,
                corpus,
                index,
                doc_embeddings,
                add_top=add_top,
                new_phrase_top=new_phrase_top,
                next_event_id=next_event_id,
            )
            next_event_id += len(new_events)
            pending = new_events
            record["refine"] = {
                "removed": {str(k): v for k, v in refine_audit["removed"].items()},
                "added": {str(k): v for k, v in refine_audit["added"].items()},
                "new_events": refine_audit["new_events"],
            }
        audit.append(record)
        final_events = post_events
        final_outliers = outliers

    final_events = [ev for ev in final_events if ev.documents]
    return SelectionResult(
        events=final_events, outliers=final_outliers, audit=audit
    )


def _match_only_assign(
    candidates: list[CandidateEvent],
    enriched: dict[int, set[str]],
    corpus: Corpus,
    index: OccurrenceIndex,
) -> list[KeyEvent]:
    """No-classifier baseline: every document goes to the in-span event
    whose enriched phrases it mentions most (ties to the lower event id)."""
    ordered = sorted(candidates, key=lambda e: e.event_id)
    best: dict[str, tuple[int, int]] = {}  # doc -> (count, event pos)
    for pos, ev in enumerate(ordered):
        lo, hi = ev.span
        counts: dict[str, int] = {}
        for phrase in sorted(enriched[ev.event_id]):
            for doc_id, c in index.doc_freq.get(phrase, {}).items():
                counts[doc_id] = counts.get(doc_id, 0) + c
        for doc_id, c in counts.items():
            if c <= 0:
                continue
            day = corpus.day_of(doc_id)
            if not lo <= day <= hi:
                continue
            cur = best.get(doc_id)
            if cur is None or c > cur[0]:
                best[doc_id] = (c, pos)
    assigned: dict[int, list[tuple[str, float]]] = {ev.event_id: [] for ev in ordered}
    for doc_id, (c, pos) in best.items():
        assigned[ordered[pos].event_id].append((doc_id, float(c)))
    out = []
    for ev in ordered:
        docs = sorted(
            assigned[ev.event_id],
            key=lambda t: (-t[1], corpus.day_of(t[0]), t[0]),
        )
        out.append(
            KeyEvent(
                event_id=ev.event_id,
                documents=docs,
                phrases=set(enriched[ev.event_id]),
                span=ev.span,
            )
        )
    return [ev for ev in out if ev.documents]
