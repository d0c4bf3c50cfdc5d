"""Corpus ingestion, normalization, BM25 theme retrieval, occurrence indexing.

Documents are dated news articles. Dates are converted to integer day
offsets from the corpus minimum date so that calendar days without any
document still exist in the span (day-level statistics divide by the full
calendar width, empty days included).
"""

from __future__ import annotations

import datetime as dt
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ._kernels import count_matches
from .errors import DataError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENT_SPLIT_RE = re.compile(r"(?<=[.?!])\s+")

BM25_K1 = 1.2
BM25_B = 0.75


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries (Unicode-aware)."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split raw text into sentences on terminal punctuation + whitespace."""
    return [s for s in _SENT_SPLIT_RE.split(text) if s.strip()]


@dataclass
class Document:
    """One dated news article with tokenized sentences.

    ``day`` is the offset from the owning corpus's minimum date; it is
    assigned when the corpus is built and re-derived if the document ends up
    in a sub-corpus with a different span.
    """

    id: str
    date: dt.date
    title: str
    sentences: list[list[str]]
    sentence_texts: list[str]
    raw_text: str
    day: int = 0

    @property
    def iso_date(self) -> str:
        return self.date.isoformat()

    def lead_sentences(self, n: int = 3) -> list[str]:
        """Raw text of the first n sentences (fewer if the article is short)."""
        return self.sentence_texts[:n]

    def lead_tokens(self, n: int = 3) -> list[list[str]]:
        return self.sentences[:n]


class Corpus:
    """An immutable set of documents plus day bookkeeping.

    day_index maps every day of the span (including empty ones) to the doc
    ids published that day. Construction re-derives day offsets from the
    documents actually present.
    """

    def __init__(self, documents: list[Document]):
        self.documents = list(documents)
        self.by_id: dict[str, Document] = {}
        for doc in self.documents:
            if doc.id in self.by_id:
                raise DataError(f"duplicate document id {doc.id!r}")
            self.by_id[doc.id] = doc
        if self.documents:
            self.base_date = min(d.date for d in self.documents)
            last = max(d.date for d in self.documents)
            self.span = (0, (last - self.base_date).days)
        else:
            self.base_date = None
            self.span = (0, -1)
        self.day_index: dict[int, list[str]] = {
            day: [] for day in range(self.span[0], self.span[1] + 1)
        }
        for doc in self.documents:
            doc.day = (doc.date - self.base_date).days
            self.day_index[doc.day].append(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def num_days(self) -> int:
        """Calendar width of the span, empty days included."""
        return self.span[1] - self.span[0] + 1

    def day_of(self, doc_id: str) -> int:
        return self.by_id[doc_id].day

    def date_of_day(self, day: int) -> dt.date:
        return self.base_date + dt.timedelta(days=day)

    def docs_on_day(self, day: int) -> list[str]:
        return self.day_index.get(day, [])


def _parse_record(line_no: int, line: str) -> Document:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise DataError(f"line {line_no}: invalid JSON ({e.msg})") from e
    if not isinstance(rec, dict):
        raise DataError(f"line {line_no}: record is not an object")
    for key in ("id", "date", "text"):
        if key not in rec:
            raise DataError(f"line {line_no}: missing required key {key!r}")
    try:
        date = dt.date.fromisoformat(str(rec["date"]))
    except ValueError as e:
        raise DataError(f"line {line_no}: unparseable date {rec['date']!r}") from e
    raw_text = str(rec["text"])
    sentence_texts = []
    sentences = []
    for sent in split_sentences(raw_text):
        toks = tokenize(sent)
        if toks:
            sentence_texts.append(sent)
            sentences.append(toks)
    if not sentences:
        raise DataError(f"line {line_no}: document {rec['id']!r} has no tokens")
    return Document(
        id=str(rec["id"]),
        date=date,
        title=str(rec.get("title", "")),
        sentences=sentences,
        sentence_texts=sentence_texts,
        raw_text=raw_text,
    )


def ingest_corpus(path) -> Corpus:
    """Read a JSONL corpus file (keys: id, date, title?, text).

    Raises DataError naming the offending line for malformed records,
    duplicate ids, or unparseable dates.
    """
    docs = []
    seen = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path!r}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            doc = _parse_record(line_no, line)
            if doc.id in seen:
                raise DataError(f"line {line_no}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return Corpus(docs)


def bm25_scores(documents: list[Document], query: list[str]) -> dict[str, float]:
    """Okapi BM25 scores for every document against a tokenized query.

    Uses the non-negative idf variant ln(1 + (N - df + 0.5)/(df + 0.5)), so
    scores are >= 0 and exactly 0 iff no query term occurs in the document.
    """
    n_docs = len(documents)
    if n_docs == 0:
        return {}
    terms: set[str] = set()
    for q in query:
        terms.update(tokenize(q))
    if not terms:
        raise DataError("empty query")

    doc_tf = {}
    doc_len = {}
    for doc in documents:
        tf = {}
        length = 0
        for sent in doc.sentences:
            length += len(sent)
            for tok in sent:
                if tok in terms:
                    tf[tok] = tf.get(tok, 0) + 1
        doc_tf[doc.id] = tf
        doc_len[doc.id] = length
    avgdl = sum(doc_len.values()) / n_docs

    idf = {}
    for term in sorted(terms):
        df = sum(1 for tf in doc_tf.values() if term in tf)
        idf[term] = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))

    scores = {}
    for doc in documents:
        tf = doc_tf[doc.id]
        norm = BM25_K1 * (1.0 - BM25_B + BM25_B * doc_len[doc.id] / avgdl)
        s = 0.0
        for term in sorted(tf):
            f = tf[term]
            s += idf[term] * (f * (BM25_K1 + 1.0)) / (f + norm)
        scores[doc.id] = s
    return scores


def retrieve_theme(
    corpus: Corpus,
    query: list[str],
    date_window: tuple[dt.date, dt.date] | None = None,
    threshold: float = 0.0,
    top_fraction: float | None = None,
) -> tuple[Corpus, list[tuple[str, float]]]:
    """Select the theme sub-corpus by BM25 score and date pruning.

    Either keep documents scoring strictly above ``threshold`` (default 0,
    i.e. at least one query term present), or — when ``top_fraction`` is
    given — the top ceil(fraction * N) scorers. The date window prunes
    first. Returns the sub-corpus plus the score-ranked (id, score) list;
    an empty result is a valid empty corpus, not an error.
    """
    candidates = corpus.documents
    if date_window is not None:
        lo, hi = date_window
        candidates = [d for d in candidates if lo <= d.date <= hi]
    if not candidates:
        return Corpus([]), []
    scores = bm25_scores(candidates, query)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_fraction is not None:
        if not (0.0 < top_fraction <= 1.0):
            raise DataError(f"top_fraction must be in (0, 1], got {top_fraction}")
        keep_n = math.ceil(top_fraction * len(ranked))
        kept_ids = {doc_id for doc_id, _ in ranked[:keep_n]}
    else:
        kept_ids = {doc_id for doc_id, score in ranked if score > threshold}
    kept_docs = [_copy_doc(d) for d in candidates if d.id in kept_ids]
    ranked_kept = [(doc_id, s) for doc_id, s in ranked if doc_id in kept_ids]
    return Corpus(kept_docs), ranked_kept


def _copy_doc(doc: Document) -> Document:
    return Document(
        id=doc.id,
        date=doc.date,
        title=doc.title,
        sentences=doc.sentences,
        sentence_texts=doc.sentence_texts,
        raw_text=doc.raw_text,
    )


@dataclass
class OccurrenceIndex:
    """Phrase occurrence counts at document and day granularity.

    day_freq(p, t) always equals the sum of doc_freq(p, d) over documents
    published on day t; presence sets are the nonzero supports.
    """

    doc_freq: dict[str, dict[str, int]] = field(default_factory=dict)
    day_freq: dict[str, dict[int, int]] = field(default_factory=dict)

    def doc_presence(self, phrase: str) -> set[str]:
        return set(self.doc_freq.get(phrase, ()))

    def day_presence(self, phrase: str) -> set[int]:
        return set(self.day_freq.get(phrase, ()))

    def total_freq(self, phrase: str) -> int:
        return sum(self.doc_freq.get(phrase, {}).values())

    def freq_in_doc(self, phrase: str, doc_id: str) -> int:
        return self.doc_freq.get(phrase, {}).get(doc_id, 0)

    def freq_on_day(self, phrase: str, day: int) -> int:
        return self.day_freq.get(phrase, {}).get(day, 0)


def build_occurrence_index(corpus: Corpus, phrases: list[str]) -> OccurrenceIndex:
    """Count contiguous token-sequence matches of each phrase per document.

    Phrases must be normalized with the corpus tokenizer (space-joined
    tokens). Overlapping matches of one phrase count at each start
    position; matches never cross sentence boundaries. Unknown phrases
    simply get zero counts.
    """
    phrase_list = list(dict.fromkeys(phrases))  # dedupe, keep order
    vocab: dict[str, int] = {}

    def tok_id(tok: str) -> int:
        if tok not in vocab:
            vocab[tok] = len(vocab)
        return vocab[tok]

    doc_arrays = []
    for doc in corpus.documents:
        flat = []
        for sent in doc.sentences:
            for tok in sent:
                flat.append(tok_id(tok))
            flat.append(-1)  # sentence boundary sentinel
        doc_arrays.append(np.asarray(flat, dtype=np.int32))

    phrase_arrays = []
    usable = []  # positions into phrase_list
    for j, phrase in enumerate(phrase_list):
        toks = phrase.split(" ")
        if any(t not in vocab for t in toks):
            continue  # a token absent from the corpus can never match
        phrase_arrays.append(np.asarray([vocab[t] for t in toks], dtype=np.int32))
        usable.append(j)

    index = OccurrenceIndex()
    if phrase_arrays:
        doc_idx, phr_idx, counts = count_matches(doc_arrays, phrase_arrays)
        for di, pj, c in zip(doc_idx, phr_idx, counts):
            doc = corpus.documents[int(di)]
            phrase = phrase_list[usable[int(pj)]]
            index.doc_freq.setdefault(phrase, {})[doc.id] = int(c)
            day_map = index.day_freq.setdefault(phrase, {})
            day_map[doc.day] = day_map.get(doc.day, 0) + int(c)
    return index
