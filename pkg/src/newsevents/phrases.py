"""Candidate phrase vocabulary: external lists or n-gram fallback, then a
corpus-level tf-idf cut.

An externally mined phrase list is preferred when available; the built-in
miner is a frequency fallback that keeps contiguous n-grams not starting or
ending with a stopword.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus, OccurrenceIndex, build_occurrence_index, tokenize
from .errors import DataError

# Compact English function-word list used only to trim n-gram boundaries.
STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be because
    been before being below between both but by can cannot could did do does
    doing down during each few for from further had has have having he her here
    hers herself him himself his how i if in into is it its itself just me more
    most my myself no nor not now of off on once only or other our ours
    ourselves out over own same she should so some such than that the their
    theirs them themselves then there these they this those through to too
    under until up very was we were what when where which while who whom why
    will with would you your yours yourself yourselves""".split()
)


@dataclass
class CandidatePhrase:
    """A normalized phrase with corpus-level statistics."""

    phrase: str
    total_freq: int
    doc_count: int
    tfidf: float = 0.0


def load_phrase_file(path) -> list[str]:
    """Read one phrase per line, normalize with the corpus tokenizer."""
    phrases = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = tokenize(line)
            if toks:
                phrases.append(" ".join(toks))
    return list(dict.fromkeys(phrases))


def load_stopword_file(path) -> frozenset:
    with open(path, encoding="utf-8") as fh:
        words = {tok for line in fh for tok in tokenize(line)}
    return frozenset(words)


def mine_fallback_ngrams(
    corpus: Corpus,
    max_len: int = 3,
    min_count: int = 3,
    stopwords: frozenset = STOPWORDS,
) -> list[str]:
    """All contiguous 1..max_len-grams with total frequency >= min_count,
    excluding n-grams that start or end with a stopword.

    Returned sorted by (longer first, then descending frequency, then
    lexicographic) so downstream consumers see a stable order.
    """
    if max_len < 1:
        raise DataError(f"max_len must be >= 1, got {max_len}")
    if min_count < 1:
        raise DataError(f"min_count must be >= 1, got {min_count}")
    counts: dict[str, int] = {}
    for doc in corpus.documents:
        for sent in doc.sentences:
            n = len(sent)
            for length in range(1, max_len + 1):
                for start in range(0, n - length + 1):
                    if sent[start] in stopwords or sent[start + length - 1] in stopwords:
                        continue
                    gram = " ".join(sent[start : start + length])
                    counts[gram] = counts.get(gram, 0) + 1
    kept = [(g, c) for g, c in counts.items() if c >= min_count]
    kept.sort(key=lambda gc: (-len(gc[0].split()), -gc[1], gc[0]))
    return [g for g, _ in kept]


def corpus_tfidf(total_freq: int, doc_count: int, num_docs: int) -> float:
    """Corpus-level tf-idf: (1 + ln(total frequency)) * ln(N / doc count)."""
    if total_freq < 1:
        raise DataError("phrase must occur at least once")
    if not (1 <= doc_count <= num_docs):
        raise DataError(
            f"doc_count {doc_count} out of range for corpus of {num_docs}"
        )
    return (1.0 + math.log(total_freq)) * math.log(num_docs / doc_count)


def score_candidates(
    phrases: list[str], index: OccurrenceIndex, num_docs: int
) -> list[CandidatePhrase]:
    """Attach corpus statistics and tf-idf; phrases absent from the corpus
    are dropped (tf-idf is undefined at zero frequency)."""
    out = []
    for phrase in phrases:
        total = index.total_freq(phrase)
        if total == 0:
            continue
        doc_count = len(index.doc_freq[phrase])
        out.append(
            CandidatePhrase(
                phrase=phrase,
                total_freq=total,
                doc_count=doc_count,
                tfidf=corpus_tfidf(total, doc_count, num_docs),
            )
        )
    return out


def filter_candidates(
    phrases: list[CandidatePhrase], keep_fraction: float = 0.70
) -> list[CandidatePhrase]:
    """Keep the top ceil(keep_fraction * N) phrases by tf-idf.

    Ties break on higher total frequency, then lexicographic phrase, so the
    retained set is invariant under input permutation.
    """
    if not (0.0 < keep_fraction <= 1.0):
        raise DataError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if not phrases:
        return []
    ranked = sorted(phrases, key=lambda c: (-c.tfidf, -c.total_freq, c.phrase))
    keep_n = math.ceil(keep_fraction * len(ranked))
    return ranked[:keep_n]


def build_candidates(
    corpus: Corpus,
    external_phrases: list[str] | None = None,
    keep_fraction: float = 0.70,
    max_len: int = 3,
    min_count: int = 3,
    stopwords: frozenset = STOPWORDS,
) -> tuple[list[CandidatePhrase], OccurrenceIndex]:
    """Produce the filtered candidate vocabulary and its occurrence index.

    External phrases take precedence over the fallback miner when supplied.
    The returned index covers the pre-filter vocabulary so later stages can
    still look up any candidate that was scored.
    """
    if external_phrases is not None:
        vocab = [" ".join(tokenize(p)) for p in external_phrases]
        vocab = [p for p in dict.fromkeys(vocab) if p]
    else:
        vocab = mine_fallback_ngrams(corpus, max_len, min_count, stopwords)
    index = build_occurrence_index(corpus, vocab)
    scored = score_candidates(vocab, index, len(corpus))
    return filter_candidates(scored, keep_fraction), index
