"""Peak phrase detection: ttf-itf scoring of (phrase, day) pairs.

ttf aggregates a phrase's day frequency over a short forward window with
decreasing weights (news keeps discussing an event after it happens); itf
divides the calendar width of the corpus — empty days included — by the
number of days the phrase appears at all. The product ttf * ln(itf) is
high exactly when a phrase is busy on a day but rare across the span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, OccurrenceIndex
from .errors import DataError


@dataclass(frozen=True)
class PeakPhrase:
    """A (phrase, day) pair with its burst statistics."""

    phrase: str
    day: int
    ttf: float
    itf: float
    score: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.phrase, self.day)


def ttf(phrase: str, day: int, index: OccurrenceIndex, window: int, span_end: int) -> float:
    """Weighted frequency aggregate over [day, day + window): weight
    (1 - i/window) on the i-th later day, normalized by window size. Days
    past the corpus end contribute zero rather than shrinking the window."""
    if window < 1:
        raise DataError(f"window must be >= 1, got {window}")
    total = 0.0
    for i in range(window):
        d = day + i
        if d > span_end:
            break
        total += (1.0 - i / window) * index.freq_on_day(phrase, d)
    return total / window


def itf(phrase: str, span: tuple[int, int], index: OccurrenceIndex) -> float:
    """Calendar days in the span divided by days the phrase occurs on."""
    active_days = len(index.day_presence(phrase))
    if active_days == 0:
        raise DataError(f"phrase {phrase!r} never occurs; itf undefined")
    return (span[1] - span[0] + 1) / active_days


def ttf_itf(
    phrase: str, day: int, index: OccurrenceIndex, window: int, span: tuple[int, int]
) -> float:
    return ttf(phrase, day, index, window, span[1]) * math.log(itf(phrase, span, index))


def score_all(
    corpus: Corpus,
    index: OccurrenceIndex,
    phrases: list[str],
    window: int = 3,
) -> list[PeakPhrase]:
    """Score every (phrase, day) pair with positive ttf.

    Vectorized over days per phrase; output order is (phrase, day)
    ascending, which downstream tie-breaking relies on.
    """
    span = corpus.span
    n_days = corpus.num_days
    if n_days <= 0:
        return []
    weights = np.array([(1.0 - i / window) / window for i in range(window)])
    out = []
    for phrase in sorted(set(phrases)):
        day_freq = index.day_freq.get(phrase)
        if not day_freq:
            continue
        f = np.zeros(n_days + window - 1)
        for day, c in day_freq.items():
            f[day - span[0]] = c
        # np.correlate(f, w, "valid")[t] = sum_i f[t+i] * w[i]
        ttf_vec = np.correlate(f, weights, mode="valid")
        phrase_itf = n_days / len(day_freq)
        log_itf = math.log(phrase_itf)
        for t in np.nonzero(ttf_vec > 0)[0]:
            tv = float(ttf_vec[t])
            out.append(
                PeakPhrase(
                    phrase=phrase,
                    day=int(t) + span[0],
                    ttf=tv,
                    itf=phrase_itf,
                    score=tv * log_itf,
                )
            )
    return out


def select_peaks(
    scored: list[PeakPhrase],
    quantile: float = 0.03,
    count: int | None = None,
) -> list[PeakPhrase]:
    """Keep the top-scoring pairs: the top ``quantile`` fraction of the
    pairs with positive ttf (or an absolute ``count`` when given), restricted
    to pairs with strictly positive score.

    Ordering/tie-break is (score desc, phrase asc, day asc), so equal-score
    selections are stable across runs.
    """
    if count is None:
        if not (0.0 < quantile < 1.0):
            raise DataError(f"quantile must be in (0, 1), got {quantile}")
        n_pairs = len(scored)  # callers pass pairs with ttf > 0 only
        k = math.ceil(quantile * n_pairs)
    else:
        if count < 1:
            raise DataError(f"count must be >= 1, got {count}")
        k = count
    positive = [p for p in scored if p.score > 0.0]
    positive.sort(key=lambda p: (-p.score, p.phrase, p.day))
    return positive[:k]


def write_peaks_tsv(path, peaks: list[PeakPhrase], corpus: Corpus) -> None:
    """Export: phrase, date, ttf, itf, score."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("phrase\tdate\tttf\titf\tscore\n")
        for p in peaks:
            date = corpus.date_of_day(p.day).isoformat()
            fh.write(f"{p.phrase}\t{date}\t{p.ttf:.6f}\t{p.itf:.6f}\t{p.score:.6f}\n")
