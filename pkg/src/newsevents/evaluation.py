"""Event-level evaluation: top-k matching precision, recall, and F1.

A predicted event matches a truth event when a strict majority of its
top-k documents (a bar of k/2, even for shorter lists) belong to the
truth set. Precision divides distinct matched truths by the number of
predictions holding at least k documents; recall divides by the number of
truth events; F1 is their harmonic mean. Empty denominators define the
metric as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DataError
from .selection import KeyEvent


@dataclass
class GroundTruth:
    """Reference key events: named sets of document ids."""

    events: list[set[str]]
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.events:
            raise DataError("ground truth must contain at least one event")
        for i, ev in enumerate(self.events):
            if not ev:
                raise DataError(f"ground truth event {i} is empty")
        if not self.names:
            self.names = [str(i) for i in range(len(self.events))]

    def __len__(self) -> int:
        return len(self.events)


def load_ground_truth(path) -> GroundTruth:
    """JSONL with one event per line: {"event_id": ..., "doc_ids": [...]}."""
    events: list[set[str]] = []
    names: list[str] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path} line {line_no}: invalid JSON: {e}") from e
            if "doc_ids" not in rec or not isinstance(rec["doc_ids"], list):
                raise DataError(f"{path} line {line_no}: missing doc_ids list")
            docs = {str(d) for d in rec["doc_ids"]}
            if not docs:
                raise DataError(f"{path} line {line_no}: empty doc_ids")
            events.append(docs)
            names.append(str(rec.get("event_id", line_no - 1)))
    if not events:
        raise DataError(f"{path}: no ground truth events found")
    return GroundTruth(events=events, names=names)


def _top_ids(predicted, k: int) -> list[str]:
    if isinstance(predicted, KeyEvent):
        ids = predicted.doc_ids
    else:
        ids = [d if isinstance(d, str) else d[0] for d in predicted]
    return ids[:k]


def kmatch(predicted, truth_event: set, k: int) -> bool:
    """True iff more than k/2 of the prediction's top-k documents lie in
    the truth set. Predictions shorter than k face the same absolute bar."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    inter = len(set(_top_ids(predicted, k)) & truth_event)
    return 2 * inter > k


def k_metrics(
    predicted: list, truth: GroundTruth, k: int
) -> tuple[float, float, float]:
    """(precision, recall, f1) at depth k."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    matched = 0
    for truth_event in truth.events:
        if any(kmatch(p, truth_event, k) for p in predicted):
            matched += 1
    eligible = sum(1 for p in predicted if len(_top_ids(p, k)) >= k)
    prec = matched / eligible if eligible else 0.0
    recall = matched / len(truth)
    f1 = 2 * prec * recall / (prec + recall) if prec + recall > 0 else 0.0
    return prec, recall, f1


def write_metrics_tsv(path, predicted: list, truth: GroundTruth, ks=(5, 10)) -> None:
    """Metric report over the requested depths, one row per k."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k\tprecision\trecall\tf1\n")
        for k in ks:
            prec, recall, f1 = k_metrics(predicted, truth, k)
            fh.write(f"{k}\t{prec:.6f}\t{recall:.6f}\t{f1:.6f}\n")
