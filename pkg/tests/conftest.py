"""Shared fixtures: tiny corpora written as real JSONL files."""

import json

import pytest

from newsevents.corpus import ingest_corpus


@pytest.fixture
def write_corpus(tmp_path):
    """Return a helper that writes records to JSONL and ingests them."""

    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        return ingest_corpus(path)

    return _write


def day_records(texts_by_day, base="2021-03-01"):
    """Records with ids d<day>x<i>, one per text, dated base + day."""
    import datetime as dt

    base_date = dt.date.fromisoformat(base)
    records = []
    for day in sorted(texts_by_day):
        for i, text in enumerate(texts_by_day[day]):
            records.append({
                "id": f"d{day:02d}x{i}",
                "date": (base_date + dt.timedelta(days=day)).isoformat(),
                "title": f"doc day {day} #{i}",
                "text": text,
            })
    return records
