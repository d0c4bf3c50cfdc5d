"""Batch mode: JSONL requests in, vector TSV files out.

The request file holds one JSON object per line: {"key", "kind", "payload"}
with kind "phrase" (payload {"mentions": [{"tokens", "span"}, ...]}) or
"document" (payload {"sentences": [...]}). Output lands in the consumer's
vector TSV format — a ``dim<TAB>D`` header, then one tab-separated
``key f1 .. fD`` row per vector — as separate phrase and document files,
since their dimensions differ. Failures never abort the export: each bad
request becomes a row in an errors.jsonl sidecar instead.
"""

from __future__ import annotations

import json
import os

from .encoder import RequestError, embed_document, embed_phrase

PHRASES_FILE = "phrases.tsv"
DOCUMENTS_FILE = "documents.tsv"
ERRORS_FILE = "errors.jsonl"


def _write_tsv(path, dim, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim\t{dim}\n")
        for key, vec in rows:
            cells = "\t".join(repr(float(x)) for x in vec)
            fh.write(f"{key}\t{cells}\n")


def export_batch(
    encoder,
    requests_path,
    out_dir,
    mention_cap: int = 200,
    seed: int = 0,
) -> tuple[dict, list[dict]]:
    """Embed every request and write the TSV files plus an error sidecar.

    Returns ({"phrase": n, "document": n}, errors). An empty request file
    still produces both headers. The sidecar is written only when
    something failed.
    """
    phrase_rows: list[tuple[str, object]] = []
    doc_rows: list[tuple[str, object]] = []
    errors: list[dict] = []
    seen: set[str] = set()

    with open(requests_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            key = None
            try:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RequestError(f"invalid JSON: {exc}") from exc
                key = rec.get("key")
                if not isinstance(key, str) or not key:
                    key = None
                    raise RequestError("missing or empty key")
                if key in seen:
                    raise RequestError(f"duplicate key {key!r}")
                kind = rec.get("kind")
                payload = rec.get("payload") or {}
                if kind == "phrase":
                    raw = payload.get("mentions")
                    if not isinstance(raw, list):
                        raise RequestError("phrase payload needs a mentions list")
                    mentions = [
                        (list(m["tokens"]), tuple(m["span"])) for m in raw
                    ]
                    result = embed_phrase(encoder, mentions, mention_cap, seed)
                    phrase_rows.append((key, result.vector))
                elif kind == "document":
                    sentences = payload.get("sentences")
                    if not isinstance(sentences, list):
                        raise RequestError("document payload needs a sentences list")
                    doc_rows.append((key, embed_document(encoder, sentences)))
                else:
                    raise RequestError(f"unknown kind {kind!r}")
                seen.add(key)
            except (RequestError, KeyError, TypeError, ValueError) as exc:
                errors.append({"line": line_no, "key": key, "error": str(exc)})

    os.makedirs(out_dir, exist_ok=True)
    _write_tsv(os.path.join(out_dir, PHRASES_FILE), 2 * encoder.dim, phrase_rows)
    _write_tsv(os.path.join(out_dir, DOCUMENTS_FILE), encoder.dim, doc_rows)
    if errors:
        with open(os.path.join(out_dir, ERRORS_FILE), "w", encoding="utf-8") as fh:
            for err in errors:
                fh.write(json.dumps(err) + "\n")
    counts = {"phrase": len(phrase_rows), "document": len(doc_rows)}
    return counts, errors
