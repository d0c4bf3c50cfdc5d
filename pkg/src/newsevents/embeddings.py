"""Embedding tables: TSV persistence, cosine similarity, service client.

Vectors for phrases and documents are produced out of band (an embedding
service or precomputed files) and consumed here. One table holds vectors of
a single dimension; phrase and document tables are kept separate because
their dimensions differ in general.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import DataError


class EmbeddingTable:
    """A key -> float vector map with a fixed dimension."""

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def __contains__(self, key: str) -> bool:
        return key in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, key: str) -> np.ndarray | None:
        return self.vectors.get(key)

    def add(self, key: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1:
            raise DataError(f"vector for {key!r} is not 1-dimensional")
        with self._lock:
            if self.dim is None:
                self.dim = int(vec.shape[0])
            elif vec.shape[0] != self.dim:
                raise DataError(
                    f"dimension mismatch for key {key!r}: "
                    f"expected {self.dim}, got {vec.shape[0]}"
                )
            if key in self.vectors:
                raise DataError(f"duplicate embedding key {key!r}")
            self.vectors[key] = vec

    def missing(self, keys) -> list[str]:
        return [k for k in keys if k not in self.vectors]


def cosine(a, b) -> float:
    """Cosine similarity; zero vectors yield 0 (no similarity evidence)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"cosine dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def load_embeddings(path) -> EmbeddingTable:
    """Read the vector TSV format: header ``dim<TAB>D``, then one
    ``key<TAB>f1..fD`` row per vector. Keys may contain spaces, not tabs."""
    table = EmbeddingTable()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    with fh:
        header = fh.readline().rstrip("\n")
        parts = header.split("\t")
        if len(parts) != 2 or parts[0] != "dim":
            raise DataError(f"{path}: bad vector file header {header!r}")
        try:
            dim = int(parts[1])
        except ValueError as e:
            raise DataError(f"{path}: bad dimension {parts[1]!r}") from e
        table.dim = dim
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            key = fields[0]
            if len(fields) - 1 != dim:
                raise DataError(
                    f"{path} line {line_no}: key {key!r} has {len(fields) - 1} "
                    f"components, expected {dim}"
                )
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError as e:
                raise DataError(f"{path} line {line_no}: bad float for {key!r}") from e
            table.add(key, vec)
    return table


def save_embeddings(path, table: EmbeddingTable) -> None:
    """Write the TSV format with shortest round-trip float formatting."""
    if table.dim is None:
        raise DataError("cannot save an empty table with unknown dimension")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim\t{table.dim}\n")
        for key in table.vectors:
            row = "\t".join(repr(float(x)) for x in table.vectors[key])
            fh.write(f"{key}\t{row}\n")


@dataclass
class EmbeddingRequest:
    """One item for the embedding service.

    kind is "phrase" (payload: {"mentions": [{"tokens": [...], "span": [s, e]}]})
    or "document" (payload: {"sentences": [...]}).
    """

    key: str
    kind: str
    payload: dict = field(default_factory=dict)


def fetch_missing(
    table: EmbeddingTable,
    requests_list: list[EmbeddingRequest],
    endpoint: str,
    attempts: int = 3,
    backoff: float = 0.5,
    timeout: float = 30.0,
) -> list[str]:
    """Fetch vectors for keys not already in the table.

    Idempotent: cached keys are never re-requested. Each HTTP call retries
    with exponential backoff (``attempts`` tries total) before failing.
    Keys the server reports as unknown are returned as the missing list;
    transport failures raise DataError.
    """
    endpoint = endpoint.rstrip("/")
    missing: list[str] = []
    todo = [r for r in requests_list if r.key not in table]
    handled: set[str] = set()
    for req in todo:
        if req.kind not in ("phrase", "document"):
            raise DataError(f"unknown embedding request kind {req.kind!r}")
        if req.key in handled:
            continue  # duplicate key within this batch: one fetch is enough
        handled.add(req.key)
        url = f"{endpoint}/v1/embed/{req.kind}"
        body = {"key": req.key, **req.payload}
        resp = _post_with_retry(url, body, attempts, backoff, timeout)
        if resp is None:
            missing.append(req.key)
            continue
        table.add(req.key, resp["vector"])
    return missing


def _post_with_retry(url, body, attempts, backoff, timeout):
    """POST JSON; retry transport errors and 5xx. A 4xx means the server
    understood and rejected the key: record as missing (return None)."""
    last_err = None
    for attempt in range(attempts):
        if attempt:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            r = requests.post(url, json=body, timeout=timeout)
        except requests.RequestException as e:
            last_err = e
            continue
        if 400 <= r.status_code < 500:
            return None
        if r.status_code >= 500:
            last_err = DataError(f"{url} returned {r.status_code}")
            continue
        return r.json()
    raise DataError(f"embedding endpoint unreachable after {attempts} attempts: {last_err}")
