"""Deterministic encoder and the two embedding operations.

A phrase embeds as the average over its mentions of a concatenated pair
of features: the mean vector of the phrase's own tokens (content) and
the vector of the sentence with the whole phrase replaced by one mask
token (context). A document embeds as the mean of its lead sentences'
vectors. Which encoder supplies token vectors is a config choice; the
built-in ``hash-<dim>`` family needs no downloads and is exactly
reproducible, so every contract test can run anywhere.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

MASK_TOKEN = "[MASK]"


class RequestError(ValueError):
    """The request cannot produce a vector (bad payload, nothing valid)."""


def _hash_dim(model_id: str) -> int:
    tail = model_id.split("-", 1)
    if len(tail) != 2 or tail[0] != "hash":
        raise ValueError(
            f"unknown encoder model {model_id!r}; expected hash-<dim>"
        )
    try:
        dim = int(tail[1])
    except ValueError as exc:
        raise ValueError(f"bad dimension in model id {model_id!r}") from exc
    if dim < 4:
        raise ValueError(f"encoder dimension must be >= 4, got {dim}")
    return dim


class HashEncoder:
    """Pseudo-random but fully deterministic token encoder.

    Every distinct token (case-folded) maps to a fixed unit vector whose
    coordinates come from an RNG seeded by a digest of (model id, token).
    Sentences embed as the mean of their token vectors, so shared words
    drive sentence similarity. Identical requests therefore produce
    identical vectors on any machine, with no model downloads: the
    behaviour the downstream contract tests rely on.
    """

    def __init__(self, model_id: str = "hash-64"):
        self.model_id = model_id
        self.dim = _hash_dim(model_id)
        self._cache: dict[str, np.ndarray] = {}

    def token_vector(self, token: str) -> np.ndarray:
        tok = token.lower()
        vec = self._cache.get(tok)
        if vec is None:
            digest = hashlib.sha256(
                f"{self.model_id}\x00{tok}".encode("utf-8")
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[tok] = vec
        return vec

    def encode_tokens(self, tokens: list[str]) -> np.ndarray:
        """Per-token vectors as an (n, dim) matrix."""
        if not tokens:
            raise RequestError("no tokens to encode")
        return np.stack([self.token_vector(t) for t in tokens])

    def sentence_vector(self, sentence: str) -> np.ndarray:
        tokens = sentence.split()
        if not tokens:
            raise RequestError("sentence has no tokens")
        return self.encode_tokens(tokens).mean(axis=0)


def mention_features(encoder, tokens: list[str], span) -> np.ndarray:
    """One mention's concatenated (content, context) vector of dim 2d.

    span is a half-open [start, end) token range inside the sentence.
    Content averages the phrase tokens themselves; context averages the
    sentence with the whole span collapsed to a single mask token, so
    the surroundings decide the second half.
    """
    start, end = span
    if not (0 <= start < end <= len(tokens)):
        raise RequestError(
            f"span [{start}, {end}) out of bounds for {len(tokens)} tokens"
        )
    content = encoder.encode_tokens(tokens[start:end]).mean(axis=0)
    masked = list(tokens[:start]) + [MASK_TOKEN] + list(tokens[end:])
    context = encoder.encode_tokens(masked).mean(axis=0)
    return np.concatenate([content, context])


@dataclass
class PhraseResult:
    """A phrase vector plus the bookkeeping the API reports back."""

    vector: np.ndarray
    mentions_total: int
    mentions_used: int
    skipped: list[dict]
    mention_cap: int


def embed_phrase(
    encoder,
    mentions: list[tuple[list[str], tuple[int, int]]],
    mention_cap: int = 200,
    seed: int = 0,
) -> PhraseResult:
    """Mean of the concatenated mention features.

    Mentions with invalid spans are skipped and reported per index; a
    request where none survive is rejected outright. Beyond the cap,
    mentions are sampled uniformly with the configured seed (the cap is
    echoed in the result so callers can see it applied).
    """
    total = len(mentions)
    if total == 0:
        raise RequestError("phrase request carries no mentions")
    picked = range(total)
    if total > mention_cap:
        rng = np.random.default_rng(seed)
        picked = sorted(rng.choice(total, size=mention_cap, replace=False))
    feats = []
    skipped: list[dict] = []
    for i in picked:
        tokens, span = mentions[i]
        try:
            feats.append(mention_features(encoder, tokens, span))
        except RequestError as exc:
            skipped.append({"index": int(i), "error": str(exc)})
    if not feats:
        raise RequestError("no valid mentions in request")
    return PhraseResult(
        vector=np.mean(feats, axis=0),
        mentions_total=total,
        mentions_used=len(feats),
        skipped=skipped,
        mention_cap=mention_cap,
    )


def embed_document(encoder, sentences: list[str]) -> np.ndarray:
    """Mean of the per-sentence vectors for up to 3 lead sentences."""
    if not sentences:
        raise RequestError("document request carries no sentences")
    if len(sentences) > 3:
        raise RequestError(
            f"at most 3 lead sentences are used, got {len(sentences)}"
        )
    vecs = []
    for i, sentence in enumerate(sentences):
        try:
            vecs.append(encoder.sentence_vector(sentence))
        except RequestError as exc:
            raise RequestError(f"sentence {i}: {exc}") from exc
    return np.mean(vecs, axis=0)
