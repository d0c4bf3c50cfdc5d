"""HTTP face: a versioned JSON API over the deterministic encoder.

Request errors come back as status 400 with an ``error`` field, which
clients treat as "this key has no vector" rather than a server fault.
Handlers hold no mutable state, so concurrent clients are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .encoder import HashEncoder, RequestError, embed_document, embed_phrase


@dataclass
class ServiceConfig:
    model: str = "hash-64"
    mention_cap: int = 200
    seed: int = 0


class Mention(BaseModel):
    tokens: list[str]
    span: tuple[int, int]


class PhraseRequest(BaseModel):
    key: str | None = None
    phrase: str | None = None
    mentions: list[Mention]


class DocumentRequest(BaseModel):
    key: str | None = None
    sentences: list[str]


class TokensRequest(BaseModel):
    tokens: list[str]


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    encoder = HashEncoder(cfg.model)
    app = FastAPI(title="embed-service", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestError)
    async def _request_error(_request: Request, exc: RequestError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "model": cfg.model,
            "document_dim": encoder.dim,
            "phrase_dim": 2 * encoder.dim,
            "mention_cap": cfg.mention_cap,
        }

    @app.post("/v1/embed/phrase")
    def phrase(req: PhraseRequest):
        result = embed_phrase(
            encoder,
            [(m.tokens, m.span) for m in req.mentions],
            mention_cap=cfg.mention_cap,
            seed=cfg.seed,
        )
        return {
            "key": req.key,
            "vector": [float(x) for x in result.vector],
            "dim": 2 * encoder.dim,
            "model": cfg.model,
            "mentions_total": result.mentions_total,
            "mentions_used": result.mentions_used,
            "mention_cap": result.mention_cap,
            "skipped": result.skipped,
        }

    @app.post("/v1/embed/document")
    def document(req: DocumentRequest):
        vector = embed_document(encoder, req.sentences)
        return {
            "key": req.key,
            "vector": [float(x) for x in vector],
            "dim": encoder.dim,
            "model": cfg.model,
        }

    @app.post("/v1/encode/tokens")
    def tokens(req: TokensRequest):
        matrix = encoder.encode_tokens(req.tokens)
        return {
            "vectors": [[float(x) for x in row] for row in matrix],
            "dim": encoder.dim,
            "model": cfg.model,
        }

    return app
