"""Phrase and document embedding service.

Serves concatenated content+context phrase vectors and lead-sentence
document vectors over a local HTTP API, plus a batch file-export mode
that writes the mining pipeline's vector TSV format.
"""

from .encoder import HashEncoder, RequestError, embed_document, embed_phrase
from .service import ServiceConfig, create_app

__version__ = "0.1.0"

__all__ = [
    "HashEncoder",
    "RequestError",
    "ServiceConfig",
    "create_app",
    "embed_document",
    "embed_phrase",
]
