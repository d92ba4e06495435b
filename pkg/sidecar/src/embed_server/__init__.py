"""HTTP sidecar serving sentence embeddings over a small batch protocol."""

from .app import ServerConfig, create_app
from .backends import HashBackend, make_backend

__all__ = ["ServerConfig", "create_app", "HashBackend", "make_backend"]
