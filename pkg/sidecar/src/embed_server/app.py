"""FastAPI app exposing the embedding wire protocol.

GET /healthz -> 200 {"status":"ok","dim":D} once the model is loaded,
503 before. POST /v1/embed {"texts":[str],"normalize":bool} -> 200
{"vectors":[[float]],"dim":D,"model":id}; 400 on malformed input, 413 past
the batch hard cap, 503 while loading. Vectors come back in input order and
the count always equals the text count on 200. Truncated inputs are counted
in the X-Truncated-Count response header.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .backends import make_backend


@dataclass(frozen=True)
class ServerConfig:
    model: str = "BAAI/bge-m3"
    host: str = "127.0.0.1"
    port: int = 8000
    max_batch: int = 32
    max_texts: int = 1024
    normalize_default: bool = True

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("model must be non-empty")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.max_texts < 1:
            raise ValueError(f"max_texts must be >= 1, got {self.max_texts}")
        if not (0 <= self.port <= 65535):
            raise ValueError(f"port must be in 0..65535, got {self.port}")


class ModelLoader:
    """Holds the backend once loaded; `ready` is set when requests may embed."""

    def __init__(self, config: ServerConfig) -> None:
        self._config = config
        self.backend = None
        self.error: Optional[str] = None
        self.ready = threading.Event()
        # Single model worker: embed requests are serialized through this
        # lock so the backend never sees concurrent encode calls. The health
        # endpoint never takes it and stays responsive during long encodes.
        self.work_lock = threading.Lock()

    def load(self) -> None:
        try:
            self.backend = make_backend(self._config.model)
        except Exception as exc:  # surfaced via /healthz, not a crash
            self.error = str(exc)
        finally:
            self.ready.set()

    def load_in_background(self) -> None:
        threading.Thread(target=self.load, daemon=True).start()


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=400)


def create_app(config: ServerConfig, auto_load: bool = True) -> FastAPI:
    """Build the app; with auto_load the model loads on a background thread."""
    app = FastAPI()
    loader = ModelLoader(config)
    app.state.loader = loader
    app.state.config = config
    if auto_load:
        loader.load_in_background()

    @app.get("/healthz")
    def healthz():
        if loader.backend is None:
            body = {"status": "loading"}
            if loader.error:
                body = {"status": "error", "error": loader.error}
            return JSONResponse(body, status_code=503)
        return {"status": "ok", "dim": loader.backend.dim}

    @app.post("/v1/embed")
    async def embed(request: Request):
        # Validated by hand so malformed input is a 400, never a 422.
        try:
            body = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _bad_request("body is not valid JSON")
        if not isinstance(body, dict):
            return _bad_request("body must be a JSON object")
        texts = body.get("texts")
        if not isinstance(texts, list):
            return _bad_request("'texts' must be a list of strings")
        if not texts:
            return _bad_request("'texts' must be non-empty")
        if any(not isinstance(t, str) for t in texts):
            return _bad_request("'texts' entries must all be strings")
        if len(texts) > config.max_texts:
            return JSONResponse(
                {"error": f"batch of {len(texts)} exceeds cap {config.max_texts}"},
                status_code=413)
        normalize = body.get("normalize", config.normalize_default)
        if not isinstance(normalize, bool):
            return _bad_request("'normalize' must be a boolean")
        backend = loader.backend
        if backend is None:
            return JSONResponse({"error": "model is not ready"}, status_code=503)

        vectors = []
        truncated = 0
        with loader.work_lock:
            for lo in range(0, len(texts), config.max_batch):
                matrix, cut = backend.encode(texts[lo:lo + config.max_batch], normalize)
                truncated += cut
                vectors.extend(row.tolist() for row in matrix)
        return JSONResponse(
            {"vectors": vectors, "dim": backend.dim, "model": backend.model_id},
            headers={"X-Truncated-Count": str(truncated)})

    return app
