"""Command line entry point: configure and serve the embedding app."""

from __future__ import annotations

import argparse
from typing import Optional, Sequence

from .app import ServerConfig, create_app


def build_config(argv: Optional[Sequence[str]] = None) -> ServerConfig:
    parser = argparse.ArgumentParser(
        prog="embed-server",
        description="Serve sentence embeddings over HTTP (/healthz, /v1/embed)")
    parser.add_argument("--model", default="BAAI/bge-m3",
                        help="model identifier, or hash:<dim> for the "
                             "deterministic offline backend (default BAAI/bge-m3)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--max-batch", type=int, default=32,
                        help="largest slice handed to the model at once")
    args = parser.parse_args(argv)
    return ServerConfig(model=args.model, host=args.host, port=args.port,
                        max_batch=args.max_batch)


def main(argv: Optional[Sequence[str]] = None) -> int:
    import uvicorn

    try:
        config = build_config(argv)
    except ValueError as exc:
        print(f"error: {exc}")
        return 1
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
