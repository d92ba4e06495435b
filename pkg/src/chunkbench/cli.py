"""Command line pipeline: chunk, embed, index, evaluate, compare, report.

Stages persist their artifacts in a working directory so runs are resumable
and inspectable: chunks-<method>.jsonl, embeddings-<method>.jsonl,
index-<method>.cbvx, records-<method>.jsonl, and report.{md,json,csv}.
Finals are written atomically (temp file + rename), never overwritten without
--force, and a lock file keeps concurrent runs out of one workdir.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime, I/O, or
provider failure.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .chunkers import (Chunk, ChunkConfig, ChunkMethod, LlmClient, chunk_document,
                       make_llm_client, read_chunks_jsonl, write_chunks_jsonl)
from .corpus import (CHUNKING_PROFILE, CorpusError, Document, QAPair, load_corpus,
                     load_qa_pairs, mini_corpus_path, mini_qa_path)
from .embedding import (EmbeddingVector, ProviderConfig, ProviderError, embed_texts,
                        provider_fingerprint, read_embeddings_jsonl, write_embeddings_jsonl)
from .evaluation import chunk_key, paired_t_test, run_evaluation
from .metrics import METRIC_KEYS, write_records_jsonl
from .report import REPORT_FORMATS, parse_report, render_report
from .vecindex import IndexFormatError, build_index, save_index

ENDPOINT_ENV = "CHUNKBENCH_ENDPOINT"
LOCK_NAME = ".lock"

_DEFAULT_WORKDIR = "chunkbench-work"
_DEFAULT_METHODS = ["recursive", "khmer_aware", "sentence", "llm"]


class UsageError(Exception):
    """Bad flags, bad config, unknown names; exits with code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


@dataclass
class RunConfig:
    corpus: str
    qa: str
    workdir: str
    seed: int = 42
    folds: int = 5
    k_retrieve: int = 5
    methods: List[ChunkMethod] = None  # type: ignore[assignment]
    chunk: ChunkConfig = None  # type: ignore[assignment]
    provider: ProviderConfig = None  # type: ignore[assignment]
    llm: str = "mock:paragraph"


def _load_config_file(path: str) -> Dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if path.endswith(".json"):
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib  # type: ignore[no-redef]
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise UsageError(f"config {path} is not valid TOML: {exc}") from exc


def _parse_methods(names: Sequence[str]) -> List[ChunkMethod]:
    methods = []
    valid = {m.value: m for m in ChunkMethod}
    for name in names:
        if name not in valid:
            raise UsageError(
                f"unknown method name {name!r} (available: {', '.join(sorted(valid))})")
        methods.append(valid[name])
    if not methods:
        raise UsageError("config lists no methods")
    return methods


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then flags; flags win."""
    cfg: Dict = {}
    if args.config:
        cfg = _load_config_file(args.config)
        if not isinstance(cfg, dict):
            raise UsageError(f"config {args.config} must hold a table/object at top level")
    corpus = cfg.get("corpus", mini_corpus_path())
    qa = cfg.get("qa", mini_qa_path())
    workdir = args.workdir or cfg.get("workdir", _DEFAULT_WORKDIR)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 42))
    folds = int(cfg.get("folds", 5))
    k_retrieve = int(cfg.get("k_retrieve", 5))
    methods = _parse_methods(cfg.get("methods", _DEFAULT_METHODS))
    try:
        chunk = ChunkConfig(**{k: tuple(v) if k == "separators" else v
                               for k, v in cfg.get("chunk", {}).items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad chunk config: {exc}") from exc
    prov_cfg = dict(cfg.get("provider", {}))
    if args.provider:
        prov_cfg["kind"] = args.provider
    endpoint = args.endpoint or prov_cfg.get("endpoint") or os.environ.get(ENDPOINT_ENV)
    prov_cfg["endpoint"] = endpoint
    try:
        provider = ProviderConfig(**prov_cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad provider config: {exc}") from exc
    if provider.kind == "remote" and not provider.endpoint:
        raise UsageError(f"remote provider needs --endpoint or {ENDPOINT_ENV}")
    llm = cfg.get("llm", "mock:paragraph")
    return RunConfig(corpus=corpus, qa=qa, workdir=workdir, seed=seed, folds=folds,
                     k_retrieve=k_retrieve, methods=methods, chunk=chunk,
                     provider=provider, llm=llm)


@contextlib.contextmanager
def workdir_lock(workdir: str):
    """Exclusive lock file; a second concurrent run fails instead of interleaving."""
    os.makedirs(workdir, exist_ok=True)
    path = os.path.join(workdir, LOCK_NAME)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"workdir {workdir} is locked by another run (remove {path} if stale)")
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(OSError):
            os.unlink(path)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".out-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _refuse_overwrite(paths: Sequence[str], force: bool) -> None:
    if force:
        return
    for path in paths:
        if os.path.exists(path):
            raise UsageError(f"{path} exists; pass --force to overwrite")


class EmbedCache:
    """Content-addressed embedding cache, keyed by sha256(text) per provider config."""

    def __init__(self, workdir: str, provider: ProviderConfig) -> None:
        self.provider = provider
        self.path = os.path.join(workdir, f"embcache-{provider_fingerprint(provider)}.jsonl")
        self._map: Dict[str, List[float]] = {}
        if os.path.exists(self.path):
            for key, vec in read_embeddings_jsonl(self.path):
                self._map[key] = vec.tolist()

    @staticmethod
    def _key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def __call__(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        missing: List[str] = []
        seen = set()
        for t in texts:
            k = self._key(t)
            if k not in self._map and k not in seen:
                seen.add(k)
                missing.append(t)
        if missing:
            vectors = embed_texts(missing, self.provider)
            with open(self.path, "a", encoding="utf-8") as fh:
                for t, v in zip(missing, vectors):
                    k = self._key(t)
                    self._map[k] = v.tolist()
                    fh.write(json.dumps({"key": k, "vector": v.tolist()}) + "\n")
        return [EmbeddingVector(np.asarray(self._map[self._key(t)], dtype=np.float32))
                for t in texts]


def _chunks_path(workdir: str, method: ChunkMethod) -> str:
    return os.path.join(workdir, f"chunks-{method.value}.jsonl")


def _load_inputs(cfg: RunConfig):
    docs = load_corpus(cfg.corpus, CHUNKING_PROFILE)
    qa = load_qa_pairs(cfg.qa, CHUNKING_PROFILE)
    return docs, qa


def _make_client(cfg: RunConfig) -> LlmClient:
    try:
        return make_llm_client(cfg.llm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _chunk_all(cfg: RunConfig, docs: Sequence[Document]) -> Dict[ChunkMethod, List[Chunk]]:
    client = _make_client(cfg)
    out: Dict[ChunkMethod, List[Chunk]] = {}
    for method in cfg.methods:
        chunks: List[Chunk] = []
        for doc in docs:
            chunks.extend(chunk_document(doc, method, cfg.chunk, client))
        out[method] = chunks
    return out


def cmd_chunk(cfg: RunConfig, force: bool) -> int:
    docs, _ = _load_inputs(cfg)
    paths = [_chunks_path(cfg.workdir, m) for m in cfg.methods]
    _refuse_overwrite(paths, force)
    with workdir_lock(cfg.workdir):
        per_method = _chunk_all(cfg, docs)
        for method, path in zip(cfg.methods, paths):
            write_chunks_jsonl(path, per_method[method])
            print(f"chunk[{method.value}]: {len(per_method[method])} chunks -> {path}")
    return 0


def cmd_embed(cfg: RunConfig, force: bool) -> int:
    out_paths = [os.path.join(cfg.workdir, f"embeddings-{m.value}.jsonl") for m in cfg.methods]
    _refuse_overwrite(out_paths, force)
    with workdir_lock(cfg.workdir):
        cache = EmbedCache(cfg.workdir, cfg.provider)
        for method, out_path in zip(cfg.methods, out_paths):
            src = _chunks_path(cfg.workdir, method)
            if not os.path.exists(src):
                raise RuntimeError(f"{src} not found; run the chunk stage first")
            chunks = read_chunks_jsonl(src)
            vectors = cache([c.text for c in chunks])
            write_embeddings_jsonl(out_path, list(zip([chunk_key(c) for c in chunks], vectors)))
            print(f"embed[{method.value}]: {len(vectors)} vectors -> {out_path}")
    return 0


def cmd_index(cfg: RunConfig, force: bool) -> int:
    out_paths = [os.path.join(cfg.workdir, f"index-{m.value}.cbvx") for m in cfg.methods]
    _refuse_overwrite(out_paths, force)
    with workdir_lock(cfg.workdir):
        for method, out_path in zip(cfg.methods, out_paths):
            src = os.path.join(cfg.workdir, f"embeddings-{method.value}.jsonl")
            if not os.path.exists(src):
                raise RuntimeError(f"{src} not found; run the embed stage first")
            entries = read_embeddings_jsonl(src)
            index = build_index(entries, normalize_flag=cfg.provider.normalize)
            save_index(index, out_path)
            print(f"index[{method.value}]: {index.count} vectors -> {out_path}")
    return 0


def cmd_evaluate(cfg: RunConfig, force: bool, fmt: str, to_stdout: bool) -> int:
    docs, qa = _load_inputs(cfg)
    record_paths = [os.path.join(cfg.workdir, f"records-{m.value}.jsonl") for m in cfg.methods]
    report_paths = [os.path.join(cfg.workdir, f"report.{ext}") for ext in REPORT_FORMATS]
    if not to_stdout:
        _refuse_overwrite(record_paths + report_paths, force)
    with workdir_lock(cfg.workdir):
        cache = EmbedCache(cfg.workdir, cfg.provider)
        report = run_evaluation(docs, qa, cfg.methods, cfg.chunk, cfg.provider,
                                k_retrieve=cfg.k_retrieve, folds=cfg.folds, seed=cfg.seed,
                                llm_client=_make_client(cfg), embedder=cache)
        if to_stdout:
            sys.stdout.write(render_report(report, fmt))
            return 0
        for method, path in zip(cfg.methods, record_paths):
            write_records_jsonl(path, report.records[method.value])
        for ext, path in zip(REPORT_FORMATS, report_paths):
            atomic_write_text(path, render_report(report, ext))
        for s in report.summaries:
            print(f"evaluate[{s.method}]: {s.chunk_count} chunks scored on {len(qa)} questions")
        print(f"report -> {os.path.join(cfg.workdir, 'report.md')}")
    return 0


def cmd_compare(report_path: str, method_a: str, method_b: str, metric: str) -> int:
    try:
        with open(report_path, "r", encoding="utf-8") as fh:
            report = parse_report(fh.read())
    except FileNotFoundError as exc:
        raise RuntimeError(f"{report_path} not found; run evaluate first") from exc
    except (ValueError, KeyError) as exc:
        raise RuntimeError(f"{report_path} is not a readable report: {exc}") from exc
    if metric not in METRIC_KEYS:
        raise UsageError(f"unknown metric {metric!r} (available: {', '.join(METRIC_KEYS)})")
    for name in (method_a, method_b):
        if name not in report.records:
            raise UsageError(
                f"method {name!r} not in report (available: {', '.join(sorted(report.records))})")
    ra = sorted(report.records[method_a], key=lambda r: r.question_id)
    rb = sorted(report.records[method_b], key=lambda r: r.question_id)
    result = paired_t_test([r.value(metric) for r in ra], [r.value(metric) for r in rb],
                           "per_question", metric=metric, method_a=method_a, method_b=method_b)
    print(f"metric={result.metric} method_a={result.method_a} method_b={result.method_b} "
          f"t={result.t:.4f} df={result.df} p={result.p:.4f} pairing={result.pairing}"
          + (" degenerate" if result.degenerate else ""))
    return 0


def cmd_report(report_path: str, fmt: str, out: Optional[str], force: bool) -> int:
    try:
        with open(report_path, "r", encoding="utf-8") as fh:
            report = parse_report(fh.read())
    except FileNotFoundError as exc:
        raise RuntimeError(f"{report_path} not found; run evaluate first") from exc
    except (ValueError, KeyError) as exc:
        raise RuntimeError(f"{report_path} is not a readable report: {exc}") from exc
    text = render_report(report, fmt)
    if out:
        _refuse_overwrite([out], force)
        atomic_write_text(out, text)
        print(f"report -> {out}")
    else:
        sys.stdout.write(text)
    return 0


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML or JSON run configuration")
    common.add_argument("--workdir", help=f"artifact directory (default {_DEFAULT_WORKDIR})")
    common.add_argument("--seed", type=int, help="evaluation seed (default 42)")
    common.add_argument("--provider", choices=("deterministic", "remote"),
                        help="embedding provider kind")
    common.add_argument("--endpoint", help=f"remote endpoint URL (or env {ENDPOINT_ENV})")
    common.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    common.add_argument("--format", choices=REPORT_FORMATS, default="md",
                        help="report format for --stdout/report")
    parser = _Parser(prog="chunkbench",
                     description="Chunking-strategy benchmark for Khmer documents")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("chunk", parents=[common], help="split corpus documents per method")
    sub.add_parser("embed", parents=[common], help="embed chunk files")
    sub.add_parser("index", parents=[common], help="build binary vector indexes")
    p_eval = sub.add_parser("evaluate", parents=[common],
                            help="full pipeline: chunk, embed, retrieve, score, report")
    p_eval.add_argument("--stdout", action="store_true",
                        help="print the report instead of writing files")
    p_cmp = sub.add_parser("compare", parents=[common],
                           help="paired t-test between two methods on one metric")
    p_cmp.add_argument("method_a")
    p_cmp.add_argument("method_b")
    p_cmp.add_argument("metric")
    p_cmp.add_argument("--report", help="report.json path (default <workdir>/report.json)")
    p_rep = sub.add_parser("report", parents=[common], help="re-render report.json")
    p_rep.add_argument("--report", help="report.json path (default <workdir>/report.json)")
    p_rep.add_argument("--out", help="write to file instead of stdout")
    p_rep.add_argument("--stdout", action="store_true", help="print to stdout (default)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = build_run_config(args)
        if args.command == "chunk":
            return cmd_chunk(cfg, args.force)
        if args.command == "embed":
            return cmd_embed(cfg, args.force)
        if args.command == "index":
            return cmd_index(cfg, args.force)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.force, args.format, args.stdout)
        report_path = args.report or os.path.join(cfg.workdir, "report.json")
        if args.command == "compare":
            return cmd_compare(report_path, args.method_a, args.method_b, args.metric)
        return cmd_report(report_path, args.format, args.out, args.force)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ProviderError, CorpusError, IndexFormatError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
