"""K-fold evaluation with paired significance testing.

Questions are dealt into folds by a fixed 64-bit generator so fold membership
is reproducible across platforms and runs. Metrics are computed per question,
averaged within each fold, and summarized as mean +/- sample std across fold
means. Method pairs are compared with a paired two-tailed t-test whose tail
probability comes from the regularized incomplete beta function, evaluated by
continued fraction to absolute accuracy well below 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .chunkers import Chunk, ChunkConfig, ChunkMethod, LlmClient, METHOD_LABELS, chunk_document
from .corpus import Document, METRIC_PROFILE, QAPair, ScriptProfile
from .embedding import EmbeddingVector, ProviderConfig, embed_texts
from .metrics import METRIC_KEYS, Hit, MetricRecord, RetrievalResult, score_question
from .vecindex import build_index, search

_MASK64 = 0xFFFFFFFFFFFFFFFF

FLAG_SINGLETON_STD = "aggregate_singleton"

PAIRINGS = ("per_question", "per_fold")


class SplitMix64:
    """splitmix64 sequence; fixed reference constants, identical everywhere."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    folds: Tuple[Tuple[int, ...], ...]


def kfold_split(n: int, k: int, seed: int) -> FoldAssignment:
    """Shuffle indices 0..n-1 (Fisher-Yates over splitmix64), deal round-robin.

    Folds are disjoint, cover every index, and differ in size by at most one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    idx = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    folds = tuple(tuple(idx[f::k]) for f in range(k))
    return FoldAssignment(k=k, seed=seed, folds=folds)


def aggregate(values: Sequence[float], flags: Optional[Set[str]] = None) -> Tuple[float, float]:
    """Mean and sample standard deviation (n-1); a singleton has std 0.0."""
    n = len(values)
    if n == 0:
        raise ValueError("aggregate requires at least one value")
    mean = sum(values) / n
    if n == 1:
        if flags is not None:
            flags.add(FLAG_SINGLETON_STD)
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    max_iter = 300
    eps = 1e-15
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_tail_probability(t: float, df: int) -> float:
    """Two-tailed p-value of Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if not math.isfinite(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    p = regularized_incomplete_beta(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class TTestResult:
    metric: str
    method_a: str
    method_b: str
    t: float
    df: int
    p: float
    pairing: str
    degenerate: bool = False


def paired_t_test(a: Sequence[float], b: Sequence[float], pairing: str = "per_question",
                  metric: str = "", method_a: str = "", method_b: str = "") -> TTestResult:
    """Paired two-tailed t-test on aligned score sequences.

    All-zero differences give t=0, p=1. Identical nonzero differences have no
    within-pair variance; that is reported as degenerate with p=0 rather than
    a division error.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    if len(a) != len(b):
        raise ValueError(f"paired t-test requires equal lengths, got {len(a)} and {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test requires at least 2 pairs")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(metric, method_a, method_b, 0.0, df, 1.0, pairing)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(metric, method_a, method_b, t, df, 0.0, pairing, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(metric, method_a, method_b, t, df, t_tail_probability(t, df), pairing)


@dataclass(frozen=True)
class MetricAggregate:
    mean: float
    std: float
    fold_means: Tuple[float, ...]


@dataclass(frozen=True)
class MethodSummary:
    method: str
    display: str
    chunk_count: int
    metrics: Dict[str, MetricAggregate]


def chunk_key(chunk: Chunk) -> str:
    """Index key for a chunk; zero-padded so key order matches (doc, seq) order."""
    return f"{chunk.doc_id}#{chunk.seq:05d}"


Embedder = Callable[[Sequence[str]], List[EmbeddingVector]]


def evaluate_method(chunks: Sequence[Chunk], qa_pairs: Sequence[QAPair],
                    provider: ProviderConfig, k_retrieve: int = 5,
                    profile: ScriptProfile = METRIC_PROFILE,
                    embedder: Optional[Embedder] = None) -> List[MetricRecord]:
    """Embed chunks, retrieve top-k per question, and score every question.

    The optional embedder callable overrides provider dispatch (the CLI passes
    a caching wrapper); it must preserve input order.
    """
    if not chunks:
        raise ValueError("evaluate_method requires at least one chunk")
    if k_retrieve < 1:
        raise ValueError("k_retrieve must be >= 1")
    if embedder is None:
        embedder = lambda texts: embed_texts(texts, provider)  # noqa: E731
    method = chunks[0].method.value
    keys = [chunk_key(c) for c in chunks]
    texts = [c.text for c in chunks]
    vectors = embedder(texts)
    index = build_index(list(zip(keys, vectors)), normalize_flag=provider.normalize)
    by_key = {k: (t, v) for k, t, v in zip(keys, texts, vectors)}
    question_vecs = embedder([q.question for q in qa_pairs])
    answer_vecs = embedder([q.answer for q in qa_pairs])
    records: List[MetricRecord] = []
    for qa, q_vec, a_vec in zip(qa_pairs, question_vecs, answer_vecs):
        hits = tuple(
            Hit(key=key, distance=dist, text=by_key[key][0], vector=by_key[key][1])
            for key, dist in search(index, q_vec, k_retrieve)
        )
        result = RetrievalResult(question_id=qa.id, hits=hits)
        records.append(score_question(result, method, a_vec, qa.answer, profile))
    return records


def summarize_method(method: ChunkMethod, chunk_count: int, records: Sequence[MetricRecord],
                     assignment: FoldAssignment) -> MethodSummary:
    """Fold means per metric over question-id-sorted records, then mean +/- std."""
    ordered = sorted(records, key=lambda r: r.question_id)
    metrics: Dict[str, MetricAggregate] = {}
    for key in METRIC_KEYS:
        fold_means = []
        for fold in assignment.folds:
            vals = [ordered[i].value(key) for i in fold]
            fold_means.append(sum(vals) / len(vals))
        mean, std = aggregate(fold_means)
        metrics[key] = MetricAggregate(mean=mean, std=std, fold_means=tuple(fold_means))
    return MethodSummary(method=method.value, display=METHOD_LABELS[method],
                         chunk_count=chunk_count, metrics=metrics)


@dataclass(frozen=True)
class EvaluationReport:
    meta: Dict
    summaries: List[MethodSummary]
    tests: List[TTestResult]
    records: Dict[str, List[MetricRecord]]


def run_evaluation(docs: Sequence[Document], qa_pairs: Sequence[QAPair],
                   methods: Sequence[ChunkMethod], chunk_cfg: ChunkConfig,
                   provider: ProviderConfig, k_retrieve: int = 5, folds: int = 5,
                   seed: int = 42, llm_client: Optional[LlmClient] = None,
                   profile: ScriptProfile = METRIC_PROFILE,
                   embedder: Optional[Embedder] = None) -> EvaluationReport:
    """Chunk, evaluate, summarize, and test every method pair on every metric."""
    if not qa_pairs:
        raise ValueError("run_evaluation requires at least one qa pair")
    assignment = kfold_split(len(qa_pairs), folds, seed)
    summaries: List[MethodSummary] = []
    records_by_method: Dict[str, List[MetricRecord]] = {}
    chunk_counts: Dict[str, int] = {}
    for method in methods:
        chunks: List[Chunk] = []
        for doc in docs:
            chunks.extend(chunk_document(doc, method, chunk_cfg, llm_client))
        records = evaluate_method(chunks, qa_pairs, provider, k_retrieve, profile, embedder)
        chunk_counts[method.value] = len(chunks)
        records_by_method[method.value] = records
        summaries.append(summarize_method(method, len(chunks), records, assignment))
    tests: List[TTestResult] = []
    for ma, mb in combinations(methods, 2):
        ra = sorted(records_by_method[ma.value], key=lambda r: r.question_id)
        rb = sorted(records_by_method[mb.value], key=lambda r: r.question_id)
        for key in METRIC_KEYS:
            tests.append(paired_t_test([r.value(key) for r in ra], [r.value(key) for r in rb],
                                       "per_question", metric=key,
                                       method_a=ma.value, method_b=mb.value))
    meta = {
        "k_retrieve": k_retrieve,
        "folds": folds,
        "seed": seed,
        "provider": {"kind": provider.kind, "dim": provider.dim,
                     "normalize": provider.normalize, "endpoint": provider.endpoint},
        "methods": [m.value for m in methods],
        "chunk": {"max_chars": chunk_cfg.max_chars, "overlap_chars": chunk_cfg.overlap_chars,
                  "separators": list(chunk_cfg.separators),
                  "khmer_aware_max_chars": chunk_cfg.khmer_aware_max_chars,
                  "sentences_per_chunk": chunk_cfg.sentences_per_chunk,
                  "sentence_overlap": chunk_cfg.sentence_overlap},
        "fold_assignment": [list(f) for f in assignment.folds],
    }
    return EvaluationReport(meta=meta, summaries=summaries, tests=tests,
                            records=records_by_method)
