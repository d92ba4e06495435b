"""Per-question retrieval quality metrics.

Four scores per (question, method): mean L2 distance of the hits (lower is
better), cosine relevance of the mean hit vector against the answer vector,
Khmer character coverage of the retrieved text, and Khmer character-set IoU
between retrieved text and answer. Degenerate inputs (zero vectors, no Khmer
characters) score 0.0 and record a flag instead of raising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .corpus import METRIC_PROFILE, ScriptProfile, khmer_char_set, normalize_text
from .embedding import EmbeddingVector

FLAG_RELEVANCE_ZERO = "answer_relevance_zero_vector"
FLAG_COVERAGE_EMPTY = "khmer_coverage_empty_denominator"
FLAG_IOU_EMPTY = "khmer_iou_empty_union"

METRIC_KEYS = ("avg_l2", "khmer_coverage", "answer_relevance", "khmer_iou")

METRIC_LABELS = {
    "avg_l2": "Avg Retr. (L2)↓",
    "khmer_coverage": "Khmer Cov.↑",
    "answer_relevance": "Ans. Rel. (Cos)↑",
    "khmer_iou": "Khmer IoU↑",
}

# Lower is better only for the retrieval distance.
METRIC_HIGHER_IS_BETTER = {
    "avg_l2": False,
    "khmer_coverage": True,
    "answer_relevance": True,
    "khmer_iou": True,
}


@dataclass(frozen=True)
class Hit:
    key: str
    distance: float
    text: str
    vector: EmbeddingVector


@dataclass(frozen=True)
class RetrievalResult:
    question_id: str
    hits: Tuple[Hit, ...]


@dataclass(frozen=True)
class MetricRecord:
    question_id: str
    method: str
    avg_l2: float
    answer_relevance: float
    khmer_coverage: float
    khmer_iou: float
    degenerate_flags: FrozenSet[str] = frozenset()

    def value(self, metric: str) -> float:
        if metric not in METRIC_KEYS:
            raise ValueError(f"unknown metric {metric!r}")
        return float(getattr(self, metric))


def avg_retrieval_l2(distances: Sequence[float]) -> float:
    """Mean hit distance; an empty hit list is an error, not a score."""
    if len(distances) == 0:
        raise ValueError("avg_retrieval_l2 requires at least one hit")
    return float(np.mean(np.asarray(distances, dtype=np.float64)))


def answer_relevance(hit_vectors: Sequence[EmbeddingVector], answer_vector: EmbeddingVector,
                     flags: Optional[Set[str]] = None) -> float:
    """Cosine between the mean hit vector and the answer vector.

    A zero mean vector or zero answer vector scores 0.0 and raises the
    degeneracy flag in the optional accumulator.
    """
    if len(hit_vectors) == 0:
        raise ValueError("answer_relevance requires at least one hit vector")
    stack = np.stack([v.values for v in hit_vectors]).astype(np.float64)
    mean = np.mean(stack, axis=0)
    ans = answer_vector.values.astype(np.float64)
    if mean.shape[0] != ans.shape[0]:
        raise ValueError(f"dimension mismatch: {mean.shape[0]} vs {ans.shape[0]}")
    nm = float(np.linalg.norm(mean))
    na = float(np.linalg.norm(ans))
    if nm == 0.0 or na == 0.0:
        if flags is not None:
            flags.add(FLAG_RELEVANCE_ZERO)
        return 0.0
    return float(np.clip(np.dot(mean, ans) / (nm * na), -1.0, 1.0))


def join_hit_texts(texts: Sequence[str]) -> str:
    """Canonical retrieved-text form: hit texts joined by single newlines."""
    return "\n".join(texts)


def khmer_coverage(retrieved_text: str, profile: ScriptProfile = METRIC_PROFILE,
                   flags: Optional[Set[str]] = None) -> float:
    """Khmer codepoints over non-whitespace codepoints of the retrieved text."""
    text = normalize_text(retrieved_text, profile)
    non_ws = [ch for ch in text if not ch.isspace()]
    if not non_ws:
        if flags is not None:
            flags.add(FLAG_COVERAGE_EMPTY)
        return 0.0
    khmer = sum(1 for ch in non_ws
                if any(lo <= ord(ch) <= hi for lo, hi in profile.khmer_ranges))
    return khmer / len(non_ws)


def khmer_iou(retrieved_text: str, answer_text: str, profile: ScriptProfile = METRIC_PROFILE,
              flags: Optional[Set[str]] = None) -> float:
    """IoU of the unique Khmer codepoint sets of retrieved text and answer."""
    r = khmer_char_set(retrieved_text, profile)
    a = khmer_char_set(answer_text, profile)
    union = r | a
    if not union:
        if flags is not None:
            flags.add(FLAG_IOU_EMPTY)
        return 0.0
    return len(r & a) / len(union)


def score_question(result: RetrievalResult, method: str, answer_vector: EmbeddingVector,
                   answer_text: str, profile: ScriptProfile = METRIC_PROFILE) -> MetricRecord:
    """All four metrics for one retrieval result, with degeneracy flags collected."""
    flags: Set[str] = set()
    retrieved = join_hit_texts([h.text for h in result.hits])
    return MetricRecord(
        question_id=result.question_id,
        method=method,
        avg_l2=avg_retrieval_l2([h.distance for h in result.hits]),
        answer_relevance=answer_relevance([h.vector for h in result.hits], answer_vector, flags),
        khmer_coverage=khmer_coverage(retrieved, profile, flags),
        khmer_iou=khmer_iou(retrieved, answer_text, profile, flags),
        degenerate_flags=frozenset(flags),
    )


def write_records_jsonl(path: str, records: Sequence[MetricRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True) + "\n")


def record_to_dict(r: MetricRecord) -> Dict:
    return {
        "question_id": r.question_id,
        "method": r.method,
        "avg_l2": r.avg_l2,
        "answer_relevance": r.answer_relevance,
        "khmer_coverage": r.khmer_coverage,
        "khmer_iou": r.khmer_iou,
        "flags": sorted(r.degenerate_flags),
    }


def record_from_dict(obj: Dict) -> MetricRecord:
    return MetricRecord(
        question_id=obj["question_id"],
        method=obj["method"],
        avg_l2=obj["avg_l2"],
        answer_relevance=obj["answer_relevance"],
        khmer_coverage=obj["khmer_coverage"],
        khmer_iou=obj["khmer_iou"],
        degenerate_flags=frozenset(obj.get("flags", [])),
    )


def read_records_jsonl(path: str) -> List[MetricRecord]:
    records: List[MetricRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records
