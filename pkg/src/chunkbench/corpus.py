"""Documents, QA pairs, and script-aware text normalization.

Text enters the toolkit through this module: loaders normalize to NFC with
LF line endings, and the script profile decides which codepoints count as
Khmer and whether zero-width spaces (U+200B) are kept. Khmer corpora use
ZWSP as an invisible word separator; it is not Unicode whitespace, so it
silently pollutes character statistics unless stripped.
"""

from __future__ import annotations

import json
import os
import unicodedata
from dataclasses import dataclass
from typing import List, Set, Tuple

ZWSP = "​"
BOM = "﻿"

# Khmer block + Khmer Symbols block, inclusive codepoint ranges.
DEFAULT_KHMER_RANGES: Tuple[Tuple[int, int], ...] = ((0x1780, 0x17FF), (0x19E0, 0x19FF))


class CorpusError(ValueError):
    """Raised for malformed corpus or QA files."""


@dataclass(frozen=True)
class ScriptProfile:
    """Which codepoints count as Khmer, and how aggressively to normalize.

    strip_zwsp defaults to True: the metric layer must not let invisible
    separators inflate character counts. Chunking input keeps ZWSP so that
    offsets refer to the text as written.
    """

    khmer_ranges: Tuple[Tuple[int, int], ...] = DEFAULT_KHMER_RANGES
    strip_zwsp: bool = True

    def __post_init__(self) -> None:
        prev_hi = -1
        for lo, hi in self.khmer_ranges:
            if lo > hi:
                raise ValueError(f"empty khmer range {lo:#x}..{hi:#x}")
            if lo <= prev_hi:
                raise ValueError("khmer ranges must be sorted and disjoint")
            prev_hi = hi


METRIC_PROFILE = ScriptProfile()
CHUNKING_PROFILE = ScriptProfile(strip_zwsp=False)


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    source: str = ""


@dataclass(frozen=True)
class QAPair:
    id: str
    question: str
    answer: str


def normalize_text(raw: str, profile: ScriptProfile = CHUNKING_PROFILE) -> str:
    """Canonicalize raw text: BOM strip, CRLF/CR -> LF, optional ZWSP strip, NFC.

    NFC runs last so the result is a fixed point: applying normalize_text to
    its own output returns it unchanged.
    """
    # All occurrences go, not just a leading one: normalized text must be
    # BOM-free everywhere, and stray U+FEFF is invisible formatting noise.
    raw = raw.replace(BOM, "")
    raw = raw.replace("\r\n", "\n").replace("\r", "\n")
    if profile.strip_zwsp:
        raw = raw.replace(ZWSP, "")
    return unicodedata.normalize("NFC", raw)


def is_khmer(ch: str, profile: ScriptProfile = METRIC_PROFILE) -> bool:
    """True when the single codepoint ch falls in the profile's Khmer ranges."""
    if len(ch) != 1:
        raise ValueError("is_khmer expects a single codepoint")
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in profile.khmer_ranges)


def khmer_char_set(text: str, profile: ScriptProfile = METRIC_PROFILE) -> Set[str]:
    """Unique Khmer codepoints of text, NFC-normalized, ZWSP stripped per profile."""
    text = normalize_text(text, profile)
    return {ch for ch in text if is_khmer(ch, profile)}


def _require_str(obj: dict, key: str, lineno: int, path: str) -> str:
    if key not in obj:
        raise CorpusError(f"{path}: line {lineno} lacks {key!r} field")
    val = obj[key]
    if not isinstance(val, str):
        raise CorpusError(f"{path}: line {lineno} field {key!r} is not a string")
    return val


def _iter_jsonl(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno} is not valid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}: line {lineno} is not a JSON object")
            yield lineno, obj


def load_corpus(path: str, profile: ScriptProfile = CHUNKING_PROFILE) -> List[Document]:
    """Load a JSONL corpus of {"id", "text", "source"?}, normalizing each text.

    Duplicate ids and malformed lines raise CorpusError naming the 1-based line.
    An empty file yields an empty list.
    """
    docs: List[Document] = []
    seen: Set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        doc_id = _require_str(obj, "id", lineno, path)
        text = _require_str(obj, "text", lineno, path)
        source = obj.get("source", "")
        if not isinstance(source, str):
            raise CorpusError(f"{path}: line {lineno} field 'source' is not a string")
        if doc_id in seen:
            raise CorpusError(f"{path}: line {lineno} duplicates document id {doc_id!r}")
        seen.add(doc_id)
        docs.append(Document(id=doc_id, text=normalize_text(text, profile), source=source))
    return docs


def load_qa_pairs(path: str, profile: ScriptProfile = CHUNKING_PROFILE) -> List[QAPair]:
    """Load JSONL QA pairs of {"id", "question", "answer"}, normalized.

    Questions and answers must be non-empty after normalization.
    """
    pairs: List[QAPair] = []
    seen: Set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        qa_id = _require_str(obj, "id", lineno, path)
        question = normalize_text(_require_str(obj, "question", lineno, path), profile)
        answer = normalize_text(_require_str(obj, "answer", lineno, path), profile)
        if qa_id in seen:
            raise CorpusError(f"{path}: line {lineno} duplicates qa id {qa_id!r}")
        if not question.strip():
            raise CorpusError(f"{path}: line {lineno} question is empty after normalization")
        if not answer.strip():
            raise CorpusError(f"{path}: line {lineno} answer is empty after normalization")
        seen.add(qa_id)
        pairs.append(QAPair(id=qa_id, question=question, answer=answer))
    return pairs


_MINI_DIR = os.path.join(os.path.dirname(__file__), "data", "mini")


def mini_corpus_path() -> str:
    """Path of the bundled 3-document Khmer corpus."""
    return os.path.join(_MINI_DIR, "corpus.jsonl")


def mini_qa_path() -> str:
    """Path of the bundled 6-pair QA set."""
    return os.path.join(_MINI_DIR, "qa.jsonl")


def load_mini_corpus(profile: ScriptProfile = CHUNKING_PROFILE) -> Tuple[List[Document], List[QAPair]]:
    return load_corpus(mini_corpus_path(), profile), load_qa_pairs(mini_qa_path(), profile)
