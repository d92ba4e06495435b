"""Four chunking strategies over normalized documents.

All strategies produce Chunk records with codepoint spans into the document
text. Spans record the pre-trim extent; chunk text is the span slice with
leading/trailing whitespace removed. Every non-whitespace codepoint of the
document lands in at least one span, chunks are ordered by start, and chunk
starts are nudged off combining marks so Khmer vowel signs never begin a
chunk.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

from .corpus import Document
from .graphemes import snap_backward, snap_forward

KHAN = "។"        # ។ Khmer sentence-final mark
BARIYOOSAN = "៕"  # ៕ Khmer section-final mark

DEFAULT_SEPARATORS: Tuple[str, ...] = ("\n\n", "\n", KHAN, ".", "!", "?", " ", "")
SENTENCE_TERMINALS = frozenset({KHAN, BARIYOOSAN, ".", "!", "?"})

CHUNK_DELIMITER = "<<<CHUNK>>>"
_PROMPT_PAYLOAD_MARKER = "TEXT:\n"
CHUNK_PROMPT_HEADER = (
    "Split the following text into semantically coherent chunks. "
    "Echo the text back verbatim, without adding, dropping, or reordering "
    f"any characters, and insert the delimiter {CHUNK_DELIMITER} on its own "
    "line at each chunk boundary.\n\n" + _PROMPT_PAYLOAD_MARKER
)


class ChunkMethod(str, Enum):
    RECURSIVE = "recursive"
    KHMER_AWARE = "khmer_aware"
    SENTENCE_BASED = "sentence"
    LLM_BASED = "llm"


METHOD_LABELS = {
    ChunkMethod.RECURSIVE: "Recursive",
    ChunkMethod.KHMER_AWARE: "Khmer-Aware",
    ChunkMethod.SENTENCE_BASED: "Sentence-based",
    ChunkMethod.LLM_BASED: "LLM",
}


@dataclass(frozen=True)
class ChunkConfig:
    max_chars: int = 300
    overlap_chars: int = 50
    separators: Tuple[str, ...] = DEFAULT_SEPARATORS
    khmer_aware_max_chars: int = 800
    sentences_per_chunk: int = 5
    sentence_overlap: int = 1

    def __post_init__(self) -> None:
        if self.max_chars < 1:
            raise ValueError("max_chars must be >= 1")
        if self.overlap_chars < 0:
            raise ValueError("overlap_chars must be >= 0")
        if self.overlap_chars >= self.max_chars:
            raise ValueError("overlap_chars must be < max_chars")
        if self.khmer_aware_max_chars < 1:
            raise ValueError("khmer_aware_max_chars must be >= 1")
        if self.sentences_per_chunk < 1:
            raise ValueError("sentences_per_chunk must be >= 1")
        if not 0 <= self.sentence_overlap < self.sentences_per_chunk:
            raise ValueError("sentence_overlap must be in [0, sentences_per_chunk)")


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    seq: int
    method: ChunkMethod
    text: str
    start: int
    end: int
    fallback: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid chunk span [{self.start}, {self.end})")
        if self.seq < 0:
            raise ValueError("seq must be >= 0")


Span = Tuple[int, int]


def _split_by_sep(text: str, start: int, end: int, sep: str) -> List[Span]:
    """Split [start, end) at every sep occurrence, sep kept on the left piece."""
    spans: List[Span] = []
    i = start
    while i < end:
        j = text.find(sep, i, end)
        if j == -1:
            spans.append((i, end))
            break
        cut = j + len(sep)
        spans.append((i, cut))
        i = cut
    return spans


def _atomize(text: str, start: int, end: int, seps: Sequence[str], max_chars: int) -> List[Span]:
    """Tile [start, end) with pieces of at most max_chars codepoints.

    Separators are tried in order; a piece still too long is re-split with the
    remaining separators. The empty separator yields single codepoints, which
    the merge pass below turns into fixed-stride windows.
    """
    if end - start <= max_chars:
        return [(start, end)]
    for idx, sep in enumerate(seps):
        if sep == "":
            return [(i, i + 1) for i in range(start, end)]
        if text.find(sep, start, end) == -1:
            continue
        pieces: List[Span] = []
        for s, e in _split_by_sep(text, start, end, sep):
            if e - s <= max_chars:
                pieces.append((s, e))
            else:
                pieces.extend(_atomize(text, s, e, seps[idx + 1:], max_chars))
        return pieces
    return [(i, i + 1) for i in range(start, end)]


def _merge_pieces(pieces: List[Span], max_chars: int, overlap_chars: int) -> List[Span]:
    """Greedily pack contiguous pieces into chunks of at most max_chars.

    When a chunk closes, its trailing pieces are carried into the next chunk
    as overlap, capped at overlap_chars and at whatever still fits.
    """
    spans: List[Span] = []
    cur: List[Span] = []
    cur_len = 0
    for s, e in pieces:
        plen = e - s
        if cur and cur_len + plen > max_chars:
            spans.append((cur[0][0], cur[-1][1]))
            k = 0
            while k < len(cur) and (cur_len > overlap_chars or cur_len + plen > max_chars):
                cur_len -= cur[k][1] - cur[k][0]
                k += 1
            cur = cur[k:]
        cur.append((s, e))
        cur_len += plen
    if cur:
        spans.append((cur[0][0], cur[-1][1]))
    return spans


def _snap_spans(text: str, spans: List[Span], max_len: Optional[int]) -> List[Span]:
    """Nudge span boundaries off grapheme clusters.

    Starts move forward and ends move backward, so neither the max_chars bound
    nor the overlap cap can grow. If a forward-moved start would open a gap
    against the previous end, it is pulled back to that end, unless doing so
    would break max_len (adversarial mark runs only).
    """
    out: List[Span] = []
    prev_end: Optional[int] = None
    for s, e in spans:
        s2 = snap_forward(text, s)
        e2 = snap_backward(text, e)
        if s2 >= e2:
            s2, e2 = s, e
        if prev_end is not None and s2 > prev_end:
            if max_len is None or e2 - prev_end <= max_len:
                s2 = prev_end
        if out and out[-1] == (s2, e2):
            prev_end = e2
            continue
        out.append((s2, e2))
        prev_end = e2
    return out


def _emit(doc: Document, method: ChunkMethod, spans: List[Span], fallback: bool = False) -> List[Chunk]:
    chunks: List[Chunk] = []
    for s, e in spans:
        trimmed = doc.text[s:e].strip()
        if not trimmed:
            continue
        chunks.append(
            Chunk(doc_id=doc.id, seq=len(chunks), method=method,
                  text=trimmed, start=s, end=e, fallback=fallback)
        )
    return chunks


def chunk_recursive(doc: Document, cfg: ChunkConfig = ChunkConfig()) -> List[Chunk]:
    """Hierarchical separator splitting with greedy merge and overlap carry."""
    text = doc.text
    if not text.strip():
        return []
    seps = list(cfg.separators)
    if "" not in seps:
        seps.append("")
    pieces = _atomize(text, 0, len(text), seps, cfg.max_chars)
    spans = _merge_pieces(pieces, cfg.max_chars, cfg.overlap_chars)
    spans = _snap_spans(text, spans, max_len=cfg.max_chars)
    return _emit(doc, ChunkMethod.RECURSIVE, spans)


_KA_LEVELS = ("\n\n", "\n", "markers")


def _split_khmer_markers(text: str, start: int, end: int) -> List[Span]:
    spans: List[Span] = []
    seg_start = start
    for i in range(start, end):
        if text[i] == KHAN or text[i] == BARIYOOSAN:
            spans.append((seg_start, i + 1))
            seg_start = i + 1
    if seg_start < end:
        spans.append((seg_start, end))
    return spans


def chunk_khmer_aware(doc: Document, cfg: ChunkConfig = ChunkConfig()) -> List[Chunk]:
    """Paragraphs, then lines, then Khmer sentence marks; greedy merge, no overlap.

    A segment with no split point left stays whole even past the budget; only
    chunk_recursive guarantees a hard size bound.
    """
    text = doc.text
    if not text.strip():
        return []
    budget = cfg.khmer_aware_max_chars

    def split(start: int, end: int, level: int) -> List[Span]:
        if end - start <= budget:
            return [(start, end)]
        while level < len(_KA_LEVELS):
            rule = _KA_LEVELS[level]
            level += 1
            if rule == "markers":
                parts = _split_khmer_markers(text, start, end)
            else:
                parts = _split_by_sep(text, start, end, rule)
            if len(parts) > 1:
                out: List[Span] = []
                for ps, pe in parts:
                    out.extend(split(ps, pe, level))
                return out
        return [(start, end)]

    segments = split(0, len(text), 0)
    spans: List[Span] = []
    cur: Optional[Span] = None
    for s, e in segments:
        if cur is not None and e - cur[0] <= budget:
            cur = (cur[0], e)
        else:
            if cur is not None:
                spans.append(cur)
            cur = (s, e)
    if cur is not None:
        spans.append(cur)
    spans = _snap_spans(text, spans, max_len=None)
    return _emit(doc, ChunkMethod.KHMER_AWARE, spans)


def split_sentences(text: str) -> List[Span]:
    """Sentence spans ending at ។ ៕ . ! ? followed by whitespace or end of text."""
    spans: List[Span] = []
    n = len(text)
    i = 0
    while i < n and text[i].isspace():
        i += 1
    start = i
    while i < n:
        ch = text[i]
        if ch in SENTENCE_TERMINALS and (i + 1 == n or text[i + 1].isspace()):
            spans.append((start, i + 1))
            i += 1
            while i < n and text[i].isspace():
                i += 1
            start = i
        else:
            i += 1
    if start < n:
        spans.append((start, n))
    return spans


def chunk_sentence(doc: Document, cfg: ChunkConfig = ChunkConfig()) -> List[Chunk]:
    """Sliding windows of sentences_per_chunk sentences, sentence_overlap shared."""
    sents = split_sentences(doc.text)
    if not sents:
        return []
    n = len(sents)
    size = cfg.sentences_per_chunk
    step = size - cfg.sentence_overlap
    spans: List[Span] = []
    s_idx = 0
    while True:
        e_idx = min(s_idx + size, n)
        spans.append((sents[s_idx][0], sents[e_idx - 1][1]))
        if e_idx >= n:
            break
        s_idx += step
    spans = _snap_spans(doc.text, spans, max_len=None)
    return _emit(doc, ChunkMethod.SENTENCE_BASED, spans)


class LlmClient(Protocol):
    """Completion transport for chunk_llm; retries is the extra-attempt budget."""

    retries: int

    def complete(self, prompt: str) -> str: ...


@dataclass
class MockParagraphClient:
    """Deterministic offline stand-in: one chunk per blank-line paragraph."""

    retries: int = 0

    def complete(self, prompt: str) -> str:
        _, _, payload = prompt.partition(_PROMPT_PAYLOAD_MARKER)
        return re.sub(r"\n\s*\n", "\n" + CHUNK_DELIMITER + "\n", payload)


def make_llm_client(spec_string: str) -> LlmClient:
    """Resolve a client configuration string; "mock:paragraph" is bundled."""
    if spec_string == "mock:paragraph":
        return MockParagraphClient()
    raise ValueError(f"unknown llm client {spec_string!r}")


def build_chunk_prompt(text: str) -> str:
    return CHUNK_PROMPT_HEADER + text


def _locate_pieces(text: str, pieces: List[str]) -> Optional[List[Span]]:
    """Map delimiter-split pieces back to source spans.

    Matching ignores whitespace on both sides; any other discrepancy (or
    leftover non-whitespace source text) means the echo was not verbatim.
    """
    spans: List[Span] = []
    i = 0
    n = len(text)
    for piece in pieces:
        first = last = -1
        for ch in piece:
            if ch.isspace():
                continue
            while i < n and text[i].isspace():
                i += 1
            if i >= n or text[i] != ch:
                return None
            if first == -1:
                first = i
            last = i
            i += 1
        if first != -1:
            spans.append((first, last + 1))
    while i < n and text[i].isspace():
        i += 1
    if i < n:
        return None
    return spans


def chunk_llm(doc: Document, cfg: ChunkConfig = ChunkConfig(),
              client: Optional[LlmClient] = None) -> List[Chunk]:
    """Delimiter-echo chunking with recursive fallback.

    The client is asked to echo the document with CHUNK_DELIMITER inserted at
    boundaries. On transport failure (after the client's retry budget), an
    empty response, or an echo that differs beyond whitespace, falls back to
    chunk_recursive with fallback=True on every chunk.
    """
    if client is None:
        client = MockParagraphClient()
    text = doc.text
    if not text.strip():
        return []
    prompt = build_chunk_prompt(text)
    response: Optional[str] = None
    attempts = 1 + max(0, getattr(client, "retries", 0))
    for _ in range(attempts):
        try:
            response = client.complete(prompt)
            break
        except Exception:
            response = None
    spans = None
    if response:
        spans = _locate_pieces(text, response.split(CHUNK_DELIMITER))
    if not spans:
        base = chunk_recursive(doc, cfg)
        return [dataclasses.replace(c, method=ChunkMethod.LLM_BASED, fallback=True) for c in base]
    return _emit(doc, ChunkMethod.LLM_BASED, spans)


_CHUNKERS: dict = {
    ChunkMethod.RECURSIVE: chunk_recursive,
    ChunkMethod.KHMER_AWARE: chunk_khmer_aware,
    ChunkMethod.SENTENCE_BASED: chunk_sentence,
}


def chunk_document(doc: Document, method: ChunkMethod, cfg: ChunkConfig = ChunkConfig(),
                   llm_client: Optional[LlmClient] = None) -> List[Chunk]:
    if method is ChunkMethod.LLM_BASED:
        return chunk_llm(doc, cfg, llm_client)
    return _CHUNKERS[method](doc, cfg)


def write_chunks_jsonl(path: str, chunks: Sequence[Chunk]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in chunks:
            rec = {
                "doc_id": c.doc_id,
                "seq": c.seq,
                "method": c.method.value,
                "text": c.text,
                "start": c.start,
                "end": c.end,
            }
            if c.fallback:
                rec["fallback"] = True
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_chunks_jsonl(path: str) -> List[Chunk]:
    chunks: List[Chunk] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            chunks.append(
                Chunk(doc_id=rec["doc_id"], seq=rec["seq"], method=ChunkMethod(rec["method"]),
                      text=rec["text"], start=rec["start"], end=rec["end"],
                      fallback=rec.get("fallback", False))
            )
    return chunks
