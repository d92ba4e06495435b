"""Walk one Khmer document through all four chunking strategies.

Usage: python demos/01_chunking_strategies.py [--max-chars N]
"""
import argparse

from chunkbench.chunkers import (
    ChunkConfig,
    ChunkMethod,
    METHOD_LABELS,
    MockParagraphClient,
    chunk_document,
)
from chunkbench.corpus import load_mini_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-chars", type=int, default=120,
                        help="recursive character budget (default 120)")
    args = parser.parse_args()

    docs, _ = load_mini_corpus()
    doc = docs[0]
    print(f"document {doc.id!r}: {len(doc.text)} chars")
    print(doc.text)
    print()

    cfg = ChunkConfig(max_chars=args.max_chars, overlap_chars=20,
                      khmer_aware_max_chars=200)
    for method in ChunkMethod:
        chunks = chunk_document(doc, method, cfg,
                                llm_client=MockParagraphClient())
        print(f"--- {METHOD_LABELS[method]}: {len(chunks)} chunks ---")
        for c in chunks:
            flag = " (fallback)" if c.fallback else ""
            print(f"  [{c.seq}] {c.start:>4}..{c.end:<4}{flag} {c.text[:60]!r}")
        print()


if __name__ == "__main__":
    main()
