"""Embed chunks from the bundled corpus, build an index, answer a question.

Usage: python demos/02_embedding_retrieval.py [--k N] [--dim N]
"""
import argparse

from chunkbench.chunkers import ChunkConfig, ChunkMethod, chunk_document
from chunkbench.corpus import load_mini_corpus
from chunkbench.embedding import embed_deterministic
from chunkbench.vecindex import build_index, search


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=3, help="hits per query")
    parser.add_argument("--dim", type=int, default=256,
                        help="embedding dimension (default 256)")
    args = parser.parse_args()

    docs, qa_pairs = load_mini_corpus()
    chunks = []
    for doc in docs:
        chunks.extend(chunk_document(doc, ChunkMethod.KHMER_AWARE, ChunkConfig()))
    print(f"{len(docs)} documents -> {len(chunks)} khmer-aware chunks")

    entries = [(f"{c.doc_id}#{c.seq:05d}", embed_deterministic(c.text, args.dim))
               for c in chunks]
    index = build_index(entries)
    texts = {key: c.text for (key, _), c in zip(entries, chunks)}

    q = qa_pairs[0]
    print(f"\nquestion {q.id!r}: {q.question}")
    hits = search(index, embed_deterministic(q.question, args.dim), args.k)
    for rank, (key, dist) in enumerate(hits, start=1):
        print(f"  {rank}. {key}  L2={dist:.4f}  {texts[key][:60]!r}")


if __name__ == "__main__":
    main()
