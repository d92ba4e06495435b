"""Run the full strategy comparison on the bundled corpus and print the report.

Usage: python demos/04_full_evaluation.py [--folds N] [--seed N]
"""
import argparse

from chunkbench.chunkers import ChunkConfig, ChunkMethod, MockParagraphClient
from chunkbench.corpus import load_mini_corpus
from chunkbench.embedding import ProviderConfig
from chunkbench.evaluation import run_evaluation
from chunkbench.report import render_report


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    docs, qa_pairs = load_mini_corpus()
    outcome = run_evaluation(
        docs,
        qa_pairs,
        methods=list(ChunkMethod),
        chunk_cfg=ChunkConfig(),
        provider=ProviderConfig(kind="deterministic"),
        folds=args.folds,
        seed=args.seed,
        llm_client=MockParagraphClient(),
    )
    print(render_report(outcome, "md"))


if __name__ == "__main__":
    main()
