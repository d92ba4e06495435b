"""Score a single retrieval by hand to show what each metric measures.

Usage: python demos/03_metrics.py
"""
from chunkbench.embedding import embed_deterministic
from chunkbench.metrics import (
    METRIC_LABELS,
    answer_relevance,
    khmer_coverage,
    khmer_iou,
)

HITS = [
    "ដាំស្វាយចន្ទីនៅខែមិថុនា។",
    "ស្រោចទឹកជារៀងរាល់ថ្ងៃ (water daily)។",
]
ANSWER = "ដាំស្វាយចន្ទីនៅខែមិថុនា ហើយស្រោចទឹករាល់ថ្ងៃ។"


def main() -> None:
    print("retrieved chunks:")
    for h in HITS:
        print(f"  {h!r}")
    print(f"reference answer: {ANSWER!r}\n")

    joined = " ".join(HITS)
    cov = khmer_coverage(joined)
    iou = khmer_iou(joined, ANSWER)
    vecs = [embed_deterministic(h, 256) for h in HITS]
    rel = answer_relevance(vecs, embed_deterministic(ANSWER, 256))

    print(f"{METRIC_LABELS['khmer_coverage']:<20} {cov:.4f}"
          "  (share of hit characters in Khmer ranges)")
    print(f"{METRIC_LABELS['khmer_iou']:<20} {iou:.4f}"
          "  (Khmer character set overlap, hits vs answer)")
    print(f"{METRIC_LABELS['answer_relevance']:<20} {rel:.4f}"
          "  (mean cosine of hit vectors vs answer vector)")

    # Coverage reacts to script mix; the parenthetical Latin aside dilutes it.
    pure = khmer_coverage(HITS[0])
    print(f"\ncoverage of the first (pure Khmer) hit alone: {pure:.4f}")


if __name__ == "__main__":
    main()
