"""Chunking-strategy benchmark for Khmer and other low-resource-script text.

Chunk documents four ways, embed and index the chunks, retrieve per question,
and score each strategy with retrieval distance, answer relevance, Khmer
coverage, and Khmer IoU under k-fold cross validation with paired t-tests.
"""

from .chunkers import (Chunk, ChunkConfig, ChunkMethod, MockParagraphClient,
                       chunk_document, chunk_khmer_aware, chunk_llm, chunk_recursive,
                       chunk_sentence, make_llm_client)
from .corpus import (CHUNKING_PROFILE, METRIC_PROFILE, CorpusError, Document, QAPair,
                     ScriptProfile, is_khmer, khmer_char_set, load_corpus,
                     load_mini_corpus, load_qa_pairs, normalize_text)
from .embedding import (EmbeddingVector, ProviderConfig, ProviderError, cosine,
                        embed_deterministic, embed_remote, embed_texts, l2_distance)
from .evaluation import (EvaluationReport, FoldAssignment, MethodSummary, TTestResult,
                         aggregate, evaluate_method, kfold_split, paired_t_test,
                         run_evaluation, t_tail_probability)
from .metrics import (MetricRecord, RetrievalResult, answer_relevance, avg_retrieval_l2,
                      khmer_coverage, khmer_iou, score_question)
from .report import parse_report, render_report
from .vecindex import (FlatIndex, IndexCorruptError, IndexFormatError, IndexVersionError,
                       build_index, load_index, save_index, search)

__version__ = "0.1.0"
