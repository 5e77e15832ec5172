"""Reviewer-submission matching via common topic subspaces over word embeddings."""

from .baselines import (
    BaselineScore,
    centroid_score,
    hidden_topic_score,
    hidden_topics,
    relaxed_wmd,
)
from .corpus import (
    FilterPolicy,
    Publication,
    ReviewerProfile,
    SubmissionDoc,
    build_profile,
    filter_reviewers,
    load_records,
    tokenize,
)
from .embeddings import (
    DocumentMatrix,
    EmbeddingTable,
    TrainConfig,
    doc_matrix,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .evaluation import (
    EvalReport,
    Judgment,
    RankedList,
    evaluate,
    gt_subset,
    load_qrels,
    precision_at_k,
    rank_reviewers,
)
from .scoring import BatchScorer, PairScore, score_pair
from .topics import (
    CommonTopics,
    MatchScore,
    common_topics,
    doc_topic_relevance,
    match_score,
    pair_topic_similarity,
    word_topic_relevance,
)

__version__ = "0.1.0"
