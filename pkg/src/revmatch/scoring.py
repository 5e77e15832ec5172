"""Uniform pair-scoring interface over all matching methods.

`score_pair` dispatches a single (reviewer, submission) pair to the chosen
method. `BatchScorer` does the same over many pairs while caching per-document
work: for the subspace methods it keeps, per document, the orthonormal basis
U and the Gram matrix of basis-coordinates H = (U^T D)(U^T D)^T, from which
any topic relevance is a small trace instead of a pass over all words. Both
routes compute the same quantities; the cached route is what the CLI and the
evaluator use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import baselines, topics
from .embeddings import DocumentMatrix, EmbeddingTable, doc_matrix

METHOD_COMMON_TOPIC = "common-topic"
METHOD_HIDDEN_TOPIC = "hidden-topic"
METHOD_CENTROID = "centroid"
METHOD_RELAXED_WMD = "relaxed-wmd"
METHODS = (METHOD_COMMON_TOPIC, METHOD_HIDDEN_TOPIC, METHOD_CENTROID, METHOD_RELAXED_WMD)

HIDDEN_TOPIC_NOTE = (
    "hidden-topic scoring adaptation: topics come from the reviewer profile alone, "
    "scored with the same relevance formulas as the common-topic method"
)


@dataclass(frozen=True)
class PairScore:
    """Method-agnostic result row for one (reviewer, submission) pair."""

    value: float
    higher_is_better: bool
    rel_reviewer: float | None = None
    rel_submission: float | None = None
    k_eff: int | None = None
    degenerate: bool = False


def _from_match(ms: topics.MatchScore) -> PairScore:
    return PairScore(ms.score, True, ms.rel_reviewer, ms.rel_submission, ms.k_eff, ms.degenerate)


def _from_baseline(bs: baselines.BaselineScore) -> PairScore:
    return PairScore(bs.value, bs.higher_is_better, bs.rel_reviewer, bs.rel_submission,
                     bs.k_eff, bs.degenerate)


def score_pair(method: str, r: DocumentMatrix, s: DocumentMatrix,
               num_topics: int = 10) -> PairScore:
    """Score one pair without caching; see BatchScorer for repeated use."""
    if method == METHOD_COMMON_TOPIC:
        return _from_match(topics.match_score(r, s, num_topics))
    if method == METHOD_HIDDEN_TOPIC:
        return _from_baseline(baselines.hidden_topic_score(r, s, num_topics))
    if method == METHOD_CENTROID:
        return _from_baseline(baselines.centroid_score(r, s))
    if method == METHOD_RELAXED_WMD:
        return _from_baseline(baselines.relaxed_wmd(r, s))
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


class PreparedDoc:
    """What one method needs to score a document against many others."""

    __slots__ = ("n_words", "oov_count", "is_empty", "basis", "gram", "mean", "doc")

    def __init__(self, doc: DocumentMatrix, method: str):
        self.n_words = doc.n_words
        self.oov_count = doc.oov_count
        self.is_empty = doc.is_empty
        self.basis = None
        self.gram = None
        self.mean = None
        self.doc = None
        if self.is_empty:
            return
        if method in (METHOD_COMMON_TOPIC, METHOD_HIDDEN_TOPIC):
            self.basis = topics.orthonormal_basis(doc.matrix)
            coords = self.basis.T @ doc.matrix
            self.gram = coords @ coords.T
        elif method == METHOD_CENTROID:
            self.mean = doc.matrix.mean(axis=1)
        else:
            self.doc = doc


def _trace_quad(gram: np.ndarray, w: np.ndarray) -> float:
    # tr(w^T gram w) without forming the product
    return float(np.sum((gram @ w) * w))


class BatchScorer:
    """Scores many (reviewer, submission) pairs for one method.

    Stateless across calls apart from the read-only caches inside
    PreparedDoc, so pairs may be scored from concurrent workers; results are
    bitwise deterministic regardless of schedule.
    """

    def __init__(self, method: str, table: EmbeddingTable, num_topics: int = 10,
                 stopwords: frozenset[str] = frozenset()):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
        self.method = method
        self.table = table
        self.num_topics = num_topics
        self.stopwords = stopwords

    @property
    def higher_is_better(self) -> bool:
        return self.method != METHOD_RELAXED_WMD

    @property
    def adaptation_note(self) -> str | None:
        return HIDDEN_TOPIC_NOTE if self.method == METHOD_HIDDEN_TOPIC else None

    def prepare(self, tokens: Sequence[str]) -> PreparedDoc:
        """Tokenized document -> cached per-document state for this method."""
        if self.stopwords:
            tokens = [t for t in tokens if t not in self.stopwords]
        return PreparedDoc(doc_matrix(tokens, self.table), self.method)

    def score(self, reviewer: PreparedDoc, submission: PreparedDoc) -> PairScore:
        if reviewer.is_empty or submission.is_empty:
            if self.method == METHOD_RELAXED_WMD:
                return PairScore(float("inf"), False, degenerate=True)
            k = 0 if self.method in (METHOD_COMMON_TOPIC, METHOD_HIDDEN_TOPIC) else None
            rel = 0.0 if k is not None else None
            return PairScore(0.0, True, rel, rel, k, degenerate=True)
        if self.method == METHOD_COMMON_TOPIC:
            return self._common_topic(reviewer, submission)
        if self.method == METHOD_HIDDEN_TOPIC:
            return self._hidden_topic(reviewer, submission)
        if self.method == METHOD_CENTROID:
            norm_r = np.linalg.norm(reviewer.mean)
            norm_s = np.linalg.norm(submission.mean)
            if norm_r < 1e-12 or norm_s < 1e-12:
                return PairScore(0.0, True, degenerate=True)
            return PairScore(float(reviewer.mean @ submission.mean / (norm_r * norm_s)), True)
        return _from_baseline(baselines.relaxed_wmd(reviewer.doc, submission.doc))

    def _common_topic(self, reviewer: PreparedDoc, submission: PreparedDoc) -> PairScore:
        cross = reviewer.basis.T @ submission.basis
        k_eff = min(self.num_topics, cross.shape[0], cross.shape[1])
        w_k, _, _ = topics._paired_directions(cross, k_eff, lambda: reviewer.gram)
        rel_r = _trace_quad(reviewer.gram, w_k) / reviewer.n_words
        # submission words expressed through the cross-basis product; the
        # reviewer-side topics are scored against both documents
        sub_gram = cross @ submission.gram @ cross.T
        rel_s = _trace_quad(sub_gram, w_k) / submission.n_words
        rel_r = min(max(rel_r, 0.0), 1.0)
        rel_s = min(max(rel_s, 0.0), 1.0)
        return PairScore(topics.harmonic_mean(rel_r, rel_s), True, rel_r, rel_s, k_eff)

    def _hidden_topic(self, reviewer: PreparedDoc, submission: PreparedDoc) -> PairScore:
        k_eff = min(self.num_topics, reviewer.basis.shape[1])
        rel_r = float(np.trace(reviewer.gram[:k_eff, :k_eff])) / reviewer.n_words
        cross = reviewer.basis.T @ submission.basis
        sub_gram = cross @ submission.gram @ cross.T
        rel_s = float(np.trace(sub_gram[:k_eff, :k_eff])) / submission.n_words
        rel_r = min(max(rel_r, 0.0), 1.0)
        rel_s = min(max(rel_s, 0.0), 1.0)
        return PairScore(topics.harmonic_mean(rel_r, rel_s), True, rel_r, rel_s, k_eff)
