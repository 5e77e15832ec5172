"""Embedding-based comparison baselines.

Three comparators against the common-topic scorer: topics extracted from the
reviewer profile alone, cosine of document centroids, and a relaxed
word-mover distance (per-word nearest-neighbor alignment, symmetrized by
taking the worse direction; exact transport is deliberately not solved).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .embeddings import DocumentMatrix
from .topics import doc_topic_relevance, harmonic_mean, orthonormal_basis

METHOD_HIDDEN_TOPIC = "hidden_topic"
METHOD_CENTROID = "centroid"
METHOD_RELAXED_WMD = "relaxed_wmd"


@dataclass(frozen=True)
class BaselineScore:
    method: str
    value: float
    higher_is_better: bool
    degenerate: bool = False
    rel_reviewer: float | None = None
    rel_submission: float | None = None
    k_eff: int | None = None


def hidden_topics(r: DocumentMatrix, num_topics: int) -> np.ndarray:
    """Leading directions of the reviewer profile alone.

    Returns the top min(num_topics, rank) left singular vectors of the
    profile matrix, sign-fixed as in the common-topic path. Unlike common
    topics these ignore the submission entirely.
    """
    if r.is_empty:
        raise ValueError("empty document has no topics")
    basis = orthonormal_basis(r.matrix)
    return basis[:, :min(num_topics, basis.shape[1])]


def hidden_topic_score(r: DocumentMatrix, s: DocumentMatrix, num_topics: int) -> BaselineScore:
    """Harmonic-mean relevance of both documents to the reviewer-only topics."""
    if r.is_empty or s.is_empty:
        return BaselineScore(METHOD_HIDDEN_TOPIC, 0.0, True, degenerate=True,
                             rel_reviewer=0.0, rel_submission=0.0, k_eff=0)
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")
    topics = hidden_topics(r, num_topics)
    rel_r = doc_topic_relevance(r, topics)
    rel_s = doc_topic_relevance(s, topics)
    return BaselineScore(
        METHOD_HIDDEN_TOPIC,
        harmonic_mean(rel_r, rel_s),
        True,
        rel_reviewer=rel_r,
        rel_submission=rel_s,
        k_eff=topics.shape[1],
    )


def centroid_score(r: DocumentMatrix, s: DocumentMatrix) -> BaselineScore:
    """Cosine similarity of the two documents' mean word vectors."""
    if r.is_empty or s.is_empty:
        return BaselineScore(METHOD_CENTROID, 0.0, True, degenerate=True)
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")
    mu_r = r.matrix.mean(axis=1)
    mu_s = s.matrix.mean(axis=1)
    norm_r = np.linalg.norm(mu_r)
    norm_s = np.linalg.norm(mu_s)
    if norm_r < 1e-12 or norm_s < 1e-12:
        # opposing word vectors can cancel to a zero centroid
        return BaselineScore(METHOD_CENTROID, 0.0, True, degenerate=True)
    return BaselineScore(METHOD_CENTROID, float(mu_r @ mu_s / (norm_r * norm_s)), True)


def relaxed_wmd(r: DocumentMatrix, s: DocumentMatrix) -> BaselineScore:
    """Relaxed word-mover distance; lower means more similar.

    Each word of one document is aligned to its nearest word in the other;
    the directional cost is the mean aligned distance, and the score is the
    larger of the two directions. This lower-bounds the exact transport
    distance while staying symmetric.
    """
    if r.is_empty or s.is_empty:
        return BaselineScore(METHOD_RELAXED_WMD, math.inf, False, degenerate=True)
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")
    dists = cdist(s.matrix.T, r.matrix.T)  # (n_s, n_r)
    cost_s_to_r = float(dists.min(axis=1).mean())
    cost_r_to_s = float(dists.min(axis=0).mean())
    return BaselineScore(METHOD_RELAXED_WMD, max(cost_s_to_r, cost_r_to_s), False)
