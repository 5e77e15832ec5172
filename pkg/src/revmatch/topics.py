"""Common topic extraction and relevance scoring for document pairs.

Given two documents as matrices of unit word vectors, the common topics are
pairs of unit vectors, one constrained to the column space of each document,
chosen to maximize the sum of pairwise cosines subject to each side being
orthonormal. That maximum has a closed form: take orthonormal bases U_r, U_s
of the two column spaces; the singular values of U_r^T U_s are the cosines of
the principal angles between the subspaces, and the corresponding rotated
basis columns are the optimal topic pairs.

A document's relevance to a topic set is the mean squared projection norm of
its word vectors onto the topic span; the match score of a pair is the
harmonic mean of the two documents' relevances to the reviewer-side topics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import DocumentMatrix

RANK_RTOL = 1e-8
_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class CommonTopics:
    """Optimal topic pairs for one (reviewer, submission) document pair.

    `p_star` holds the reviewer-side topics and `q_star` the submission-side
    topics as orthonormal columns; `cosines[k]` is the cosine between column
    k of each, sorted descending. `k_eff` may be smaller than `k_requested`
    when either document spans fewer directions than requested.
    """

    p_star: np.ndarray
    q_star: np.ndarray
    cosines: np.ndarray
    k_requested: int
    k_eff: int


@dataclass(frozen=True)
class MatchScore:
    """Relevance of reviewer and submission to their common topics.

    `score` is the harmonic mean of the two relevances (0 when both vanish).
    `degenerate` marks pairs where a document had no in-vocabulary words, in
    which case all values are 0 by policy rather than an error.
    """

    rel_reviewer: float
    rel_submission: float
    score: float
    k_eff: int
    degenerate: bool = False


def _fix_signs(matrix: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is positive."""
    if matrix.shape[1] == 0:
        return matrix
    lead = np.abs(matrix).argmax(axis=0)
    signs = np.sign(matrix[lead, np.arange(matrix.shape[1])])
    signs[signs == 0] = 1.0
    return matrix * signs


def _tie_groups(sigma: np.ndarray, tol: float = 1e-8) -> list[tuple[int, int]]:
    """Index ranges of consecutive singular values closer than tol."""
    groups = []
    start = 0
    for i in range(1, len(sigma) + 1):
        if i == len(sigma) or sigma[i - 1] - sigma[i] > tol:
            groups.append((start, i))
            start = i
    return groups


def _paired_directions(cross, k_eff, reviewer_mass_fn):
    """Left/right singular vector pairs of the basis cross-product, with
    tied singular blocks rotated into a canonical orientation.

    Within a block of (numerically) equal singular values the singular
    vectors are arbitrary, yet the selected topic span decides the relevance
    values, so ties are resolved by diagonalizing the reviewer word-mass
    operator on the block and keeping the heaviest directions first. This
    happens routinely, not just in corner cases: whenever both documents
    span overlapping subspaces, the overlap is a block of cosines exactly 1.
    The same rotation is applied to both sides so each returned pair still
    realizes its singular value as the pairwise cosine.

    `reviewer_mass_fn` lazily supplies H = (U^T D)(U^T D)^T for the
    reviewer document in basis coordinates. Returns (w_k, v_k, sigma).
    """
    w, sigma, vt = np.linalg.svd(cross, full_matrices=False)
    v = vt.T.copy()
    w = w.copy()
    groups = [g for g in _tie_groups(sigma) if g[1] - g[0] >= 2 and g[0] < k_eff]
    if groups:
        mass = reviewer_mass_fn()
        for start, end in groups:
            block = w[:, start:end]
            t = block.T @ mass @ block
            evals, evecs = np.linalg.eigh((t + t.T) / 2.0)
            rot = evecs[:, np.argsort(-evals, kind="stable")]
            w[:, start:end] = block @ rot
            v[:, start:end] = v[:, start:end] @ rot
    w = w[:, :k_eff]
    v = v[:, :k_eff]
    # one sign per pair, taken from the reviewer side and applied to both so
    # each pairwise cosine stays the (nonnegative) singular value
    if k_eff > 0:
        lead = np.abs(w).argmax(axis=0)
        signs = np.sign(w[lead, np.arange(k_eff)])
        signs[signs == 0] = 1.0
        w = w * signs
        v = v * signs
    return w, v, sigma


def orthonormal_basis(matrix: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space, rank-truncated by singular value.

    Columns are left singular vectors with singular value above
    rtol * (largest singular value), sign-fixed for determinism.
    """
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((matrix.shape[0], 0))
    rank = int(np.sum(s > rtol * s[0]))
    return _fix_signs(u[:, :rank])


def _check_pair(r: DocumentMatrix, s: DocumentMatrix) -> None:
    if r.is_empty or s.is_empty:
        raise ValueError("empty document: both documents need at least one word vector")
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")


def common_topics(
    r: DocumentMatrix,
    s: DocumentMatrix,
    num_topics: int,
    r_basis: np.ndarray | None = None,
    s_basis: np.ndarray | None = None,
) -> CommonTopics:
    """Extract up to `num_topics` common topic pairs for two documents.

    The returned objective (sum of `cosines`) is the global maximum of the
    pairwise-cosine objective over orthonormal topic sets drawn from the two
    column spaces. Precomputed `orthonormal_basis` results may be passed to
    avoid repeating the per-document decomposition in batch scoring.

    Raises ValueError on an empty document or a dimension mismatch.
    """
    if num_topics < 1:
        raise ValueError("num_topics must be >= 1")
    _check_pair(r, s)
    u_r = orthonormal_basis(r.matrix) if r_basis is None else r_basis
    u_s = orthonormal_basis(s.matrix) if s_basis is None else s_basis
    k_eff = min(num_topics, u_r.shape[1], u_s.shape[1])

    def reviewer_mass():
        coords = u_r.T @ r.matrix
        return coords @ coords.T

    w, v, sigma = _paired_directions(u_r.T @ u_s, k_eff, reviewer_mass)
    return CommonTopics(
        p_star=u_r @ w,
        q_star=u_s @ v,
        cosines=sigma[:k_eff].copy(),
        k_requested=num_topics,
        k_eff=k_eff,
    )


def pair_topic_similarity(p: np.ndarray, q: np.ndarray) -> float:
    """Sum of cosines between corresponding columns of two topic matrices.

    Raises ValueError on shape mismatch or a zero column.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    p_norms = np.linalg.norm(p, axis=0)
    q_norms = np.linalg.norm(q, axis=0)
    if np.any(p_norms == 0) or np.any(q_norms == 0):
        raise ValueError("zero column in topic matrix")
    return float(np.sum(np.sum(p * q, axis=0) / (p_norms * q_norms)))


def word_topic_relevance(w: np.ndarray, topics: np.ndarray) -> float:
    """Squared norm of the projection of a unit word vector onto the topic span.

    Equals the sum over topics of the squared cosine between word and topic;
    1 when the word lies in the span, 0 when orthogonal to it. Raises
    ValueError when `w` is not unit length.
    """
    w = np.asarray(w, dtype=np.float64)
    norm = np.linalg.norm(w)
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ValueError(f"word vector must have unit norm, got {norm:.6g}")
    value = float(np.sum((topics.T @ w) ** 2))
    return min(max(value, 0.0), 1.0)


def doc_topic_relevance(doc: DocumentMatrix, topics: np.ndarray) -> float:
    """Mean word-topic relevance over all words of a document; in [0, 1]."""
    if doc.is_empty:
        raise ValueError("empty document has no topic relevance")
    per_word = np.sum((topics.T @ doc.matrix) ** 2, axis=0)
    return float(np.mean(np.clip(per_word, 0.0, 1.0)))


def harmonic_mean(a: float, b: float) -> float:
    """Harmonic mean with the 0 convention at a + b = 0."""
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def match_score(
    r: DocumentMatrix,
    s: DocumentMatrix,
    num_topics: int,
    r_basis: np.ndarray | None = None,
    s_basis: np.ndarray | None = None,
) -> MatchScore:
    """Score a (reviewer, submission) pair through their common topics.

    Both relevances are taken against the reviewer-side topics. A pair where
    either document is empty (all words out of vocabulary) scores 0 with the
    degenerate flag set instead of raising, so batch runs survive bad inputs.
    """
    if r.is_empty or s.is_empty:
        return MatchScore(0.0, 0.0, 0.0, k_eff=0, degenerate=True)
    ct = common_topics(r, s, num_topics, r_basis=r_basis, s_basis=s_basis)
    rel_r = doc_topic_relevance(r, ct.p_star)
    rel_s = doc_topic_relevance(s, ct.p_star)
    return MatchScore(
        rel_reviewer=rel_r,
        rel_submission=rel_s,
        score=harmonic_mean(rel_r, rel_s),
        k_eff=ct.k_eff,
    )
