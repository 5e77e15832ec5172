"""Independent reference implementations used only by the tests.

These deliberately avoid the library's code path: bases come from
scipy.linalg (full SVD / orth), relevances are computed with explicit
per-word loops, and the feasible-objective search is an alternating
polar-update ascent over random restarts rather than any closed form.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def _polar(x: np.ndarray) -> np.ndarray:
    """Nearest matrix with orthonormal columns (batched over leading axes)."""
    u, _, vt = np.linalg.svd(x, full_matrices=False)
    return u @ vt


def best_feasible_objective(
    r_cols: np.ndarray,
    s_cols: np.ndarray,
    k: int,
    rng: np.random.Generator,
    restarts: int = 200,
    iters: int = 80,
) -> float:
    """Best pairwise-cosine objective found by projected ascent.

    Feasible points are pairs of k orthonormal columns inside the column
    spaces of the two inputs. Starting from random feasible pairs, each side
    is alternately replaced by the polar factor of the gradient, which is the
    exact maximizer with the other side held fixed. Returns the best
    objective over all restarts (every restart's value is feasible).
    """
    q_r = scipy.linalg.orth(r_cols)
    q_s = scipy.linalg.orth(s_cols)
    m = q_r.T @ q_s
    a = _polar(rng.standard_normal((restarts, q_r.shape[1], k)))
    b = _polar(m.T @ a)
    prev = None
    for _ in range(iters):
        a = _polar(np.einsum("ij,bjk->bik", m, b))
        b = _polar(np.einsum("ji,bjk->bik", m, a))
        obj = np.einsum("bik,ij,bjk->b", a, m, b)
        if prev is not None and np.max(np.abs(obj - prev)) < 1e-13:
            break
        prev = obj
    return float(obj.max())


def oracle_match_score(r_cols: np.ndarray, s_cols: np.ndarray, k: int):
    """From-scratch dense-SVD evaluation of the pair-scoring formulas.

    Returns (rel_reviewer, rel_submission, score). Full (not thin) SVDs pick
    the subspace bases; relevances are explicit double loops over words and
    topics.
    """
    u_r, sing_r, _ = scipy.linalg.svd(r_cols)
    rank_r = int(np.sum(sing_r > 1e-8 * sing_r[0]))
    u_r = u_r[:, :rank_r]
    u_s, sing_s, _ = scipy.linalg.svd(s_cols)
    rank_s = int(np.sum(sing_s > 1e-8 * sing_s[0]))
    u_s = u_s[:, :rank_s]

    w, _, _ = scipy.linalg.svd(u_r.T @ u_s)
    k_eff = min(k, rank_r, rank_s)
    topics = u_r @ w[:, :k_eff]

    def relevance(cols: np.ndarray) -> float:
        total = 0.0
        for i in range(cols.shape[1]):
            word = 0.0
            for j in range(topics.shape[1]):
                word += float(np.dot(cols[:, i], topics[:, j])) ** 2
            total += word
        return total / cols.shape[1]

    rel_r = relevance(r_cols)
    rel_s = relevance(s_cols)
    score = 0.0 if rel_r + rel_s == 0 else 2.0 * rel_r * rel_s / (rel_r + rel_s)
    return rel_r, rel_s, score


def oracle_low_rank_residual(cols: np.ndarray, k: int) -> float:
    """Frobenius residual of the best rank-k projection, from the full SVD."""
    sing = scipy.linalg.svd(cols, compute_uv=False)
    tail = sing[min(k, len(sing)):]
    return float(np.sqrt(np.sum(tail ** 2)))


def brute_force_relaxed_wmd(r_cols: np.ndarray, s_cols: np.ndarray) -> float:
    """Nearest-neighbor alignment cost computed with plain loops."""
    def directional(from_cols, to_cols):
        total = 0.0
        for j in range(from_cols.shape[1]):
            best = min(
                float(np.linalg.norm(from_cols[:, j] - to_cols[:, i]))
                for i in range(to_cols.shape[1])
            )
            total += best
        return total / from_cols.shape[1]

    return max(directional(s_cols, r_cols), directional(r_cols, s_cols))
